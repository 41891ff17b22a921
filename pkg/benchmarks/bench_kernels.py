"""Times the compiled kernels against the pure-Python fallback.

Run with ``python benchmarks/bench_kernels.py``; checks both backends agree
before timing them.
"""

from __future__ import annotations

import argparse
import timeit

from lotterynet import _pykernels, kernels
from lotterynet.network import build_general


def flatten(net):
    froms, tos, nums, dens = [], [], [], []
    for _, s in net.swappers():
        froms.append(s.from_wire - 1)
        tos.append(s.to_wire - 1)
        nums.append(s.swap_probability.numerator)
        dens.append(s.swap_probability.denominator)
    return net.n, froms, tos, nums, dens


def cases():
    yield "enumerate_outcomes(n=7)", "enumerate_outcomes", flatten(build_general(7))
    yield "first_swap_counts(lam=6, m=3)", "first_swap_counts", (6, [1, 1, 1], [4, 3, 2])
    yield "xor_below_count(lam=10)", "xor_below_count", (10, 3, 4)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if kernels.compiled is None:
        print("compiled kernels unavailable; build with `pip install -e . --no-build-isolation`")
        return 1
    print(f"{'kernel':32} {'python s':>10} {'compiled s':>11} {'speedup':>8}")
    for name, fn, call_args in cases():
        py, cy = getattr(_pykernels, fn), getattr(kernels.compiled, fn)
        if py(*call_args) != cy(*call_args):
            print(f"{name}: backends disagree")
            return 1
        t_py = min(timeit.repeat(lambda: py(*call_args), number=1, repeat=args.repeat))
        t_cy = min(timeit.repeat(lambda: cy(*call_args), number=1, repeat=args.repeat))
        print(f"{name:32} {t_py:10.4f} {t_cy:11.4f} {t_py / t_cy:7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
