"""Pure-Python implementations of the enumeration kernels.

Every function here has a compiled twin in ``_kernels.pyx`` with the same
signature and bit-identical results.
"""

from __future__ import annotations

from itertools import product
from math import prod


def enumerate_outcomes(n, froms, tos, nums, dens):
    """Walk all 2**m swap/no-swap vectors of a flattened network.

    Returns ``(counts, denom)`` where ``counts`` maps the tuple of 1-based
    input indices on wires 1..n to an integer weight and every weight is
    over the common denominator ``prod(dens)``.  Zero-weight branches are
    cut, so only reachable permutations appear.
    """
    m = len(froms)
    counts: dict[tuple[int, ...], int] = {}
    state = list(range(1, n + 1))

    def rec(k: int, w: int) -> None:
        if k == m:
            key = tuple(state)
            counts[key] = counts.get(key, 0) + w
            return
        stay = dens[k] - nums[k]
        if stay:
            rec(k + 1, w * stay)
        if nums[k]:
            i, j = froms[k], tos[k]
            state[i], state[j] = state[j], state[i]
            rec(k + 1, w * nums[k])
            state[i], state[j] = state[j], state[i]

    rec(0, 1)
    return counts, prod(dens)


def first_swap_counts(lam, nums, dens):
    """Count grid vectors by the index of the first lottery that swaps.

    Lottery ``t`` draws ``x_t`` from the 2**lam grid and swaps iff
    ``x_t / 2**lam < nums[t] / dens[t]``.  The result has one entry per
    lottery plus a final entry for "no lottery swapped".
    """
    space = 1 << lam
    m = len(nums)
    out = [0] * (m + 1)
    limits = [nums[t] * space for t in range(m)]
    for xs in product(range(space), repeat=m):
        for t in range(m):
            if xs[t] * dens[t] < limits[t]:
                out[t] += 1
                break
        else:
            out[m] += 1
    return out


def xor_below_count(lam, num, den):
    """Number of pairs (a, b) on the 2**lam grid with (a ^ b) / 2**lam < num/den."""
    space = 1 << lam
    limit = num * space
    total = 0
    for a in range(space):
        for b in range(space):
            if (a ^ b) * den < limit:
                total += 1
    return total
