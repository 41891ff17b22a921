import pytest
from hypothesis import given, settings, strategies as st

from lotterynet import _pykernels, kernels
from lotterynet.network import build_general

compiled = kernels.compiled
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")


def test_backend_flag():
    assert kernels.BACKEND in ("compiled", "python")


@needs_compiled
@pytest.mark.parametrize("n", [2, 3, 5, 6, 7])
def test_enumerate_outcomes_same(n):
    net = build_general(n)
    flat = [s for _, s in net.swappers()]
    args = (n, [s.from_wire - 1 for s in flat], [s.to_wire - 1 for s in flat],
            [s.swap_probability.numerator for s in flat],
            [s.swap_probability.denominator for s in flat])
    assert compiled.enumerate_outcomes(*args) == _pykernels.enumerate_outcomes(*args)


@needs_compiled
@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.lists(st.tuples(st.integers(0, 9), st.integers(1, 9)), min_size=1, max_size=3))
def test_first_swap_counts_same(lam, pairs):
    nums = [min(a, b) for a, b in pairs]
    dens = [b for _, b in pairs]
    assert compiled.first_swap_counts(lam, nums, dens) == _pykernels.first_swap_counts(lam, nums, dens)


@needs_compiled
@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 12), st.integers(1, 12))
def test_xor_below_count_same(lam, num, den):
    num = min(num, den)
    assert compiled.xor_below_count(lam, num, den) == _pykernels.xor_below_count(lam, num, den)


def test_xor_below_count_closed_form():
    # for a fixed a the XOR is a bijection, so the count is space * grid_count
    assert _pykernels.xor_below_count(4, 1, 3) == 16 * 6
