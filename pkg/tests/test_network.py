import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from lotterynet.errors import InvalidArgument, ResourceLimit
from lotterynet.network import (
    PayoutFunction, ShufflingNetwork, Swapper, build_butterfly, build_general,
    build_tournament_tree, depth, expected_payouts, is_perfect, marginal_distribution,
    monotonic_violations, network_from_json, network_to_json, payout_from_json, payout_to_json,
    permutation_distribution, permutation_marginals, prune, verify_correct, verify_monotonic,
)


def marginals_oracle(net):
    """Straight Fraction propagation: rows[a][w] = P(input a on wire w)."""
    n = net.n
    rows = [[Fraction(int(a == w)) for w in range(n)] for a in range(n)]
    for _, (i, j, p) in net.swappers():
        for r in rows:
            x, y = r[i - 1], r[j - 1]
            r[i - 1], r[j - 1] = (1 - p) * x + p * y, (1 - p) * y + p * x
    return rows


@pytest.mark.parametrize("n", range(2, 20))
def test_marginals_match_oracle(n):
    net = build_general(n)
    assert [list(r) for r in marginal_distribution(net).rows] == marginals_oracle(net)


@pytest.mark.parametrize("n", [3, 5, 6, 7])
def test_permutation_marginals_agree(n):
    net = build_general(n)
    dist = permutation_distribution(net)
    assert sum(dist.values()) == 1
    assert permutation_marginals(dist, n).rows == marginal_distribution(net).rows


def test_pinned_networks(data_dir):
    for n in (5, 14):
        stored = network_from_json(json.loads((data_dir / f"network_{n}.json").read_text()))
        assert stored == build_general(n)
        assert verify_correct(stored)


def test_depths():
    assert depth(build_general(14)) == 7
    assert depth(build_general(16)) == 4
    assert depth(build_general(2)) == 1


def test_tournament_tree_single_winner():
    net = build_tournament_tree(8)
    m = marginal_distribution(net)
    assert all(m[a, 1] == Fraction(1, 8) for a in range(1, 9))
    assert not verify_correct(net)


def test_butterfly_correct_not_perfect():
    net = build_butterfly(2)
    assert verify_correct(net)
    assert not is_perfect(net)


def test_prune_to_tree():
    assert prune(build_general(4), PayoutFunction.single_winner(4)) == build_tournament_tree(4)


def test_prune_keeps_expected_payouts():
    pay = PayoutFunction.top(6, 2)
    net = build_general(6, pay)
    small = prune(net, pay)
    assert small.size <= net.size
    assert expected_payouts(small, pay)[-1] == expected_payouts(net, pay)[-1]


def test_tampered_network_not_correct():
    data = network_to_json(build_general(6))
    merge = next(s for rnd in data["rounds"] for s in rnd if s["p_den"] != 2)
    merge["p_num"] += 1
    assert not verify_correct(network_from_json(data))


def test_malformed_json():
    with pytest.raises(InvalidArgument):
        network_from_json({"n": 3, "rounds": [[{"from": 1, "to": 1, "p_num": 1, "p_den": 2}]]})
    with pytest.raises(InvalidArgument):
        network_from_json({"rounds": []})


def test_payout_validation():
    with pytest.raises(InvalidArgument):
        PayoutFunction([Fraction(1, 3), Fraction(2, 3)])
    with pytest.raises(InvalidArgument):
        PayoutFunction([Fraction(1, 2), Fraction(1, 4)])
    pay = PayoutFunction.linear(5)
    assert payout_from_json(payout_to_json(pay)) == pay


def test_round_touches_wire_twice():
    with pytest.raises(InvalidArgument):
        ShufflingNetwork(3, [[Swapper(2, 1, Fraction(1, 2)), Swapper(3, 1, Fraction(1, 2))]])


def test_enumeration_guard():
    with pytest.raises(ResourceLimit):
        permutation_distribution(build_general(12))


def test_bad_swap_direction_is_a_violation():
    net = ShufflingNetwork(2, [[Swapper(1, 2, Fraction(1, 2))]])
    assert monotonic_violations(net, PayoutFunction.single_winner(2))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 40))
def test_general_correct_property(n):
    assert verify_correct(build_general(n))


@st.composite
def payouts(draw):
    n = draw(st.integers(2, 24))
    raw = sorted(draw(st.lists(st.integers(0, 20), min_size=n, max_size=n)), reverse=True)
    if raw[0] == 0:
        raw[0] = 1
    total = sum(raw)
    return PayoutFunction(Fraction(x, total) for x in raw)


@settings(max_examples=40, deadline=None)
@given(payouts())
def test_tailored_build_monotonic(pay):
    n = len(pay)
    net = build_general(n, pay)
    assert verify_correct(net) and verify_monotonic(net, pay)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 7))
def test_doubly_stochastic(n):
    assert marginal_distribution(build_general(n)).is_doubly_stochastic()
