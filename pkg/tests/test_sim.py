import json
from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from lotterynet.commitments import SecurityParams
from lotterynet.errors import InvalidArgument
from lotterynet.network import PayoutFunction, build_tournament_tree
from lotterynet.protocol import LotteryConfig, honest_distribution, wire_marginals
from lotterynet.sim import (
    Combined, Strategy, distribution_check, exact_fairness_analysis, run_monte_carlo,
    trial_seed, weighted_match_trials,
)

P3 = SecurityParams(lam=3, reduced=True)


def test_monte_carlo_deterministic():
    cfg = LotteryConfig.general(4, PayoutFunction.linear(4))
    a = run_monte_carlo(cfg, None, 50, seed=3)
    b = run_monte_carlo(cfg, None, 50, seed=3)
    assert a.to_json() == b.to_json()
    assert run_monte_carlo(cfg, None, 50, seed=4).to_json() != a.to_json()


def test_workers_match_serial():
    cfg = LotteryConfig.single_winner(4)
    serial = run_monte_carlo(cfg, None, 40, seed=1)
    parallel = run_monte_carlo(cfg, None, 40, seed=1, workers=3)
    assert serial.to_json() == parallel.to_json()


def test_trial_seeds_distinct():
    assert len({trial_seed(0, k) for k in range(1000)}) == 1000


def test_monte_carlo_matches_exact_law():
    cfg = LotteryConfig.general(4, PayoutFunction.linear(4))
    rep = run_monte_carlo(cfg, None, 4000, seed=11)
    check = distribution_check(rep.permutations, honest_distribution(cfg))
    assert check.passes(0.999) and check.tv < Fraction(1, 20)


def test_estimates_have_intervals():
    cfg = LotteryConfig.single_winner(4)
    rep = run_monte_carlo(cfg, [Strategy.abort_at({2}, {0})], 400, seed=2)
    est = rep.estimate(2)
    assert est.mean == 0
    # 2's opponent advances for free; 1 still needs two fair wins
    honest = rep.estimate(1)
    assert honest.ci_low <= 1 <= honest.ci_high
    assert rep.estimate(4).ci_low <= 2 <= rep.estimate(4).ci_high
    assert rep.to_csv().splitlines()[0] == "id,trials,mean_payout,ci_low,ci_high"
    json.dumps(rep.to_json())


def test_strategy_validation():
    with pytest.raises(InvalidArgument):
        Strategy("sneaky")
    with pytest.raises(InvalidArgument):
        Combined([Strategy.abort_at({1}, {0}), Strategy.abort_at({1}, {1})])


def test_adaptive_sees_public_view_only():
    seen = []

    def decide(view, pid, r):
        seen.append((pid, r, len(view.slots())))
        return True

    cfg = LotteryConfig.single_winner(4)
    run_monte_carlo(cfg, [Strategy.adaptive({1}, decide)], 3, seed=0)
    assert seen and all(n == 4 for _, _, n in seen)


def test_coalition_acts_last():
    s = Strategy.abort_at({2}, {0})
    assert s.priority(2) > s.priority(1)


@pytest.mark.parametrize("mode", ["min-target", "max-coalition"])
def test_fairness_tree(mode):
    cfg = LotteryConfig(4, build_tournament_tree(4), PayoutFunction.single_winner(4), params=P3)
    res = exact_fairness_analysis(cfg, {1, 2}, 3, mode)
    assert res.fair
    if mode == "max-coalition":
        assert res.value == res.honest == Fraction(1, 2)


def test_fairness_honest_equality():
    cfg = LotteryConfig.general(3, PayoutFunction.single_winner(3), params=P3)
    res = exact_fairness_analysis(cfg, set(), 1)
    assert res.value == res.honest


@pytest.mark.parametrize("coalition", [c for k in (1, 2) for c in combinations(range(1, 4), k)])
def test_fairness_n3_uniform(coalition):
    cfg = LotteryConfig.general(3, PayoutFunction.uniform(3), params=P3)
    for target in set(range(1, 4)) - set(coalition):
        assert exact_fairness_analysis(cfg, coalition, target).fair


def test_weighted_trials():
    wins = weighted_match_trials(Fraction(3), Fraction(1), 4000, seed=1)
    assert abs(wins / 4000 - 0.75) < 3 * (0.75 * 0.25 / 4000) ** 0.5


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6))
def test_weighted_exact_law(a, b):
    params = SecurityParams(lam=6, reduced=True)
    cfg = LotteryConfig.single_winner(2, [Fraction(a), Fraction(b)], params=params)
    p = wire_marginals(honest_distribution(cfg), 1)[1]
    assert abs(p - Fraction(a, a + b)) <= Fraction(1, 64)
