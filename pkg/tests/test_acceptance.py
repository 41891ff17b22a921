"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (the lines are collected in the
terminal summary) or directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import random
import sys
import time
from fractions import Fraction
from itertools import combinations

from lotterynet.bulletin import Board
from lotterynet.commitments import DEFAULT_PARAMS, SecurityParams
from lotterynet.cost import REFERENCE_1024, count_transactions, honest_trace
from lotterynet.network import (
    PayoutFunction, build_general, build_tournament_tree, depth, verify_correct, verify_monotonic,
)
from lotterynet.privacy import (
    CoopLottery, ZkpLottery, MockProofSystem, fallback_equivalent, observe_winner_bits,
    record_shape, run_coop, run_zkp,
)
from lotterynet.protocol import (
    LotteryConfig, Schedule, audit, honest_distribution, perfect_distribution, run_lottery,
    sequential_oracle, split_dominance_check, two_party_settle, wire_marginals,
)
from lotterynet.protocol.perfect import grid_sequential_bound
from lotterynet.sim import Strategy, exact_fairness_analysis, weighted_match_trials

RESULTS: list[str] = []


def report(number: int, title: str, ok: bool, detail: str, started: float, limit: float | None = None) -> None:
    elapsed = time.perf_counter() - started
    within = limit is None or elapsed < limit
    verdict = "PASS" if ok and within else "FAIL"
    budget = "" if limit is None else f" / {limit:g}s"
    line = f"{verdict} criterion {number:2d} {title}: {detail} [{elapsed:.1f}s{budget}]"
    RESULTS.append(line)
    print(line, file=sys.__stdout__ if __name__ == "__main__" else sys.stdout)
    assert ok, line
    assert within, line


def test_01_network_correctness():
    t = time.perf_counter()
    bad = [n for n in range(2, 33) if not verify_correct(build_general(n))]
    report(1, "network correctness", not bad, f"n in [2, 32], failures {bad}", t, 10)


def test_02_depth():
    t = time.perf_counter()
    bad = []
    for n in range(2, 1025):
        k = n.bit_length() - 1
        want = k if n == 1 << k else 2 * k + 1
        if depth(build_general(n)) != want:
            bad.append(n)
    report(2, "depth", not bad, f"n in [2, 1024], mismatches {bad[:5]}", t, 5)


def test_03_monotonicity():
    t = time.perf_counter()
    bad = []
    for n in range(2, 33):
        net = build_general(n)
        for name, pay in (("single", PayoutFunction.single_winner(n)),
                          ("top", PayoutFunction.top(n)), ("linear", PayoutFunction.linear(n))):
            if not verify_monotonic(net, pay):
                bad.append((n, name))
    report(3, "monotonicity", not bad, f"n in [2, 32] x 3 families, failures {bad}", t, 30)


FAIRNESS_LAMBDA = SecurityParams(lam=4, reduced=True)


def _fairness_configs():
    for n in (3, 4, 5):
        for pay in (PayoutFunction.single_winner(n), PayoutFunction.uniform(n)):
            yield n, LotteryConfig(n, build_general(n, pay), pay, params=FAIRNESS_LAMBDA)
            if n & (n - 1) == 0 and pay == PayoutFunction.single_winner(n):
                yield n, LotteryConfig(n, build_tournament_tree(n), pay, params=FAIRNESS_LAMBDA)


def test_04_fairness():
    t = time.perf_counter()
    checked = 0
    bad = []
    for n, cfg in _fairness_configs():
        ids = range(1, n + 1)
        for target in ids:
            honest = exact_fairness_analysis(cfg, set(), target)
            if honest.value != honest.honest:
                bad.append((n, (), target))
            checked += 1
        for k in range(1, n):
            for coalition in combinations(ids, k):
                for target in set(ids) - set(coalition):
                    res = exact_fairness_analysis(cfg, coalition, target)
                    checked += 1
                    if res.value < res.honest:
                        bad.append((n, coalition, target))
    report(4, "fairness under aborts", not bad,
           f"{checked} (config, coalition, target) cases at lambda=4, violations {bad[:3]}", t, 300)


def test_05_perfect_shuffle():
    t = time.perf_counter()
    p8 = SecurityParams(lam=8, reduced=True)
    n3 = perfect_distribution(3, p8, "enumerate")
    n4 = perfect_distribution(4, p8, "count")
    grid_exact = n3 == perfect_distribution(3, p8, "analytic") and n4 == perfect_distribution(4, p8, "analytic")
    full = sum(n3.values()) == 1 and len(n3) == 6 and sum(n4.values()) == 1 and len(n4) == 24
    within = True
    worst = Fraction(0)
    for n, dist in ((3, n3), (4, n4)):
        ideal = sequential_oracle(n)
        tv = sum(abs(dist[k] - v) for k, v in ideal.items()) / 2
        worst = max(worst, max(abs(dist[k] - v) for k, v in ideal.items()))
        within &= tv <= grid_sequential_bound(n, p8)
    big = perfect_distribution(4, DEFAULT_PARAMS, "analytic")
    tv128 = sum(abs(big[k] - v) for k, v in sequential_oracle(4).items()) / 2
    ok = grid_exact and full and within and tv128 < Fraction(1, 2 ** 120)
    report(5, "perfect shuffle uniformity", ok,
           f"grid-adjusted law exact (enumerate = count = analytic), max |p - 1/n!| = {float(worst):.2e} "
           f"at lambda=8 within coupling bound, TV at lambda=128 = {float(tv128):.1e}", t, 120)


def test_06_weighted_match():
    t = time.perf_counter()
    p8 = SecurityParams(lam=8, reduced=True)
    wins = sum(two_party_settle(a, b, Fraction(3), Fraction(1), p8) == "a"
               for a in range(256) for b in range(256))
    exhaustive = Fraction(wins, 256 * 256)
    cfg = LotteryConfig.single_winner(2, [Fraction(3), Fraction(1)], params=p8)
    protocol = wire_marginals(honest_distribution(cfg, method="enumerate"), 1)[1]
    trials = 10 ** 6
    hits = weighted_match_trials(Fraction(3), Fraction(1), trials, seed=6)
    sigma = math.sqrt(0.75 * 0.25 / trials)
    z = (hits / trials - 0.75) / sigma
    ok = exhaustive == protocol == Fraction(192, 256) and abs(z) <= 3
    report(6, "weighted match probability", ok,
           f"exhaustive {exhaustive}, Monte Carlo {hits / trials:.6f} (z = {z:+.2f})", t, 60)


def test_07_transaction_counts():
    t = time.perf_counter()
    tolerance = {"single": 2, "tyche": 4, "coop": 4}
    parts = []
    ok = True
    for protocol, ref in REFERENCE_1024.items():
        t0 = time.perf_counter()
        got = count_transactions(honest_trace(protocol, 1024)).messages
        ok &= abs(got - ref) <= tolerance[protocol] and time.perf_counter() - t0 < 120
        parts.append(f"{protocol} {got} (ref {ref} +- {tolerance[protocol]})")
    report(7, "transaction counts", ok, ", ".join(parts), t)


def test_08_round_counts():
    t = time.perf_counter()
    bad = []
    for k in range(2, 11):
        n = 1 << k
        phases = count_transactions(honest_trace("single", n)).phases
        if phases != k + 3:
            bad.append((n, phases))
    report(8, "round counts", not bad, f"single-winner phases = log2 n + 3 for n in 4..1024, mismatches {bad}", t)


def test_09_split_dominance():
    t = time.perf_counter()
    half = split_dominance_check(3, PayoutFunction([Fraction(1, 2), Fraction(1, 2), 0]), [1], 2)
    single = split_dominance_check(3, PayoutFunction.single_winner(3), [1], 2)
    ok = half.split > half.merged and single.split == single.merged == Fraction(2, 3)
    report(9, "split dominance", ok,
           f"(1/2,1/2,0): split {half.split} > merged {half.merged}; "
           f"single winner: split {single.split} = merged {single.merged}", t, 10)


def test_10_coop_neutrality():
    t = time.perf_counter()
    matches = runs = leaked = 0
    shapes = set()
    seed = 0
    while matches < 10 ** 4:
        cfg = LotteryConfig.general(64, PayoutFunction.single_winner(64))
        board = Board()
        lot, rep = run_coop(board, cfg, seed)
        matches += rep.cooperative
        leaked += len(observe_winner_bits(lot))
        shapes.update(record_shape(m.payload) for m in board.select("CoopOpen"))
        runs += 1
        seed += 1
    sizes = [(4, 0), (8, 1), (14, 2), (16, 3), (21, 4), (32, 5)]
    fallback = all(fallback_equivalent(LotteryConfig.general(n, PayoutFunction.single_winner(n)), s)
                   for n, s in sizes)
    ok = leaked == 0 and len(shapes) == 1 and fallback
    report(10, "coop transcript neutrality", ok,
           f"{matches} cooperative matches over {runs} runs, {leaked} winner bits, "
           f"{len(shapes)} record shape; fallback byte-identical on {len(sizes)} sizes", t, 60)


def _random_trace(rng: random.Random):
    n = rng.randint(2, 12)
    kind = rng.choice(["tyche", "tyche", "coop", "zkp"])
    family = rng.choice(["single", "linear", "uniform", "top"])
    pay = getattr(PayoutFunction, "single_winner" if family == "single" else family)(n)
    seed = rng.randrange(1 << 30)
    policy = None
    if rng.random() < 0.5:
        aborters = rng.sample(range(1, n + 1), rng.randint(1, max(1, n // 3)))
        policy = Strategy.abort_at(aborters, {rng.randrange(n.bit_length() * 2)})
    if kind == "zkp":
        cfg = LotteryConfig.general(n, pay)
        proofs = MockProofSystem()
        board = Board(leading=("BuyTicket", "Commit"))
        _, rep = run_zkp(board, cfg, proofs, seed, relayer="relay", relayer_fee=rng.randint(0, 1))
        fee = board.balances.get("relay", 0)
        return cfg, board, rep.positions, rep.payouts, \
            lambda c, b: ZkpLottery.from_board(c, b, proofs, relayer_fee=1 if fee else 0)
    if kind == "coop":
        cfg = LotteryConfig.general(n, pay)
        board = Board()
        _, rep = run_coop(board, cfg, seed, policy=policy)
        return cfg, board, rep.payout.positions, rep.payout.payouts, CoopLottery.from_board
    weights = None
    if rng.random() < 0.3:
        weights = tuple(Fraction(rng.randint(1, 4)) for _ in range(n))
    cfg = LotteryConfig(n, build_general(n, pay), pay, weights=weights)
    board = Board()
    rep = run_lottery(board, cfg, Schedule(seed, policy))
    return cfg, board, rep.positions, rep.payouts, None


def test_11_public_verifiability():
    t = time.perf_counter()
    rng = random.Random(11)
    bad = []
    for k in range(100):
        cfg, board, positions, payouts, rebuild = _random_trace(rng)
        trace = Board.loads_trace(board.dumps_trace())
        res = audit(cfg, trace, rebuild)
        if not (res.consistent and res.positions == positions
                and {p: a for p, a in res.payouts.items() if a} == {p: a for p, a in payouts.items() if a}):
            bad.append(k)
    report(11, "public verifiability", not bad, f"100 random traces replayed, mismatches {bad}", t)


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted((k, v) for k, v in dict(globals()).items() if k.startswith("test_")):
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
