"""Strategy-driven runs, Monte Carlo aggregation and exact abort-game analysis."""

from __future__ import annotations

import hashlib
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from scipy.stats import chi2 as _chi2

from .bulletin import Board
from .commitments import SecurityParams, concat, grid_count, int_field
from .errors import InvalidArgument, ResourceLimit
from .protocol.rules import two_party_settle, weight_threshold
from .protocol.lottery import LotteryConfig, Schedule, run_lottery

Z99 = 2.5758293035489004
FAIRNESS_GUARD = 6


# --- strategies ---------------------------------------------------------------------

@dataclass(frozen=True)
class PublicView:
    """What an adaptive adversary may look at: the board and the public slot state."""

    lottery: object
    round: int

    @property
    def board(self) -> Board:
        return self.lottery.board

    def slots(self):
        return self.lottery.state(self.round)

    def opened(self) -> set:
        """Authors who already revealed in the current round."""
        return {m.author for m in self.board.select("Open", self.round)}


Decision = Callable[[PublicView, Hashable, int], bool]


@dataclass(frozen=True)
class Strategy:
    """Behavior of a coalition; participants outside it act honestly.

    ``kind`` is ``"honest"``, ``"abort_at"`` (skip every reveal in the
    rounds accepted by ``rounds``) or ``"adaptive"`` (``decide`` sees only a
    :class:`PublicView`).  Coalition members act after honest parties in
    each round.
    """

    kind: str = "honest"
    coalition: frozenset = frozenset()
    rounds: frozenset | Callable[[int], bool] | None = None
    decide: Decision | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("honest", "abort_at", "adaptive"):
            raise InvalidArgument(f"unknown strategy kind {self.kind!r}")
        if self.kind == "adaptive" and self.decide is None:
            raise InvalidArgument("adaptive strategies need a decision function")
        object.__setattr__(self, "coalition", frozenset(self.coalition))

    @classmethod
    def honest(cls) -> "Strategy":
        return cls()

    @classmethod
    def abort_at(cls, coalition: Iterable, rounds) -> "Strategy":
        if not callable(rounds):
            rounds = frozenset(rounds)
        return cls("abort_at", frozenset(coalition), rounds)

    @classmethod
    def adaptive(cls, coalition: Iterable, decide: Decision) -> "Strategy":
        return cls("adaptive", frozenset(coalition), None, decide)

    def _aborts(self, r: int) -> bool:
        if callable(self.rounds):
            return bool(self.rounds(r))
        return r in self.rounds

    def __call__(self, lottery, pid, r: int) -> bool:
        if pid not in self.coalition or self.kind == "honest" or r < 0:
            return True
        if self.kind == "abort_at":
            return not self._aborts(r)
        return bool(self.decide(PublicView(lottery, r), pid, r))

    def priority(self, pid) -> int:
        return 1 if pid in self.coalition else 0


class Combined:
    """Several strategies over disjoint coalitions acting as one policy."""

    def __init__(self, strategies: Sequence[Strategy]):
        seen: set = set()
        for s in strategies:
            if seen & s.coalition:
                raise InvalidArgument("coalitions must be disjoint")
            seen |= s.coalition
        self.strategies = tuple(strategies)
        self.coalition = frozenset(seen)

    def __call__(self, lottery, pid, r: int) -> bool:
        return all(s(lottery, pid, r) for s in self.strategies)

    def priority(self, pid) -> int:
        return 1 if pid in self.coalition else 0


def as_policy(strategies: Strategy | Sequence[Strategy] | None):
    if strategies is None:
        return Strategy.honest()
    if isinstance(strategies, Strategy):
        return strategies
    return Combined(list(strategies))


# --- Monte Carlo -----------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialReport:
    seed: int
    positions: tuple
    payouts: dict
    messages: int
    phases: int


@dataclass(frozen=True)
class Estimate:
    id: Hashable
    trials: int
    mean: float
    ci_low: float
    ci_high: float


@dataclass
class MonteCarloReport:
    trials: int
    seed: int
    pot: int
    estimates: list[Estimate]
    permutations: dict[tuple, int] = field(default_factory=dict)
    mean_messages: float = 0.0
    mean_phases: float = 0.0

    def estimate(self, pid) -> Estimate:
        for e in self.estimates:
            if e.id == pid:
                return e
        raise InvalidArgument(f"no estimate for {pid!r}")

    def to_json(self) -> dict:
        return {
            "trials": self.trials, "seed": self.seed, "pot": self.pot,
            "estimates": [asdict(e) for e in self.estimates],
            "permutations": [[list(k), v] for k, v in sorted(self.permutations.items(), key=str)],
            "mean_messages": self.mean_messages, "mean_phases": self.mean_phases,
        }

    def to_csv(self) -> str:
        lines = ["id,trials,mean_payout,ci_low,ci_high"]
        for e in self.estimates:
            lines.append(f"{e.id},{e.trials},{e.mean:.6f},{e.ci_low:.6f},{e.ci_high:.6f}")
        return "\n".join(lines) + "\n"


def trial_seed(seed: int, index: int) -> int:
    digest = hashlib.sha256(concat(b"trial", int_field(seed), int_field(index))).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def run_trial(config: LotteryConfig, policy, seed: int) -> TrialReport:
    board = Board(time_per_round=config.time_per_round)
    rep = run_lottery(board, config, Schedule(seed, policy))
    return TrialReport(seed, rep.positions, dict(rep.payouts), len(board.messages), board.slot() + 1)


def _run_chunk(args) -> list[TrialReport]:
    config, policy, seeds = args
    return [run_trial(config, policy, s) for s in seeds]


def run_monte_carlo(config: LotteryConfig, strategies=None, trials: int = 1000, seed: int = 0,
                    workers: int = 1) -> MonteCarloReport:
    """Repeat full runs on fresh randomness; deterministic in ``seed``.

    ``workers > 1`` spreads trials over processes; the policy must then be
    picklable.  The aggregate does not depend on the worker count.
    """
    if trials < 1:
        raise InvalidArgument("trials must be at least 1")
    policy = as_policy(strategies)
    seeds = [trial_seed(seed, t) for t in range(trials)]
    if workers > 1:
        size = math.ceil(trials / workers)
        chunks = [(config, policy, seeds[k:k + size]) for k in range(0, trials, size)]
        with ProcessPoolExecutor(workers) as pool:
            reports = [r for part in pool.map(_run_chunk, chunks) for r in part]
    else:
        reports = _run_chunk((config, policy, seeds))
    ids = [o for o in _entrants(config) if o is not None]
    return aggregate(reports, seed, len(ids) * config.buy_in, ids, track_permutations=len(ids) <= 6)


def aggregate(reports: Sequence[TrialReport], seed: int, pot: int, ids: Iterable,
              track_permutations: bool = True) -> MonteCarloReport:
    ids = list(ids)
    sums = {pid: 0 for pid in ids}
    squares = {pid: 0 for pid in ids}
    perms: dict[tuple, int] = {}
    msgs = phases = 0
    for rep in reports:
        for pid in ids:
            x = rep.payouts.get(pid, 0)
            sums[pid] += x
            squares[pid] += x * x
        if track_permutations:
            key = tuple(o for o in rep.positions if o is not None)
            perms[key] = perms.get(key, 0) + 1
        msgs += rep.messages
        phases += rep.phases
    t = len(reports)
    estimates = []
    for pid in ids:
        mean = sums[pid] / t
        var = (squares[pid] - t * mean * mean) / (t - 1) if t > 1 else 0.0
        half = Z99 * math.sqrt(max(var, 0.0) / t)
        estimates.append(Estimate(pid, t, mean, mean - half, mean + half))
    return MonteCarloReport(t, seed, pot, estimates, perms, msgs / t, phases / t)


# --- exact abort game ----------------------------------------------------------------------------

@dataclass(frozen=True)
class FairnessResult:
    value: Fraction
    honest: Fraction
    mode: str

    @property
    def fair(self) -> bool:
        return self.value >= self.honest if self.mode == "min-target" else self.value <= self.honest


def _entrants(config: LotteryConfig) -> tuple:
    if config.weights is None:
        return tuple(range(1, config.n + 1))
    return tuple(k + 1 if w > 0 else None for k, w in enumerate(config.weights))


def exact_fairness_analysis(config: LotteryConfig, coalition: Iterable, target: Hashable | None = None,
                            mode: str = "min-target") -> FairnessResult:
    """Expectiminimax over honest randomness and coalition abort decisions.

    Participants are the ids 1..n (ghost wires hold None).  Honest values
    are uniform on the config's lambda grid and coalition values are fixed
    at zero, so a match with an honest party swaps with the grid probability
    of its threshold.  In every round the coalition sees the honest reveals
    first and then chooses, per match, to open or abort.

    ``mode="min-target"`` minimizes the target's expected share of the pot;
    ``mode="max-coalition"`` maximizes the coalition's total share.  The
    honest value of the same quantity is returned alongside.
    """
    if mode not in ("min-target", "max-coalition"):
        raise InvalidArgument("mode is 'min-target' or 'max-coalition'")
    if config.initial_permutation_round:
        raise InvalidArgument("analysis covers the network rounds only")
    owners0 = _entrants(config)
    live = [o for o in owners0 if o is not None]
    if len(live) > FAIRNESS_GUARD or config.n > 2 * FAIRNESS_GUARD:
        raise ResourceLimit(f"exact analysis is limited to {FAIRNESS_GUARD} participants")
    coalition = frozenset(coalition)
    if not coalition <= set(live):
        raise InvalidArgument("coalition members must be participants")
    if mode == "min-target":
        if target is None or target not in live or target in coalition:
            raise InvalidArgument("target must be an honest participant")
    shares = list(config.payout)

    def leaf(owners: tuple) -> Fraction:
        if mode == "min-target":
            return shares[owners.index(target)]
        return sum((shares[w] for w, o in enumerate(owners) if o in coalition), Fraction(0))

    value = _solve(config, owners0, coalition, leaf, minimize=(mode == "min-target"))
    honest = _solve(config, owners0, frozenset(), leaf, minimize=True)
    return FairnessResult(value, honest, mode)


def _solve(config: LotteryConfig, owners0: tuple, coalition: frozenset, leaf, minimize: bool) -> Fraction:
    params = config.params
    rounds = config.network.rounds
    weighted = config.weights is not None
    ws0 = config.weights if weighted else tuple(Fraction(1) for _ in owners0)
    pick = min if minimize else max
    memo: dict = {}
    grid: dict[Fraction, Fraction] = {}

    def g(thr: Fraction) -> Fraction:
        if thr not in grid:
            grid[thr] = Fraction(grid_count(thr, params), params.space)
        return grid[thr]

    def branches(s, owners, dead, ws):
        """Chance branches of one match, each with the coalition's options.

        An option is (swapped, newly dead participants).
        """
        i, j = s.from_wire - 1, s.to_wire - 1
        a, b = owners[i], owners[j]
        la = a is not None and a not in dead
        lb = b is not None and b not in dead
        ca, cb = la and a in coalition, lb and b in coalition
        thr = weight_threshold(ws[i], ws[j]) if weighted else s.swap_probability
        if not la and not lb:
            return [(Fraction(1), [(False, ())])]
        if la != lb:
            present, is_c = (a, ca) if la else (b, cb)
            wins = (True, ()) if la else (False, ())
            if is_c:
                return [(Fraction(1), [wins, (False, (present,))])]
            return [(Fraction(1), [wins])]
        if ca and cb:
            return [(Fraction(1), [(thr > 0, ()), (False, (a,)), (True, (b,)), (False, (a, b))])]
        q = g(thr)
        out = []
        for swapped, prob in ((True, q), (False, 1 - q)):
            if not prob:
                continue
            if ca:
                out.append((prob, [(swapped, ()), (False, (a,))]))
            elif cb:
                out.append((prob, [(swapped, ()), (True, (b,))]))
            else:
                out.append((prob, [(swapped, ())]))
        return out

    def apply(rnd, owners, ws, outcome):
        o, w = list(owners), list(ws)
        for s, swapped in zip(rnd, outcome):
            i, j = s.from_wire - 1, s.to_wire - 1
            if weighted:
                total = ws[i] + ws[j]
                loser = ws[j] if swapped else ws[i]
                w[i], w[j] = loser, total
            if swapped:
                o[i], o[j] = o[j], o[i]
        return tuple(o), tuple(w)

    def solve(r: int, owners: tuple, dead: frozenset, ws: tuple) -> Fraction:
        if r == len(rounds):
            return leaf(owners)
        key = (r, owners, dead, ws)
        if key in memo:
            return memo[key]
        rnd = rounds[r]
        per_match = [branches(s, owners, dead, ws) for s in rnd]
        total = Fraction(0)
        for combo in product(*per_match):
            prob = Fraction(1)
            for p, _ in combo:
                prob *= p
            best = None
            for choice in product(*(opts for _, opts in combo)):
                swaps = [c[0] for c in choice]
                newly = frozenset(x for c in choice for x in c[1])
                o, w = apply(rnd, owners, ws, swaps)
                v = solve(r + 1, o, dead | newly, w)
                best = v if best is None else pick(best, v)
            total += prob * best
        memo[key] = total
        return total

    return solve(0, owners0, frozenset(), ws0)


# --- distribution checks -----------------------------------------------------------------------------

@dataclass(frozen=True)
class DistributionCheck:
    tv: Fraction
    chi2: float
    df: int

    def chi2_quantile(self, q: float = 0.999) -> float:
        return float(_chi2.ppf(q, self.df)) if self.df > 0 else 0.0

    def passes(self, q: float = 0.999) -> bool:
        return self.chi2 <= self.chi2_quantile(q)


def distribution_check(observed: Mapping[tuple, int], expected: Mapping[tuple, Fraction]) -> DistributionCheck:
    """Total-variation distance and Pearson chi-square of counts against an exact law.

    Outcomes observed but impossible under ``expected`` make chi-square infinite.
    """
    total = sum(observed.values())
    if total <= 0:
        raise InvalidArgument("no observations")
    keys = set(observed) | set(expected)
    tv = sum((abs(Fraction(observed.get(k, 0), total) - Fraction(expected.get(k, 0))) for k in keys),
             Fraction(0)) / 2
    stat = 0.0
    for k in keys:
        e = float(expected.get(k, 0)) * total
        o = observed.get(k, 0)
        if e == 0:
            if o:
                stat = math.inf
            continue
        stat += (o - e) ** 2 / e
    support = sum(1 for k in expected if expected[k] > 0)
    return DistributionCheck(tv, stat, max(support - 1, 0))


def weighted_match_trials(w_a: Fraction, w_b: Fraction, trials: int, seed: int = 0, lam: int = 128) -> int:
    """Count wins of party ``a`` over ``trials`` two-party matches with random lambda-bit values."""
    params = SecurityParams(lam=lam, reduced=lam < 128)
    rng = random.Random(seed)
    w_a, w_b = Fraction(w_a), Fraction(w_b)
    wins = 0
    for _ in range(trials):
        if two_party_settle(rng.getrandbits(lam), rng.getrandbits(lam), w_a, w_b, params) == "a":
            wins += 1
    return wins
