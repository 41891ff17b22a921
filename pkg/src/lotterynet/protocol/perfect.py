"""Perfect shuffle: Fisher-Yates style rounds of chained two-party draws.

Round ``r`` runs over the ``m = n - r`` participants still unplaced.  Every
one of them reveals one chain link; the round fixes the occupant of the last
open place (plus any aborters) and shrinks the remaining list.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Hashable

from .. import kernels
from ..bulletin import FINAL_SETTLE, Board, Label, Phase
from ..commitments import (
    DEFAULT_PARAMS, Opening, SecurityParams, chain_open, concat, grid_probability, verify_opening,
)
from ..errors import DuplicateMessage, InvalidArgument, PhaseError, ResourceLimit, VerificationError
from ..network import PayoutFunction
from .rules import perfect_round, split_pot
from .lottery import PayoutReport, encode_positions, make_participants

EXHAUSTIVE_GUARD = 1 << 20


@dataclass(frozen=True)
class PerfectConfig:
    n: int
    payout: PayoutFunction | None = None
    buy_in: int = 1
    params: SecurityParams = DEFAULT_PARAMS
    time_per_round: int = 10
    rounds: int | None = None

    def __post_init__(self) -> None:
        if self.n < 2:
            raise InvalidArgument("a perfect shuffle needs at least two participants")
        if self.payout is not None and len(self.payout) != self.n:
            raise InvalidArgument("payout length does not match n")
        if self.rounds is not None and not 1 <= self.rounds <= self.n - 1:
            raise InvalidArgument("rounds must lie in [1, n - 1]")

    @property
    def round_count(self) -> int:
        return self.n - 1 if self.rounds is None else self.rounds


class PerfectShuffleLottery:
    LEADING = ("Commit",)

    def __init__(self, config: PerfectConfig, board: Board):
        if tuple(board.leading) != self.LEADING or board.time_per_round != config.time_per_round:
            raise InvalidArgument("board layout does not match the config")
        self.config = config
        self.board = board
        self.registered: list = []
        self._heads: dict = {}
        self._opens: dict[tuple[int, Hashable], int] = {}
        self._rounds: list[tuple[list, list]] = []
        self.report: PayoutReport | None = None

    @property
    def round_count(self) -> int:
        return self.config.round_count

    def _require(self, phase: Phase) -> None:
        if phase not in self.board.current_phase(self.round_count):
            raise PhaseError(f"{phase} is not open")

    def commit(self, pid: Hashable, head: bytes) -> None:
        self._require(Phase("Commit"))
        if pid in self._heads:
            raise DuplicateMessage(f"{pid!r} already registered")
        if len(self.registered) >= self.config.n:
            raise InvalidArgument("lottery is full")
        self.board.publish(pid, Label("Commit"), head)
        self.board.deposit_from(pid, self.config.buy_in)
        self.registered.append(pid)
        self._heads[pid] = head

    def remaining(self, r: int) -> list:
        """Participants still unplaced before round ``r``."""
        while len(self._rounds) < r:
            t = len(self._rounds)
            if self.report is None and self.board.slot() <= len(self.LEADING) + t:
                raise PhaseError(f"round {t} still open")
            before = self.registered if t == 0 else self._rounds[t - 1][1]
            values = {p: self._opens.get((t, p)) for p in before}
            if len(before) >= 2:
                self._rounds.append(perfect_round(before, values, self.config.params))
            else:
                self._rounds.append(([], list(before)))
        return list(self.registered) if r == 0 else list(self._rounds[r - 1][1])

    def open(self, pid: Hashable, r: int, opening: Opening) -> None:
        self._require(Phase("Open", r))
        if pid not in self.remaining(r):
            raise InvalidArgument(f"{pid!r} is not among the unplaced participants")
        if (r, pid) in self._opens:
            raise DuplicateMessage(f"{pid!r} already opened round {r}")
        if opening.params != self.config.params or not verify_opening(self._heads[pid], opening):
            raise VerificationError("opening does not match the committed head")
        self.board.publish(pid, Label("Open", r),
                           concat(opening.next_head, self.config.params.encode_value(opening.value)))
        self._opens[(r, pid)] = opening.value
        self._heads[pid] = opening.next_head

    def placements(self) -> tuple:
        """Participants by final place, place 1 first; unresolved places are None."""
        self.remaining(self.round_count)
        order: list = []
        for placed, _ in self._rounds:
            order.extend(placed)
        rest = self._rounds[-1][1] if self._rounds else list(self.registered)
        if len(rest) == 1:
            order.append(rest[0])
        ranked = list(reversed(order))
        return tuple([None] * (self.config.n - len(ranked)) + ranked)

    def selected(self, k: int) -> list:
        """The participants holding the last ``k`` places, last place first."""
        self.remaining(self.round_count)
        order: list = []
        for placed, _ in self._rounds:
            order.extend(placed)
        return order[:k]

    def settle_lottery(self, settler: Hashable = "settler") -> PayoutReport:
        if self.report is not None:
            raise DuplicateMessage("lottery already settled")
        self._require(FINAL_SETTLE)
        positions = self.placements()
        payout = self.config.payout or PayoutFunction.single_winner(self.config.n)
        pot = self.board.escrow
        amounts = split_pot(payout, pot)
        payouts: dict = {}
        dust = 0
        for pid, amount in zip(positions, amounts):
            if pid is None:
                dust += amount
            else:
                payouts[pid] = payouts.get(pid, 0) + amount
        if dust and positions[0] is not None:
            payouts[positions[0]] += dust
        self.board.publish(settler, Label("Settle"), encode_positions(positions))
        for pid, amount in payouts.items():
            if amount:
                self.board.withdraw_to(pid, amount)
        self.report = PayoutReport(positions, payouts, pot)
        return self.report


def _drive(lottery: PerfectShuffleLottery, n: int, seed: int, policy=None, early_close: bool = True) -> None:
    board = lottery.board
    people = make_participants(range(1, n + 1), lottery.round_count, seed, lottery.config.params)
    for p in people:
        lottery.commit(p.id, p.chain.head)
    if not (early_close and board.close_round_early([p.id for p in people], "Commit")):
        board.advance_to_boundary()
    for r in range(lottery.round_count):
        expected = lottery.remaining(r)
        want = set(expected)
        for p in people:
            if p.id in want and (policy is None or policy(lottery, p.id, r)):
                lottery.open(p.id, r, chain_open(p.chain, r))
        if not (early_close and board.close_round_early(expected, "Open", lottery.round_count)):
            board.advance_to_boundary()
    board.advance_to_boundary()


def run_perfect_shuffle(board: Board, n: int, seed: int = 0, policy=None,
                        params: SecurityParams = DEFAULT_PARAMS, payout: PayoutFunction | None = None,
                        buy_in: int = 1) -> tuple:
    """Run all ``n - 1`` rounds and settle; returns participants by place, place 1 first."""
    cfg = PerfectConfig(n, payout, buy_in, params, board.time_per_round)
    lottery = PerfectShuffleLottery(cfg, board)
    _drive(lottery, n, seed, policy)
    lottery.settle_lottery(1)
    return lottery.placements()


def leader_aversion_select(board: Board, n: int, k: int, seed: int = 0, policy=None,
                           params: SecurityParams = DEFAULT_PARAMS) -> list:
    """Run only the first ``k`` rounds; returns the ``k`` participants placed last."""
    if not 1 <= k < n:
        raise InvalidArgument("k must satisfy 1 <= k < n")
    cfg = PerfectConfig(n, None, 0, params, board.time_per_round, rounds=k)
    lottery = PerfectShuffleLottery(cfg, board)
    _drive(lottery, n, seed, policy)
    return lottery.selected(k)


# --- exact analysis ----------------------------------------------------------------

def _round_counts_exhaustive(m: int, params: SecurityParams) -> list[int]:
    """Outcome counts of one honest round by slot placed last; enumerates every value.

    The last slot's value is fixed at zero: XOR with a fixed value permutes
    the grid, so every fixed value yields the same counts.
    """
    space = params.space
    if space ** (m - 1) > EXHAUSTIVE_GUARD:
        raise ResourceLimit(f"{space}^{m - 1} value vectors exceed the guard")
    slots = list(range(m))
    counts = [0] * m
    for values in product(range(space), repeat=m - 1):
        openings = dict(zip(slots, values))
        openings[m - 1] = 0
        placed, _ = perfect_round(slots, openings, params)
        counts[placed[0]] += 1
    return counts


def _round_counts_kernel(m: int, params: SecurityParams) -> list[int]:
    nums = [1] * (m - 1)
    dens = [m - i for i in range(m - 1)]
    return kernels.first_swap_counts(params.lam, nums, dens)


def _round_probabilities_analytic(m: int, params: SecurityParams) -> list[Fraction]:
    """Closed form on the grid: lottery t swaps first with prob prod_{s<t}(1-g_s) * g_t."""
    out = []
    stay = Fraction(1)
    for i in range(m - 1):
        g = grid_probability(Fraction(1, m - i), params)
        out.append(stay * g)
        stay *= 1 - g
    out.append(stay)
    return out


def perfect_distribution(n: int, params: SecurityParams, method: str = "count") -> dict[tuple, Fraction]:
    """Exact distribution of honest placements (place 1 first) over ids 1..n.

    ``method="enumerate"`` sends every value vector through the round rule;
    ``method="count"`` counts grid values below each threshold instead;
    ``method="analytic"`` multiplies the grid probabilities in closed form.
    """
    if method not in ("count", "enumerate", "analytic"):
        raise InvalidArgument("method is 'count', 'enumerate' or 'analytic'")
    per_m: dict[int, list[Fraction]] = {}
    for m in range(2, n + 1):
        if method == "analytic":
            per_m[m] = _round_probabilities_analytic(m, params)
            continue
        counts = (_round_counts_exhaustive if method == "enumerate" else _round_counts_kernel)(m, params)
        total = sum(counts)
        per_m[m] = [Fraction(c, total) for c in counts]
    dist: dict[tuple, Fraction] = {((), tuple(range(1, n + 1))): Fraction(1)}
    for m in range(n, 1, -1):
        nxt: dict = {}
        for (placed, rem), q in dist.items():
            for slot, pq in enumerate(per_m[m]):
                if not pq:
                    continue
                s = list(rem)
                if slot < m - 1:
                    s[slot], s[m - 1] = s[m - 1], s[slot]
                key = (placed + (s[m - 1],), tuple(s[:m - 1]))
                nxt[key] = nxt.get(key, Fraction(0)) + q * pq
        dist = nxt
    return {tuple(reversed(placed + rem)): q for (placed, rem), q in dist.items()}


def grid_sequential_bound(n: int, params: SecurityParams) -> Fraction:
    """Coupling bound on the total-variation distance between the grid-adjusted
    shuffle and the ideal uniform shuffle: the sum over rounds of the per-round
    total-variation distance between grid and ideal slot probabilities."""
    bound = Fraction(0)
    for m in range(2, n + 1):
        probs = _round_probabilities_analytic(m, params)
        bound += sum(abs(q - Fraction(1, m)) for q in probs) / 2
    return bound
