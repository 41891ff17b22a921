"""Transaction and phase accounting over board traces and closed forms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .bulletin import Board
from .errors import InvalidArgument
from .network import PayoutFunction
from .privacy import run_coop
from .protocol.lottery import LotteryConfig, Schedule, run_lottery

PROTOCOLS = ("single", "tyche", "coop")

# published honest-run counts at n = 1024, kept for side-by-side reports
REFERENCE_1024 = {"single": 3072, "tyche": 11266, "coop": 6145}


@dataclass(frozen=True)
class CostModel:
    base: int = 1
    per_byte: int = 0

    def __post_init__(self) -> None:
        if self.base < 0 or self.per_byte < 0:
            raise InvalidArgument("costs must be non-negative")

    def message_cost(self, payload_bytes: int) -> int:
        return self.base + self.per_byte * payload_bytes


@dataclass
class CostReport:
    messages: int
    phases: int
    cost: int
    per_kind: dict[str, int] = field(default_factory=dict)
    per_phase: dict[int, int] = field(default_factory=dict)
    per_participant: dict = field(default_factory=dict)

    @property
    def per_user_mean(self) -> float:
        return self.messages / len(self.per_participant) if self.per_participant else 0.0


def count_transactions(trace: Sequence[dict], model: CostModel = CostModel()) -> CostReport:
    """One published board message is one transaction.

    Settlements merged into openings or cooperative records are not separate
    messages and so are not counted separately.  The trace must start with
    a header and contain the final settlement.
    """
    records = list(trace)
    if not records or records[0].get("type") != "header":
        raise InvalidArgument("trace has no header")
    start, step = records[0]["start_time"], records[0]["time_per_round"]
    clock = start
    last_slot = 0
    messages = cost = 0
    per_kind: dict[str, int] = {}
    per_phase: dict[int, int] = {}
    per_participant: dict = {}
    settled = False
    for rec in records[1:]:
        kind = rec.get("type")
        if kind == "advance":
            clock += rec["delta"]
        elif kind == "publish":
            slot = (rec["t"] - start) // step
            messages += 1
            cost += model.message_cost(len(rec["payload"]) // 2)
            per_kind[rec["kind"]] = per_kind.get(rec["kind"], 0) + 1
            per_phase[slot] = per_phase.get(slot, 0) + 1
            per_participant[rec["author"]] = per_participant.get(rec["author"], 0) + 1
            if rec["kind"] == "Settle" and rec["round"] is None:
                settled = True
        elif kind not in ("deposit", "withdraw"):
            raise InvalidArgument(f"unknown trace record {kind!r}")
        last_slot = max(last_slot, (clock - start) // step)
    if not settled:
        raise InvalidArgument("trace is truncated: no final settlement")
    return CostReport(messages, last_slot + 1, cost, per_kind, per_phase, per_participant)


def _log2(n: int) -> int:
    if n < 2 or n & (n - 1):
        raise InvalidArgument("closed forms need a power of two n >= 2")
    return n.bit_length() - 1


def predict_counts(protocol: str, n: int) -> int:
    """Honest-run transaction count in closed form (power-of-two n).

    single: n commits, 2n - 2 reveals, one settlement.
    tyche: n commits, n reveals in each of log n rounds, one settlement.
    coop: n commits, one record per match (n/2 per round), one settlement.
    """
    k = _log2(n)
    if protocol == "single":
        return n + (2 * n - 2) + 1
    if protocol == "tyche":
        return n + n * k + 1
    if protocol == "coop":
        return n + (n // 2) * k + 1
    raise InvalidArgument(f"unknown protocol {protocol!r}")


def honest_trace(protocol: str, n: int, seed: int = 0, time_per_round: int = 10) -> list[dict]:
    """Trace of one honest run with single-winner payout."""
    board = Board(time_per_round=time_per_round)
    if protocol == "single":
        cfg = LotteryConfig.single_winner(n, time_per_round=time_per_round)
        run_lottery(board, cfg, Schedule(seed))
    elif protocol == "tyche":
        cfg = LotteryConfig.general(n, PayoutFunction.single_winner(n), time_per_round=time_per_round)
        run_lottery(board, cfg, Schedule(seed))
    elif protocol == "coop":
        cfg = LotteryConfig.general(n, PayoutFunction.single_winner(n), time_per_round=time_per_round)
        run_coop(board, cfg, seed)
    else:
        raise InvalidArgument(f"unknown protocol {protocol!r}")
    return board.export_trace()


CSV_HEADER = "protocol,n,predicted,messages,phases,per_user,cost,reference"


@dataclass(frozen=True)
class CostRow:
    protocol: str
    n: int
    predicted: int | None
    messages: int
    phases: int
    per_user: float
    cost: int

    @property
    def reference(self) -> int | None:
        return REFERENCE_1024.get(self.protocol) if self.n == 1024 else None

    def csv(self) -> str:
        pred = "" if self.predicted is None else str(self.predicted)
        ref = "" if self.reference is None else str(self.reference)
        return f"{self.protocol},{self.n},{pred},{self.messages},{self.phases},{self.per_user:.4f},{self.cost},{ref}"


def cost_row(protocol: str, n: int, seed: int = 0, model: CostModel = CostModel()) -> CostRow:
    report = count_transactions(honest_trace(protocol, n, seed), model)
    try:
        predicted = predict_counts(protocol, n)
    except InvalidArgument:
        predicted = None
    return CostRow(protocol, n, predicted, report.messages, report.phases, report.messages / n, report.cost)


def to_csv(rows: Iterable[CostRow]) -> str:
    return "\n".join([CSV_HEADER, *(r.csv() for r in rows)]) + "\n"


def plot_data(rows: Iterable[CostRow]) -> str:
    """Whitespace-separated ``n per_user`` pairs, one per line."""
    return "".join(f"{r.n} {r.per_user:.6f}\n" for r in rows)
