"""Simulated public bulletin board with escrow and a logical clock.

The board authenticates authors by construction (callers pass their id),
timestamps every message with the current logical time and keeps a trace
of every mutation so that a run can be replayed bit for bit.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from typing import Hashable, Iterable, Iterator, Sequence

from .errors import DuplicateMessage, InsufficientEscrow, InvalidArgument

KINDS = ("Commit", "Open", "Settle", "CoopOpen", "BuyTicket", "ZkCommit", "Claim")

Author = Hashable


@dataclass(frozen=True, order=True)
class Label:
    kind: str
    round: int | None = None
    match: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown label kind {self.kind!r}")

    def __str__(self) -> str:
        args = [str(x) for x in (self.round, self.match) if x is not None]
        return f"{self.kind}({', '.join(args)})" if args else self.kind


@dataclass(frozen=True)
class BoardMessage:
    author: Author
    label: Label
    payload: bytes
    timestamp: int


@dataclass(frozen=True, order=True)
class Phase:
    kind: str
    round: int | None = None

    def __str__(self) -> str:
        return self.kind if self.round is None else f"{self.kind}({self.round})"


COMMIT = Phase("Commit")
FINAL_SETTLE = Phase("Settle")


def phase_schedule(round_count: int, leading: Sequence[str] = ("Commit",)) -> list[frozenset[Phase]]:
    """Every phase set in timeline order; the last entry lasts forever."""
    if round_count < 1:
        raise InvalidArgument("round_count must be at least 1")
    slots = [frozenset({Phase(k)}) for k in leading]
    slots.append(frozenset({Phase("Open", 0)}))
    for r in range(1, round_count):
        slots.append(frozenset({Phase("Settle", r - 1), Phase("Open", r)}))
    slots.append(frozenset({Phase("Settle", round_count - 1)}))
    slots.append(frozenset({FINAL_SETTLE}))
    return slots


class Board:
    def __init__(self, start_time: int = 0, time_per_round: int = 10,
                 leading: Sequence[str] = ("Commit",)):
        if time_per_round <= 0:
            raise InvalidArgument("time_per_round must be positive")
        self.start_time = start_time
        self.time_per_round = time_per_round
        self.leading = tuple(leading)
        self.clock = start_time
        self.messages: list[BoardMessage] = []
        self._index: dict[tuple[Author, Label], BoardMessage] = {}
        self.balances: dict[Author, int] = defaultdict(int)
        self.escrow = 0
        self.deposited = 0
        self.withdrawn = 0
        self.trace: list[dict] = [{
            "type": "header", "start_time": start_time,
            "time_per_round": time_per_round, "leading": list(self.leading),
        }]

    # messages --------------------------------------------------------------

    def publish(self, author: Author, label: Label, payload: bytes = b"") -> BoardMessage:
        key = (author, label)
        if key in self._index:
            raise DuplicateMessage(f"{author!r} already published {label}")
        msg = BoardMessage(author, label, bytes(payload), self.clock)
        self.messages.append(msg)
        self._index[key] = msg
        self.trace.append({
            "type": "publish", "author": author, "kind": label.kind, "round": label.round,
            "match": label.match, "payload": msg.payload.hex(), "t": self.clock,
        })
        return msg

    def read(self, author: Author, label: Label) -> bytes | None:
        msg = self._index.get((author, label))
        return None if msg is None else msg.payload

    def message(self, author: Author, label: Label) -> BoardMessage | None:
        return self._index.get((author, label))

    def select(self, kind: str, round: int | None = None, match: int | None = None) -> Iterator[BoardMessage]:
        """Messages of a kind in publication order, optionally filtered."""
        for m in self.messages:
            if m.label.kind != kind:
                continue
            if round is not None and m.label.round != round:
                continue
            if match is not None and m.label.match != match:
                continue
            yield m

    # time --------------------------------------------------------------------

    def now(self) -> int:
        return self.clock

    def advance_time(self, delta: int) -> None:
        if delta < 0:
            raise InvalidArgument("time cannot go backwards")
        if delta:
            self.clock += delta
            self.trace.append({"type": "advance", "delta": delta})

    def slot(self) -> int:
        return (self.clock - self.start_time) // self.time_per_round

    def advance_to_boundary(self) -> None:
        boundary = self.start_time + (self.slot() + 1) * self.time_per_round
        self.advance_time(boundary - self.clock)

    def current_phase(self, round_count: int) -> frozenset[Phase]:
        schedule = phase_schedule(round_count, self.leading)
        return schedule[min(max(self.slot(), 0), len(schedule) - 1)]

    def close_round_early(self, expected_publishers: Iterable[Author], label_kind: str,
                          round_count: int | None = None) -> bool:
        """Jump to the next phase boundary once every expected message is present.

        The label round is read off the clock: leading phases carry no round,
        ``Open`` messages belong to the round of the current Open phase.
        """
        slot = self.slot()
        lead = len(self.leading)
        if slot < lead:
            if self.leading[slot] != label_kind:
                return False
            rnd = None
        else:
            rnd = slot - lead if label_kind == "Open" else None
            if label_kind == "Open" and round_count is not None and rnd >= round_count:
                return False
        label = Label(label_kind, rnd)
        if all((a, label) in self._index for a in expected_publishers):
            self.advance_to_boundary()
            return True
        return False

    # money -----------------------------------------------------------------

    def deposit_from(self, author: Author, amount: int) -> None:
        if not isinstance(amount, int) or amount < 0:
            raise InvalidArgument("deposit must be a non-negative integer")
        self.balances[author] -= amount
        self.escrow += amount
        self.deposited += amount
        self.trace.append({"type": "deposit", "id": author, "amount": amount})

    def withdraw_to(self, author: Author, amount: int) -> None:
        if not isinstance(amount, int) or amount < 0:
            raise InvalidArgument("withdrawal must be a non-negative integer")
        if amount > self.escrow:
            raise InsufficientEscrow(f"escrow {self.escrow} < {amount}")
        self.balances[author] += amount
        self.escrow -= amount
        self.withdrawn += amount
        self.trace.append({"type": "withdraw", "id": author, "amount": amount})

    def total_deposited(self) -> int:
        return self.deposited

    # replay ------------------------------------------------------------------

    def export_trace(self) -> list[dict]:
        return [dict(r) for r in self.trace]

    def dumps_trace(self) -> str:
        return "\n".join(json.dumps(r, sort_keys=True) for r in self.trace) + "\n"

    @classmethod
    def replay(cls, records: Iterable[dict]) -> "Board":
        it = iter(records)
        try:
            head = next(it)
        except StopIteration:
            raise InvalidArgument("empty trace") from None
        if head.get("type") != "header":
            raise InvalidArgument("trace does not start with a header")
        board = cls(head["start_time"], head["time_per_round"], head.get("leading", ("Commit",)))
        for rec in it:
            kind = rec.get("type")
            if kind == "publish":
                if rec["t"] != board.clock:
                    raise InvalidArgument("trace timestamp does not match replayed clock")
                board.publish(rec["author"], Label(rec["kind"], rec["round"], rec["match"]),
                              bytes.fromhex(rec["payload"]))
            elif kind == "advance":
                board.advance_time(rec["delta"])
            elif kind == "deposit":
                board.deposit_from(rec["id"], rec["amount"])
            elif kind == "withdraw":
                board.withdraw_to(rec["id"], rec["amount"])
            else:
                raise InvalidArgument(f"unknown trace record {kind!r}")
        return board

    @classmethod
    def loads_trace(cls, text: str) -> list[dict]:
        return [json.loads(line) for line in text.splitlines() if line.strip()]

    def state(self) -> str:
        """Canonical serialization of the full board state."""
        return json.dumps({
            "clock": self.clock,
            "escrow": self.escrow,
            "balances": sorted(([repr(k), v] for k, v in self.balances.items())),
            "trace": self.trace,
        }, sort_keys=True)
