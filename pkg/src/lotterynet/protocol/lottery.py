"""Multi-party lottery over a shuffling network, played on a bulletin board.

Every participant commits to a hash chain.  In network round ``r`` each
scheduled participant publishes the next link of its chain; the value
revealed by the two occupants of a swapper decides whether they swap.
Opening round ``r`` also settles the opener's match of round ``r - 1`` in
the same transaction.

All instance state is a deterministic function of the board messages, so
:func:`audit` can recompute the outcome from a replayed trace.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Sequence

from ..bulletin import FINAL_SETTLE, Board, Label, Phase
from ..commitments import (
    DEFAULT_PARAMS, HashChainCommitment, Opening, SecurityParams, chain_create, chain_open,
    concat, grid_count, int_field, split_fields, verify_opening,
)
from ..errors import DuplicateMessage, InvalidArgument, OutOfRange, PhaseError, VerificationError
from ..network import (
    PayoutFunction, ShufflingNetwork, build_general, build_tournament_tree, depth,
)
from .rules import (
    BOTH_OPENED, id_bytes, initial_permutation, resolve_swap, split_pot, weight_threshold,
)


class _Hidden:
    """Owner marker for a wire whose occupant is not public."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "HIDDEN"


HIDDEN = _Hidden()


@dataclass(frozen=True)
class LotteryConfig:
    n: int
    network: ShufflingNetwork
    payout: PayoutFunction
    weights: tuple[Fraction, ...] | None = None
    buy_in: int = 1
    params: SecurityParams = DEFAULT_PARAMS
    time_per_round: int = 10
    initial_permutation_round: bool = False

    def __post_init__(self) -> None:
        if self.network.n != self.n:
            raise InvalidArgument("network wire count does not match n")
        if len(self.payout) != self.n:
            raise InvalidArgument("payout length does not match n")
        if self.weights is not None:
            ws = tuple(Fraction(w) for w in self.weights)
            if len(ws) != self.n or any(w < 0 for w in ws) or not any(ws):
                raise InvalidArgument("weights must be n non-negative values, not all zero")
            object.__setattr__(self, "weights", ws)
        if not isinstance(self.buy_in, int) or self.buy_in < 0:
            raise InvalidArgument("buy_in must be a non-negative integer")
        if self.initial_permutation_round and self.weights is not None:
            raise InvalidArgument("initial permutation would reorder weighted wires")

    @property
    def offset(self) -> int:
        return 1 if self.initial_permutation_round else 0

    @property
    def round_count(self) -> int:
        return len(self.network.rounds) + self.offset

    @property
    def chain_length(self) -> int:
        return self.round_count

    @classmethod
    def general(cls, n: int, payout: PayoutFunction | None = None, **kw) -> "LotteryConfig":
        payout = PayoutFunction.single_winner(n) if payout is None else payout
        return cls(n, build_general(n, payout), payout, **kw)

    @classmethod
    def single_winner(cls, n: int, weights: Sequence | None = None, **kw) -> "LotteryConfig":
        """Tournament tree padded to a power of two with weight-zero ghosts."""
        if n < 2:
            raise InvalidArgument("need at least two participants")
        size = 1 << (n - 1).bit_length()
        ws = [Fraction(1)] * n if weights is None else [Fraction(w) for w in weights]
        if len(ws) != n:
            raise InvalidArgument("one weight per participant")
        ws += [Fraction(0)] * (size - n)
        return cls(size, build_tournament_tree(size), PayoutFunction.single_winner(size),
                   weights=tuple(ws), **kw)


@dataclass(frozen=True)
class Slot:
    """Public state of one wire."""

    owner: Hashable | None
    head: bytes | None
    weight: Fraction = Fraction(1)
    dead: bool = False
    pk: bytes | None = None

    @property
    def live(self) -> bool:
        return self.owner is not None and not self.dead


@dataclass(frozen=True)
class MatchRecord:
    round: int
    match: int
    parties: tuple[int, int]
    occupants: tuple
    outcome: int | None
    reason: str
    swapped: bool | None = None
    fixed_point: Fraction | None = None

    def to_json(self) -> dict:
        return {
            "round": self.round, "match": self.match, "parties": list(self.parties),
            "occupants": [_owner_json(o) for o in self.occupants],
            "outcome": self.outcome, "reason": self.reason, "swapped": self.swapped,
            "fixed_point": None if self.fixed_point is None else str(self.fixed_point),
        }


def _owner_json(owner):
    if owner is HIDDEN:
        return "hidden"
    return owner


@dataclass
class PayoutReport:
    positions: tuple
    payouts: dict
    pot: int
    records: list[MatchRecord] = field(default_factory=list)
    reserved: int = 0

    @property
    def winner(self):
        return self.positions[0]

    def to_json(self) -> dict:
        return {
            "positions": [_owner_json(o) for o in self.positions],
            "payouts": [[_owner_json(k), v] for k, v in self.payouts.items()],
            "pot": self.pot, "reserved": self.reserved,
            "records": [r.to_json() for r in self.records],
        }


def encode_positions(owners: Iterable) -> bytes:
    fields = []
    for o in owners:
        if o is None:
            fields.append(b"")
        elif o is HIDDEN:
            fields.append(b"?")
        else:
            fields.append(b"=" + id_bytes(o))
    return concat(*fields)


class LotteryInstance:
    """Live instance bound to one board."""

    LEADING: tuple[str, ...] = ("Commit",)

    def __init__(self, config: LotteryConfig, board: Board):
        if tuple(board.leading) != self.LEADING:
            raise InvalidArgument(f"board phases must start with {self.LEADING}")
        if board.time_per_round != config.time_per_round:
            raise InvalidArgument("board and config disagree on time_per_round")
        self.config = config
        self.board = board
        self.registered: list = []
        self._commit_heads: dict = {}
        self._opens: dict[tuple[int, int], tuple] = {}
        self._states: list[list[Slot]] = []
        self._owner_index: list[dict] = []
        self._produced_by: dict[tuple[int, int], tuple[int, int]] = {}
        self._records: dict[tuple[int, int], MatchRecord] = {}
        self._settled: set[tuple[int, int]] = set()
        self._settled_rounds = 0
        self._schedule = [frozenset(w for s in rnd for w in (s.from_wire, s.to_wire))
                          for rnd in config.network.rounds]
        self.report: PayoutReport | None = None

    # phase helpers -----------------------------------------------------------

    @property
    def round_count(self) -> int:
        return self.config.round_count

    def phase(self) -> frozenset[Phase]:
        return self.board.current_phase(self.round_count)

    def _require(self, phase: Phase) -> None:
        if phase not in self.phase():
            raise PhaseError(f"{phase} not in current phase {sorted(map(str, self.phase()))}")

    def _open_over(self, r: int) -> bool:
        return self.report is not None or self.board.slot() > len(self.LEADING) + r

    @property
    def status(self) -> str:
        if self.report is not None:
            return "settled"
        if self.board.slot() < len(self.LEADING):
            return "registering"
        return "running"

    def is_network_round(self, r: int) -> bool:
        return r >= self.config.offset

    def matches(self, r: int) -> tuple:
        if not self.is_network_round(r):
            return ()
        return self.config.network.rounds[r - self.config.offset]

    # registration --------------------------------------------------------------

    def commit(self, pid: Hashable, head: bytes) -> None:
        self._require(Phase("Commit"))
        self._check_registration(pid)
        if not isinstance(head, (bytes, bytearray)) or len(head) != self.config.params.hash_output_bits // 8:
            raise InvalidArgument("head must be a hash value")
        self.board.publish(pid, Label("Commit"), bytes(head))
        self.board.deposit_from(pid, self.config.buy_in)
        self._register(pid, bytes(head))

    def _check_registration(self, pid) -> None:
        if pid is None or pid is HIDDEN:
            raise InvalidArgument("invalid participant id")
        if pid in self._commit_heads:
            raise DuplicateMessage(f"{pid!r} already registered")
        if len(self.registered) >= self.config.n:
            raise InvalidArgument("lottery is full")

    def _register(self, pid, head: bytes) -> None:
        self.registered.append(pid)
        self._commit_heads[pid] = head

    # state ---------------------------------------------------------------------

    def _initial_state(self) -> list[Slot]:
        cfg = self.config
        slots = []
        for w in range(cfg.n):
            weight = cfg.weights[w] if cfg.weights is not None else Fraction(1)
            if w < len(self.registered):
                pid = self.registered[w]
                slots.append(self._fresh_slot(pid, self._commit_heads[pid], weight))
            else:
                slots.append(Slot(None, None, Fraction(0)))
        return slots

    def _fresh_slot(self, pid, head: bytes, weight: Fraction) -> Slot:
        return Slot(pid, head, weight)

    def state(self, r: int) -> list[Slot]:
        """Wire slots before protocol round ``r`` (``r = round_count`` is final)."""
        if not 0 <= r <= self.round_count:
            raise OutOfRange(f"round {r} outside [0, {self.round_count}]")
        if not self._states:
            if self.board.slot() < len(self.LEADING) and self.report is None:
                raise PhaseError("registration still open")
            self._push_state(self._initial_state())
        while len(self._states) <= r:
            t = len(self._states) - 1
            if not self._open_over(t):
                raise PhaseError(f"round {t} still open")
            self._push_state(self._apply_round(t, self._states[t]))
        return self._states[r]

    def _push_state(self, slots: list[Slot]) -> None:
        self._states.append(slots)
        self._owner_index.append({s.owner: w for w, s in enumerate(slots, 1)
                                  if s.owner is not None and s.owner is not HIDDEN})

    def wire_of(self, pid, r: int) -> int | None:
        self.state(r)
        return self._owner_index[r].get(pid)

    def scheduled(self, r: int) -> list:
        """Participants expected to open in round ``r``, by wire order."""
        slots = self.state(r)
        wires = range(1, self.config.n + 1) if not self.is_network_round(r) \
            else sorted(self._schedule[r - self.config.offset])
        return [slots[w - 1].owner for w in wires
                if slots[w - 1].live and slots[w - 1].owner is not HIDDEN]

    def scheduled_wires(self, r: int) -> list[int]:
        slots = self.state(r)
        wires = range(1, self.config.n + 1) if not self.is_network_round(r) \
            else sorted(self._schedule[r - self.config.offset])
        return [w for w in wires if slots[w - 1].live]

    def _value(self, r: int, wire: int, slot: Slot) -> int | None:
        if not slot.live:
            return None
        entry = self._opens.get((r, wire))
        return None if entry is None else entry[2]

    def _after_open(self, r: int, wire: int, slot: Slot) -> Slot:
        entry = self._opens.get((r, wire))
        if entry is None:
            return replace(slot, dead=True) if slot.live else slot
        pk = slot.pk if entry[3] is None else entry[3]
        return replace(slot, owner=entry[0], head=entry[1], pk=pk)

    def _apply_round(self, r: int, slots: list[Slot]) -> list[Slot]:
        new = list(slots)
        if not self.is_network_round(r):
            scheduled = [w for w in range(1, self.config.n + 1) if slots[w - 1].live]
            for w in scheduled:
                new[w - 1] = self._after_open(r, w, slots[w - 1])
            owners = [s.owner for s in slots if s.owner is not None]
            values = {slots[w - 1].owner: self._value(r, w, slots[w - 1]) for w in scheduled}
            order = initial_permutation(owners, values, self.config.params)
            by_owner = {new[w - 1].owner: new[w - 1] for w in range(1, self.config.n + 1)
                        if new[w - 1].owner is not None}
            ghosts = [s for s in new if s.owner is None]
            return [by_owner[o] for o in order] + ghosts
        for m, s in enumerate(self.matches(r)):
            i, j = s.from_wire, s.to_wire
            a, b, record = self._resolve_match(r, m, s, slots[i - 1], slots[j - 1])
            new[i - 1], new[j - 1] = a, b
            self._records[(r, m)] = record
            self._produced_by[(r + 1, i)] = (r, m)
            self._produced_by[(r + 1, j)] = (r, m)
        return new

    def _threshold(self, s, a: Slot, b: Slot) -> Fraction:
        if self.config.weights is None:
            return s.swap_probability
        return weight_threshold(a.weight, b.weight)

    def _resolve_match(self, r: int, m: int, s, a: Slot, b: Slot) -> tuple[Slot, Slot, MatchRecord]:
        i, j = s.from_wire, s.to_wire
        va, vb = self._value(r, i, a), self._value(r, j, b)
        swapped, reason, x = resolve_swap(va, vb, self._threshold(s, a, b), self.config.params)
        a2, b2 = self._after_open(r, i, a), self._after_open(r, j, b)
        if self.config.weights is not None:
            total = a.weight + b.weight
            if swapped:
                a2 = replace(a2, weight=total)
            else:
                b2 = replace(b2, weight=total)
        record = MatchRecord(r, m, (i, j), (a.owner, b.owner), i if swapped else j,
                             reason, swapped, x)
        return (b2, a2, record) if swapped else (a2, b2, record)

    def record(self, r: int, m: int) -> MatchRecord:
        self.state(r + 1)
        return self._records[(r, m)]

    # opening -------------------------------------------------------------------

    def open(self, pid: Hashable, r: int, opening: Opening) -> None:
        self._require(Phase("Open", r))
        if pid not in self._commit_heads:
            raise InvalidArgument(f"{pid!r} is not registered")
        wire = self.wire_of(pid, r)
        if wire is None:
            raise InvalidArgument(f"{pid!r} holds no public wire")
        slot = self.state(r)[wire - 1]
        self._check_open(r, wire, slot, opening)
        self.board.publish(pid, Label("Open", r), concat(opening.next_head,
                                                        self.config.params.encode_value(opening.value)))
        self._opens[(r, wire)] = (pid, opening.next_head, opening.value, None)
        self._settle_previous(r, wire)

    def _check_open(self, r: int, wire: int, slot: Slot, opening: Opening) -> None:
        if slot.dead:
            raise PhaseError("participant missed an earlier reveal and is disqualified")
        if wire not in self.scheduled_wires(r):
            raise InvalidArgument(f"wire {wire} plays no match in round {r}")
        if (r, wire) in self._opens:
            raise DuplicateMessage(f"wire {wire} already opened round {r}")
        if opening.params != self.config.params or not verify_opening(slot.head, opening):
            raise VerificationError("opening does not match the committed head")

    def _settle_previous(self, r: int, wire: int) -> None:
        prev = self._produced_by.get((r, wire))
        if prev is not None and prev not in self._settled:
            self._settle_through(*prev)

    def _settle_through(self, r: int, m: int) -> None:
        """Mark (r, m) settled together with every unsettled earlier match."""
        self.state(r + 1)
        while self._settled_rounds < r:
            t = self._settled_rounds
            self.state(t + 1)
            for k in range(len(self.matches(t))):
                self._settled.add((t, k))
            self._settled_rounds += 1
        self._settled.add((r, m))
        if len(self.matches(r)) and all((r, k) in self._settled for k in range(len(self.matches(r)))):
            self._settled_rounds = max(self._settled_rounds, r + 1)

    def is_settled(self, r: int, m: int) -> bool:
        return (r, m) in self._settled

    # settlement ----------------------------------------------------------------

    def settle_match(self, r: int, m: int, settler: Hashable = "settler") -> MatchRecord:
        if self.report is not None:
            raise DuplicateMessage("lottery already settled")
        if not self.is_network_round(r) or not 0 <= m < len(self.matches(r)):
            raise OutOfRange(f"no match ({r}, {m})")
        if not self._open_over(r):
            raise PhaseError(f"round {r} reveals are still open")
        if (r, m) in self._settled:
            raise DuplicateMessage(f"match ({r}, {m}) already settled")
        rec = self.record(r, m)
        self.board.publish(settler, Label("Settle", r, m),
                           concat(int_field(rec.outcome if rec.outcome is not None else -1),
                                  rec.reason.encode()))
        self._settle_through(r, m)
        return rec

    def settle_lottery(self, settler: Hashable = "settler", **kw) -> PayoutReport:
        if self.report is not None:
            raise DuplicateMessage("lottery already settled")
        self._require(FINAL_SETTLE)
        final = self.state(self.round_count)
        last = self.round_count - 1
        if self.matches(last):
            self._settle_through(last, len(self.matches(last)) - 1)
        pot = self.board.escrow
        amounts = split_pot(self.config.payout, pot)
        owners = tuple(s.owner for s in final)
        payouts, reserved, payload = self._distribution(final, amounts, settler, **kw)
        self.board.publish(settler, Label("Settle"), payload)
        for pid, amount in payouts.items():
            if amount:
                self.board.withdraw_to(pid, amount)
        records = [self._records[k] for k in sorted(self._records)]
        self.report = PayoutReport(owners, payouts, pot, records, reserved)
        return self.report

    def _distribution(self, final: list[Slot], amounts: list[int], settler) -> tuple[dict, int, bytes]:
        """Split ``amounts`` over final slots; returns (payouts, amount kept in escrow, Settle payload)."""
        payouts: dict = {}
        dust = 0
        for slot, amount in zip(final, amounts):
            if slot.owner is None:
                dust += amount
            else:
                payouts[slot.owner] = payouts.get(slot.owner, 0) + amount
        top = final[0].owner
        if dust:
            if top is None:
                raise InvalidArgument("no participant to receive the pot")
            payouts[top] += dust
        return payouts, 0, encode_positions(s.owner for s in final)

    def _audit_distribution(self, final: list[Slot], pot: int, settle_msg) -> tuple[dict, bytes]:
        """Expected payouts and Settle payload recomputed from the board alone."""
        payouts, _, payload = self._distribution(final, split_pot(self.config.payout, pot), settle_msg.author)
        return payouts, payload

    # auditing ---------------------------------------------------------------------

    @classmethod
    def from_board(cls, config: LotteryConfig, board: Board) -> "LotteryInstance":
        """Rebuild an instance from published messages only.

        Messages that would have been rejected live are ignored.
        """
        inst = cls(config, board)
        for msg in board.messages:
            inst._ingest(msg)
        return inst

    def _slot_of_message(self, msg) -> int:
        return (msg.timestamp - self.board.start_time) // self.board.time_per_round

    def _ingest(self, msg) -> None:
        kind = msg.label.kind
        slot = self._slot_of_message(msg)
        if kind == "Commit":
            if slot < len(self.LEADING) and msg.author not in self._commit_heads \
                    and len(self.registered) < self.config.n:
                self._register(msg.author, msg.payload)
        elif kind == "Open":
            self._ingest_open(msg, slot)

    def _ingest_open(self, msg, slot_index: int) -> None:
        r = msg.label.round
        if r is None or slot_index != len(self.LEADING) + r or not 0 <= r < self.round_count:
            return
        try:
            next_head, raw = split_fields(msg.payload)
            opening = Opening(r, next_head, int.from_bytes(raw, "big"), self.config.params)
            self._states_until(r)
            wire = self._owner_index[r].get(msg.author)
            if wire is None:
                return
            self._check_open(r, wire, self._states[r][wire - 1], opening)
        except (InvalidArgument, PhaseError, DuplicateMessage, VerificationError, ValueError):
            return
        self._opens[(r, wire)] = (msg.author, opening.next_head, opening.value, None)

    def _states_until(self, r: int) -> None:
        if not self._states:
            self._push_state(self._initial_state())
        while len(self._states) <= r:
            t = len(self._states) - 1
            self._push_state(self._apply_round(t, self._states[t]))

    def final_positions(self) -> tuple:
        self._states_until(self.round_count)
        return tuple(s.owner for s in self._states[self.round_count])


# --- participants and drivers ----------------------------------------------------

@dataclass
class Participant:
    id: Hashable
    chain: HashChainCommitment
    used: int = 0

    def next_opening(self) -> Opening:
        o = chain_open(self.chain, self.used)
        self.used += 1
        return o

    def peek_opening(self) -> Opening:
        return chain_open(self.chain, self.used)


def participant_seed(master: int, pid: Hashable) -> bytes:
    return hashlib.sha256(concat(b"participant-seed", int_field(master), id_bytes(pid))).digest()


def make_participants(ids: Iterable, length: int, seed: int = 0,
                      params: SecurityParams = DEFAULT_PARAMS) -> list[Participant]:
    return [Participant(pid, chain_create(participant_seed(seed, pid), length, params)) for pid in ids]


Policy = Callable[[object, Hashable, int], bool]


def honest(lottery, pid, r) -> bool:
    return True


def drive(lottery: LotteryInstance, participants: Sequence[Participant], policy: Policy | None = None,
          early_close: bool = True, settler: Hashable | None = None) -> PayoutReport:
    """Run registration, every round and the final settlement."""
    policy = policy or honest
    board = lottery.board
    order = sorted(participants, key=lambda p: getattr(policy, "priority", lambda pid: 0)(p.id))
    for p in participants:
        if policy(lottery, p.id, -1):
            lottery.commit(p.id, p.chain.head)
    if not (early_close and board.close_round_early([p.id for p in participants], "Commit")):
        board.advance_to_boundary()
    for r in range(lottery.round_count):
        expected = lottery.scheduled(r)
        want = set(expected)
        for p in order:
            if p.id in want and policy(lottery, p.id, r):
                lottery.open(p.id, r, p.next_opening())
        if not (early_close and board.close_round_early(expected, "Open", lottery.round_count)):
            board.advance_to_boundary()
    board.advance_to_boundary()
    if settler is None:
        settler = participants[0].id if participants else "settler"
    return lottery.settle_lottery(settler)


@dataclass(frozen=True)
class Schedule:
    seed: int = 0
    policy: Policy | None = None
    early_close: bool = True


def run_lottery(board: Board, config: LotteryConfig, schedule: Schedule = Schedule(),
              ids: Sequence | None = None) -> PayoutReport:
    ids = list(range(1, config.n + 1)) if ids is None else list(ids)
    lottery = LotteryInstance(config, board)
    people = make_participants(ids, config.chain_length, schedule.seed, config.params)
    return drive(lottery, people, schedule.policy, schedule.early_close)


def run_single_winner(board: Board, n: int, weights: Sequence | None = None,
                      schedule: Schedule = Schedule(), params: SecurityParams = DEFAULT_PARAMS,
                      buy_in: int = 1) -> Hashable:
    if weights is not None and not any(Fraction(w) for w in weights):
        raise InvalidArgument("at least one weight must be positive")
    config = LotteryConfig.single_winner(n, weights, params=params, buy_in=buy_in,
                                         time_per_round=board.time_per_round)
    return run_lottery(board, config, schedule, ids=range(1, n + 1)).winner


# --- auditing ----------------------------------------------------------------------

@dataclass(frozen=True)
class AuditResult:
    positions: tuple
    payouts: dict
    consistent: bool


def audit(config: LotteryConfig, trace: Sequence[dict],
          rebuild: Callable[[LotteryConfig, Board], LotteryInstance] | None = None) -> AuditResult:
    """Recompute positions and payouts from a trace and compare with what was paid.

    ``rebuild`` turns the replayed board into an instance (default
    :meth:`LotteryInstance.from_board`).
    """
    board = Board.replay(trace)
    inst = (rebuild or LotteryInstance.from_board)(config, board)
    final_msgs = [m for m in board.messages if m.label == Label("Settle")]
    if not final_msgs:
        raise InvalidArgument("trace has no final settlement")
    pot = 0
    paid: dict = {}
    seen_final = False
    for rec in trace:
        if rec["type"] == "deposit" and not seen_final:
            pot += rec["amount"]
        elif rec["type"] == "withdraw":
            if seen_final:
                paid[rec["id"]] = paid.get(rec["id"], 0) + rec["amount"]
            else:
                pot -= rec["amount"]
        elif rec["type"] == "publish" and rec["kind"] == "Settle" and rec["round"] is None:
            seen_final = True
    positions = inst.final_positions()
    final = inst._states[inst.round_count]
    payouts, payload = inst._audit_distribution(final, pot, final_msgs[0])
    ok = payload == final_msgs[0].payload and _paid_matches(payouts, paid)
    return AuditResult(positions, payouts, ok)


def _paid_matches(expected: dict, paid: dict) -> bool:
    return {k: v for k, v in expected.items() if v} == {k: v for k, v in paid.items() if v}


# --- exact honest-run distribution --------------------------------------------------

ENUMERATE_LIMIT = 1 << 16


def honest_distribution(config: LotteryConfig, entrants: int | None = None,
                        method: str = "auto") -> dict[tuple, Fraction]:
    """Exact distribution of final wire owners when everybody reveals.

    With ``method="enumerate"`` each match is enumerated over the full
    2**lam space of XOR values (for a fixed value of one party the XOR is a
    bijection of the other party's value), and matches are independent, so
    this is the exhaustive outcome count of an honest run.  ``"count"``
    takes the number of grid values below each threshold in closed form;
    ``"auto"`` enumerates only small value spaces.  Participants are ids
    1..entrants in wire order.
    """
    if config.initial_permutation_round:
        raise InvalidArgument("enumerate without the initial permutation round")
    if method not in ("auto", "enumerate", "count"):
        raise InvalidArgument("method is 'auto', 'enumerate' or 'count'")
    params = config.params
    entrants = config.n if entrants is None else entrants
    weights = config.weights or tuple(Fraction(1) for _ in range(config.n))
    start = (tuple(range(1, entrants + 1)) + (None,) * (config.n - entrants),
             tuple(w if k < entrants else Fraction(0) for k, w in enumerate(weights)))
    dist: dict = {start: Fraction(1)}
    count_cache: dict[Fraction, int] = {}

    enumerate_values = method == "enumerate" or (method == "auto" and params.space <= ENUMERATE_LIMIT)

    def swaps(threshold: Fraction) -> int:
        if threshold not in count_cache:
            count_cache[threshold] = sum(1 for x in range(params.space)
                                         if resolve_swap(x, 0, threshold, params)[0]) \
                if enumerate_values else grid_count(threshold, params)
        return count_cache[threshold]

    space = params.space
    for rnd in config.network.rounds:
        for s in rnd:
            i, j = s.from_wire - 1, s.to_wire - 1
            nxt: dict = {}
            for (owners, ws), q in dist.items():
                a, b = owners[i], owners[j]
                if a is None and b is None:
                    outcomes = [(False, q)]
                elif a is None:
                    outcomes = [(False, q)]
                elif b is None:
                    outcomes = [(True, q)]
                else:
                    thr = s.swap_probability if config.weights is None else weight_threshold(ws[i], ws[j])
                    c = swaps(thr)
                    outcomes = [(True, q * Fraction(c, space)), (False, q * Fraction(space - c, space))]
                for swapped, qq in outcomes:
                    if not qq:
                        continue
                    o, w = list(owners), list(ws)
                    if config.weights is not None and a is not None and b is not None:
                        if swapped:
                            w[i] = ws[i] + ws[j]
                        else:
                            w[j] = ws[i] + ws[j]
                    if swapped:
                        o[i], o[j] = o[j], o[i]
                        w[i], w[j] = w[j], w[i]
                    key = (tuple(o), tuple(w))
                    nxt[key] = nxt.get(key, Fraction(0)) + qq
            dist = nxt
    out: dict = {}
    for (owners, _), q in dist.items():
        out[owners] = out.get(owners, Fraction(0)) + q
    return out


def wire_marginals(dist: dict[tuple, Fraction], who) -> dict[int, Fraction]:
    out: dict[int, Fraction] = {}
    for owners, q in dist.items():
        w = owners.index(who) + 1
        out[w] = out.get(w, Fraction(0)) + q
    return out
