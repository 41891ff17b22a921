"""Unlinkable lottery variants.

* Ticket purchases: buyers append H(s || nonce) to a Merkle accumulator
  and later activate an unrelated payout id with a membership proof whose
  nullifier is the nonce.
* Cooperative openings: both parties of a match exchange their openings off
  the board and publish one co-signed record carrying only the two new slot
  heads and keys, so the board never learns who won.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from itertools import permutations
from math import factorial
from typing import Callable, Hashable, Mapping, Protocol, Sequence

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from .bulletin import Board, Label, Phase
from .commitments import (
    DEFAULT_PARAMS, Opening, SecurityParams, concat, int_field, split_fields, verify_opening,
)
from .errors import (
    DoubleSpend, DuplicateMessage, InvalidArgument, OutOfRange, PhaseError, ProofError,
    ResourceLimit, VerificationError,
)
from .protocol.rules import id_bytes, resolve_swap, split_pot
from .protocol.lottery import (
    HIDDEN, LotteryConfig, LotteryInstance, MatchRecord, Participant, PayoutReport, Schedule, Slot,
    encode_positions, make_participants, participant_seed, run_lottery,
)

COOPERATIVE = "cooperative"


# --- signatures ----------------------------------------------------------------------

class SignatureScheme(Protocol):
    def keygen(self, seed: bytes) -> tuple[object, bytes]: ...

    def sign(self, secret_key, message: bytes) -> bytes: ...

    def verify(self, public_key: bytes, message: bytes, signature: bytes) -> bool: ...


@lru_cache(maxsize=65536)
def _ed25519_public(pk: bytes) -> Ed25519PublicKey:
    return Ed25519PublicKey.from_public_bytes(pk)


class Ed25519Scheme:
    """Deterministic Ed25519 keys from a seed."""

    name = "ed25519"

    def keygen(self, seed: bytes) -> tuple[Ed25519PrivateKey, bytes]:
        sk = Ed25519PrivateKey.from_private_bytes(hashlib.sha256(seed).digest())
        return sk, sk.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)

    def sign(self, secret_key: Ed25519PrivateKey, message: bytes) -> bytes:
        return secret_key.sign(message)

    def verify(self, public_key: bytes, message: bytes, signature: bytes) -> bool:
        try:
            _ed25519_public(bytes(public_key)).verify(signature, message)
        except (InvalidSignature, ValueError):
            return False
        return True


DEFAULT_SCHEME = Ed25519Scheme()


# --- Merkle accumulator ------------------------------------------------------------------

@dataclass(frozen=True)
class MerkleProof:
    index: int
    siblings: tuple[bytes, ...]

    def to_bytes(self) -> bytes:
        return concat(int_field(self.index), *self.siblings)

    @classmethod
    def from_bytes(cls, data: bytes) -> "MerkleProof":
        fields = split_fields(data)
        if not fields:
            raise InvalidArgument("empty Merkle proof")
        return cls(int.from_bytes(fields[0], "big", signed=True), tuple(fields[1:]))


def _node(left: bytes, right: bytes, params: SecurityParams) -> bytes:
    return params.hash(concat(left, right))


def _zero_hashes(depth: int, params: SecurityParams) -> list[bytes]:
    zeros = [params.hash(b"empty-leaf")]
    for _ in range(depth):
        zeros.append(_node(zeros[-1], zeros[-1], params))
    return zeros


class MerkleAccumulator:
    """Append-only fixed-depth Merkle tree; empty subtrees hash to fixed values."""

    def __init__(self, depth: int = 16, params: SecurityParams = DEFAULT_PARAMS):
        if not 1 <= depth <= 40:
            raise InvalidArgument("depth must lie in [1, 40]")
        self.depth = depth
        self.params = params
        self._zeros = _zero_hashes(depth, params)
        self._levels: list[dict[int, bytes]] = [{} for _ in range(depth + 1)]
        self.size = 0

    def add_leaf(self, leaf: bytes) -> int:
        if self.size >= 1 << self.depth:
            raise ResourceLimit("accumulator is full")
        index = self.size
        self.size += 1
        node, i = bytes(leaf), index
        self._levels[0][i] = node
        for level in range(self.depth):
            sib = self._levels[level].get(i ^ 1, self._zeros[level])
            node = _node(node, sib, self.params) if i % 2 == 0 else _node(sib, node, self.params)
            i //= 2
            self._levels[level + 1][i] = node
        return index

    def leaf(self, index: int) -> bytes:
        if not 0 <= index < self.size:
            raise OutOfRange(f"no leaf {index}")
        return self._levels[0][index]

    def root(self) -> bytes:
        return self._levels[self.depth].get(0, self._zeros[self.depth])

    def proof(self, index: int) -> MerkleProof:
        self.leaf(index)
        siblings = []
        i = index
        for level in range(self.depth):
            siblings.append(self._levels[level].get(i ^ 1, self._zeros[level]))
            i //= 2
        return MerkleProof(index, tuple(siblings))


def merkle_verify(root: bytes, leaf: bytes, proof: MerkleProof, params: SecurityParams = DEFAULT_PARAMS,
                  depth: int | None = None) -> bool:
    if depth is not None and len(proof.siblings) != depth:
        return False
    if not 0 <= proof.index < 1 << len(proof.siblings):
        return False
    node, i = leaf, proof.index
    for sib in proof.siblings:
        node = _node(node, sib, params) if i % 2 == 0 else _node(sib, node, params)
        i //= 2
    return hmac.compare_digest(node, root)


def ticket_leaf(secret: bytes, nonce: bytes, params: SecurityParams = DEFAULT_PARAMS) -> bytes:
    return params.hash(concat(secret, nonce))


# --- proof system ------------------------------------------------------------------------

@dataclass(frozen=True)
class Statement:
    """Public inputs of a ticket activation."""

    root: bytes
    nonce: bytes
    payout_id: str
    head: bytes
    relayer: str | None = None

    def encode(self) -> bytes:
        relayer = b"" if self.relayer is None else b"=" + self.relayer.encode()
        return concat(self.root, self.nonce, self.payout_id.encode(), self.head, relayer)

    @classmethod
    def decode(cls, data: bytes) -> "Statement":
        fields = split_fields(data)
        if len(fields) != 5:
            raise InvalidArgument("a statement has five fields")
        root, nonce, pid, head, relayer = fields
        return cls(root, nonce, pid.decode(), head, relayer[1:].decode() if relayer else None)


@dataclass(frozen=True)
class TicketWitness:
    secret: bytes
    proof: MerkleProof


class ProofSystem(Protocol):
    def prove(self, statement: Statement, witness: TicketWitness) -> bytes: ...

    def verify(self, statement: bytes, proof: bytes) -> bool: ...


def ticket_relation(statement: Statement, witness: TicketWitness, params: SecurityParams,
                    depth: int) -> bool:
    leaf = ticket_leaf(witness.secret, statement.nonce, params)
    return merkle_verify(statement.root, leaf, witness.proof, params, depth)


class MockProofSystem:
    """INSECURE test double for a non-interactive membership proof.

    ``prove`` checks the relation in the clear and returns an HMAC tag over
    the encoded statement; ``verify`` recomputes the tag and looks it up in
    the witness registry.  Anyone holding the key can forge proofs.  Any
    change to the statement changes the tag, which models non-malleability.
    """

    secure = False

    def __init__(self, key: bytes = b"mock-proof-key", params: SecurityParams = DEFAULT_PARAMS,
                 depth: int = 16):
        self._key = key
        self.params = params
        self.depth = depth
        self.registry: dict[bytes, tuple[bytes, TicketWitness]] = {}

    def _tag(self, statement: bytes) -> bytes:
        return hmac.new(self._key, statement, hashlib.sha256).digest()

    def prove(self, statement: Statement, witness: TicketWitness) -> bytes:
        if not ticket_relation(statement, witness, self.params, self.depth):
            raise ProofError("witness does not satisfy the statement")
        tag = self._tag(statement.encode())
        self.registry[tag] = (statement.encode(), witness)
        return tag

    def verify(self, statement: bytes, proof: bytes) -> bool:
        entry = self.registry.get(bytes(proof))
        return entry is not None and entry[0] == statement \
            and hmac.compare_digest(self._tag(statement), bytes(proof))


# --- ticket lottery ------------------------------------------------------------------------

class ZkpLottery(LotteryInstance):
    """Buy tickets anonymously, then activate each with a fresh payout id.

    Activations may be published by a relayer named in the statement; the
    relayer earns ``relayer_fee`` out of the activated entry's winnings, and
    only when it is the one who published.
    """

    LEADING = ("BuyTicket", "Commit")

    def __init__(self, config: LotteryConfig, board: Board, proofs: ProofSystem,
                 depth: int = 16, relayer_fee: int = 0):
        super().__init__(config, board)
        if relayer_fee < 0:
            raise InvalidArgument("relayer fee must be non-negative")
        self.proofs = proofs
        self.accumulator = MerkleAccumulator(depth, config.params)
        self.nullifiers: set[bytes] = set()
        self.relayer_fee = relayer_fee
        self._relayed: dict[str, str] = {}

    def buy_ticket(self, purchase_id: Hashable, secret: bytes, nonce: bytes) -> int:
        self._require(Phase("BuyTicket"))
        if self.accumulator.size >= self.config.n:
            raise InvalidArgument("all tickets sold")
        leaf = ticket_leaf(secret, nonce, self.config.params)
        index = self.accumulator.size
        self.board.publish(purchase_id, Label("BuyTicket", None, index), leaf)
        self.board.deposit_from(purchase_id, self.config.buy_in)
        self.accumulator.add_leaf(leaf)
        return index

    def commit(self, pid, head):
        raise PhaseError("entries register through zk_commit")

    def zk_commit(self, payout_id: str, statement: Statement, proof: bytes, head: bytes,
                  publisher: Hashable | None = None) -> None:
        self._require(Phase("Commit"))
        publisher = payout_id if publisher is None else publisher
        self._check_activation(payout_id, statement, proof, head)
        seq = len(self.registered)
        self.board.publish(publisher, Label("ZkCommit", None, seq), concat(statement.encode(), proof))
        self._activate(statement, publisher)

    def _check_activation(self, payout_id, statement: Statement, proof: bytes, head: bytes) -> None:
        if not isinstance(payout_id, str):
            raise InvalidArgument("payout ids are strings")
        if statement.payout_id != payout_id or statement.head != head:
            raise ProofError("statement does not bind this payout id and head")
        if statement.root != self.accumulator.root():
            raise ProofError("statement refers to a different accumulator root")
        if statement.nonce in self.nullifiers:
            raise DoubleSpend("nullifier already used")
        if not self.proofs.verify(statement.encode(), proof):
            raise ProofError("membership proof rejected")
        self._check_registration(payout_id)

    def _activate(self, statement: Statement, publisher) -> None:
        self.nullifiers.add(statement.nonce)
        self._register(statement.payout_id, statement.head)
        if statement.relayer is not None and publisher == statement.relayer:
            self._relayed[statement.payout_id] = statement.relayer

    def _distribution(self, final, amounts, settler):
        payouts, reserved, payload = super()._distribution(final, amounts, settler)
        for pid, relayer in self._relayed.items():
            fee = min(self.relayer_fee, payouts.get(pid, 0))
            if fee:
                payouts[pid] -= fee
                payouts[relayer] = payouts.get(relayer, 0) + fee
        return payouts, reserved, payload

    @classmethod
    def from_board(cls, config: LotteryConfig, board: Board, proofs: ProofSystem = None,
                   depth: int = 16, relayer_fee: int = 0) -> "ZkpLottery":
        if proofs is None:
            raise InvalidArgument("a proof verifier is required")
        inst = cls(config, board, proofs, depth, relayer_fee)
        for msg in board.messages:
            inst._ingest(msg)
        return inst

    def _ingest(self, msg) -> None:
        kind = msg.label.kind
        slot = self._slot_of_message(msg)
        if kind == "BuyTicket":
            if slot == 0 and self.accumulator.size < self.config.n:
                self.accumulator.add_leaf(msg.payload)
        elif kind == "ZkCommit":
            if slot != 1:
                return
            try:
                stmt_bytes, proof = split_fields(msg.payload)
                stmt = Statement.decode(stmt_bytes)
                self._check_activation(stmt.payout_id, stmt, proof, stmt.head)
            except (InvalidArgument, ProofError, DoubleSpend, DuplicateMessage, UnicodeDecodeError, ValueError):
                return
            self._activate(stmt, msg.author)
        elif kind == "Open":
            self._ingest_open(msg, slot)


@dataclass
class TicketHolder:
    """Buyer-side bookkeeping for one ticket."""

    purchase_id: Hashable
    secret: bytes
    nonce: bytes
    payout_id: str
    index: int | None = None


def run_zkp(board: Board, config: LotteryConfig, proofs: MockProofSystem | None = None, seed: int = 0,
            relayer: str | None = None, relayer_fee: int = 0, depth: int = 16,
            policy=None) -> tuple[ZkpLottery, PayoutReport]:
    """Honest ticket lottery: buy, activate under fresh ids, play, settle."""
    proofs = proofs or MockProofSystem(params=config.params, depth=depth)
    lottery = ZkpLottery(config, board, proofs, depth, relayer_fee)
    holders = []
    for k in range(config.n):
        base = participant_seed(seed, f"ticket-{k}")
        holders.append(TicketHolder(f"buyer-{k}", base[:16], base[16:], f"entry-{k}"))
    for h in holders:
        h.index = lottery.buy_ticket(h.purchase_id, h.secret, h.nonce)
    board.advance_to_boundary()
    people = make_participants([h.payout_id for h in holders], config.chain_length, seed, config.params)
    root = lottery.accumulator.root()
    for h, p in zip(holders, people):
        stmt = Statement(root, h.nonce, h.payout_id, p.chain.head, relayer)
        proof = proofs.prove(stmt, TicketWitness(h.secret, lottery.accumulator.proof(h.index)))
        lottery.zk_commit(h.payout_id, stmt, proof, p.chain.head, publisher=relayer)
    board.advance_to_boundary()
    policy = policy or (lambda lot, pid, r: True)
    for r in range(lottery.round_count):
        want = set(lottery.scheduled(r))
        for p in people:
            if p.id in want and policy(lottery, p.id, r):
                lottery.open(p.id, r, p.next_opening())
        board.advance_to_boundary()
    board.advance_to_boundary()
    return lottery, lottery.settle_lottery(people[0].id)


def anonymity_confidence(purchases: Sequence[Hashable], entries: Sequence[Hashable],
                         revealed: Mapping[Hashable, int], target: Hashable,
                         enumerate_limit: int = 7) -> dict[Hashable, Fraction]:
    """Observer confidence that each unrevealed entry belongs to ``target``.

    ``purchases[k]`` is the buyer of ticket ``k``; ``revealed`` maps known
    entries to their ticket index.  Every bijection between the remaining
    entries and remaining tickets is equally plausible to the observer, so
    the confidence is the fraction of such bijections that map the entry to
    one of the target's tickets.  Small cases enumerate the bijections.
    """
    if len(purchases) != len(entries):
        raise InvalidArgument("one entry per ticket")
    used = set(revealed.values())
    tickets = [k for k in range(len(purchases)) if k not in used]
    hidden = [e for e in entries if e not in revealed]
    n = len(hidden)
    out: dict[Hashable, Fraction] = {}
    if n == 0:
        return out
    if n <= enumerate_limit:
        hits = {e: 0 for e in hidden}
        total = 0
        for perm in permutations(tickets):
            total += 1
            for e, k in zip(hidden, perm):
                if purchases[k] == target:
                    hits[e] += 1
        return {e: Fraction(hits[e], total) for e in hidden}
    k_target = sum(1 for k in tickets if purchases[k] == target)
    matching = k_target * factorial(n - 1)
    return {e: Fraction(matching, factorial(n)) for e in hidden}


# --- cooperative lottery ---------------------------------------------------------------------

@dataclass(frozen=True)
class CoopOpenRecord:
    round: int
    match: int
    to_head: bytes
    to_pk: bytes
    from_head: bytes
    from_pk: bytes
    sig_from: bytes
    sig_to: bytes

    def signed_message(self) -> bytes:
        return coop_message(self.round, self.match, self.to_head, self.to_pk, self.from_head, self.from_pk)

    def encode(self) -> bytes:
        return concat(int_field(self.round), int_field(self.match), self.to_head, self.to_pk,
                      self.from_head, self.from_pk, self.sig_from, self.sig_to)

    @classmethod
    def decode(cls, data: bytes) -> "CoopOpenRecord":
        f = split_fields(data)
        if len(f) != 8:
            raise InvalidArgument("a cooperative record has eight fields")
        return cls(int.from_bytes(f[0], "big", signed=True), int.from_bytes(f[1], "big", signed=True), *f[2:])


def coop_message(r: int, m: int, to_head: bytes, to_pk: bytes, from_head: bytes, from_pk: bytes) -> bytes:
    return concat(b"coop", int_field(r), int_field(m), to_head, to_pk, from_head, from_pk)


def claim_message(wire: int, recipient: Hashable) -> bytes:
    return concat(b"claim", int_field(wire), id_bytes(recipient))


def slot_author(pk: bytes) -> str:
    """Anonymous board author for a cooperative record."""
    return "slot:" + pk.hex()[:16]


@dataclass(frozen=True)
class Claim:
    wire: int
    signature: bytes


class CoopLottery(LotteryInstance):
    """Lottery with cooperative openings and unilateral fallback.

    Each slot carries a public key.  A cooperative record replaces the two
    unilateral openings of a match; the slots it produces are hidden.  A
    hidden slot is paid through a claim signed with its final key.
    """

    def __init__(self, config: LotteryConfig, board: Board, scheme: SignatureScheme = DEFAULT_SCHEME):
        if config.weights is not None:
            raise InvalidArgument("cooperative openings require unweighted matches")
        super().__init__(config, board)
        self.scheme = scheme
        self._pks: dict = {}
        self._coop: dict[tuple[int, int], CoopOpenRecord] = {}
        self._reserved: dict[int, int] = {}
        self._claimed: set[int] = set()

    # registration and opening ------------------------------------------------------------

    def commit(self, pid: Hashable, head: bytes, pk: bytes) -> None:
        self._require(Phase("Commit"))
        self._check_registration(pid)
        self.board.publish(pid, Label("Commit"), concat(head, pk))
        self.board.deposit_from(pid, self.config.buy_in)
        self._register(pid, head)
        self._pks[pid] = pk

    def _fresh_slot(self, pid, head, weight):
        return Slot(pid, head, weight, pk=self._pks.get(pid))

    def _match_of_wire(self, r: int, wire: int) -> int | None:
        for m, s in enumerate(self.matches(r)):
            if wire in (s.from_wire, s.to_wire):
                return m
        return None

    def open(self, pid: Hashable, r: int, opening: Opening, wire: int | None = None,
             next_pk: bytes | None = None) -> None:
        """Unilateral opening of the slot at ``wire`` (default: pid's public wire)."""
        self._require(Phase("Open", r))
        if pid not in self._commit_heads:
            raise InvalidArgument(f"{pid!r} is not registered")
        slots = self.state(r)
        if wire is None:
            wire = self.wire_of(pid, r)
            if wire is None:
                raise InvalidArgument(f"{pid!r} must name its hidden wire")
        if not 1 <= wire <= self.config.n:
            raise OutOfRange(f"no wire {wire}")
        slot = slots[wire - 1]
        if slot.owner is not HIDDEN and slot.owner != pid:
            raise InvalidArgument(f"wire {wire} belongs to {slot.owner!r}")
        if next_pk is None:
            raise InvalidArgument("an opening must publish the next slot key")
        m = self._match_of_wire(r, wire)
        if m is not None and (r, m) in self._coop:
            raise DuplicateMessage(f"match ({r}, {m}) was resolved cooperatively")
        self._check_open(r, wire, slot, opening)
        self.board.publish(pid, Label("Open", r), concat(
            int_field(wire), opening.next_head, self.config.params.encode_value(opening.value), next_pk))
        self._opens[(r, wire)] = (pid, opening.next_head, opening.value, next_pk)
        self._settle_previous(r, wire)

    def _coop_problem(self, rec: CoopOpenRecord) -> str | None:
        r, m = rec.round, rec.match
        if not self.is_network_round(r) or not 0 <= m < len(self.matches(r)):
            return "no such match"
        if (r, m) in self._coop:
            return "match already resolved cooperatively"
        s = self.matches(r)[m]
        slots = self.state(r)
        a, b = slots[s.from_wire - 1], slots[s.to_wire - 1]
        if not (a.live and b.live):
            return "both slots must be live"
        if (r, s.from_wire) in self._opens or (r, s.to_wire) in self._opens:
            return "a party already opened unilaterally"
        msg = rec.signed_message()
        if not (self.scheme.verify(a.pk, msg, rec.sig_from) and self.scheme.verify(b.pk, msg, rec.sig_to)):
            return "signature check failed"
        return None

    def publish_coop(self, rec: CoopOpenRecord) -> None:
        self._require(Phase("Open", rec.round))
        problem = self._coop_problem(rec)
        if problem is not None:
            raise VerificationError(problem)
        s = self.matches(rec.round)[rec.match]
        to_slot = self.state(rec.round)[s.to_wire - 1]
        self.board.publish(slot_author(to_slot.pk), Label("CoopOpen", rec.round, rec.match), rec.encode())
        self._coop[(rec.round, rec.match)] = rec
        self._settle_previous(rec.round, s.from_wire)
        self._settle_previous(rec.round, s.to_wire)

    def _resolve_match(self, r, m, s, a, b):
        rec = self._coop.get((r, m))
        if rec is None:
            return super()._resolve_match(r, m, s, a, b)
        a2 = Slot(HIDDEN, rec.from_head, a.weight, False, rec.from_pk)
        b2 = Slot(HIDDEN, rec.to_head, b.weight, False, rec.to_pk)
        record = MatchRecord(r, m, (s.from_wire, s.to_wire), (a.owner, b.owner), None, COOPERATIVE)
        return a2, b2, record

    def is_cooperative(self, r: int, m: int) -> bool:
        return (r, m) in self._coop

    def cooperative_records(self) -> list[CoopOpenRecord]:
        return [self._coop[k] for k in sorted(self._coop)]

    def settle_match_coop(self, r: int, m: int, settler: Hashable = "settler") -> MatchRecord:
        """Settle a match; a valid cooperative record yields a record without a winner."""
        return self.settle_match(r, m, settler)

    # payouts ---------------------------------------------------------------------------

    def _claim_valid(self, slot: Slot, wire: int, recipient, signature: bytes) -> bool:
        return slot.owner is HIDDEN and slot.pk is not None \
            and self.scheme.verify(slot.pk, claim_message(wire, recipient), signature)

    def _allocate(self, final: list[Slot], amounts: list[int]) -> list[int]:
        per_wire = list(amounts)
        dust = sum(a for s, a in zip(final, amounts) if s.owner is None)
        for w, s in enumerate(final):
            if s.owner is None:
                per_wire[w] = 0
        if dust and final[0].owner is None:
            raise InvalidArgument("no participant to receive the pot")
        per_wire[0] += dust
        return per_wire

    def _distribution(self, final, amounts, settler, claim: Claim | None = None):
        payouts: dict = {}
        reserved = 0
        self._reserved = {}
        if claim is not None and not self._claim_valid(final[claim.wire - 1], claim.wire, settler, claim.signature):
            raise VerificationError("claim signature does not match the final slot key")
        for w, amount in enumerate(self._allocate(final, amounts), 1):
            if not amount:
                continue
            owner = final[w - 1].owner
            if owner is HIDDEN:
                if claim is not None and claim.wire == w:
                    payouts[settler] = payouts.get(settler, 0) + amount
                    self._claimed.add(w)
                else:
                    reserved += amount
                    self._reserved[w] = amount
            else:
                payouts[owner] = payouts.get(owner, 0) + amount
        extra = b"" if claim is None else concat(int_field(claim.wire), claim.signature)
        return payouts, reserved, concat(encode_positions(s.owner for s in final), extra)

    def claim(self, wire: int, recipient: Hashable, signature: bytes) -> int:
        """Withdraw the amount held for a hidden final slot."""
        if self.report is None:
            raise PhaseError("claims open after the final settlement")
        if wire in self._claimed or wire not in self._reserved:
            raise DuplicateMessage(f"nothing to claim on wire {wire}")
        final = self.state(self.round_count)
        if not self._claim_valid(final[wire - 1], wire, recipient, signature):
            raise VerificationError("claim signature does not match the final slot key")
        amount = self._reserved[wire]
        self.board.publish(recipient, Label("Claim", None, wire), concat(int_field(wire), signature))
        self.board.withdraw_to(recipient, amount)
        self._claimed.add(wire)
        self.report.payouts[recipient] = self.report.payouts.get(recipient, 0) + amount
        self.report.reserved -= amount
        return amount

    def _audit_distribution(self, final, pot, settle_msg):
        amounts = split_pot(self.config.payout, pot)
        positions, *rest = split_fields(settle_msg.payload)
        claim = None
        if len(rest) == 1:
            w, sig = split_fields(rest[0])
            claim = Claim(int.from_bytes(w, "big", signed=True), sig)
        try:
            payouts, _, payload = self._distribution(final, amounts, settle_msg.author, claim)
        except VerificationError:
            payouts, _, payload = self._distribution(final, amounts, settle_msg.author, None)
        reserved = dict(self._reserved)
        for msg in self.board.select("Claim"):
            w = msg.label.match
            if w not in reserved:
                continue
            _, sig = split_fields(msg.payload)
            if self._claim_valid(final[w - 1], w, msg.author, sig):
                payouts[msg.author] = payouts.get(msg.author, 0) + reserved.pop(w)
        return payouts, payload

    def _ingest(self, msg) -> None:
        kind = msg.label.kind
        slot = self._slot_of_message(msg)
        if kind == "Commit":
            try:
                head, pk = split_fields(msg.payload)
            except (InvalidArgument, ValueError):
                return
            if slot < len(self.LEADING) and msg.author not in self._commit_heads \
                    and len(self.registered) < self.config.n:
                self._register(msg.author, head)
                self._pks[msg.author] = pk
        elif kind == "Open":
            r = msg.label.round
            if r is None or not 0 <= r < self.round_count or slot != len(self.LEADING) + r:
                return
            try:
                w, nh, raw, pk = split_fields(msg.payload)
                wire = int.from_bytes(w, "big", signed=True)
                opening = Opening(r, nh, int.from_bytes(raw, "big"), self.config.params)
                self._states_until(r)
                cur = self._states[r][wire - 1] if 1 <= wire <= self.config.n else None
                if cur is None or (cur.owner is not HIDDEN and cur.owner != msg.author):
                    return
                m = self._match_of_wire(r, wire)
                if m is not None and (r, m) in self._coop:
                    return
                self._check_open(r, wire, cur, opening)
            except (InvalidArgument, PhaseError, DuplicateMessage, VerificationError, ValueError):
                return
            self._opens[(r, wire)] = (msg.author, nh, opening.value, pk)
        elif kind == "CoopOpen":
            r = msg.label.round
            if r is None or slot != len(self.LEADING) + r:
                return
            try:
                rec = CoopOpenRecord.decode(msg.payload)
                self._states_until(r)
                if (rec.round, rec.match) != (r, msg.label.match) or self._coop_problem(rec) is not None:
                    return
            except (InvalidArgument, ValueError):
                return
            self._coop[(r, rec.match)] = rec


# --- cooperative parties and driver ------------------------------------------------------------

@dataclass
class CoopParticipant(Participant):
    keys: tuple = ()
    wire: int | None = None
    alive: bool = True

    def key(self, r: int):
        return self.keys[r]


def make_coop_participants(ids, length: int, seed: int = 0, params: SecurityParams = DEFAULT_PARAMS,
                           scheme: SignatureScheme = DEFAULT_SCHEME) -> list[CoopParticipant]:
    out = []
    for p in make_participants(ids, length, seed, params):
        base = participant_seed(seed, p.id)
        keys = tuple(scheme.keygen(concat(base, b"slot-key", int_field(r))) for r in range(length + 1))
        out.append(CoopParticipant(p.id, p.chain, 0, keys))
    return out


@dataclass(frozen=True)
class Timeout:
    """A cooperative exchange stalled at ``point`` waiting for ``waiting_on``."""

    point: str
    waiting_on: Hashable


Responsive = Callable[[Hashable, int, str], bool]


def always_responsive(pid, r, point) -> bool:
    return True


def coop_exchange(lottery: CoopLottery, a: CoopParticipant, b: CoopParticipant, r: int, m: int,
                  responsive: Responsive = always_responsive) -> CoopOpenRecord | Timeout:
    """Off-board exchange between the from-party ``a`` and the to-party ``b``.

    The channel is in memory; ``responsive(pid, r, point)`` returning False
    models a party that never answers at wait point ``"exchange"`` or
    ``"sign"``, which the waiting side sees as a timeout.
    """
    s = lottery.matches(r)[m]
    slots = lottery.state(r)
    for pid in (a.id, b.id):
        if not responsive(pid, r, "exchange"):
            return Timeout("exchange", pid)
    oa, ob = a.peek_opening(), b.peek_opening()
    # each side checks the other's opening against the public slot head
    if not verify_opening(slots[s.from_wire - 1].head, oa):
        return Timeout("exchange", a.id)
    if not verify_opening(slots[s.to_wire - 1].head, ob):
        return Timeout("exchange", b.id)
    swapped, _, _ = resolve_swap(oa.value, ob.value, lottery._threshold(s, slots[s.from_wire - 1],
                                                                      slots[s.to_wire - 1]), lottery.config.params)
    winner, loser = (a, b) if swapped else (b, a)
    ow, ol = (oa, ob) if swapped else (ob, oa)
    to_head, to_pk = ow.next_head, winner.key(winner.used + 1)[1]
    from_head, from_pk = ol.next_head, loser.key(loser.used + 1)[1]
    msg = coop_message(r, m, to_head, to_pk, from_head, from_pk)
    for pid in (a.id, b.id):
        if not responsive(pid, r, "sign"):
            return Timeout("sign", pid)
    sig_from = lottery.scheme.sign(a.key(a.used)[0], msg)
    sig_to = lottery.scheme.sign(b.key(b.used)[0], msg)
    a.used += 1
    b.used += 1
    return CoopOpenRecord(r, m, to_head, to_pk, from_head, from_pk, sig_from, sig_to)


@dataclass
class CoopRunReport:
    payout: PayoutReport
    cooperative: int
    unilateral: int
    timeouts: list


def drive_coop(lottery: CoopLottery, people: Sequence[CoopParticipant], cooperate: bool = True,
               policy=None, responsive: Responsive = always_responsive) -> CoopRunReport:
    """Play every round: cooperate where both parties answer, else open alone.

    ``policy(lottery, pid, r)`` returning False means the party neither
    exchanges nor opens in round ``r``.
    """
    board = lottery.board
    policy = policy or (lambda lot, pid, r: True)
    for w, p in enumerate(people, 1):
        if policy(lottery, p.id, -1):
            lottery.commit(p.id, p.chain.head, p.key(0)[1])
            p.wire = len(lottery.registered)
        else:
            p.alive = False
    board.advance_to_boundary()
    coop_count = uni_count = 0
    timeouts: list = []
    for r in range(lottery.round_count):
        at = {p.wire: p for p in people if p.alive}
        pending: list[tuple[int, CoopParticipant, CoopParticipant | None, CoopParticipant | None]] = []
        for m, s in enumerate(lottery.matches(r)):
            a, b = at.get(s.from_wire), at.get(s.to_wire)
            act_a = a is not None and policy(lottery, a.id, r)
            act_b = b is not None and policy(lottery, b.id, r)
            if cooperate and act_a and act_b:
                res = coop_exchange(lottery, a, b, r, m, responsive)
                if isinstance(res, CoopOpenRecord):
                    lottery.publish_coop(res)
                    coop_count += 1
                    if resolve_was_swap(res, a):
                        a.wire, b.wire = s.to_wire, s.from_wire
                    continue
                timeouts.append((r, m, res))
            for p, act in ((a, act_a), (b, act_b)):
                if p is not None and act:
                    lottery.open(p.id, r, p.peek_opening(), p.wire, p.key(p.used + 1)[1])
                    p.used += 1
                    uni_count += 1
            pending.append((m, s, a, b))
        board.advance_to_boundary()
        for m, s, a, b in pending:
            rec = lottery.record(r, m)
            for p in (a, b):
                if p is not None and (r, p.wire) not in lottery._opens:
                    p.alive = False
            if rec.swapped:
                if a is not None:
                    a.wire = s.to_wire
                if b is not None:
                    b.wire = s.from_wire
    board.advance_to_boundary()
    final = lottery.state(lottery.round_count)
    top = next((p for p in people if p.alive and p.wire == 1), None)
    if top is not None and final[0].owner is HIDDEN:
        claim = Claim(1, lottery.scheme.sign(top.key(top.used)[0], claim_message(1, top.id)))
        report = lottery.settle_lottery(top.id, claim=claim)
    else:
        settler = top.id if top is not None else (people[0].id if people else "settler")
        report = lottery.settle_lottery(settler)
    return CoopRunReport(report, coop_count, uni_count, timeouts)


def resolve_was_swap(rec: CoopOpenRecord, a: CoopParticipant) -> bool:
    """Whether the from-party ``a`` won, judged from its own last revealed head."""
    return rec.to_head == a.chain.links[a.used - 1][0] and rec.to_pk == a.key(a.used)[1]


def run_coop(board: Board, config: LotteryConfig, seed: int = 0, cooperate: bool = True, policy=None,
             responsive: Responsive = always_responsive,
             scheme: SignatureScheme = DEFAULT_SCHEME) -> tuple[CoopLottery, CoopRunReport]:
    lottery = CoopLottery(config, board, scheme)
    people = make_coop_participants(range(1, config.n + 1), config.chain_length, seed, config.params, scheme)
    return lottery, drive_coop(lottery, people, cooperate, policy, responsive)


# --- observers -------------------------------------------------------------------------------------

def record_shape(payload: bytes) -> tuple[int, ...]:
    """Field lengths of a published cooperative record."""
    return tuple(len(f) for f in split_fields(payload))


def observe_winner_bits(lottery: CoopLottery) -> dict[tuple[int, int], Hashable]:
    """Winners of cooperative matches that the public transcript reveals.

    A cooperative record publishes two fresh heads.  The only way the board
    ties a fresh head to a person is a later unilateral opening of the slot
    carrying it; such an opening by the to-slot reveals the winner.  An
    opening by the from-slot reveals its author lost: the value is the other
    occupant when both are known, else ``("not", author)``.  Matches settled
    with unilateral openings are public anyway and not counted.
    """
    learned: dict[tuple[int, int], Hashable] = {}
    heads = {}
    for rec in lottery.cooperative_records():
        heads[rec.to_head] = ((rec.round, rec.match), "to")
        heads[rec.from_head] = ((rec.round, rec.match), "from")
    board = lottery.board
    for msg in board.select("Open"):
        r = msg.label.round
        try:
            w, *_ = split_fields(msg.payload)
            wire = int.from_bytes(w, "big", signed=True)
            head = lottery.state(r)[wire - 1].head
        except (InvalidArgument, OutOfRange, IndexError, ValueError):
            continue
        hit = heads.get(head)
        if hit is None:
            continue
        key, side = hit
        occupants = lottery.record(*key).occupants
        if side == "to":
            learned[key] = msg.author
        elif HIDDEN not in occupants:
            learned[key] = next(o for o in occupants if o != msg.author)
        else:
            learned[key] = ("not", msg.author)
    return learned


def fallback_equivalent(config: LotteryConfig, seed: int = 0) -> bool:
    """Coop with cooperation disabled ends with the same final positions as the plain lottery."""
    b1, b2 = Board(time_per_round=config.time_per_round), Board(time_per_round=config.time_per_round)
    rep = run_lottery(b1, config, Schedule(seed))
    lot, crep = run_coop(b2, config, seed, cooperate=False)
    return encode_positions(rep.positions) == encode_positions(crep.payout.positions)
