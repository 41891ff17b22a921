import hashlib
from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from lotterynet.bulletin import Board
from lotterynet.commitments import concat
from lotterynet.errors import DoubleSpend, InvalidArgument, PhaseError, ProofError, VerificationError
from lotterynet.network import PayoutFunction
from lotterynet.privacy import (
    CoopLottery, Ed25519Scheme, MerkleAccumulator, MerkleProof, MockProofSystem, Statement,
    TicketWitness, ZkpLottery, anonymity_confidence, coop_exchange, fallback_equivalent,
    make_coop_participants, merkle_verify, observe_winner_bits, record_shape, run_coop, run_zkp,
)
from lotterynet.protocol import HIDDEN, LotteryConfig, Schedule, audit, make_participants, run_lottery
from lotterynet.sim import Strategy

ZKP_BOARD = ("BuyTicket", "Commit")


def sha(b):
    return hashlib.sha256(b).digest()


def root_oracle(leaves, depth):
    """Full binary tree over the leaves padded with the empty-leaf hash."""
    level = list(leaves) + [sha(b"empty-leaf")] * ((1 << depth) - len(leaves))
    for _ in range(depth):
        level = [sha(concat(level[i], level[i + 1])) for i in range(0, len(level), 2)]
    return level[0]


@settings(max_examples=30, deadline=None)
@given(st.lists(st.binary(min_size=1, max_size=8), max_size=16))
def test_merkle_root_matches_oracle(leaves):
    acc = MerkleAccumulator(depth=4)
    for leaf in leaves:
        acc.add_leaf(leaf)
    assert acc.root() == root_oracle(leaves, 4)
    for k, leaf in enumerate(leaves):
        proof = acc.proof(k)
        assert merkle_verify(acc.root(), leaf, proof, depth=4)
        assert MerkleProof.from_bytes(proof.to_bytes()) == proof
        assert not merkle_verify(acc.root(), leaf + b"x", proof, depth=4)


def test_signatures():
    scheme = Ed25519Scheme()
    sk, pk = scheme.keygen(b"seed")
    sig = scheme.sign(sk, b"msg")
    assert scheme.verify(pk, b"msg", sig)
    assert not scheme.verify(pk, b"other", sig)


def test_statement_roundtrip():
    st_ = Statement(b"r", b"n", "entry", b"h", "relay")
    assert Statement.decode(st_.encode()) == st_
    assert Statement.decode(Statement(b"r", b"n", "e", b"h").encode()).relayer is None


def _zkp_setup(n=2):
    cfg = LotteryConfig.general(n, PayoutFunction.single_winner(n))
    board = Board(leading=ZKP_BOARD)
    proofs = MockProofSystem()
    lot = ZkpLottery(cfg, board, proofs)
    secrets = [(b"secret-%d" % k, b"nonce-%d" % k) for k in range(n)]
    for k, (s, nonce) in enumerate(secrets):
        lot.buy_ticket(f"buyer-{k}", s, nonce)
    board.advance_to_boundary()
    people = make_participants([f"e{k}" for k in range(n)], cfg.chain_length, 0)
    return lot, proofs, secrets, people


def test_zkp_activation_rules():
    lot, proofs, secrets, people = _zkp_setup()
    root = lot.accumulator.root()
    s0, n0 = secrets[0]
    stmt = Statement(root, n0, "e0", people[0].chain.head)
    proof = proofs.prove(stmt, TicketWitness(s0, lot.accumulator.proof(0)))
    with pytest.raises(PhaseError):
        lot.commit("e0", people[0].chain.head)
    with pytest.raises(ProofError):
        lot.zk_commit("e0", stmt, b"forged", people[0].chain.head)
    with pytest.raises(ProofError):
        lot.zk_commit("e1", stmt, proof, people[0].chain.head)
    lot.zk_commit("e0", stmt, proof, people[0].chain.head)
    again = Statement(root, n0, "e1", people[1].chain.head)
    proof2 = proofs.prove(again, TicketWitness(s0, lot.accumulator.proof(0)))
    with pytest.raises(DoubleSpend):
        lot.zk_commit("e1", again, proof2, people[1].chain.head)


def test_mock_prover_refuses_bad_witness():
    lot, proofs, secrets, people = _zkp_setup()
    stmt = Statement(lot.accumulator.root(), secrets[0][1], "e0", people[0].chain.head)
    with pytest.raises(ProofError):
        proofs.prove(stmt, TicketWitness(b"wrong", lot.accumulator.proof(0)))


def test_payout_ids_are_strings():
    lot, proofs, secrets, people = _zkp_setup()
    stmt = Statement(lot.accumulator.root(), secrets[0][1], "7", people[0].chain.head)
    with pytest.raises(InvalidArgument):
        lot.zk_commit(7, stmt, b"", people[0].chain.head)


def test_zkp_run_and_audit():
    cfg = LotteryConfig.general(4, PayoutFunction.single_winner(4))
    board = Board(leading=ZKP_BOARD)
    proofs = MockProofSystem()
    lot, rep = run_zkp(board, cfg, proofs, seed=2, relayer="relay", relayer_fee=1)
    assert rep.payouts["relay"] == 1 and rep.payouts[rep.winner] == 3
    assert all(m.author != f"buyer-{k}" for k in range(4) for m in board.select("ZkCommit"))
    res = audit(cfg, board.export_trace(), rebuild=lambda c, b: ZkpLottery.from_board(c, b, proofs, relayer_fee=1))
    assert res.consistent and res.positions == rep.positions


def test_anonymity_confidence():
    conf = anonymity_confidence(["x", "y", "z"], ["a", "b", "c"], {}, "x")
    assert set(conf.values()) == {Fraction(1, 3)}
    conf = anonymity_confidence(["x", "x", "y", "z"], ["a", "b", "c", "d"], {"a": 2}, "x")
    assert set(conf.values()) == {Fraction(2, 3)}


def test_anonymity_closed_form_matches_enumeration():
    buyers = ["x", "y", "x", "z", "y", "x", "w", "x"]
    entries = list("abcdefgh")
    revealed = {"a": 1, "b": 6}
    assert anonymity_confidence(buyers, entries, revealed, "x", enumerate_limit=8) == \
        anonymity_confidence(buyers, entries, revealed, "x", enumerate_limit=0)


def test_coop_run_hides_everything():
    cfg = LotteryConfig.general(8, PayoutFunction.single_winner(8))
    board = Board()
    lot, rep = run_coop(board, cfg, seed=4)
    assert rep.unilateral == 0 and rep.cooperative == 12
    assert all(p is HIDDEN for p in rep.payout.positions)
    assert observe_winner_bits(lot) == {}
    assert len(board.messages) == 21
    winner, = [pid for pid, amount in rep.payout.payouts.items() if amount]
    assert board.balances[winner] == 7


def test_coop_records_have_one_shape():
    cfg = LotteryConfig.general(8, PayoutFunction.single_winner(8))
    board = Board()
    run_coop(board, cfg, seed=1)
    shapes = {record_shape(m.payload) for m in board.select("CoopOpen")}
    assert len(shapes) == 1


def test_coop_record_signatures_checked():
    cfg = LotteryConfig.general(2, PayoutFunction.single_winner(2))
    board = Board()
    lot = CoopLottery(cfg, board)
    a, b = make_coop_participants([1, 2], cfg.chain_length, 0)
    for p in (a, b):
        lot.commit(p.id, p.chain.head, p.key(0)[1])
    board.advance_to_boundary()
    a.wire, b.wire = lot.wire_of(1, 0), lot.wire_of(2, 0)
    s = lot.matches(0)[0]
    frm, to = (a, b) if a.wire == s.from_wire else (b, a)
    rec = coop_exchange(lot, frm, to, 0, 0)
    forged = replace(rec, sig_from=rec.sig_to)
    with pytest.raises(VerificationError):
        lot.publish_coop(forged)
    lot.publish_coop(rec)
    assert lot.is_cooperative(0, 0)


def test_coop_abort_falls_back():
    cfg = LotteryConfig.general(8, PayoutFunction.single_winner(8))
    board = Board()
    lot, rep = run_coop(board, cfg, seed=3, policy=Strategy.abort_at({3}, {1}))
    assert rep.payout.payouts.get(3, 0) == 0
    assert sum(rep.payout.payouts.values()) == 8
    res = audit(cfg, board.export_trace(), rebuild=lambda c, b: CoopLottery.from_board(c, b))
    assert res.consistent


def test_coop_rejects_weights():
    cfg = LotteryConfig.single_winner(2, [Fraction(2), Fraction(1)])
    with pytest.raises(InvalidArgument):
        CoopLottery(cfg, Board())


@pytest.mark.parametrize("n,seed", [(4, 0), (8, 1), (14, 2)])
def test_fallback_equivalent(n, seed):
    cfg = LotteryConfig.general(n, PayoutFunction.single_winner(n))
    assert fallback_equivalent(cfg, seed)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_coop_same_winner_law_as_plain(seed):
    """Cooperative and plain runs both pay the full pot to exactly one entrant."""
    cfg = LotteryConfig.general(4, PayoutFunction.single_winner(4))
    _, rep = run_coop(Board(), cfg, seed=seed)
    plain = run_lottery(Board(), cfg, Schedule(seed))
    assert sum(rep.payout.payouts.values()) == sum(plain.payouts.values()) == 4


def test_unresponsive_party_times_out():
    cfg = LotteryConfig.general(4, PayoutFunction.single_winner(4))
    board = Board()

    def responsive(pid, r, point):
        return not (pid == 2 and r == 0)

    lot, rep = run_coop(board, cfg, seed=5, responsive=responsive)
    assert rep.timeouts and all(t.waiting_on == 2 for _, _, t in rep.timeouts)
    assert rep.unilateral >= 2
    assert sum(rep.payout.payouts.values()) == 4
    assert audit(cfg, board.export_trace(), rebuild=lambda c, b: CoopLottery.from_board(c, b)).consistent
