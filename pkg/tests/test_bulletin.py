import pytest

from lotterynet.bulletin import FINAL_SETTLE, Board, Label, Phase, phase_schedule
from lotterynet.errors import DuplicateMessage, InsufficientEscrow, InvalidArgument


def test_schedule_layout():
    slots = phase_schedule(3)
    assert len(slots) == 3 + 3
    assert slots[0] == {Phase("Commit")}
    assert slots[1] == {Phase("Open", 0)}
    assert slots[2] == {Phase("Settle", 0), Phase("Open", 1)}
    assert slots[-2] == {Phase("Settle", 2)}
    assert slots[-1] == {FINAL_SETTLE}


def test_phase_slots_half_open():
    board = Board(time_per_round=10)
    assert board.current_phase(2) == {Phase("Commit")}
    board.advance_time(9)
    assert board.current_phase(2) == {Phase("Commit")}
    board.advance_time(1)
    assert board.current_phase(2) == {Phase("Open", 0)}
    board.advance_time(1000)
    assert board.current_phase(2) == {FINAL_SETTLE}


def test_publish_once_per_label():
    board = Board()
    board.publish("a", Label("Commit"), b"x")
    with pytest.raises(DuplicateMessage):
        board.publish("a", Label("Commit"), b"y")
    board.publish("b", Label("Commit"), b"y")
    assert [m.author for m in board.select("Commit")] == ["a", "b"]
    assert board.read("a", Label("Commit")) == b"x"


def test_escrow():
    board = Board()
    board.deposit_from("a", 3)
    board.withdraw_to("b", 2)
    assert board.escrow == 1 and board.balances["a"] == -3 and board.balances["b"] == 2
    with pytest.raises(InsufficientEscrow):
        board.withdraw_to("b", 2)
    with pytest.raises(InvalidArgument):
        board.deposit_from("a", -1)


def test_close_round_early():
    board = Board()
    board.publish(1, Label("Commit"))
    assert not board.close_round_early([1, 2], "Commit")
    board.publish(2, Label("Commit"))
    assert board.close_round_early([1, 2], "Commit")
    assert board.slot() == 1


def test_replay_reproduces_board():
    board = Board()
    board.publish(1, Label("Commit"), b"h")
    board.deposit_from(1, 1)
    board.advance_to_boundary()
    board.publish(1, Label("Open", 0), b"o")
    copy = Board.replay(Board.loads_trace(board.dumps_trace()))
    assert copy.messages == board.messages and copy.escrow == board.escrow


def test_replay_rejects_bad_timestamp():
    board = Board()
    board.publish(1, Label("Commit"))
    trace = board.export_trace()
    trace[1]["t"] = 5
    with pytest.raises(InvalidArgument):
        Board.replay(trace)
