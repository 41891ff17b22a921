import pytest

from lotterynet.bulletin import Board
from lotterynet.cost import (
    CSV_HEADER, CostModel, cost_row, count_transactions, honest_trace, plot_data, predict_counts,
    to_csv,
)
from lotterynet.errors import InvalidArgument


@pytest.mark.parametrize("n", [2, 4, 8, 16, 32, 64])
@pytest.mark.parametrize("protocol", ["single", "tyche", "coop"])
def test_traced_equals_prediction(protocol, n):
    rep = count_transactions(honest_trace(protocol, n))
    assert rep.messages == predict_counts(protocol, n)


def test_closed_forms():
    assert predict_counts("single", 1024) == 3071
    assert predict_counts("tyche", 1024) == 11265
    assert predict_counts("coop", 1024) == 6145
    with pytest.raises(InvalidArgument):
        predict_counts("tyche", 12)


@pytest.mark.parametrize("n", [4, 8, 16, 32])
def test_single_winner_phases(n):
    assert count_transactions(honest_trace("single", n)).phases == n.bit_length() - 1 + 3


def test_cost_model_bytes():
    trace = honest_trace("single", 4)
    flat = count_transactions(trace)
    heavy = count_transactions(trace, CostModel(base=2, per_byte=1))
    assert heavy.cost > 2 * flat.cost
    assert flat.cost == flat.messages


def test_per_participant_mean():
    rep = count_transactions(honest_trace("single", 8))
    assert rep.per_user_mean == pytest.approx(rep.messages / 8, abs=0.2)
    assert sum(rep.per_kind.values()) == rep.messages


def test_trace_must_be_complete():
    with pytest.raises(InvalidArgument):
        count_transactions([])
    truncated = [r for r in honest_trace("single", 4) if r.get("kind") != "Settle"]
    with pytest.raises(InvalidArgument):
        count_transactions(truncated)
    assert Board().export_trace()[0]["type"] == "header"


def test_csv_and_plot_data():
    rows = [cost_row("single", n) for n in (4, 8)]
    text = to_csv(rows)
    assert text.splitlines()[0] == CSV_HEADER
    assert len(text.splitlines()) == 3
    assert plot_data(rows).count("\n") >= 2
