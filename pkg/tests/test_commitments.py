import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from lotterynet.commitments import (
    Opening, SecurityParams, below, chain_create, chain_from_values, chain_open, check_vector,
    commit, concat, fixed_point, grid_count, grid_probability, int_field, split_fields,
    verify_opening, walk_chain,
)
from lotterynet.errors import InvalidArgument, OutOfRange


def test_pinned_vectors(data_dir):
    vectors = json.loads((data_dir / "hash_chain_vectors.json").read_text())
    assert len(vectors) == 4
    for v in vectors:
        assert check_vector(v)


def test_tampered_vector_fails(data_dir):
    v = json.loads((data_dir / "hash_chain_vectors.json").read_text())[1]
    v["openings"][2]["value_hex"] = "00" * 16
    assert not check_vector(v)


def test_openings_walk_back_to_head():
    chain = chain_create(b"seed", 6)
    openings = [chain_open(chain, r) for r in range(6)]
    assert walk_chain(chain.head, openings)
    assert not walk_chain(chain.head, openings[1:])


def test_wrong_value_rejected():
    chain = chain_create(b"seed", 3)
    o = chain_open(chain, 0)
    forged = Opening(0, o.next_head, (o.value + 1) % (1 << 128))
    assert verify_opening(chain.head, o)
    assert not verify_opening(chain.head, forged)


def test_open_out_of_range():
    with pytest.raises(OutOfRange):
        chain_open(chain_create(b"seed", 2), 2)


def test_lambda_floor():
    with pytest.raises(InvalidArgument):
        SecurityParams(lam=64)
    assert SecurityParams(lam=8, reduced=True).space == 256


def test_value_width_enforced(small):
    with pytest.raises(InvalidArgument):
        Opening(0, b"", 256, small)


def test_commit_binds_randomness():
    assert commit(b"x", b"r1") != commit(b"x", b"r2")


def test_grid_counts(small):
    assert grid_count(Fraction(3, 4), small) == 192
    assert grid_count(Fraction(1, 3), small) == 86
    assert grid_probability(Fraction(0), small) == 0
    assert grid_probability(Fraction(1), small) == 1


@given(st.integers(0, 255), st.integers(0, 255))
def test_fixed_point_range(a, b):
    p = SecurityParams(lam=8, reduced=True)
    x = fixed_point(a, b, p)
    assert 0 <= x < 1 and x * 256 == a ^ b


@given(st.integers(0, 255), st.fractions(0, 1))
def test_below_matches_fraction(x, t):
    p = SecurityParams(lam=8, reduced=True)
    assert below(x, t, p) == (Fraction(x, 256) < t)


@given(st.integers(1, 2 ** 8), st.integers(1, 2 ** 8))
def test_grid_count_is_number_below(num, den):
    p = SecurityParams(lam=6, reduced=True)
    t = Fraction(min(num, den), den)
    assert grid_count(t, p) == sum(below(x, t, p) for x in range(64))


@given(st.lists(st.binary(max_size=40), max_size=6))
def test_concat_roundtrip(fields):
    assert split_fields(concat(*fields)) == fields


@given(st.lists(st.binary(max_size=8), min_size=1, max_size=4),
       st.lists(st.binary(max_size=8), min_size=1, max_size=4))
def test_concat_injective(a, b):
    if a != b:
        assert concat(*a) != concat(*b)


def test_int_field_width():
    assert len(int_field(5)) == 8 and int_field(-1) != int_field(1)


@given(st.lists(st.integers(0, 255), min_size=1, max_size=8))
def test_chain_from_values_roundtrip(values):
    p = SecurityParams(lam=8, reduced=True)
    chain = chain_from_values(values, b"terminal", p)
    assert chain.values == tuple(values)
    assert walk_chain(chain.head, [chain_open(chain, r) for r in range(len(values))])
