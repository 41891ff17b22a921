"""Pure resolution rules shared by the live instances and the auditors."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from itertools import permutations
from typing import Hashable, Mapping, Sequence

from ..commitments import DEFAULT_PARAMS, SecurityParams, below, check_value, concat
from ..errors import InvalidArgument, ResourceLimit
from ..network import PayoutFunction

BOTH_OPENED = "both-opened"
I_ABORTED = "i-aborted"
J_ABORTED = "j-aborted"
BOTH_ABORTED = "both-aborted"

ORACLE_GUARD = 6


def weight_threshold(w_a: Fraction, w_b: Fraction) -> Fraction:
    """Probability that party ``a`` wins a weighted match."""
    total = w_a + w_b
    if total == 0:
        return Fraction(1, 2)
    return Fraction(w_a) / total


def two_party_settle(opening_a: int | None, opening_b: int | None,
                     w_a: Fraction = Fraction(1), w_b: Fraction = Fraction(1),
                     params: SecurityParams = DEFAULT_PARAMS) -> str | None:
    """Return ``"a"``, ``"b"`` or ``None`` when both parties are absent."""
    if w_a < 0 or w_b < 0:
        raise InvalidArgument("weights must be non-negative")
    if opening_a is None and opening_b is None:
        return None
    if opening_b is None:
        return "a"
    if opening_a is None:
        return "b"
    check_value(opening_a, params)
    check_value(opening_b, params)
    return "a" if below(opening_a ^ opening_b, weight_threshold(w_a, w_b), params) else "b"


def resolve_swap(v_from: int | None, v_to: int | None, threshold: Fraction,
                 params: SecurityParams) -> tuple[bool, str, Fraction | None]:
    """Swap decision for a directed match: (swapped, reason, fixed_point).

    The from-party wins, and moves to the to-wire, iff the shared fixed-point
    value is below ``threshold``.  An absent party loses; with both absent
    the occupants stay put.
    """
    if v_from is None and v_to is None:
        return False, BOTH_ABORTED, None
    if v_from is None:
        return False, I_ABORTED, None
    if v_to is None:
        return True, J_ABORTED, None
    x = v_from ^ v_to
    return below(x, threshold, params), BOTH_OPENED, Fraction(x, params.space)


def split_pot(payout: PayoutFunction, pot: int) -> list[int]:
    """Integer amount per rank: floor of each share, dust to rank 1."""
    amounts = [int(p * pot) for p in payout]
    amounts[0] += pot - sum(amounts)
    return amounts


def sequential_oracle(n: int, weights: Sequence[Fraction] | None = None) -> dict[tuple[int, ...], Fraction]:
    """Iterated single-winner draws: rank 1 drawn by weight, removed, repeat.

    Permutations list participant ids (1-based) from rank 1 downwards.
    """
    if n > ORACLE_GUARD:
        raise ResourceLimit(f"sequential oracle enumerates n! outcomes; n <= {ORACLE_GUARD}")
    if n < 1:
        raise InvalidArgument("n must be positive")
    ws = [Fraction(1)] * n if weights is None else [Fraction(w) for w in weights]
    if len(ws) != n or any(w <= 0 for w in ws):
        raise InvalidArgument("need n strictly positive weights")
    out: dict[tuple[int, ...], Fraction] = {}
    for perm in permutations(range(1, n + 1)):
        q = Fraction(1)
        left = sum(ws)
        for pid in perm:
            q *= ws[pid - 1] / left
            left -= ws[pid - 1]
        out[perm] = q
    return out


def rank_distribution(dist: Mapping[tuple, Fraction], who) -> dict[int, Fraction]:
    """P(participant ``who`` finishes at rank r) from a permutation distribution."""
    out: dict[int, Fraction] = {}
    for perm, q in dist.items():
        r = perm.index(who) + 1
        out[r] = out.get(r, Fraction(0)) + q
    return out


@dataclass(frozen=True)
class SplitComparison:
    merged: Fraction
    split: Fraction

    @property
    def difference(self) -> Fraction:
        return self.split - self.merged


def truncated_payout(payout: Sequence[Fraction], size: int) -> list[Fraction]:
    """Per-rank shares for a lottery with fewer entries: the first ``size``
    ranks keep their shares and the dropped tail is added to the last kept rank."""
    head = [Fraction(p) for p in payout[:size]]
    head[-1] += sum(Fraction(p) for p in payout[size:])
    return head


def split_dominance_check(n: int, payout: PayoutFunction, weights: Sequence[Fraction],
                          split_spec: tuple[int, Fraction] | int) -> SplitComparison:
    """Expected pot share of one user entering as one entry or as k entries.

    ``weights`` are the other entrants; ``split_spec`` is ``(k, w_min)`` (or
    just ``k`` with ``w_min = 1``).  The split lottery has ``n`` entries:
    the user's k entries of weight ``w_min`` followed by the others.  The
    merged lottery has ``n - k + 1`` entries with the user's single entry of
    weight ``k * w_min`` first.
    """
    k, w_min = (split_spec, Fraction(1)) if isinstance(split_spec, int) else split_spec
    w_min = Fraction(w_min)
    others = [Fraction(w) for w in weights]
    if k < 1 or w_min <= 0:
        raise InvalidArgument("need k >= 1 and positive w_min")
    if len(others) + k != n or len(payout) != n:
        raise InvalidArgument("others plus k entries must total n, matching the payout")
    shares = list(payout)
    split_dist = sequential_oracle(n, [w_min] * k + others)
    split = sum((q * sum(shares[perm.index(e)] for e in range(1, k + 1))
                 for perm, q in split_dist.items()), Fraction(0))
    m = n - k + 1
    merged_shares = truncated_payout(shares, m)
    merged_dist = sequential_oracle(m, [k * w_min] + others)
    merged = sum((q * merged_shares[perm.index(1)] for perm, q in merged_dist.items()), Fraction(0))
    return SplitComparison(merged, split)


def perfect_round(remaining: Sequence[Hashable], openings: Mapping[Hashable, int | None],
                  params: SecurityParams = DEFAULT_PARAMS) -> tuple[list, list]:
    """One Fisher-Yates style round over ``m`` slots.

    Returns ``(placements, next_remaining)`` where ``placements`` lists the
    participants fixed by this round starting with the very last place.
    Participants who did not reveal take the worst places and the round
    places nobody else.
    """
    m = len(remaining)
    if m < 2:
        raise InvalidArgument("a perfect round needs at least two participants")
    slots = list(remaining)
    absent = [p for p in slots if openings.get(p) is None]
    if absent:
        placed = sorted(absent, key=_id_key, reverse=True)
        return placed, [p for p in slots if p not in absent]
    last = m - 1
    for i in range(m - 1):
        a, b = slots[i], slots[last]
        if below(openings[a] ^ openings[b], Fraction(1, m - i), params):
            slots[i], slots[last] = b, a
            return [a], slots[:last]
    return [slots[last]], slots[:last]


def _id_key(pid):
    return (0, pid, "") if isinstance(pid, int) else (1, 0, str(pid))


def id_bytes(pid: Hashable) -> bytes:
    return str(pid).encode()


def initial_permutation(registered: Sequence[Hashable], openings: Mapping[Hashable, int | None],
                        params: SecurityParams = DEFAULT_PARAMS, tag: bytes = b"initial-permutation") -> list:
    """Wire order (wire 1 first) drawn from the XOR of every revealed value.

    Participants are ranked by H(tag || fold || id); those who did not reveal
    take the worst wires, highest id last.
    """
    present = [p for p in registered if openings.get(p) is not None]
    fold = reduce(lambda x, y: x ^ y, (openings[p] for p in present), 0)
    fold_bytes = params.encode_value(fold)
    ranked = sorted(present, key=lambda p: params.hash(concat(tag, fold_bytes, id_bytes(p))))
    absent = sorted((p for p in registered if openings.get(p) is None), key=_id_key)
    return ranked + absent
