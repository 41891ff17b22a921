"""Shuffling networks: constructions and exact analyzers.

Wires are 1-based and wire 1 is the best position.  A swapper
``(i, j, p)`` exchanges the occupants of wires ``i`` and ``j`` with
probability ``p``; the winner of the underlying match ends up on ``j``.
Every analyzer works over exact rationals.
"""

from __future__ import annotations

import json
from fractions import Fraction
from functools import lru_cache
from math import lcm
from typing import Iterable, NamedTuple, Sequence

from . import kernels
from .errors import InvalidArgument, ResourceLimit

HALF = Fraction(1, 2)


class Swapper(NamedTuple):
    from_wire: int
    to_wire: int
    swap_probability: Fraction


class ShufflingNetwork:
    """``n`` wires plus an ordered sequence of rounds of swappers."""

    __slots__ = ("n", "rounds")

    def __init__(self, n: int, rounds: Iterable[Iterable[Swapper]], _check: bool = True):
        self.n = n
        self.rounds = tuple(tuple(Swapper(*s) for s in rnd) for rnd in rounds) if _check \
            else tuple(rounds)
        if _check:
            self._validate()

    def _validate(self) -> None:
        if not isinstance(self.n, int) or self.n < 1:
            raise InvalidArgument("wire count must be a positive integer")
        for r, rnd in enumerate(self.rounds):
            seen: set[int] = set()
            for s in rnd:
                i, j, p = s
                if not (1 <= i <= self.n and 1 <= j <= self.n) or i == j:
                    raise InvalidArgument(f"bad wires {i}->{j} in round {r}")
                if not isinstance(p, Fraction) or not 0 <= p <= 1:
                    raise InvalidArgument(f"bad probability {p!r} in round {r}")
                if i in seen or j in seen:
                    raise InvalidArgument(f"round {r} touches wire twice")
                seen.update((i, j))

    def swappers(self) -> Iterable[tuple[int, Swapper]]:
        for r, rnd in enumerate(self.rounds):
            for s in rnd:
                yield r, s

    @property
    def size(self) -> int:
        return sum(len(rnd) for rnd in self.rounds)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ShufflingNetwork):
            return NotImplemented
        return self.n == other.n and [frozenset(r) for r in self.rounds] == \
            [frozenset(r) for r in other.rounds]

    def __hash__(self) -> int:
        return hash((self.n, tuple(frozenset(r) for r in self.rounds)))

    def __repr__(self) -> str:
        return f"ShufflingNetwork(n={self.n}, depth={depth(self)}, swappers={self.size})"


class PayoutFunction:
    """Non-increasing per-rank pot fractions summing to one."""

    __slots__ = ("payouts",)

    def __init__(self, payouts: Iterable):
        ps = tuple(Fraction(p) for p in payouts)
        if not ps:
            raise InvalidArgument("empty payout function")
        if any(not 0 <= p <= 1 for p in ps):
            raise InvalidArgument("payouts must lie in [0, 1]")
        if any(a < b for a, b in zip(ps, ps[1:])):
            raise InvalidArgument("payouts must be non-increasing")
        if sum(ps) != 1:
            raise InvalidArgument("payouts must sum to 1")
        self.payouts = ps

    def __len__(self) -> int:
        return len(self.payouts)

    def __getitem__(self, pos: int) -> Fraction:
        """1-based rank lookup."""
        return self.payouts[pos - 1]

    def __iter__(self):
        return iter(self.payouts)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PayoutFunction) and self.payouts == other.payouts

    def __hash__(self) -> int:
        return hash(self.payouts)

    def __repr__(self) -> str:
        return "PayoutFunction(" + ", ".join(str(p) for p in self.payouts) + ")"

    @classmethod
    def single_winner(cls, n: int) -> "PayoutFunction":
        return cls([1] + [0] * (n - 1))

    @classmethod
    def top(cls, n: int, k: int | None = None) -> "PayoutFunction":
        """Uniform over the top ``k`` ranks, default ceil(n/2)."""
        k = (n + 1) // 2 if k is None else k
        if not 1 <= k <= n:
            raise InvalidArgument("k out of range")
        return cls([Fraction(1, k)] * k + [0] * (n - k))

    @classmethod
    def linear(cls, n: int) -> "PayoutFunction":
        return cls([Fraction(2 * (n - i), n * (n + 1)) for i in range(n)])

    @classmethod
    def uniform(cls, n: int) -> "PayoutFunction":
        return cls([Fraction(1, n)] * n)


class MarginalMatrix:
    """``rows[a][w]`` is the probability that input ``a+1`` leaves on wire ``w+1``."""

    __slots__ = ("rows",)

    def __init__(self, rows: Sequence[Sequence[Fraction]]):
        self.rows = tuple(tuple(r) for r in rows)

    @property
    def n(self) -> int:
        return len(self.rows)

    def __getitem__(self, key: tuple[int, int]) -> Fraction:
        a, w = key
        return self.rows[a - 1][w - 1]

    def is_doubly_stochastic(self) -> bool:
        n = self.n
        return all(sum(r) == 1 for r in self.rows) and \
            all(sum(self.rows[a][w] for a in range(n)) == 1 for w in range(n))

    def is_uniform(self) -> bool:
        u = Fraction(1, self.n)
        return all(x == u for r in self.rows for x in r)


# --- constructions -------------------------------------------------------

def _is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@lru_cache(maxsize=4096)
def _butterfly_block(base: int, k: int) -> tuple[tuple[Swapper, ...], ...]:
    """Block-halving butterfly over wires base .. base + 2**k - 1."""
    rounds = []
    for r in range(k):
        size = 1 << (k - r)
        half = size // 2
        rnd = []
        for b in range(0, 1 << k, size):
            s = base + b
            for t in range(half):
                rnd.append(Swapper(s + half + t, s + t, HALF))
        rounds.append(tuple(rnd))
    return tuple(rounds)


def build_tournament_tree(n: int) -> ShufflingNetwork:
    """Single-elimination bracket; round r pairs wire t + n/2**(r+1) with wire t."""
    if not isinstance(n, int) or n < 2 or not _is_power_of_two(n):
        raise InvalidArgument("tournament tree needs n = 2**k with k >= 1")
    rounds = []
    m = n // 2
    while m >= 1:
        rounds.append(tuple(Swapper(t + m, t, HALF) for t in range(1, m + 1)))
        m //= 2
    return ShufflingNetwork(n, rounds, _check=False)


def build_butterfly(k: int) -> ShufflingNetwork:
    if not isinstance(k, int) or k < 1:
        raise InvalidArgument("butterfly needs k >= 1")
    return ShufflingNetwork(1 << k, _butterfly_block(1, k), _check=False)


def _int_payout(payout: Sequence[Fraction]) -> list[int]:
    scale = lcm(*(Fraction(p).denominator for p in payout))
    return [int(Fraction(p) * scale) for p in payout]


def build_general(n: int, payout: PayoutFunction | None = None) -> ShufflingNetwork:
    """Composite network for arbitrary ``n``.

    Batches of sizes 2**k_l > ... > 2**k_1 are laid out from wire 1.  Each
    gets a butterfly, then one merge round per batch (largest first) mixes
    all smaller batches into it with probability 2**k_i / N_i, then a
    second butterfly.  The merge partners are ordered by their expected
    payout downstream of the merge, best partner onto the highest free wire
    of the batch's lower region.  Without an explicit payout the ordering
    uses the linearly decreasing payout, which coincides with sorting by
    expected final rank.
    """
    if not isinstance(n, int) or n < 2:
        raise InvalidArgument("general network needs n >= 2")
    ks = [b for b in range(n.bit_length()) if n >> b & 1]
    l = len(ks)
    if l == 1:
        return build_butterfly(ks[0])
    if payout is not None and len(payout) != n:
        raise InvalidArgument("payout length does not match n")

    starts = [0] * l
    w = 1
    for idx in reversed(range(l)):
        starts[idx] = w
        w += 1 << ks[idx]
    kl = ks[-1]
    rounds: list[list[Swapper]] = [[] for _ in range(2 * kl + 1)]
    for idx in range(l):
        m = kl + (l - 1 - idx)
        for r, rnd in enumerate(_butterfly_block(starts[idx], ks[idx])):
            rounds[r].extend(rnd)
            rounds[m + 1 + r].extend(rnd)

    # value[w]: expected payout at the stage right after the merge currently
    # being placed, scaled to integers.  Right after its own merge every wire
    # of a batch is worth the batch's mean payout since a butterfly follows.
    pay = _int_payout(payout.payouts) if payout is not None else list(range(n, 0, -1))
    value = [0] * (n + 1)
    for idx in range(l):
        size = 1 << ks[idx]
        total = sum(pay[starts[idx] - 1:starts[idx] - 1 + size])
        for v in range(starts[idx], starts[idx] + size):
            value[v] = total << (kl - ks[idx])
    for idx in range(1, l):
        size = 1 << ks[idx]
        below = sum(1 << ks[t] for t in range(idx))
        total = size + below
        p = Fraction(size, total)
        region = range(starts[idx] + size, starts[idx] + size + below)
        partners = sorted(region, key=lambda v: (-value[v], v))
        first = starts[idx] + size - below
        merge = rounds[kl + (l - 1 - idx)]
        for o, frm in enumerate(partners):
            merge.append(Swapper(frm, first + o, p))
        for v in range(1, n + 1):
            value[v] *= total
        for o, frm in enumerate(partners):
            to = first + o
            a, b = value[frm], value[to]
            value[frm] = ((total - size) * a + size * b) // total
            value[to] = ((total - size) * b + size * a) // total
    return ShufflingNetwork(n, (tuple(r) for r in rounds if r), _check=False)


# --- analyzers -------------------------------------------------------------

def marginal_distribution(net: ShufflingNetwork) -> MarginalMatrix:
    n = net.n
    # Integer matrix over one shared denominator, rescaled once per round.
    cols = [[int(a == w) for a in range(n)] for w in range(n)]
    denom = 1
    for rnd in net.rounds:
        if not rnd:
            continue
        scale = lcm(*(s.swap_probability.denominator for s in rnd))
        touched = set()
        for i, j, p in rnd:
            a = p.numerator * (scale // p.denominator)
            keep = scale - a
            ci, cj = cols[i - 1], cols[j - 1]
            cols[i - 1] = [keep * x + a * y for x, y in zip(ci, cj)]
            cols[j - 1] = [keep * y + a * x for x, y in zip(ci, cj)]
            touched.update((i - 1, j - 1))
        if scale != 1:
            for w in range(n):
                if w not in touched:
                    cols[w] = [scale * x for x in cols[w]]
        denom *= scale
    return MarginalMatrix([[Fraction(cols[w][a], denom) for w in range(n)] for a in range(n)])


def verify_correct(net: ShufflingNetwork) -> bool:
    return marginal_distribution(net).is_uniform()


def expected_payouts(net: ShufflingNetwork, payout: PayoutFunction) -> list[list[Fraction]]:
    """``table[r][w-1]`` is the expected payout of wire ``w`` before round ``r``.

    ``table[0]`` is the input stage and ``table[-1]`` the payout itself.
    """
    if len(payout) != net.n:
        raise InvalidArgument("payout length does not match network")
    E = list(payout.payouts)
    table = [list(E)]
    for rnd in reversed(net.rounds):
        for i, j, p in rnd:
            a, b = E[i - 1], E[j - 1]
            E[i - 1] = (1 - p) * a + p * b
            E[j - 1] = (1 - p) * b + p * a
        table.append(list(E))
    table.reverse()
    return table


def monotonic_violations(net: ShufflingNetwork, payout: PayoutFunction) -> list[tuple[int, Swapper]]:
    table = expected_payouts(net, payout)
    out = []
    for r, s in net.swappers():
        post = table[r + 1]
        if post[s.to_wire - 1] < post[s.from_wire - 1]:
            out.append((r, s))
    return out


def verify_monotonic(net: ShufflingNetwork, payout: PayoutFunction) -> bool:
    try:
        return not monotonic_violations(net, payout)
    except InvalidArgument:
        return False


def prune(net: ShufflingNetwork, payout: PayoutFunction) -> ShufflingNetwork:
    """Drop swappers that cannot change any expected payout.

    Removing a swapper whose two wires carry equal expectation at its output
    stage leaves every stage of the backward induction unchanged, so a single
    pass against the original table suffices.
    """
    if not verify_monotonic(net, payout):
        raise InvalidArgument("prune requires a monotonic network for this payout")
    table = expected_payouts(net, payout)
    live = {w for w in range(1, net.n + 1) if payout[w] > 0}
    keep_rounds: list[tuple[Swapper, ...]] = [()] * len(net.rounds)
    for r in range(len(net.rounds) - 1, -1, -1):
        post = table[r + 1]
        kept = []
        for s in net.rounds[r]:
            i, j = s.from_wire, s.to_wire
            influences = i in live or j in live
            if influences:
                live.update((i, j))
            if influences and post[i - 1] != post[j - 1]:
                kept.append(s)
        keep_rounds[r] = tuple(kept)
    return ShufflingNetwork(net.n, [rnd for rnd in keep_rounds if rnd], _check=False)


def depth(net: ShufflingNetwork) -> int:
    return sum(1 for rnd in net.rounds if rnd)


PERMUTATION_GUARD = (8, 24)


def permutation_distribution(net: ShufflingNetwork) -> dict[tuple[int, ...], Fraction]:
    """Exact output distribution by enumerating every swap outcome vector.

    A permutation is reported as the tuple of input indices found on wires
    1..n after the network has run.
    """
    max_n, max_swappers = PERMUTATION_GUARD
    flat = [s for _, s in net.swappers()]
    if net.n > max_n or len(flat) > max_swappers:
        raise ResourceLimit(f"enumeration guard is n <= {max_n}, swappers <= {max_swappers}")
    counts, denom = kernels.enumerate_outcomes(
        net.n,
        [s.from_wire - 1 for s in flat],
        [s.to_wire - 1 for s in flat],
        [s.swap_probability.numerator for s in flat],
        [s.swap_probability.denominator for s in flat],
    )
    return {perm: Fraction(c, denom) for perm, c in counts.items()}


def permutation_marginals(dist: dict[tuple[int, ...], Fraction], n: int) -> MarginalMatrix:
    rows = [[Fraction(0)] * n for _ in range(n)]
    for perm, q in dist.items():
        for w, a in enumerate(perm):
            rows[a - 1][w] += q
    return MarginalMatrix(rows)


def is_perfect(net: ShufflingNetwork) -> bool:
    from math import factorial
    dist = permutation_distribution(net)
    target = Fraction(1, factorial(net.n))
    return len(dist) == factorial(net.n) and all(q == target for q in dist.values())


# --- interchange -----------------------------------------------------------

def network_to_json(net: ShufflingNetwork) -> dict:
    return {
        "n": net.n,
        "rounds": [
            [{"from": s.from_wire, "to": s.to_wire,
              "p_num": s.swap_probability.numerator, "p_den": s.swap_probability.denominator}
             for s in rnd]
            for rnd in net.rounds
        ],
    }


def network_from_json(data: dict) -> ShufflingNetwork:
    try:
        n = data["n"]
        rounds = [
            [Swapper(int(s["from"]), int(s["to"]), Fraction(int(s["p_num"]), int(s["p_den"])))
             for s in rnd]
            for rnd in data["rounds"]
        ]
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise InvalidArgument(f"malformed network file: {exc}") from exc
    return ShufflingNetwork(n, rounds)


def payout_to_json(payout: PayoutFunction) -> dict:
    return {"payouts": [{"num": p.numerator, "den": p.denominator} for p in payout]}


def payout_from_json(data: dict) -> PayoutFunction:
    try:
        return PayoutFunction(Fraction(int(p["num"]), int(p["den"])) for p in data["payouts"])
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise InvalidArgument(f"malformed payout file: {exc}") from exc


def dumps(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"))
