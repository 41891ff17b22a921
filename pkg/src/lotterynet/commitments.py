"""Hash commitments, Lamport-style hash chains and fixed-point randomness.

All concatenations are length-prefixed: every field is preceded by its
length as a 4-byte big-endian integer, so distinct field tuples never
hash to the same preimage.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import InvalidArgument, OutOfRange

_HASHES = {256: hashlib.sha256, 512: hashlib.sha512}


def concat(*fields: bytes) -> bytes:
    out = bytearray()
    for f in fields:
        out += len(f).to_bytes(4, "big")
        out += f
    return bytes(out)


def split_fields(data: bytes) -> list[bytes]:
    """Inverse of :func:`concat`."""
    out = []
    pos = 0
    while pos < len(data):
        if pos + 4 > len(data):
            raise InvalidArgument("truncated field header")
        size = int.from_bytes(data[pos:pos + 4], "big")
        pos += 4
        if pos + size > len(data):
            raise InvalidArgument("truncated field")
        out.append(data[pos:pos + size])
        pos += size
    return out


def int_field(x: int) -> bytes:
    return x.to_bytes(8, "big", signed=True)


@dataclass(frozen=True)
class SecurityParams:
    """Bit length ``lam`` of random values and the hash output size.

    ``reduced=True`` lifts the ``lam >= 128`` floor so that exhaustive
    tests can run over a tiny value space.
    """

    lam: int = 128
    hash_output_bits: int = 256
    reduced: bool = False

    def __post_init__(self) -> None:
        if self.hash_output_bits not in _HASHES:
            raise InvalidArgument(f"unsupported hash size {self.hash_output_bits}")
        if self.lam < 1:
            raise InvalidArgument("lambda must be positive")
        if self.hash_output_bits < 2 * self.lam:
            raise InvalidArgument("hash output must be at least 2*lambda bits")
        if self.lam < 128 and not self.reduced:
            raise InvalidArgument("lambda below 128 requires reduced mode")

    @classmethod
    def reduced_mode(cls, lam: int) -> "SecurityParams":
        return cls(lam=lam, reduced=True)

    @property
    def value_bytes(self) -> int:
        return (self.lam + 7) // 8

    @property
    def space(self) -> int:
        return 1 << self.lam

    def hash(self, data: bytes) -> bytes:
        return _HASHES[self.hash_output_bits](data).digest()

    def truncate(self, digest: bytes) -> int:
        """Top ``lam`` bits of a digest."""
        return int.from_bytes(digest, "big") >> (8 * len(digest) - self.lam)

    def encode_value(self, value: int) -> bytes:
        check_value(value, self)
        return value.to_bytes(self.value_bytes, "big")


DEFAULT_PARAMS = SecurityParams()


def check_value(value: int, params: SecurityParams) -> None:
    if not isinstance(value, int) or isinstance(value, bool):
        raise InvalidArgument("values are integers")
    if not 0 <= value < params.space:
        raise InvalidArgument(f"value does not fit in {params.lam} bits")


def commit(data: bytes, randomness: bytes, params: SecurityParams = DEFAULT_PARAMS) -> bytes:
    """Single hash commitment H(randomness || data)."""
    return params.hash(concat(randomness, data))


def link_hash(next_head: bytes, value: int, params: SecurityParams) -> bytes:
    return params.hash(concat(next_head, params.encode_value(value)))


@dataclass(frozen=True)
class Opening:
    round: int
    next_head: bytes
    value: int
    params: SecurityParams = DEFAULT_PARAMS

    def __post_init__(self) -> None:
        check_value(self.value, self.params)


@dataclass(frozen=True)
class HashChainCommitment:
    seed: bytes | None
    length: int
    head: bytes
    links: tuple[tuple[bytes, int], ...] = field(repr=False)
    params: SecurityParams = DEFAULT_PARAMS

    @property
    def terminal(self) -> bytes:
        return self.links[-1][0]

    @property
    def values(self) -> tuple[int, ...]:
        return tuple(v for _, v in self.links)


def _derive(seed: bytes, tag: bytes, index: int, params: SecurityParams) -> bytes:
    return params.hash(concat(seed, tag, index.to_bytes(8, "big")))


def chain_from_values(values: Sequence[int], terminal: bytes,
                      params: SecurityParams = DEFAULT_PARAMS,
                      seed: bytes | None = None) -> HashChainCommitment:
    """Build a chain over explicitly chosen round values.

    Used by exhaustive analyses that need to steer the revealed randomness.
    """
    if len(values) == 0:
        raise InvalidArgument("chain length must be at least 1")
    links: list[tuple[bytes, int]] = [(b"", 0)] * len(values)
    head = terminal
    for r in range(len(values) - 1, -1, -1):
        links[r] = (head, values[r])
        head = link_hash(head, values[r], params)
    return HashChainCommitment(seed, len(values), head, tuple(links), params)


def chain_create(seed: bytes, length: int,
                 params: SecurityParams = DEFAULT_PARAMS) -> HashChainCommitment:
    if length < 1:
        raise InvalidArgument("chain length must be at least 1")
    if not seed:
        raise InvalidArgument("seed must be nonempty")
    values = [params.truncate(_derive(seed, b"v", r, params)) for r in range(length)]
    terminal = _derive(seed, b"term", length, params)
    return chain_from_values(values, terminal, params, seed)


def chain_open(chain: HashChainCommitment, round: int) -> Opening:
    if not 0 <= round < chain.length:
        raise OutOfRange(f"round {round} outside chain of length {chain.length}")
    next_head, value = chain.links[round]
    return Opening(round, next_head, value, chain.params)


def verify_opening(current_head: bytes, opening: Opening) -> bool:
    return link_hash(opening.next_head, opening.value, opening.params) == current_head


def walk_chain(head: bytes, openings: Iterable[Opening]) -> bool:
    """Verify a sequence of openings link by link starting from ``head``."""
    for o in openings:
        if not verify_opening(head, o):
            return False
        head = o.next_head
    return True


def fixed_point(a: int, b: int, params: SecurityParams = DEFAULT_PARAMS) -> Fraction:
    """(a XOR b) read as a lambda-bit binary fraction."""
    check_value(a, params)
    check_value(b, params)
    return Fraction(a ^ b, params.space)


def below(x: int, threshold: Fraction, params: SecurityParams) -> bool:
    """Integer form of ``x / 2**lam < threshold`` without building a Fraction."""
    return x * threshold.denominator < threshold.numerator * params.space


def grid_count(threshold: Fraction, params: SecurityParams) -> int:
    """Number of lambda-bit integers x with x / 2**lam < threshold."""
    if threshold <= 0:
        return 0
    if threshold >= 1:
        return params.space
    num, den = threshold.numerator, threshold.denominator
    return -((-num * params.space) // den)


def grid_probability(threshold: Fraction, params: SecurityParams) -> Fraction:
    return Fraction(grid_count(threshold, params), params.space)


def derive_sim_opening(seed_value: int, instance: int,
                       params: SecurityParams = DEFAULT_PARAMS) -> int:
    digest = params.hash(concat(params.encode_value(seed_value), instance.to_bytes(8, "big")))
    return params.truncate(digest)


def chain_to_vector(chain: HashChainCommitment) -> dict:
    if chain.seed is None:
        raise InvalidArgument("only seeded chains have test vectors")
    width = chain.params.value_bytes
    return {
        "seed_hex": chain.seed.hex(),
        "length": chain.length,
        "lambda": chain.params.lam,
        "head_hex": chain.head.hex(),
        "openings": [
            {"round": r, "next_head_hex": nh.hex(), "value_hex": v.to_bytes(width, "big").hex()}
            for r, (nh, v) in enumerate(chain.links)
        ],
    }


def check_vector(vector: dict, params: SecurityParams = DEFAULT_PARAMS) -> bool:
    """Recompute a chain from a test vector and compare every published byte."""
    if "lambda" in vector and vector["lambda"] != params.lam:
        params = SecurityParams(lam=vector["lambda"], reduced=vector["lambda"] < 128)
    chain = chain_create(bytes.fromhex(vector["seed_hex"]), vector["length"], params)
    return chain_to_vector(chain) == {**vector, "lambda": params.lam}


def dump_vectors(chains: Iterable[HashChainCommitment]) -> str:
    return json.dumps([chain_to_vector(c) for c in chains], indent=1)
