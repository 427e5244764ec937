"""The binary sample space: finite prefixes, seeded streams and sub-stream views.

Bit strings are plain ``str`` over ``"0"``/``"1"``.  Splitting uses 0-based
positions (even positions go to the first half); the uniform embedding uses
the 1-based weights 2**-i of the sample rule.

Infinite or lazily-assigned streams are :class:`Stream` views: a bit provider
plus an affine index map ``j -> offset + stride * j``.  Splitting a view just
composes the map, so deep sub-stream addresses never touch their ancestors.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Protocol, Sequence, Union

import numpy as np

from . import _kernels
from .interval import RationalInterval

BitString = str


def split_even_odd(s: BitString) -> tuple[BitString, BitString]:
    return s[0::2], s[1::2]


def merge_even_odd(evens: BitString, odds: BitString) -> BitString:
    """Inverse of :func:`split_even_odd` (alternate, evens first)."""
    if not (len(odds) <= len(evens) <= len(odds) + 1):
        raise ValueError("halves have incompatible lengths")
    out = []
    for i, b in enumerate(evens):
        out.append(b)
        if i < len(odds):
            out.append(odds[i])
    return "".join(out)


def uniform_value(s: BitString, n: int) -> RationalInterval:
    """The sample rule: first ``min(|s|, n)`` bits as a binary fraction, width 2**-o."""
    o = min(len(s), n)
    num = int(s[:o], 2) if o else 0
    lo = Fraction(num, 1 << o)
    return RationalInterval(lo, lo + Fraction(1, 1 << o))


# -- bit providers ----------------------------------------------------------

class NeedBit(Exception):
    """Raised by a lazy provider when an unassigned index is read."""

    def __init__(self, index: int):
        super().__init__(index)
        self.index = index


class BitProvider(Protocol):
    def read(self, indices: Sequence[int]) -> str:
        """Bits at ``indices`` in order, truncated at the first unavailable one."""


@dataclass(frozen=True)
class Prefix:
    """A finite prefix of the sample space."""
    bits: str

    def read(self, indices):
        out = []
        L = len(self.bits)
        for i in indices:
            if i >= L:
                break
            out.append(self.bits[i])
        return "".join(out)

    def label(self):
        return self.bits


_SEED_KEYS: dict[int, int] = {}


def _fold_high(seed_key: int, hi: int) -> int:
    key = seed_key
    while hi:
        key = _kernels.mix64(key ^ (hi & _kernels.MASK64) ^ 0xA5A5A5A5A5A5A5A5)
        hi >>= 64
    return key


@dataclass(frozen=True)
class SampleSource:
    """Seeded infinite bit stream; bit i is a fixed function of (seed, i)."""
    seed: int
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if not 0 <= self.seed < (1 << 64):
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def key(self) -> int:
        k = _SEED_KEYS.get(self.seed)
        if k is None:
            k = _SEED_KEYS[self.seed] = _kernels.mix64(self.seed)
        return k

    def words(self, blocks: Sequence[int]) -> list[int]:
        """The 64-bit words for the given block numbers (cached)."""
        cache = self._cache
        missing = sorted({b for b in blocks if b not in cache})
        if missing:
            key = self.key
            keys = np.fromiter((key if b >> 64 == 0 else _fold_high(key, b >> 64)
                                for b in missing), dtype=np.uint64, count=len(missing))
            lo = np.fromiter((b & _kernels.MASK64 for b in missing),
                             dtype=np.uint64, count=len(missing))
            for b, w in zip(missing, _kernels.words(keys, lo).tolist()):
                cache[b] = w
        return [cache[b] for b in blocks]

    def read(self, indices):
        indices = list(indices)
        ws = self.words([i >> 6 for i in indices])
        return "".join("1" if (w >> (i & 63)) & 1 else "0" for i, w in zip(indices, ws))

    def label(self):
        return f"seed:{self.seed}"


@dataclass(eq=False)
class Assignment:
    """Partially assigned bits for lazy exhaustive enumeration.

    Reading an unassigned index raises :class:`NeedBit` while fewer than
    ``budget`` bits are assigned; past the budget the read is truncated.
    """
    budget: int
    table: dict = field(default_factory=dict)

    def read(self, indices):
        out = []
        for i in indices:
            b = self.table.get(i)
            if b is None:
                if len(self.table) < self.budget:
                    raise NeedBit(i)
                break
            out.append(b)
        return "".join(out)

    def label(self):
        return "lazy"


@dataclass(frozen=True)
class Stream:
    """A sub-stream view ``j -> provider[offset + stride * j]``."""
    provider: object
    stride: int = 1
    offset: int = 0

    def evens(self) -> "Stream":
        return Stream(self.provider, 2 * self.stride, self.offset)

    def odds(self) -> "Stream":
        return Stream(self.provider, 2 * self.stride, self.offset + self.stride)

    def indices(self, n: int) -> range:
        return range(self.offset, self.offset + self.stride * n, self.stride)

    def take(self, n: int) -> BitString:
        return self.provider.read(self.indices(n))

    def label(self) -> str:
        return f"{self.provider.label()}@{self.offset}+{self.stride}k"


Source = Union[BitString, SampleSource, Stream]


def as_stream(src: Source) -> Stream:
    if isinstance(src, Stream):
        return src
    if isinstance(src, str):
        return Stream(Prefix(src))
    if isinstance(src, SampleSource):
        return Stream(src)
    raise TypeError(f"not a bit source: {src!r}")


def evens(src: Source):
    if isinstance(src, str):
        return src[0::2]
    return as_stream(src).evens()


def odds(src: Source):
    if isinstance(src, str):
        return src[1::2]
    return as_stream(src).odds()


def take(src: Source, n: int) -> BitString:
    if isinstance(src, str):
        return src[:n]
    return as_stream(src).take(n)


def subsource_address(src: Source, k: int):
    """Round ``k`` of rejection sampling: odd-split ``k`` times, then even-split."""
    for _ in range(k):
        src = odds(src)
    return evens(src)


def materialize(src: Union[SampleSource, Stream], length: int) -> BitString:
    if length < 0:
        raise ValueError("length must be nonnegative")
    return as_stream(src).take(length)


def trial_seeds(seed: int, count: int) -> list[int]:
    """Independent per-trial seeds derived from a base seed."""
    return _kernels.derive_seeds(seed, count).tolist()
