"""Counter-based random streams.

Every consumer derives an independent Philox stream from the experiment
seed plus a tuple of string/int tags. The derivation hashes the tags into
the 128-bit Philox key, so streams never depend on creation order, worker
count, or how work is partitioned; fixed-size path blocks each own a
stream tagged by block index.
"""

from __future__ import annotations

from typing import Union

from numpy.random import Generator, Philox

Tag = Union[str, int]

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x00000100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF


def _fnv1a(data: bytes, h: int = _FNV_OFFSET) -> int:
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK
    return h


def derive_key(seed: int, *tags: Tag) -> tuple[int, int]:
    """128-bit Philox key from the seed and a tag tuple (order-sensitive)."""
    h1 = _fnv1a(int(seed).to_bytes(8, "little", signed=False))
    h2 = _fnv1a(b"pmqs-stream", h1)
    for tag in tags:
        enc = (
            tag.to_bytes(8, "little", signed=True)
            if isinstance(tag, int)
            else tag.encode("utf-8")
        )
        h1 = _fnv1a(b"\x01" + enc, h1)
        h2 = _fnv1a(b"\x02" + enc, h2)
    return h1, h2


def stream(seed: int, *tags: Tag) -> Generator:
    """Independent Generator for (seed, tags)."""
    k1, k2 = derive_key(seed, *tags)
    return Generator(Philox(key=(k2 << 64) | k1))
