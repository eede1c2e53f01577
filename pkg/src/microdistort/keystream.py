"""Deterministic binary keystreams shared by distorter and detector.

Bits come from SplitMix64 run in counter mode: word ``j`` of seed ``s`` is
``mix(s + (j + 1) * 0x9E3779B97F4A7C15)`` and slot ``i`` takes bit
``i % 64`` of word ``i // 64``.  The algorithm is fixed and platform
independent, so a stream of length L is always a prefix of the same seed's
stream of length L + 1.

This generator is reproducible, not cryptographically strong.  It stands in
for a pre-shared one-time pad during evaluation and must not be used to key a
real deployment.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .kernels import MASK64


def derive_seed(master: int, *labels) -> int:
    """Derive a 64-bit seed from ``master`` and a label path (BLAKE2b)."""
    text = ":".join([str(int(master) & MASK64), *map(str, labels)])
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


def seed_words(seed: int, count: int) -> np.ndarray:
    """``count`` 64-bit words from ``seed``; used to fan out per-trial seeds."""
    return kernels.words(np.uint64(int(seed) & MASK64), int(count))


@dataclass(frozen=True)
class KeyStream:
    seed: int
    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.bits.setflags(write=False)

    @property
    def length(self) -> int:
        return int(self.bits.shape[0])

    def __len__(self):
        return self.length

    def __getitem__(self, i):
        return self.bits[i]


def generate_keystream(seed: int, length: int) -> KeyStream:
    if length < 1:
        raise ValueError(f"keystream length must be >= 1, got {length}")
    seed = int(seed) & MASK64
    bits = np.asarray(kernels.keystream_bits(np.uint64(seed), int(length)), dtype=np.uint8)
    return KeyStream(seed, bits)


def keystream_from_bits(bits, seed: int = 0) -> KeyStream:
    """Wrap an explicit bit sequence (tests, fixtures, hand-built pads)."""
    arr = np.array(bits, dtype=np.uint8).ravel()
    if arr.size == 0:
        raise ValueError("keystream must contain at least one bit")
    if np.any(arr > 1):
        raise ValueError("keystream bits must be 0 or 1")
    return KeyStream(int(seed) & MASK64, arr)


@dataclass(frozen=True)
class TwoLayerKey:
    """sk1 selects, slot by slot, whether sk2 (bit 1) or sk3 (bit 0) is used."""

    sk1: KeyStream
    sk2: KeyStream
    sk3: KeyStream

    def __post_init__(self):
        if not (self.sk1.length == self.sk2.length == self.sk3.length):
            raise ValueError("two-layer key streams must have equal length")

    @property
    def length(self) -> int:
        return self.sk1.length

    def __len__(self):
        return self.length


def generate_two_layer(seed1: int, seed2: int, seed3: int, length: int) -> TwoLayerKey:
    seeds = [int(s) & MASK64 for s in (seed1, seed2, seed3)]
    if len(set(seeds)) != 3:
        raise ValueError("two-layer key needs three distinct seeds")
    return TwoLayerKey(*(generate_keystream(s, length) for s in seeds))


def effective_bit(key: TwoLayerKey, i: int) -> int:
    if not 0 <= i < key.length:
        raise IndexError(f"slot {i} out of range for key of length {key.length}")
    return int(key.sk2.bits[i] if key.sk1.bits[i] == 1 else key.sk3.bits[i])


def effective_bits(key) -> np.ndarray:
    """Per-slot bit actually written into the LSB, for either key type."""
    if isinstance(key, TwoLayerKey):
        return np.where(key.sk1.bits == 1, key.sk2.bits, key.sk3.bits).astype(np.uint8)
    return key.bits


def to_hex(key: KeyStream) -> str:
    """One-line hex dump, slot 0 in the most significant bit of the first byte.

    A trailing partial byte is zero-padded on the right.
    """
    return np.packbits(key.bits, bitorder="big").tobytes().hex()


def from_hex(text: str, length: int, seed: int = 0) -> KeyStream:
    raw = np.frombuffer(bytes.fromhex(text.strip()), dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="big")
    if bits.size < length:
        raise ValueError(f"hex dump holds {bits.size} bits, need {length}")
    return keystream_from_bits(bits[:length], seed)
