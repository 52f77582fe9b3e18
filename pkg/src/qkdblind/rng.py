"""Labelled, seedable random streams.

Every consumer in a session owns its own stream, derived from the master
seed and a text label by hashing.  Streams hand out uniform doubles; bits
are ``u < 0.5``.  Scalar and array draws from the same stream interleave
consistently, which lets the per-gate reference path and the vectorized
session engine consume identical randomness.
"""

from __future__ import annotations

import enum
import hashlib
from collections import deque

import numpy as np

DEFAULT_SEED = 20130521


class Mode(enum.Enum):
    PRIVATE = "private"
    COMPROMISED = "compromised"


class ModelingViolation(RuntimeError):
    """An operation that the modelled hardware cannot physically allow."""


def derive_key(seed: int, *parts: object) -> int:
    """128-bit key from a seed and any number of labels."""
    h = hashlib.blake2b(digest_size=16)
    h.update(int(seed).to_bytes(8, "little", signed=False))
    for part in parts:
        raw = str(part).encode()
        h.update(len(raw).to_bytes(4, "little"))
        h.update(raw)
    return int.from_bytes(h.digest(), "little")


def session_seed(master_seed: int, session: int) -> int:
    return derive_key(master_seed, "session", session) & (2**64 - 1)


class RandomSource:
    """A single-owner bit stream keyed by ``(seed, label)``.

    Private sources only ever hand out the bit being consumed.  A
    compromised source additionally lets an adversary read ahead with
    :meth:`peek` or dictate the next value with :meth:`override_bit`; an
    overridden bit does not advance the underlying generator.
    """

    def __init__(self, seed: int, label: str, mode: Mode = Mode.PRIVATE):
        if not 0 <= int(seed) < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = int(seed)
        self.label = label
        self.mode = mode
        self._gen = np.random.Generator(np.random.PCG64(derive_key(seed, label)))
        self._overrides: deque[int] = deque()
        self._peeked: float | None = None

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, label={self.label!r}, mode={self.mode.value})"

    @property
    def compromised(self) -> bool:
        return self.mode is Mode.COMPROMISED

    def uniform(self) -> float:
        if self._peeked is not None:
            u, self._peeked = self._peeked, None
            return u
        return float(self._gen.random())

    def uniforms(self, n: int) -> np.ndarray:
        """Next ``n`` uniforms, identical to ``n`` calls of :meth:`uniform`."""
        if n <= 0:
            return np.empty(0)
        if self._peeked is not None:
            head = np.array([self.uniform()])
            return np.concatenate([head, self._gen.random(n - 1)])
        return self._gen.random(n)

    def next_bit(self) -> int:
        if self._overrides:
            return self._overrides.popleft()
        return int(self.uniform() < 0.5)

    def bits(self, n: int) -> np.ndarray:
        if self._overrides:
            raise ModelingViolation("pending overrides; draw bits one at a time")
        return (self.uniforms(n) < 0.5).astype(np.int8)

    def override_bit(self, value: int) -> None:
        if not self.compromised:
            raise ModelingViolation("private source not controllable")
        if value not in (0, 1):
            raise ValueError(f"bit must be 0 or 1, got {value!r}")
        self._overrides.append(int(value))

    def peek(self) -> int:
        """Next bit without consuming it (compromised sources only)."""
        if not self.compromised:
            raise ModelingViolation("private source not controllable")
        if self._overrides:
            return self._overrides[0]
        if self._peeked is None:
            self._peeked = float(self._gen.random())
        return int(self._peeked < 0.5)


class Streams:
    """Factory for the labelled streams of one session."""

    def __init__(self, seed: int, compromised: frozenset[str] = frozenset()):
        self.seed = seed
        self.compromised = compromised
        self._sources: dict[str, RandomSource] = {}

    def __getitem__(self, label: str) -> RandomSource:
        if label not in self._sources:
            mode = Mode.COMPROMISED if label in self.compromised else Mode.PRIVATE
            self._sources[label] = RandomSource(self.seed, label, mode)
        return self._sources[label]
