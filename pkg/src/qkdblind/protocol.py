"""Sessions: gate transcript, sifting, QBER sampling and Eve's ground truth.

A :class:`SessionTranscript` is columnar: one numpy array per field, one
row per gate.  ``-1`` marks an absent basis or bit.  Individual
:class:`GateRecord` objects are materialised on demand.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields

import numpy as np

from .alice import PreparedQubit, forward, prepare, transmit
from .config import SimulationConfig
from .eve import IDLE, Eve, EveGateRecord
from .optics import DARK, Basis, Polarization
from .receiver import Coincidence, GateOutcome, NoClick, Receiver, SingleClick
from .rng import Mode, RandomSource, Streams

NO_CLICK, SINGLE, COINCIDENCE = 0, 1, 2
BASIS_STREAM = "bob-basis"


@dataclass(frozen=True)
class GateRecord:
    gate_index: int
    alice: PreparedQubit
    eve: EveGateRecord
    bob_basis: Basis | None
    outcome: GateOutcome


@dataclass
class SiftedKey:
    gate_index: np.ndarray
    alice_bit: np.ndarray
    bob_bit: np.ndarray
    eve_knows: np.ndarray
    eve_bit: np.ndarray

    def __len__(self) -> int:
        return len(self.gate_index)

    def take(self, mask) -> SiftedKey:
        return SiftedKey(*(getattr(self, f.name)[mask] for f in fields(self)))

    def rows(self):
        for i in range(len(self)):
            eve_bit = int(self.eve_bit[i])
            yield (
                int(self.gate_index[i]),
                int(self.alice_bit[i]),
                int(self.bob_bit[i]),
                bool(self.eve_knows[i]),
                None if eve_bit < 0 else eve_bit,
            )


@dataclass
class QberEstimate:
    qber: float
    sample_size: int
    mismatches: int
    key: SiftedKey


@dataclass
class SessionTranscript:
    """Everything that happened in one session, gate by gate."""

    architecture: str
    alice_bit: np.ndarray
    alice_basis: np.ndarray
    alice_arrived: np.ndarray
    eve_acted: np.ndarray
    eve_basis: np.ndarray
    eve_bit: np.ndarray
    eve_candidate: np.ndarray
    eve_cw: np.ndarray
    eve_bright: np.ndarray
    bob_basis: np.ndarray
    clicks: np.ndarray
    outcome: np.ndarray
    outcome_bit: np.ndarray
    sifted: SiftedKey | None = None
    qber_sample: tuple[int, int] = (0, 0)
    key: SiftedKey | None = None

    ARRAYS = (
        "alice_bit", "alice_basis", "alice_arrived", "eve_acted", "eve_basis",
        "eve_bit", "eve_candidate", "eve_cw", "eve_bright", "bob_basis",
        "clicks", "outcome", "outcome_bit",
    )  # fmt: skip

    @property
    def gates(self) -> int:
        return len(self.outcome)

    @property
    def coincidence_count(self) -> int:
        return int(np.count_nonzero(self.outcome == COINCIDENCE))

    @property
    def eve_delivered(self) -> np.ndarray:
        """Gates where Bob's single click is exactly the state Eve forced."""
        return (
            self.eve_candidate
            & (self.outcome == SINGLE)
            & (self.bob_basis == self.eve_basis)
            & (self.outcome_bit == self.eve_bit)
        )

    @property
    def qber(self) -> float:
        size, wrong = self.qber_sample
        return wrong / size if size else 0.0

    def record(self, i: int) -> GateRecord:
        basis = Basis(int(self.alice_basis[i]))
        bit = int(self.alice_bit[i])
        alice = PreparedQubit(
            bit, basis, Polarization.encode(bit, basis), bool(self.alice_arrived[i])
        )
        eve = IDLE
        if self.eve_acted[i]:
            eb = int(self.eve_basis[i])
            eve = EveGateRecord(
                True,
                None if eb < 0 else Basis(eb),
                None if eb < 0 else int(self.eve_bit[i]),
                bool(self.eve_candidate[i]),
                float(self.eve_cw[i]),
                float(self.eve_bright[i]),
            )
        bb = int(self.bob_basis[i])
        bob_basis = None if bb < 0 else Basis(bb)
        kind = self.outcome[i]
        if kind == NO_CLICK:
            outcome = NoClick()
        elif kind == SINGLE:
            outcome = SingleClick(bob_basis, int(self.outcome_bit[i]))
        else:
            outcome = Coincidence(frozenset(np.flatnonzero(self.clicks[i]).tolist()))
        return GateRecord(i, alice, eve, bob_basis, outcome)

    @property
    def records(self):
        return (self.record(i) for i in range(self.gates))

    def to_bytes(self) -> bytes:
        parts = [self.architecture.encode()]
        for name in self.ARRAYS:
            parts.append(np.ascontiguousarray(getattr(self, name)).tobytes())
        for key in (self.sifted, self.key):
            if key is not None:
                parts.extend(getattr(key, f.name).tobytes() for f in fields(key))
        parts.append(repr(self.qber_sample).encode())
        return b"|".join(parts)

    def digest(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()


def sift(t: SessionTranscript) -> SiftedKey:
    """Keep single clicks whose announced bases agree.

    Eve reads the announcements too; she knows a sifted bit when the click
    is the faked or re-sent state she prepared in Bob's basis.
    """
    keep = (t.outcome == SINGLE) & (t.bob_basis == t.alice_basis)
    eve_knows = t.eve_candidate & (t.bob_basis == t.eve_basis)
    idx = np.flatnonzero(keep)
    return SiftedKey(
        gate_index=idx,
        alice_bit=t.alice_bit[idx],
        bob_bit=t.outcome_bit[idx],
        eve_knows=eve_knows[idx],
        eve_bit=t.eve_bit[idx],
    )


def estimate_qber(
    sifted: SiftedKey, sample_fraction: float, rng: RandomSource
) -> QberEstimate:
    """Publicly compare a random sample and drop it from the key."""
    if not 0.0 < sample_fraction <= 1.0:
        raise ValueError(f"sample fraction must lie in (0, 1], got {sample_fraction}")
    m = len(sifted)
    if m == 0:
        return QberEstimate(0.0, 0, 0, sifted)
    k = min(m, max(1, round(sample_fraction * m)))
    order = np.argsort(rng.uniforms(m), kind="stable")
    sampled = np.zeros(m, dtype=bool)
    sampled[order[:k]] = True
    wrong = int(np.count_nonzero(sifted.alice_bit[sampled] != sifted.bob_bit[sampled]))
    return QberEstimate(wrong / k, k, wrong, sifted.take(~sampled))


def eve_knowledge_fraction(t: SessionTranscript) -> float:
    """Share of the final key Eve holds correctly."""
    key = t.key if t.key is not None else t.sifted
    if key is None or len(key) == 0:
        return 0.0
    known = key.eve_knows & (key.eve_bit == key.bob_bit)
    return float(np.count_nonzero(known)) / len(key)


def finish(t: SessionTranscript, qber_sample: float, streams: Streams) -> SessionTranscript:
    t.sifted = sift(t)
    est = estimate_qber(t.sifted, qber_sample, streams["qber-sample"])
    t.qber_sample = (est.sample_size, est.mismatches)
    t.key = est.key
    return t


def make_streams(config: SimulationConfig, seed: int) -> Streams:
    compromised = frozenset({BASIS_STREAM}) if config.bob_rng is Mode.COMPROMISED else frozenset()
    return Streams(seed, compromised)


def run_session(
    config: SimulationConfig,
    seed: int | None = None,
    *,
    disconnected: bool = False,
    engine: str = "vector",
) -> SessionTranscript:
    """Run ``config.gates`` gates end to end.

    ``disconnected`` unplugs the receiver from the line so only dark counts
    remain.  ``engine="reference"`` steps the per-gate objects one at a time
    and produces a transcript identical to the vectorized engine.
    """
    seed = config.seed if seed is None else seed
    if engine == "vector":
        from .engine import simulate

        streams = make_streams(config, seed)
        return finish(simulate(config, streams, disconnected), config.qber_sample, streams)
    if engine == "reference":
        streams = make_streams(config, seed)
        return finish(_reference(config, streams, disconnected), config.qber_sample, streams)
    raise ValueError(f"unknown engine {engine!r}")


def _reference(config: SimulationConfig, streams: Streams, disconnected: bool):
    n = config.gates
    arch = config.architecture
    rx = Receiver.build(arch, config.detectors)
    eve = Eve(config.resolved_attack, streams["eve"])
    cols = {
        "alice_bit": np.zeros(n, np.int8),
        "alice_basis": np.zeros(n, np.int8),
        "alice_arrived": np.zeros(n, bool),
        "eve_acted": np.zeros(n, bool),
        "eve_basis": np.full(n, -1, np.int8),
        "eve_bit": np.full(n, -1, np.int8),
        "eve_candidate": np.zeros(n, bool),
        "eve_cw": np.zeros(n),
        "eve_bright": np.zeros(n),
        "bob_basis": np.full(n, -1, np.int8),
        "clicks": np.zeros((n, arch.n_detectors), bool),
        "outcome": np.zeros(n, np.int8),
        "outcome_bit": np.full(n, -1, np.int8),
    }
    for g in range(n):
        q = prepare(streams["alice"])
        cols["alice_bit"][g] = q.bit
        cols["alice_basis"][g] = q.basis
        channel = streams["channel"]
        if disconnected:
            channel.uniform(), channel.uniform()
            light = DARK
        else:
            light = transmit(q, config.channel, channel)
            cols["alice_arrived"][g] = not light.dark
            record, light = eve.intercept(light, streams[BASIS_STREAM])
            light = forward(light, config.channel.eta_eb, channel.uniform())
            if record.acted:
                cols["eve_acted"][g] = True
                cols["eve_candidate"][g] = record.knows_bob_outcome_candidate
                cols["eve_cw"][g] = record.cw_photons
                cols["eve_bright"][g] = record.bright_photons
                if record.measured_basis is not None:
                    cols["eve_basis"][g] = record.measured_basis
                    cols["eve_bit"][g] = record.measured_bit
        outcome, basis, clicks = rx.process_gate(
            light, streams[BASIS_STREAM], streams["bob-optics"], streams["detector-noise"]
        )
        cols["clicks"][g] = clicks
        if basis is not None:
            cols["bob_basis"][g] = basis
        if isinstance(outcome, SingleClick):
            cols["outcome"][g] = SINGLE
            cols["outcome_bit"][g] = outcome.bit
        elif isinstance(outcome, Coincidence):
            cols["outcome"][g] = COINCIDENCE
    return SessionTranscript(arch.value, **cols)
