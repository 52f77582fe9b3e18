"""Bob's receiving station: basis choice, routing, detection, classification."""

from __future__ import annotations

from dataclasses import dataclass

from .detector import DetectorConfig, DetectorState, detect
from .optics import Architecture, Basis, GateIllumination, route
from .rng import RandomSource


@dataclass(frozen=True)
class NoClick:
    pass


@dataclass(frozen=True)
class SingleClick:
    basis: Basis
    bit: int


@dataclass(frozen=True)
class Coincidence:
    detectors: frozenset[int]


GateOutcome = NoClick | SingleClick | Coincidence


def classify(clicks, basis: Basis | None = None) -> GateOutcome:
    """Turn a click pattern into a gate outcome.

    Four-detector patterns carry their own basis by index.  Two-detector
    (phase modulator) patterns need the basis the modulator selected.
    """
    clicks = [bool(c) for c in clicks]
    if len(clicks) not in (2, 4):
        raise ValueError(f"click pattern must have 2 or 4 entries, got {len(clicks)}")
    fired = [k for k, c in enumerate(clicks) if c]
    if not fired:
        return NoClick()
    if len(fired) > 1:
        return Coincidence(frozenset(fired))
    k = fired[0]
    if len(clicks) == 2:
        if basis is None:
            raise ValueError("two-detector pattern needs the selected basis")
        return SingleClick(Basis(basis), k)
    return SingleClick(Basis(k // 2), k % 2)


@dataclass
class Receiver:
    """Detector bank plus per-detector blinding state for one session."""

    arch: Architecture
    configs: tuple[DetectorConfig, ...]
    states: list[DetectorState]

    @classmethod
    def build(cls, arch: Architecture, config: DetectorConfig) -> Receiver:
        n = arch.n_detectors
        return cls(arch, (config,) * n, [DetectorState() for _ in range(n)])

    def process_gate(
        self,
        illumination: GateIllumination,
        basis_rng: RandomSource,
        optics_rng: RandomSource,
        noise_rng: RandomSource,
    ) -> tuple[GateOutcome, Basis | None, tuple[bool, ...]]:
        """Run one gate and advance the detector states.

        Returns the outcome, the basis Bob holds for the gate, and the raw
        click pattern.  For the passive receiver the basis is inferred from
        a single click and is ``None`` otherwise.
        """
        selected = None
        if self.arch.uses_basis_bit:
            selected = Basis(basis_rng.next_bit())
        dose = route(self.arch, illumination, selected, optics_rng)
        clicks = []
        for k, (config, state) in enumerate(zip(self.configs, self.states)):
            click, self.states[k] = detect(config, state, dose[k], noise_rng)
            clicks.append(click)
        outcome = classify(clicks, selected)
        if selected is None and isinstance(outcome, SingleClick):
            selected = outcome.basis
        return outcome, selected, tuple(clicks)


def process_gate(
    arch: Architecture,
    configs,
    states,
    illumination: GateIllumination,
    basis_rng: RandomSource,
    optics_rng: RandomSource,
    noise_rng: RandomSource,
):
    """Functional form of :meth:`Receiver.process_gate`; returns next states."""
    if len(states) != arch.n_detectors or len(configs) != arch.n_detectors:
        raise ValueError(
            f"{arch.value} receiver has {arch.n_detectors} detectors, "
            f"got {len(configs)} configs and {len(states)} states"
        )
    rx = Receiver(arch, tuple(configs), list(states))
    outcome, basis, _ = rx.process_gate(illumination, basis_rng, optics_rng, noise_rng)
    return outcome, basis, tuple(rx.states)
