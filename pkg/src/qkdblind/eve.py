"""Eavesdropping strategies.

Eve cuts the line, measures Alice's photon with an ideal passive station
and then either re-sends a photon (intercept-resend, RNG control) or
blinds Bob's detectors with circular CW light and fires a bright
faked-state pulse matching her result.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .detector import DetectorConfig
from .optics import (
    DARK,
    Architecture,
    Basis,
    GateIllumination,
    LightPulse,
    Polarization,
    PulseKind,
    split_fraction,
)
from .rng import ModelingViolation, RandomSource

# uniforms consumed per gate from Eve's stream: attack, basis, outcome, noise
EVE_DRAWS = 4


class AttackKind(enum.Enum):
    NONE = "none"
    INTERCEPT = "intercept"
    BLIND_FULL = "blind"
    BLIND_PARTIAL = "blind-partial"
    RNG_CONTROL = "rng-control"


@dataclass(frozen=True)
class AttackStrategy:
    """An attack and its knobs.

    ``fraction`` and ``burst`` only matter for partial blinding: gates are
    grouped in consecutive blocks of ``burst`` and each block is attacked
    with probability ``fraction``.  ``p_cw``, ``p_pulse`` and ``noise_rate``
    left as ``None`` are tailored to Bob's hardware by :meth:`resolve`.
    """

    kind: AttackKind = AttackKind.NONE
    fraction: float = 1.0
    burst: int = 1
    p_cw: float | None = None
    p_pulse: float | None = None
    prudent_noise: bool = False
    noise_rate: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"attack fraction must lie in [0, 1], got {self.fraction}")
        if self.burst < 1:
            raise ValueError(f"burst must be a positive gate count, got {self.burst}")
        for name in ("p_cw", "p_pulse"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be non-negative, got {value}")
        if self.noise_rate is not None and not 0.0 <= self.noise_rate <= 0.25:
            raise ValueError(f"noise_rate must lie in [0, 0.25], got {self.noise_rate}")

    @classmethod
    def parse(cls, text: str) -> AttackStrategy:
        """Parse ``none|intercept|blind|blind-partial:<f>[:<burst>]|rng-control``."""
        name, _, rest = text.partition(":")
        try:
            kind = AttackKind(name)
        except ValueError:
            raise ValueError(f"unknown attack {text!r}") from None
        if kind is not AttackKind.BLIND_PARTIAL:
            if rest:
                raise ValueError(f"attack {name!r} takes no parameter")
            return cls(kind)
        if not rest:
            raise ValueError("blind-partial needs a fraction, e.g. blind-partial:0.1")
        f, _, burst = rest.partition(":")
        try:
            return cls(kind, fraction=float(f), burst=int(burst) if burst else 1)
        except ValueError as exc:
            raise ValueError(f"bad blind-partial parameters {rest!r}: {exc}") from None

    def label(self) -> str:
        if self.kind is AttackKind.BLIND_PARTIAL:
            tail = f":{self.burst}" if self.burst != 1 else ""
            return f"{self.kind.value}:{self.fraction:g}{tail}"
        return self.kind.value

    @property
    def present(self) -> bool:
        return self.kind is not AttackKind.NONE

    @property
    def blinding(self) -> bool:
        return self.kind in (AttackKind.BLIND_FULL, AttackKind.BLIND_PARTIAL)

    def resolve(self, arch: Architecture, bob: DetectorConfig) -> AttackStrategy:
        """Fill unset powers from Bob's (publicly known) hardware."""
        p_cw = 4.0 * bob.blind_threshold if self.p_cw is None else self.p_cw
        if self.p_pulse is None:
            lo, hi = faked_pulse_window(bob.click_threshold, arch)
            p_pulse = 0.5 * (lo + hi)
        else:
            p_pulse = self.p_pulse
        rate = bob.dark_prob if self.noise_rate is None else self.noise_rate
        return replace(self, p_cw=p_cw, p_pulse=p_pulse, noise_rate=min(rate, 0.25))


def faked_pulse_window(
    click_threshold: float, arch: Architecture = Architecture.PASSIVE_BS
) -> tuple[float, float]:
    """Open interval of bright-pulse powers that fire exactly one blinded detector.

    Behind the passive splitter the matching detector sees half the pulse and
    each wrong-basis detector a quarter.  Behind a basis switch the matching
    detector sees all of it and a wrong-basis pulse splits in halves.
    """
    if not click_threshold > 0:
        raise ValueError("click threshold must be positive")
    if arch is Architecture.PASSIVE_BS:
        return 2.0 * click_threshold, 4.0 * click_threshold
    return click_threshold, 2.0 * click_threshold


@dataclass(frozen=True)
class EveGateRecord:
    acted: bool = False
    measured_basis: Basis | None = None
    measured_bit: int | None = None
    knows_bob_outcome_candidate: bool = False
    cw_photons: float = 0.0
    bright_photons: float = 0.0


IDLE = EveGateRecord()


def measure(incoming: GateIllumination, u_basis: float, u_outcome: float):
    """Ideal passive measurement; ``(None, None)`` when no photon arrived."""
    photons = [p for p in incoming.of_kind(PulseKind.SIGNAL) if p.photons]
    if not photons:
        return None, None
    basis = Basis(int(u_basis < 0.5))
    bit = 0 if u_outcome < split_fraction(photons[0].polarization, basis, 0) else 1
    return basis, bit


def noise_polarization(u: float, rate: float) -> Polarization | None:
    """Uniform BB84 polarization with total probability ``4 * rate``."""
    if rate <= 0 or u >= 4.0 * rate:
        return None
    return Polarization(min(3, int(u / rate)))


class Eve:
    """Stateful attacker for one session.

    ``strategy`` must already be resolved against Bob's hardware.
    """

    def __init__(self, strategy: AttackStrategy, rng: RandomSource):
        if strategy.p_cw is None or strategy.p_pulse is None:
            raise ValueError("resolve the strategy before building Eve")
        self.strategy = strategy
        self.rng = rng
        self.gate = 0
        self._on = strategy.kind is not AttackKind.NONE

    def intercept(
        self, incoming: GateIllumination, bob_rng: RandomSource | None = None
    ) -> tuple[EveGateRecord, GateIllumination]:
        s = self.strategy
        gate, self.gate = self.gate, self.gate + 1
        if s.kind is AttackKind.NONE:
            return IDLE, incoming
        u_attack, u_basis, u_outcome, u_noise = (
            self.rng.uniform() for _ in range(EVE_DRAWS)
        )
        if s.kind is AttackKind.BLIND_PARTIAL and gate % s.burst == 0:
            self._on = u_attack < s.fraction
        if not self._on:
            return IDLE, incoming

        basis, bit = measure(incoming, u_basis, u_outcome)
        measured = basis is not None
        pol = Polarization.encode(bit, basis) if measured else None

        if s.kind is AttackKind.RNG_CONTROL:
            if measured:
                if bob_rng is None or not bob_rng.compromised:
                    raise ModelingViolation("private source not controllable")
                bob_rng.override_bit(int(basis))
            out = _signal(pol) if measured else DARK
            return EveGateRecord(True, basis, bit, measured), out

        if s.kind is AttackKind.INTERCEPT:
            out = _signal(pol) if measured else DARK
            return EveGateRecord(True, basis, bit, measured), out

        pulses = []
        if s.p_cw > 0:
            pulses.append(LightPulse(Polarization.CIRCULAR, s.p_cw, PulseKind.CW))
        faked = measured and s.p_pulse > 0
        bright = 0.0
        if faked:
            pulses.append(LightPulse(pol, s.p_pulse, PulseKind.BRIGHT))
            bright = s.p_pulse
        elif s.prudent_noise and s.p_pulse > 0:
            noise = noise_polarization(u_noise, s.noise_rate)
            if noise is not None:
                pulses.append(LightPulse(noise, s.p_pulse, PulseKind.BRIGHT))
                bright = s.p_pulse
        record = EveGateRecord(True, basis, bit, faked, s.p_cw, bright)
        return record, GateIllumination(tuple(pulses))


def _signal(pol: Polarization) -> GateIllumination:
    return GateIllumination((LightPulse(pol, 1, PulseKind.SIGNAL),))


def intercept(
    strategy: AttackStrategy,
    incoming: GateIllumination,
    eve_rng: RandomSource,
    bob_rng: RandomSource | None = None,
    arch: Architecture = Architecture.PASSIVE_BS,
    bob: DetectorConfig | None = None,
) -> tuple[EveGateRecord, GateIllumination]:
    """Single-gate convenience wrapper around :class:`Eve`."""
    resolved = strategy.resolve(arch, bob or DetectorConfig())
    return Eve(resolved, eve_rng).intercept(incoming, bob_rng)
