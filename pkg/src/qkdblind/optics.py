"""Light states and the three receiver optical layouts.

Detector indices are fixed for every architecture with four detectors::

    0 = rectilinear / bit 0 (0 deg)     1 = rectilinear / bit 1 (90 deg)
    2 = diagonal    / bit 0 (45 deg)    3 = diagonal    / bit 1 (135 deg)

The phase-modulator receiver has two detectors, indexed by output arm
(0 = bit 0, 1 = bit 1) of whichever basis the modulator selects.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .rng import RandomSource


class Basis(enum.IntEnum):
    RECTILINEAR = 0
    DIAGONAL = 1


class Polarization(enum.IntEnum):
    # value == detector index of the matching passive-receiver detector
    LIN0 = 0
    LIN90 = 1
    LIN45 = 2
    LIN135 = 3
    CIRCULAR = 4

    @classmethod
    def encode(cls, bit: int, basis: Basis) -> Polarization:
        return cls(2 * int(basis) + int(bit))

    @property
    def basis(self) -> Basis | None:
        return None if self is Polarization.CIRCULAR else Basis(self.value // 2)

    @property
    def bit(self) -> int | None:
        return None if self is Polarization.CIRCULAR else self.value % 2


class Architecture(enum.Enum):
    PASSIVE_BS = "passive"
    ACTIVE_PEM = "pem"
    EXCLUSIVE_MIRROR = "mirror"

    @property
    def n_detectors(self) -> int:
        return 2 if self is Architecture.ACTIVE_PEM else 4

    @property
    def uses_basis_bit(self) -> bool:
        return self is not Architecture.PASSIVE_BS


class PulseKind(enum.Enum):
    SIGNAL = "signal"
    BRIGHT = "bright"
    CW = "cw"


@dataclass(frozen=True)
class LightPulse:
    polarization: Polarization
    photons: float
    kind: PulseKind

    def __post_init__(self):
        if self.photons < 0:
            raise ValueError("photon number must be non-negative")
        if self.kind is PulseKind.SIGNAL and self.photons not in (0, 1):
            raise ValueError("a signal pulse carries 0 or 1 photons")


@dataclass(frozen=True)
class GateIllumination:
    pulses: tuple[LightPulse, ...] = ()

    @property
    def dark(self) -> bool:
        return not self.pulses

    def of_kind(self, kind: PulseKind) -> list[LightPulse]:
        return [p for p in self.pulses if p.kind is kind]


DARK = GateIllumination()


@dataclass
class DetectorDose:
    """Per-detector incident photons, split by light component."""

    cw: np.ndarray
    bright: np.ndarray
    signal: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.signal is None:
            self.signal = np.zeros_like(self.cw)

    def __len__(self) -> int:
        return len(self.cw)

    def __getitem__(self, k: int) -> tuple[float, float, float]:
        return float(self.cw[k]), float(self.bright[k]), float(self.signal[k])


def split_fraction(pol: Polarization, basis: Basis, arm: int) -> float:
    """Fraction of power in ``pol`` leaving a PBS aligned to ``basis`` on ``arm``."""
    if pol is Polarization.CIRCULAR or pol.basis is not basis:
        return 0.5
    return 1.0 if pol.bit == arm else 0.0


def detector_weights(
    arch: Architecture, pol: Polarization, bob_basis: Basis | None
) -> tuple[float, ...]:
    """Fraction of incident power reaching each detector."""
    if arch is Architecture.PASSIVE_BS:
        return tuple(
            0.5 * split_fraction(pol, Basis(k // 2), k % 2) for k in range(4)
        )
    if bob_basis is None:
        raise ValueError(f"{arch.value} receiver needs a selected basis")
    if arch is Architecture.ACTIVE_PEM:
        return tuple(split_fraction(pol, bob_basis, arm) for arm in (0, 1))
    return tuple(
        split_fraction(pol, bob_basis, k % 2) if k // 2 == bob_basis else 0.0
        for k in range(4)
    )


def weight_table(arch: Architecture) -> np.ndarray:
    """``W[bob_basis, polarization, detector]`` for vectorized routing."""
    table = np.zeros((2, len(Polarization), arch.n_detectors))
    for b in Basis:
        for pol in Polarization:
            table[b, pol] = detector_weights(arch, pol, b)
    return table


def pick_detector(weights, u: float) -> int:
    """Index selected by inverse-CDF sampling of ``weights`` with ``u``."""
    acc = 0.0
    for k, w in enumerate(weights):
        acc += w
        if u < acc:
            return k
    return len(weights) - 1


def route(
    arch: Architecture,
    illumination: GateIllumination,
    bob_basis: Basis | None,
    rng: RandomSource,
) -> DetectorDose:
    """Distribute one gate's light over the receiver's detectors.

    Bright and CW power split deterministically.  The (at most one) signal
    photon lands on a single detector sampled from the same fractions.
    Exactly one uniform is consumed from ``rng`` per call.
    """
    if arch is Architecture.PASSIVE_BS:
        bob_basis = None
    n = arch.n_detectors
    cw, bright, signal = np.zeros(n), np.zeros(n), np.zeros(n)
    u = rng.uniform()
    signals = illumination.of_kind(PulseKind.SIGNAL)
    if len(signals) > 1:
        raise ValueError("at most one signal photon per gate")
    for pulse in illumination.pulses:
        w = np.asarray(detector_weights(arch, pulse.polarization, bob_basis))
        if pulse.kind is PulseKind.CW:
            cw += pulse.photons * w
        elif pulse.kind is PulseKind.BRIGHT:
            bright += pulse.photons * w
        elif pulse.photons:
            signal[pick_detector(w, u)] = 1.0
    return DetectorDose(cw, bright, signal)
