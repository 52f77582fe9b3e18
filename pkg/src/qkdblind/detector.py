"""Gated single-photon avalanche detector model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import RandomSource


@dataclass(frozen=True)
class DetectorConfig:
    """Detector parameters.

    ``blind_threshold`` is the CW photon number per gate that blinds the
    detector from the following gate on; ``click_threshold`` is the bright
    pulse needed to fire it while blinded.  Both comparisons are inclusive.
    """

    efficiency: float = 0.25
    dark_prob: float = 1e-5
    blind_threshold: float = 100.0
    click_threshold: float = 50.0
    superlinear_exponent: float = 1.0

    def __post_init__(self):
        for name in ("efficiency", "dark_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        for name in ("blind_threshold", "click_threshold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.superlinear_exponent >= 1.0:
            raise ValueError(
                f"superlinear_exponent must be >= 1, got {self.superlinear_exponent}"
            )


@dataclass(frozen=True)
class DetectorState:
    blinded: bool = False


def detection_probability(efficiency: float, photons: float) -> float:
    """Probability that at least one of ``photons`` photons is detected."""
    if not 0.0 <= efficiency <= 1.0:
        raise ValueError(f"efficiency must lie in [0, 1], got {efficiency}")
    if photons < 0:
        raise ValueError(f"photon number must be non-negative, got {photons}")
    return 1.0 - (1.0 - efficiency) ** photons


def coincidence_probability(p_detect: float) -> float:
    """Per-gate coincidence probability of a basis-switching receiver.

    Half of all gates switch the lit basis; on those both freshly lit
    detectors must fire.
    """
    if not 0.0 <= p_detect <= 1.0:
        raise ValueError(f"detection probability must lie in [0, 1], got {p_detect}")
    return 0.5 * p_detect**2


def click_probability(config: DetectorConfig, photons):
    """Linear-mode click probability including dark counts (array-friendly)."""
    p = 1.0 - (1.0 - config.efficiency) ** photons
    if config.superlinear_exponent != 1.0:
        p = np.minimum(1.0, p ** (1.0 / config.superlinear_exponent))
    return 1.0 - (1.0 - p) * (1.0 - config.dark_prob)


def detect(
    config: DetectorConfig,
    state: DetectorState,
    dose: tuple[float, float, float],
    rng: RandomSource,
) -> tuple[bool, DetectorState]:
    """One gate of one detector.

    ``dose`` is ``(cw, bright, signal)``.  One uniform is consumed per call
    whether or not it is needed.
    """
    cw, bright, signal = dose
    if min(dose) < 0:
        raise ValueError("dose components must be non-negative")
    u = rng.uniform()
    if state.blinded:
        click = bright >= config.click_threshold
    else:
        click = u < click_probability(config, cw + bright + signal)
    return bool(click), DetectorState(blinded=cw >= config.blind_threshold)
