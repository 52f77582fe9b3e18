"""BB84 state preparation and the Alice-side quantum channel."""

from __future__ import annotations

from dataclasses import dataclass

from .optics import DARK, Basis, GateIllumination, LightPulse, Polarization, PulseKind
from .rng import RandomSource


@dataclass(frozen=True)
class PreparedQubit:
    bit: int
    basis: Basis
    polarization: Polarization
    surviving: bool = True


@dataclass(frozen=True)
class ChannelConfig:
    """Transmittance of the two line segments either side of Eve's station.

    The split exists whether or not anyone is listening, so an idle
    eavesdropper leaves the loss statistics untouched.  ``eta`` is the end
    to end product.
    """

    eta_ae: float = 1.0
    eta_eb: float = 1.0

    @classmethod
    def lossy(cls, eta: float) -> ChannelConfig:
        return cls(eta_ae=eta, eta_eb=1.0)

    @property
    def eta(self) -> float:
        return self.eta_ae * self.eta_eb

    def __post_init__(self):
        for name in ("eta_ae", "eta_eb"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")


def prepare(rng: RandomSource) -> PreparedQubit:
    """Draw bit then basis (two uniforms) and encode."""
    bit = rng.next_bit()
    basis = Basis(rng.next_bit())
    return PreparedQubit(bit, basis, Polarization.encode(bit, basis))


def signal(pol: Polarization) -> GateIllumination:
    return GateIllumination((LightPulse(pol, 1, PulseKind.SIGNAL),))


def transmit(q: PreparedQubit, channel, rng: RandomSource) -> GateIllumination:
    """Send ``q`` down the Alice-side segment (one uniform).

    ``channel`` is a :class:`ChannelConfig` or a bare transmittance.
    """
    eta = channel.eta_ae if isinstance(channel, ChannelConfig) else float(channel)
    if rng.uniform() < eta:
        return signal(q.polarization)
    return DARK


def forward(illumination: GateIllumination, eta: float, u: float) -> GateIllumination:
    """Apply a segment of transmittance ``eta`` to light already in flight.

    A signal photon survives if ``u < eta``; classical light is attenuated.
    """
    if illumination.dark or eta == 1.0:
        return illumination
    pulses = []
    for p in illumination.pulses:
        if p.kind is PulseKind.SIGNAL:
            if u < eta:
                pulses.append(p)
        else:
            pulses.append(LightPulse(p.polarization, p.photons * eta, p.kind))
    return GateIllumination(tuple(pulses))
