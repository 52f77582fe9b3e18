import numpy as np
import pytest

from qkdblind.alice import ChannelConfig, PreparedQubit, forward, prepare, signal, transmit
from qkdblind.optics import Basis, GateIllumination, LightPulse, Polarization, PulseKind
from qkdblind.rng import Mode, RandomSource

from conftest import three_sigma


def rigged(*bits):
    src = RandomSource(0, "alice", Mode.COMPROMISED)
    for b in bits:
        src.override_bit(b)
    return src


def test_prepare_mapping():
    assert prepare(rigged(0, 0)).polarization is Polarization.LIN0
    assert prepare(rigged(1, 1)).polarization is Polarization.LIN135
    q = prepare(rigged(1, 0))
    assert (q.bit, q.basis, q.polarization) == (1, Basis.RECTILINEAR, Polarization.LIN90)
    assert q.surviving


def test_prepare_state_frequencies():
    rng = RandomSource(4, "alice")
    n = 1_000_000
    u = rng.uniforms(2 * n).reshape(n, 2) < 0.5
    states = 2 * u[:, 1] + u[:, 0]
    freqs = np.bincount(states, minlength=4) / n
    assert np.all(np.abs(freqs - 0.25) < 0.0013)


def test_prepare_matches_bulk_draws():
    a, b = RandomSource(4, "alice"), RandomSource(4, "alice")
    u = b.uniforms(20).reshape(10, 2) < 0.5
    for row in u:
        q = prepare(a)
        assert (q.bit, int(q.basis)) == (int(row[0]), int(row[1]))


def q0():
    return PreparedQubit(0, Basis.RECTILINEAR, Polarization.LIN0)


@pytest.mark.parametrize("eta, expect", [(1.0, True), (0.0, False)])
def test_transmit_extremes(eta, expect):
    rng = RandomSource(0, "channel")
    assert all((not transmit(q0(), eta, rng).dark) is expect for _ in range(1000))


def test_transmit_loss_rate():
    rng = RandomSource(5, "channel")
    n = 100_000
    frac = np.mean([not transmit(q0(), ChannelConfig.lossy(0.3), rng).dark for _ in range(n)])
    assert abs(frac - 0.3) < 0.0044
    assert three_sigma(0.3, n) < 0.0044


def test_channel_ranges_and_shorthand():
    assert ChannelConfig.lossy(0.3).eta == pytest.approx(0.3)
    assert ChannelConfig(0.5, 0.4).eta == pytest.approx(0.2)
    with pytest.raises(ValueError):
        ChannelConfig(eta_ae=1.2)


def test_forward_attenuates_classical_light_and_drops_photon():
    light = GateIllumination(
        (LightPulse(Polarization.CIRCULAR, 100, PulseKind.CW),)
    )
    assert forward(light, 0.5, 0.9).pulses[0].photons == 50
    assert forward(signal(Polarization.LIN0), 0.5, 0.7).dark
    assert not forward(signal(Polarization.LIN0), 0.5, 0.3).dark
