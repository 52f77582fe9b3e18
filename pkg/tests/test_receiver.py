import numpy as np
import pytest

from qkdblind.detector import DetectorConfig, DetectorState
from qkdblind.optics import (
    DARK,
    Architecture,
    Basis,
    GateIllumination,
    LightPulse,
    Polarization,
    PulseKind,
)
from qkdblind.receiver import (
    Coincidence,
    NoClick,
    Receiver,
    SingleClick,
    classify,
    process_gate,
)
from qkdblind.rng import Mode, RandomSource

R, D = Basis.RECTILINEAR, Basis.DIAGONAL


def test_classify_examples():
    assert classify([False] * 4) == NoClick()
    assert classify([False, True, False, False]) == SingleClick(R, 1)
    assert classify([True, False, True, False]) == Coincidence(frozenset({0, 2}))
    assert classify([False, False, True, False]) == SingleClick(D, 0)


def test_classify_two_detectors_uses_selected_basis():
    assert classify([True, False], D) == SingleClick(D, 0)
    assert classify([True, True], D) == Coincidence(frozenset({0, 1}))
    with pytest.raises(ValueError):
        classify([True, False])
    with pytest.raises(ValueError):
        classify([True, False, False])


def streams(seed=0):
    return (
        RandomSource(seed, "bob-basis", Mode.COMPROMISED),
        RandomSource(seed, "bob-optics"),
        RandomSource(seed, "detector-noise"),
    )


def cw_light(p_cw, *extra):
    return GateIllumination((LightPulse(Polarization.CIRCULAR, p_cw, PulseKind.CW),) + extra)


def test_passive_dark_gate_without_dark_counts():
    rx = Receiver.build(Architecture.PASSIVE_BS, DetectorConfig(dark_prob=0.0))
    outcome, basis, _ = rx.process_gate(DARK, *streams())
    assert outcome == NoClick() and basis is None


def test_passive_faked_state_fires_one_detector():
    cfg = DetectorConfig()
    p_th = cfg.click_threshold
    light = cw_light(400, LightPulse(Polarization.LIN0, 3 * p_th, PulseKind.BRIGHT))
    outcome, basis, states = process_gate(
        Architecture.PASSIVE_BS,
        [cfg] * 4,
        [DetectorState(True)] * 4,
        light,
        *streams(),
    )
    # doses 1.5, 0, 0.75, 0.75 times threshold: only detector 0 crosses it
    assert outcome == SingleClick(R, 0)
    assert basis is R
    assert all(s.blinded for s in states)


def test_state_count_checked():
    with pytest.raises(ValueError):
        process_gate(Architecture.ACTIVE_PEM, [DetectorConfig()] * 4, [DetectorState()] * 4,
                     DARK, *streams())


def test_mirror_switch_gives_coincidence_on_new_pair():
    cfg = DetectorConfig(efficiency=1.0, dark_prob=0.0)
    rx = Receiver.build(Architecture.EXCLUSIVE_MIRROR, cfg)
    basis_rng, optics, noise = streams()
    for b in (0, 0, 1, 1, 0):
        basis_rng.override_bit(b)
    outcomes = [rx.process_gate(cw_light(400), basis_rng, optics, noise)[0] for _ in range(5)]
    assert outcomes == [
        Coincidence(frozenset({0, 1})),
        NoClick(),
        Coincidence(frozenset({2, 3})),
        NoClick(),
        Coincidence(frozenset({0, 1})),
    ]


@pytest.mark.parametrize("arch", [Architecture.PASSIVE_BS, Architecture.ACTIVE_PEM])
def test_sustained_cw_blinds_everything(arch):
    cfg = DetectorConfig(efficiency=1.0, dark_prob=0.0)
    rx = Receiver.build(arch, cfg)
    s = streams(3)
    outcomes = [rx.process_gate(cw_light(400), *s)[0] for _ in range(200)]
    assert isinstance(outcomes[0], Coincidence)
    assert all(o == NoClick() for o in outcomes[1:])


def test_mirror_coincidence_iff_switch():
    cfg = DetectorConfig(efficiency=1.0, dark_prob=1e-3)
    rx = Receiver.build(Architecture.EXCLUSIVE_MIRROR, cfg)
    basis_rng, optics, noise = streams(5)
    bases, coinc = [], []
    for _ in range(4000):
        o, b, clicks = rx.process_gate(cw_light(400), basis_rng, optics, noise)
        bases.append(int(b))
        # the lit pair decides; dark counts only touch the unlit pair
        lit = [clicks[2 * b], clicks[2 * b + 1]]
        coinc.append(all(lit))
    switched = np.diff(bases) != 0
    assert np.array_equal(np.array(coinc[1:]), switched)
    assert abs(switched.mean() - 0.5) < 0.03


def test_unselected_basis_fires_only_by_dark_count():
    cfg = DetectorConfig(efficiency=1.0, dark_prob=0.0)
    rx = Receiver.build(Architecture.EXCLUSIVE_MIRROR, cfg)
    s = streams(8)
    bright = LightPulse(Polarization.LIN45, 500, PulseKind.BRIGHT)
    for _ in range(500):
        _, b, clicks = rx.process_gate(cw_light(400, bright), *s)
        assert not clicks[2 * (1 - b)] and not clicks[2 * (1 - b) + 1]


@pytest.mark.parametrize(
    "arch, consumed",
    [(Architecture.PASSIVE_BS, 0), (Architecture.ACTIVE_PEM, 1), (Architecture.EXCLUSIVE_MIRROR, 1)],
)
def test_basis_bits_consumed_per_gate(arch, consumed):
    rx = Receiver.build(arch, DetectorConfig())
    basis_rng, optics, noise = streams(1)
    gates = 37
    for _ in range(gates):
        rx.process_gate(cw_light(400), basis_rng, optics, noise)
    probe = RandomSource(1, "bob-basis")
    probe.uniforms(consumed * gates)
    assert basis_rng.uniform() == probe.uniform()


def test_baseline_single_photons_never_coincide():
    cfg = DetectorConfig(efficiency=1.0, dark_prob=0.0)
    for arch in Architecture:
        rx = Receiver.build(arch, cfg)
        s = streams(2)
        for k in range(400):
            pol = Polarization(k % 4)
            light = GateIllumination((LightPulse(pol, 1, PulseKind.SIGNAL),))
            assert not isinstance(rx.process_gate(light, *s)[0], Coincidence)
