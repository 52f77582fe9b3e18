import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from qkdblind.config import load_config, preset
from qkdblind.optics import Basis
from qkdblind.protocol import (
    COINCIDENCE,
    NO_CLICK,
    SINGLE,
    SessionTranscript,
    SiftedKey,
    estimate_qber,
    eve_knowledge_fraction,
    run_session,
    sift,
)
from qkdblind.receiver import SingleClick
from qkdblind.rng import RandomSource

PRESETS = ["baseline", "fig1a-blind", "fig1b-blind", "fig1c-blind", "intercept",
           "rng-control", "weak-cw", "partial:0.3:17"]  # fmt: skip


@pytest.mark.parametrize("name", PRESETS)
def test_vector_engine_matches_reference(small, name):
    config = small(name, gates=3000)
    fast = run_session(config)
    slow = run_session(config, engine="reference")
    assert fast.to_bytes() == slow.to_bytes()


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(
    arch=st.sampled_from(["passive", "pem", "mirror"]),
    attack=st.sampled_from(["none", "intercept", "blind", "blind-partial:0.4:3", "blind-partial:0.7"]),
    eta_ae=st.sampled_from([1.0, 0.6]),
    eta_eb=st.sampled_from([1.0, 0.5]),
    eps=st.sampled_from([1.0, 0.25]),
    dark=st.sampled_from([0.0, 0.02]),
    prudent=st.booleans(),
    seed=st.integers(0, 2**32),
)
def test_engines_agree_on_random_configs(arch, attack, eta_ae, eta_eb, eps, dark, prudent, seed):
    config = load_config(
        overrides={
            "run": {"gates": 400, "seed": seed},
            "receiver": {"architecture": arch},
            "channel": {"eta_ae": eta_ae, "eta_eb": eta_eb},
            "detectors": {"efficiency": eps, "dark_prob": dark},
            "attack": {"strategy": attack, "prudent_noise": prudent},
        }
    )
    for disconnected in (False, True):
        fast = run_session(config, disconnected=disconnected)
        slow = run_session(config, disconnected=disconnected, engine="reference")
        assert fast.to_bytes() == slow.to_bytes()


def test_zero_gates(small):
    t = run_session(small("fig1c-blind", gates=0))
    assert t.gates == 0 and len(t.sifted) == 0 and t.coincidence_count == 0
    assert list(t.records) == []


def test_baseline_sifted_length():
    t = run_session(preset("baseline"))
    assert abs(len(t.sifted) - 500_000) <= 1500


def test_passive_blinding_is_perfect():
    t = run_session(preset("fig1a-blind", gates=200_000))
    assert np.all(t.sifted.alice_bit == t.sifted.bob_bit)
    assert np.all(t.sifted.eve_knows)
    assert np.all(t.sifted.eve_bit == t.sifted.bob_bit)
    assert t.qber == 0.0


def test_pem_blinding_halves_sifted_fraction():
    base = run_session(preset("baseline", gates=100_000))
    pem = run_session(preset("fig1b-blind", gates=100_000))
    ratio = (len(pem.sifted) / pem.gates) / (len(base.sifted) / base.gates)
    assert ratio == pytest.approx(0.5, abs=0.02)
    assert len(pem.sifted) / pem.gates == pytest.approx(0.25, abs=0.005)


def one_gate(outcome, bob_basis, alice_basis=0, eve=False):
    return SessionTranscript(
        "passive",
        alice_bit=np.array([1], np.int8),
        alice_basis=np.array([alice_basis], np.int8),
        alice_arrived=np.array([True]),
        eve_acted=np.array([eve]),
        eve_basis=np.array([bob_basis if eve else -1], np.int8),
        eve_bit=np.array([1 if eve else -1], np.int8),
        eve_candidate=np.array([eve]),
        eve_cw=np.zeros(1),
        eve_bright=np.zeros(1),
        bob_basis=np.array([bob_basis], np.int8),
        clicks=np.zeros((1, 4), bool),
        outcome=np.array([outcome], np.int8),
        outcome_bit=np.array([1 if outcome == SINGLE else -1], np.int8),
    )


def test_sift_single_gate():
    assert len(sift(one_gate(SINGLE, 0))) == 1
    assert len(sift(one_gate(SINGLE, 1))) == 0
    assert len(sift(one_gate(COINCIDENCE, -1))) == 0
    assert len(sift(one_gate(NO_CLICK, 0))) == 0
    keyed = sift(one_gate(SINGLE, 0, eve=True))
    assert list(keyed.rows()) == [(0, 1, 1, True, 1)]


def test_qber_identical_bits():
    bits = np.array([0, 1, 1, 0] * 50, np.int8)
    key = SiftedKey(np.arange(200), bits, bits.copy(), np.zeros(200, bool), np.full(200, -1, np.int8))
    est = estimate_qber(key, 0.1, RandomSource(0, "q"))
    assert est.qber == 0 and est.sample_size == 20 and len(est.key) == 180


def test_qber_empty_and_bad_fraction():
    empty = SiftedKey(*(np.empty(0, dt) for dt in (int, np.int8, np.int8, bool, np.int8)))
    est = estimate_qber(empty, 0.5, RandomSource(0, "q"))
    assert est.qber == 0 and len(est.key) == 0
    with pytest.raises(ValueError):
        estimate_qber(empty, 0.0, RandomSource(0, "q"))


def test_intercept_resend_qber():
    t = run_session(preset("intercept").evolve(qber_sample=0.5))
    assert abs(t.qber - 0.25) < 0.004


@pytest.mark.parametrize("name", ["fig1a-blind", "fig1b-blind", "fig1c-blind"])
def test_blinding_has_no_errors_and_full_knowledge(name):
    t = run_session(preset(name, gates=200_000))
    assert t.qber == 0.0
    assert eve_knowledge_fraction(t) == 1.0


def test_no_attack_knowledge_zero(small):
    assert eve_knowledge_fraction(run_session(small("baseline"))) == 0.0


def test_partial_knowledge_matches_replay():
    t = run_session(preset("partial:0.5:50", gates=20_000))
    frac = eve_knowledge_fraction(t)
    assert 0 < frac < 1
    # independent replay over materialised records
    in_key = set(t.key.gate_index.tolist())
    known = total = 0
    for rec in t.records:
        if rec.gate_index not in in_key:
            continue
        total += 1
        out = rec.outcome
        assert isinstance(out, SingleClick) and out.basis is rec.alice.basis
        if (rec.eve.knows_bob_outcome_candidate and rec.eve.measured_basis is out.basis
                and rec.eve.measured_bit == out.bit):
            known += 1
    assert total == len(t.key)
    assert frac == known / total


@pytest.mark.parametrize("eta", [1.0, 0.3, 0.05])
@pytest.mark.parametrize("arch", ["passive", "pem", "mirror"])
def test_no_attack_no_dark_counts_means_no_errors(eta, arch):
    config = load_config(
        overrides={
            "run": {"gates": 50_000},
            "receiver": {"architecture": arch},
            "channel": {"eta": eta},
            "detectors": {"efficiency": 0.25, "dark_prob": 0.0},
        }
    )
    t = run_session(config)
    assert np.all(t.sifted.alice_bit == t.sifted.bob_bit)


@pytest.mark.parametrize("name", PRESETS)
def test_gate_accounting(small, name):
    t = run_session(small(name, gates=20_000))
    single = t.outcome == SINGLE
    mismatch = single & (t.bob_basis != t.alice_basis)
    parts = len(t.sifted) + mismatch.sum() + (t.outcome == NO_CLICK).sum() + t.coincidence_count
    assert parts == t.gates


def test_determinism(small):
    a = run_session(small("partial:0.5", gates=50_000))
    b = run_session(small("partial:0.5", gates=50_000))
    assert a.to_bytes() == b.to_bytes()
    c = run_session(small("partial:0.5", gates=50_000), seed=1)
    assert a.digest() != c.digest()


def test_partial_extremes_match_full_and_none():
    base = {"run": {"gates": 5000}, "receiver": {"architecture": "mirror"}}
    def t(strategy):
        cfg = load_config(overrides={**base, "attack": {"strategy": strategy}})
        return run_session(cfg).to_bytes()
    assert t("blind-partial:1.0") == t("blind")
    assert t("blind-partial:0.0") == t("none")


def test_record_view_round_trip(small):
    t = run_session(small("fig1b-blind", gates=50))
    rec = t.record(10)
    assert rec.gate_index == 10
    assert rec.eve.acted and rec.eve.cw_photons == 400.0
    assert rec.bob_basis in (Basis.RECTILINEAR, Basis.DIAGONAL)


def test_unknown_engine(small):
    with pytest.raises(ValueError):
        run_session(small("baseline"), engine="gpu")
