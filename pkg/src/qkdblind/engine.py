"""Vectorized session engine.

Consumes every labelled stream in exactly the order the per-gate objects
do, so its transcripts are bit-identical to the reference loop while
running a million gates in well under a second.
"""

from __future__ import annotations

import numpy as np

from .config import SimulationConfig
from .detector import click_probability
from .eve import EVE_DRAWS, AttackKind
from .optics import Architecture, Basis, Polarization, split_fraction, weight_table
from .protocol import BASIS_STREAM, COINCIDENCE, SINGLE, SessionTranscript
from .rng import ModelingViolation, Streams

CIRCULAR = int(Polarization.CIRCULAR)


def _arm0_fraction() -> np.ndarray:
    """``F[pol, basis]``: power fraction on arm 0 of a PBS along ``basis``."""
    table = np.zeros((len(Polarization), 2))
    for pol in Polarization:
        for b in Basis:
            table[pol, b] = split_fraction(pol, b, 0)
    return table


ARM0 = _arm0_fraction()


def simulate(config: SimulationConfig, streams: Streams, disconnected: bool = False):
    n = config.gates
    arch = config.architecture
    det = config.detectors
    ndet = arch.n_detectors
    attack = config.resolved_attack
    kind = attack.kind

    a = streams["alice"].uniforms(2 * n).reshape(n, 2)
    alice_bit = (a[:, 0] < 0.5).astype(np.int8)
    alice_basis = (a[:, 1] < 0.5).astype(np.int8)
    alice_pol = 2 * alice_basis + alice_bit
    ch = streams["channel"].uniforms(2 * n).reshape(n, 2)

    eve_acted = np.zeros(n, bool)
    eve_basis = np.full(n, -1, np.int8)
    eve_bit = np.full(n, -1, np.int8)
    eve_candidate = np.zeros(n, bool)
    eve_cw = np.zeros(n)
    eve_bright = np.zeros(n)

    sig = np.zeros(n, bool)
    sig_pol = alice_pol.astype(np.intp)
    cw = np.zeros(n)
    bright = np.zeros(n)
    bright_pol = np.zeros(n, np.intp)
    override = np.zeros(n, bool)

    if disconnected:
        arrived = np.zeros(n, bool)
    else:
        arrived = ch[:, 0] < config.channel.eta_ae
        sig = arrived.copy()
        if kind is not AttackKind.NONE:
            e = streams["eve"].uniforms(EVE_DRAWS * n).reshape(n, EVE_DRAWS)
            if kind is AttackKind.BLIND_PARTIAL:
                starts = np.arange(0, n, attack.burst)
                on = np.repeat(e[starts, 0] < attack.fraction, attack.burst)[:n]
            else:
                on = np.ones(n, bool)
            measured = on & arrived
            basis = (e[:, 1] < 0.5).astype(np.int8)
            bit = np.where(e[:, 2] < ARM0[alice_pol, basis], 0, 1).astype(np.int8)
            eve_acted = on
            eve_basis = np.where(measured, basis, -1).astype(np.int8)
            eve_bit = np.where(measured, bit, -1).astype(np.int8)
            eve_pol = (2 * basis + bit).astype(np.intp)

            if kind in (AttackKind.INTERCEPT, AttackKind.RNG_CONTROL):
                eve_candidate = measured
                sig = np.where(on, measured, sig)
                sig_pol = np.where(on, eve_pol, sig_pol)
                if kind is AttackKind.RNG_CONTROL:
                    override = measured
            else:
                sig = sig & ~on
                cw = np.where(on, attack.p_cw, 0.0)
                faked = measured & (attack.p_pulse > 0)
                eve_candidate = faked
                bright = np.where(faked, attack.p_pulse, 0.0)
                bright_pol = np.where(faked, eve_pol, 0)
                if attack.prudent_noise and attack.p_pulse > 0 and attack.noise_rate > 0:
                    rate = attack.noise_rate
                    u = e[:, 3]
                    noisy = on & ~faked & (u < 4.0 * rate)
                    bright = np.where(noisy, attack.p_pulse, bright)
                    noise_pol = np.minimum(3, (u / rate).astype(np.intp))
                    bright_pol = np.where(noisy, noise_pol, bright_pol)
                eve_cw = cw.copy()
                eve_bright = bright.copy()

        eta_eb = config.channel.eta_eb
        sig &= ch[:, 1] < eta_eb
        if eta_eb != 1.0:
            cw = cw * eta_eb
            bright = bright * eta_eb

    bob_basis = np.full(n, -1, np.int8)
    if arch.uses_basis_bit:
        source = streams[BASIS_STREAM]
        if override.any() and not source.compromised:
            raise ModelingViolation("private source not controllable")
        free = ~override
        bob_basis[override] = eve_basis[override]
        bob_basis[free] = source.uniforms(int(free.sum())) < 0.5

    w = weight_table(arch)
    bb = np.maximum(bob_basis, 0).astype(np.intp)
    cw_dose = cw[:, None] * w[bb, CIRCULAR]
    bright_dose = bright[:, None] * w[bb, bright_pol]
    u_opt = streams["bob-optics"].uniforms(n)
    cum = np.cumsum(w[bb, sig_pol], axis=1)
    landing = np.minimum((u_opt[:, None] >= cum).sum(axis=1), ndet - 1)
    signal_dose = np.zeros((n, ndet))
    signal_dose[np.flatnonzero(sig), landing[sig]] = 1.0

    u_det = streams["detector-noise"].uniforms(n * ndet).reshape(n, ndet)
    blinded = np.zeros((n, ndet), bool)
    blinded[1:] = cw_dose[:-1] >= det.blind_threshold
    photons = cw_dose + bright_dose + signal_dose
    linear = u_det < click_probability(det, photons)
    clicks = np.where(blinded, bright_dose >= det.click_threshold, linear)

    count = clicks.sum(axis=1)
    outcome = np.where(count == 0, 0, np.where(count == 1, SINGLE, COINCIDENCE)).astype(np.int8)
    single = outcome == SINGLE
    fired = clicks.argmax(axis=1)
    outcome_bit = np.where(single, fired % 2, -1).astype(np.int8)
    if arch is Architecture.PASSIVE_BS:
        bob_basis = np.where(single, fired // 2, -1).astype(np.int8)

    return SessionTranscript(
        arch.value,
        alice_bit=alice_bit,
        alice_basis=alice_basis,
        alice_arrived=arrived,
        eve_acted=eve_acted,
        eve_basis=eve_basis,
        eve_bit=eve_bit,
        eve_candidate=eve_candidate,
        eve_cw=eve_cw,
        eve_bright=eve_bright,
        bob_basis=bob_basis,
        clicks=clicks,
        outcome=outcome,
        outcome_bit=outcome_bit,
    )
