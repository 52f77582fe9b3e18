"""Coincidence monitoring and the leaked-bit bound.

A receiver whose basis switch sends all light into one basis cannot be
kept blinded: every switch lights two fresh detectors at once.  Bob
compares the coincidence rate seen on the line with the rate measured
with the line unplugged, charges Eve one key bit per two surplus
coincidences and removes that many bits in privacy amplification.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

from .config import SimulationConfig
from .protocol import SessionTranscript, run_session


@dataclass(frozen=True)
class DefenseReport:
    """Per-session defense figures.

    ``sifted_length`` counts the sifted bits left after the QBER sample is
    discarded; ``final_key_bound`` is computed from it.
    """

    p_c_prime_hat: float
    p_c0_hat: float
    extra_coincidences: int
    leaked_bits_bound: float
    sifted_length: int
    qber: float
    final_key_bound: float

    @classmethod
    def columns(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def as_dict(self) -> dict:
        return asdict(self)

    @property
    def alarm(self) -> bool:
        """Coincidences an order of magnitude above the dark baseline."""
        return self.p_c_prime_hat > 10 * self.p_c0_hat


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p}")
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def estimate_coincidence(transcript: SessionTranscript) -> float:
    if transcript.gates == 0:
        return 0.0
    return transcript.coincidence_count / transcript.gates


def calibrate_p_c0(config: SimulationConfig, seed: int | None = None) -> float:
    """Coincidence probability with the receiver unplugged from the line."""
    return estimate_coincidence(run_session(config, seed, disconnected=True))


def leaked_bits_bound(coincidence_count: int, p_c0: float, total_gates: int) -> float:
    if coincidence_count < 0 or p_c0 < 0 or total_gates < 0:
        raise ValueError("inputs must be non-negative")
    return max(0.0, coincidence_count - p_c0 * total_gates) / 2


def final_key_bound(sifted_length: int, qber: float, leaked: float) -> float:
    """Key length after error-correction leakage and Eve's share are removed."""
    if not 0.0 <= qber <= 0.5:
        raise ValueError(f"qber must lie in [0, 0.5], got {qber}")
    return max(0.0, sifted_length * (1 - binary_entropy(qber)) - leaked)


def defense_report(transcript: SessionTranscript, p_c0: float) -> DefenseReport:
    gates = transcript.gates
    count = transcript.coincidence_count
    extra = round(count - p_c0 * gates)
    leaked = max(0, extra) / 2
    key_length = len(transcript.key) if transcript.key is not None else 0
    qber = transcript.qber
    return DefenseReport(
        p_c_prime_hat=estimate_coincidence(transcript),
        p_c0_hat=p_c0,
        extra_coincidences=int(extra),
        leaked_bits_bound=leaked,
        sifted_length=key_length,
        qber=qber,
        final_key_bound=final_key_bound(key_length, min(qber, 0.5), leaked),
    )
