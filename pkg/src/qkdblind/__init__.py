"""Monte Carlo simulation of detector-blinding attacks on BB84 receivers."""

from .alice import ChannelConfig, PreparedQubit, prepare, transmit
from .config import SimulationConfig, load_config, preset
from .defense import (
    DefenseReport,
    binary_entropy,
    calibrate_p_c0,
    defense_report,
    estimate_coincidence,
    final_key_bound,
    leaked_bits_bound,
)
from .detector import (
    DetectorConfig,
    DetectorState,
    coincidence_probability,
    detect,
    detection_probability,
)
from .eve import AttackKind, AttackStrategy, Eve, EveGateRecord, faked_pulse_window, intercept
from .optics import (
    Architecture,
    Basis,
    GateIllumination,
    LightPulse,
    Polarization,
    PulseKind,
    route,
    split_fraction,
)
from .protocol import SessionTranscript, eve_knowledge_fraction, estimate_qber, run_session, sift
from .receiver import Coincidence, NoClick, Receiver, SingleClick, classify, process_gate
from .rng import Mode, ModelingViolation, RandomSource

__version__ = "0.1.0"
