"""Simulation configuration, presets and the key-value file format.

File grammar (INI style, ``#`` or ``;`` comments)::

    [run]        preset, gates, sessions, seed, qber_sample, out, format, jobs
    [receiver]   architecture = passive | pem | mirror
                 rng = private | compromised
    [detectors]  efficiency, dark_prob, blind_threshold, click_threshold,
                 superlinear_exponent
    [channel]    eta (shorthand: eta_ae = eta, eta_eb = 1), eta_ae, eta_eb
    [attack]     strategy = none | intercept | blind | blind-partial:<f>[:<burst>]
                            | rng-control
                 fraction, burst, p_cw, p_pulse, prudent_noise, noise_rate

Layering, lowest to highest priority: built-in defaults, preset, file,
command-line flags.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from pathlib import Path

from .alice import ChannelConfig
from .detector import DetectorConfig
from .eve import AttackKind, AttackStrategy
from .optics import Architecture
from .rng import DEFAULT_SEED, Mode

EXIT_OK = 0
EXIT_RANGE = 2
EXIT_IO = 3
EXIT_UNKNOWN_KEY = 4
EXIT_SYNTAX = 5

DEFAULT_GATES = 1_000_000
# partial-attack preset: Eve blinds in contiguous windows of this many gates
PARTIAL_BURST = 1000
FORMATS = ("csv", "json", "both")


class ConfigError(Exception):
    exit_code = EXIT_RANGE


class UnknownKeyError(ConfigError):
    exit_code = EXIT_UNKNOWN_KEY


class ConfigSyntaxError(ConfigError):
    exit_code = EXIT_SYNTAX


class ConfigFileMissing(ConfigError):
    exit_code = EXIT_IO


IDEAL_DETECTORS = DetectorConfig(efficiency=1.0, dark_prob=0.0)


@dataclass(frozen=True)
class SimulationConfig:
    gates: int = DEFAULT_GATES
    sessions: int = 1
    seed: int = DEFAULT_SEED
    architecture: Architecture = Architecture.PASSIVE_BS
    detectors: DetectorConfig = IDEAL_DETECTORS
    channel: ChannelConfig = ChannelConfig()
    attack: AttackStrategy = AttackStrategy()
    bob_rng: Mode = Mode.PRIVATE
    qber_sample: float = 0.1
    out: Path | None = None
    format: str = "both"
    jobs: int = 1
    name: str = "custom"

    def __post_init__(self):
        check = _Checker()
        check.integer("run.gates", self.gates, lo=0)
        check.integer("run.sessions", self.sessions, lo=0)
        check.integer("run.seed", self.seed, lo=0, hi=2**64 - 1)
        check.integer("run.jobs", self.jobs, lo=1)
        if not 0.0 < self.qber_sample <= 1.0:
            check.fail("run.qber_sample", f"must lie in (0, 1], got {self.qber_sample}")
        if self.format not in FORMATS:
            check.fail("run.format", f"must be one of {', '.join(FORMATS)}, got {self.format!r}")
        if self.attack.kind is AttackKind.RNG_CONTROL:
            if not self.architecture.uses_basis_bit:
                check.fail("attack.strategy", "rng-control needs a receiver with a basis RNG")
            elif self.bob_rng is not Mode.COMPROMISED:
                check.fail(
                    "attack.strategy",
                    "rng-control needs receiver.rng = compromised "
                    "(a private RNG cannot be controlled)",
                )
        check.raise_if_any()

    @property
    def resolved_attack(self) -> AttackStrategy:
        return self.attack.resolve(self.architecture, self.detectors)

    def evolve(self, **changes) -> SimulationConfig:
        return replace(self, **changes)


class _Checker:
    def __init__(self):
        self.problems: list[str] = []

    def fail(self, key: str, message: str) -> None:
        self.problems.append(f"{key}: {message}")

    def integer(self, key, value, lo=None, hi=None):
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(key, f"must be an integer, got {value!r}")
        elif (lo is not None and value < lo) or (hi is not None and value > hi):
            self.fail(key, f"out of range, got {value}")

    def raise_if_any(self):
        if self.problems:
            raise ConfigError("; ".join(self.problems))


def _preset_table() -> dict[str, dict[str, dict[str, object]]]:
    ideal = {"efficiency": 1.0, "dark_prob": 0.0}
    return {
        "baseline": {"receiver": {"architecture": "passive"}, "detectors": ideal},
        "fig1a-blind": {
            "receiver": {"architecture": "passive"},
            "detectors": ideal,
            "attack": {"strategy": "blind"},
        },
        "fig1b-blind": {
            "receiver": {"architecture": "pem"},
            "detectors": ideal,
            "attack": {"strategy": "blind"},
        },
        "fig1c-blind": {
            "receiver": {"architecture": "mirror"},
            "detectors": ideal,
            "attack": {"strategy": "blind"},
        },
        "intercept": {
            "receiver": {"architecture": "passive"},
            "detectors": ideal,
            "attack": {"strategy": "intercept"},
        },
        "rng-control": {
            "receiver": {"architecture": "mirror", "rng": "compromised"},
            "detectors": ideal,
            "attack": {"strategy": "rng-control"},
        },
        # CW trickle of 10 photons per lit detector; the lit pair stays
        # blinded at that level, so only freshly switched detectors fire
        "weak-cw": {
            "receiver": {"architecture": "mirror"},
            "detectors": {"efficiency": 0.25, "dark_prob": 1e-5, "blind_threshold": 10.0},
            "attack": {"strategy": "blind", "p_cw": 20.0, "p_pulse": 0.0},
        },
    }


PRESETS = tuple(_preset_table()) + ("partial:<f>",)


def preset_layer(name: str) -> dict[str, dict[str, object]]:
    table = _preset_table()
    if name in table:
        layer = table[name]
    elif name.startswith("partial:"):
        fraction, _, burst = name.partition(":")[2].partition(":")
        layer = {
            "receiver": {"architecture": "mirror"},
            "detectors": {"efficiency": 1.0, "dark_prob": 0.0},
            "attack": {
                "strategy": "blind-partial",
                "fraction": fraction,
                "burst": burst or PARTIAL_BURST,
            },
        }
    else:
        raise ConfigError(f"run.preset: unknown preset {name!r} (known: {', '.join(PRESETS)})")
    layer = {section: dict(values) for section, values in layer.items()}
    layer.setdefault("run", {})["preset"] = name
    return layer


SCHEMA: dict[str, tuple[str, ...]] = {
    "run": ("preset", "gates", "sessions", "seed", "qber_sample", "out", "format", "jobs"),
    "receiver": ("architecture", "rng"),
    "detectors": (
        "efficiency",
        "dark_prob",
        "blind_threshold",
        "click_threshold",
        "superlinear_exponent",
    ),
    "channel": ("eta", "eta_ae", "eta_eb"),
    "attack": ("strategy", "fraction", "burst", "p_cw", "p_pulse", "prudent_noise", "noise_rate"),
}


def read_config_file(path: str | Path) -> dict[str, dict[str, str]]:
    path = Path(path)
    if not path.is_file():
        raise ConfigFileMissing(f"config file not found: {path}")
    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#", ";"), interpolation=None, default_section="__none__"
    )
    try:
        parser.read_string(path.read_text(), source=str(path))
    except configparser.Error as exc:
        raise ConfigSyntaxError(f"{path}: {exc}") from None
    except OSError as exc:
        raise ConfigFileMissing(f"cannot read {path}: {exc}") from None
    layer = {section: dict(parser[section]) for section in parser.sections()}
    check_keys(layer, source=str(path))
    return layer


def check_keys(layer, source="config"):
    for section, values in layer.items():
        if section not in SCHEMA:
            raise UnknownKeyError(f"{source}: unknown section [{section}]")
        for key in values:
            if key not in SCHEMA[section]:
                raise UnknownKeyError(f"{source}: unknown key {section}.{key}")


def merge(*layers) -> dict[str, dict[str, object]]:
    merged: dict[str, dict[str, object]] = {}
    for layer in layers:
        for section, values in layer.items():
            merged.setdefault(section, {}).update(values)
    return merged


def _num(layer, key, kind=float):
    section, name = key.split(".")
    raw = layer.get(section, {}).get(name)
    if raw is None:
        return None
    try:
        if kind is int:
            value = float(raw) if isinstance(raw, str) else raw
            if isinstance(value, float):
                if not value.is_integer():
                    raise ValueError
                value = int(value)
            return int(value)
        if kind is bool:
            if isinstance(raw, bool):
                return raw
            text = str(raw).strip().lower()
            if text in ("1", "true", "yes", "on"):
                return True
            if text in ("0", "false", "no", "off"):
                return False
            raise ValueError
        return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected {kind.__name__}, got {raw!r}") from None


def build_config(layer: dict[str, dict[str, object]]) -> SimulationConfig:
    """Validate a merged layer and produce a :class:`SimulationConfig`."""
    check_keys(layer)
    kwargs: dict[str, object] = {}
    for key, kind in (("gates", int), ("sessions", int), ("seed", int), ("jobs", int)):
        value = _num(layer, f"run.{key}", kind)
        if value is not None:
            kwargs[key] = value
    if (q := _num(layer, "run.qber_sample")) is not None:
        kwargs["qber_sample"] = q
    run = layer.get("run", {})
    if run.get("out") is not None:
        kwargs["out"] = Path(str(run["out"]))
    if run.get("format") is not None:
        kwargs["format"] = str(run["format"])
    kwargs["name"] = str(run.get("preset", "custom"))

    receiver = layer.get("receiver", {})
    try:
        kwargs["architecture"] = Architecture(str(receiver.get("architecture", "passive")))
    except ValueError:
        raise ConfigError(
            f"receiver.architecture: must be passive, pem or mirror, got {receiver['architecture']!r}"
        ) from None
    try:
        kwargs["bob_rng"] = Mode(str(receiver.get("rng", "private")))
    except ValueError:
        raise ConfigError(
            f"receiver.rng: must be private or compromised, got {receiver['rng']!r}"
        ) from None

    det = {}
    for name in SCHEMA["detectors"]:
        if (value := _num(layer, f"detectors.{name}")) is not None:
            det[name] = value
    kwargs["detectors"] = _construct("detectors", DetectorConfig, det)

    channel = {}
    eta = _num(layer, "channel.eta")
    if eta is not None:
        if "eta_ae" in layer.get("channel", {}):
            raise ConfigError("channel.eta: give either eta or eta_ae, not both")
        channel = {"eta_ae": eta, "eta_eb": 1.0}
    for name in ("eta_ae", "eta_eb"):
        if (value := _num(layer, f"channel.{name}")) is not None:
            channel[name] = value
    kwargs["channel"] = _construct("channel", ChannelConfig, channel)

    kwargs["attack"] = _attack(layer.get("attack", {}), layer)
    try:
        return SimulationConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _construct(section, cls, values):
    try:
        return cls(**values)
    except ValueError as exc:
        raise ConfigError(f"{section}: {exc}") from None


def _attack(values, layer) -> AttackStrategy:
    text = str(values.get("strategy", "none"))
    try:
        strategy = AttackStrategy.parse(text)
    except ValueError as exc:
        if text != "blind-partial":
            raise ConfigError(f"attack.strategy: {exc}") from None
        strategy = AttackStrategy(AttackKind.BLIND_PARTIAL)
    changes: dict[str, object] = {}
    has_inline = ":" in text
    if not has_inline:
        if (f := _num(layer, "attack.fraction")) is not None:
            changes["fraction"] = f
        if (b := _num(layer, "attack.burst", int)) is not None:
            changes["burst"] = b
    for name in ("p_cw", "p_pulse", "noise_rate"):
        if (value := _num(layer, f"attack.{name}")) is not None:
            changes[name] = value
    if (flag := _num(layer, "attack.prudent_noise", bool)) is not None:
        changes["prudent_noise"] = flag
    try:
        return replace(strategy, **changes)
    except ValueError as exc:
        raise ConfigError(f"attack: {exc}") from None


def load_config(
    preset: str | None = None,
    path: str | Path | None = None,
    overrides: dict[str, dict[str, object]] | None = None,
) -> SimulationConfig:
    """Defaults, then preset, then file, then explicit overrides."""
    file_layer = read_config_file(path) if path is not None else {}
    overrides = overrides or {}
    check_keys(overrides, source="flags")
    name = preset or file_layer.get("run", {}).get("preset")
    base = preset_layer(str(name)) if name else {}
    return build_config(merge(base, file_layer, overrides))


def preset(name: str, **run) -> SimulationConfig:
    """Config for a named preset with optional ``[run]``-level overrides."""
    return load_config(preset=name, overrides={"run": run} if run else None)
