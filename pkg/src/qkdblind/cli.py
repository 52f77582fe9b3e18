"""Command-line driver: presets, batches of seeded sessions, CSV/JSON output."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .config import (
    EXIT_IO,
    EXIT_OK,
    FORMATS,
    PRESETS,
    ConfigError,
    SimulationConfig,
    load_config,
)
from .defense import DefenseReport, calibrate_p_c0, defense_report
from .protocol import eve_knowledge_fraction, run_session
from .rng import session_seed

log = logging.getLogger("qkdblind")

SCHEMA_LINE = "# schema=1"
SESSION_COLUMNS = (
    ("session", "seed", "gates")
    + DefenseReport.columns()
    + ("coincidences", "sifted_rate", "eve_knowledge_fraction", "eve_delivered", "eve_known_sifted")
)
INT_COLUMNS = frozenset(
    {"session", "seed", "gates", "extra_coincidences", "sifted_length", "coincidences",
     "eve_delivered", "eve_known_sifted"}
)  # fmt: skip
SUMMARY_METRICS = (
    "sifted_rate",
    "qber",
    "p_c_prime_hat",
    "eve_knowledge_fraction",
    "leaked_bits_bound",
    "final_key_bound",
)


def run_one(config: SimulationConfig, index: int) -> dict:
    """One session plus its dark calibration, flattened to a CSV row."""
    seed = session_seed(config.seed, index)
    transcript = run_session(config, seed)
    report = defense_report(transcript, calibrate_p_c0(config, seed))
    n = transcript.gates
    known = transcript.sifted.eve_knows & (transcript.sifted.eve_bit == transcript.sifted.bob_bit)
    row = {"session": index, "seed": seed, "gates": n}
    row.update(report.as_dict())
    row["coincidences"] = transcript.coincidence_count
    row["sifted_rate"] = len(transcript.sifted) / n if n else 0.0
    row["eve_knowledge_fraction"] = eve_knowledge_fraction(transcript)
    row["eve_delivered"] = int(np.count_nonzero(transcript.eve_delivered))
    row["eve_known_sifted"] = int(np.count_nonzero(known))
    return row


def run_sessions(config: SimulationConfig) -> list[dict]:
    indices = range(config.sessions)
    if config.jobs > 1 and config.sessions > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            return list(pool.map(run_one, [config] * config.sessions, indices))
    return [run_one(config, k) for k in indices]


def summarize(rows: list[dict]) -> dict:
    metrics = {}
    for name in SUMMARY_METRICS:
        values = [float(r[name]) for r in rows]
        metrics[name] = {
            "mean": statistics.fmean(values) if values else None,
            "std": statistics.pstdev(values) if values else None,
        }
    return metrics


def config_summary(config: SimulationConfig) -> dict:
    attack = config.resolved_attack
    return {
        "preset": config.name,
        "gates": config.gates,
        "sessions": config.sessions,
        "seed": config.seed,
        "receiver": config.architecture.value,
        "receiver_rng": config.bob_rng.value,
        "detectors": asdict(config.detectors),
        "channel": asdict(config.channel),
        "attack": {
            "strategy": attack.label(),
            "p_cw": attack.p_cw,
            "p_pulse": attack.p_pulse,
            "prudent_noise": attack.prudent_noise,
            "noise_rate": attack.noise_rate,
        },
        "qber_sample": config.qber_sample,
    }


def csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(SCHEMA_LINE + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SESSION_COLUMNS)
    for row in rows:
        writer.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in SESSION_COLUMNS])
    return buf.getvalue()


def read_sessions_csv(path: str | Path) -> list[dict]:
    """Parse a sessions CSV back into typed rows."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != SCHEMA_LINE:
        raise ValueError(f"{path}: missing {SCHEMA_LINE!r} header")
    rows = []
    for raw in csv.DictReader(lines[1:]):
        rows.append({k: int(v) if k in INT_COLUMNS else float(v) for k, v in raw.items()})
    return rows


def write_outputs(out: Path, fmt: str, rows: list[dict], summary: dict) -> list[Path]:
    files = {"summary.json": json.dumps(summary, indent=2, sort_keys=True) + "\n"}
    if fmt in ("csv", "both"):
        files["sessions.csv"] = csv_text(rows)
    if fmt in ("json", "both"):
        files["sessions.jsonl"] = "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
    written: list[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            path = out / name
            tmp = path.with_name(path.name + ".tmp")
            tmp.write_text(text)
            written.append(tmp)
            tmp.replace(path)
            written[-1] = path
    except OSError:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return written


def run_and_report(config: SimulationConfig, compare: SimulationConfig | None = None) -> dict:
    rows = run_sessions(config)
    summary = {"config": config_summary(config), "metrics": summarize(rows)}
    if compare is not None:
        other = summarize(run_sessions(compare))["sifted_rate"]["mean"]
        mine = summary["metrics"]["sifted_rate"]["mean"]
        summary["compare"] = {
            "preset": compare.name,
            "sifted_rate": other,
            "sifted_rate_ratio": other / mine if other is not None and mine else None,
        }
    write_outputs(config.out or Path("results"), config.format, rows, summary)
    return summary


def format_summary(summary: dict) -> str:
    cfg = summary["config"]
    lines = [
        f"preset={cfg['preset']} receiver={cfg['receiver']} attack={cfg['attack']['strategy']} "
        f"gates={cfg['gates']} sessions={cfg['sessions']} seed={cfg['seed']}"
    ]
    for name, stats in summary["metrics"].items():
        if stats["mean"] is None:
            lines.append(f"  {name:<24} n/a")
        else:
            lines.append(f"  {name:<24} {stats['mean']:.6g} +- {stats['std']:.3g}")
    if "compare" in summary:
        cmp = summary["compare"]
        ratio = cmp["sifted_rate_ratio"]
        shown = "n/a" if ratio is None else f"{ratio:.4f}"
        lines.append(f"  sifted-rate ratio ({cmp['preset']} / {cfg['preset']}): {shown}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qkdblind",
        description="Simulate detector-blinding attacks on BB84 receivers.",
    )
    p.add_argument("--preset", help=f"one of: {', '.join(PRESETS)}")
    p.add_argument("--config", type=Path, help="key-value config file")
    p.add_argument("--gates", type=int)
    p.add_argument("--sessions", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--receiver", choices=("passive", "pem", "mirror"))
    p.add_argument("--attack", help="none|intercept|blind|blind-partial:<f>[:<burst>]|rng-control")
    p.add_argument("--out", type=Path, help="output directory (default ./results)")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--jobs", type=int, help="worker processes for independent sessions")
    p.add_argument("--compare", metavar="PRESET", help="also run PRESET and print the sifted-rate ratio")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def flag_layer(args: argparse.Namespace) -> dict[str, dict[str, object]]:
    layer: dict[str, dict[str, object]] = {}
    run = {k: getattr(args, k) for k in ("gates", "sessions", "seed", "out", "format", "jobs")}
    layer["run"] = {k: v for k, v in run.items() if v is not None}
    if args.receiver:
        layer["receiver"] = {"architecture": args.receiver}
    if args.attack:
        layer["attack"] = {"strategy": args.attack}
    return layer


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    flags = flag_layer(args)
    try:
        config = load_config(args.preset, args.config, flags)
        compare = None
        if args.compare:
            run = {k: v for k, v in flags["run"].items() if k in ("gates", "sessions", "seed")}
            compare = load_config(args.compare, overrides={"run": run})
    except ConfigError as exc:
        print(f"qkdblind: config error: {exc}", file=sys.stderr)
        return exc.exit_code
    log.info("running %d session(s) of %d gates", config.sessions, config.gates)
    try:
        summary = run_and_report(config, compare)
    except OSError as exc:
        print(f"qkdblind: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(format_summary(summary))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
