"""Command line entry point.

Subcommands::

    hybridcloud bench    [--config run.json] [--profile test2] [--seed N] --out DIR
    hybridcloud analyze  MODEL.json [--out DIR]
    hybridcloud fit      TRACE.csv --out DIR [--center]
    hybridcloud simulate MODEL.json CONTROLS.csv --out DIR [--x0 1,0]
    hybridcloud step     MODEL.json --out DIR [--channel 0] [--horizon 200]

Exit codes: 0 success, 2 bad input (usage, config, parse errors), 3 numerical
failure (non-convergence, insufficient excitation, horizon/cap errors).
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import formats
from .controller import ThresholdPolicy, detect_oscillation
from .errors import (CapExceededError, ConvergenceError, FormatError, HorizonError,
                     InsufficientExcitationError)
from .hybridsim import Controlled, build_corpus, run_benchmark
from .profiles import PROFILE_NAMES, load_profile
from .statespace import (classify_stability, is_controllable, is_observable, simulate,
                         spectral_radius, step_response)
from .sysid import fit_linear, center, simulator_trace

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

NUMERIC_ERRORS = (ConvergenceError, InsufficientExcitationError, HorizonError, CapExceededError,
                  np.linalg.LinAlgError)


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    profile: str
    topology_path: Path | None
    corpus_seed: int
    corpus_size: int
    batches: tuple
    out: Path | None
    controlled: ThresholdPolicy | None = None


def _write_outputs(out_dir: Path, files: dict):
    """Write all files or none: stage as temp files, then rename."""
    out_dir.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            tmp = out_dir / f".{name}.tmp"
            tmp.write_text(text)
            staged.append((tmp, out_dir / name))
        for tmp, final in staged:
            os.replace(tmp, final)
    finally:
        for tmp, _ in staged:
            if tmp.exists():
                tmp.unlink()


def load_run_config(args) -> RunConfig:
    doc, base = {}, Path.cwd()
    if args.config:
        try:
            doc, _ = formats.read_json(args.config)
        except FormatError as exc:
            raise ConfigError(str(exc))
        base = Path(args.config).resolve().parent
    known = {"profile", "topology", "corpus_seed", "corpus_size", "batches", "out", "controlled"}
    for key in doc:
        if key not in known:
            raise ConfigError(f"unknown config key '{key}'")

    profile_name = args.profile or doc.get("profile", "test2")
    if profile_name not in PROFILE_NAMES:
        raise ConfigError(f"unknown profile '{profile_name}' (choose {', '.join(PROFILE_NAMES)})")
    profile = load_profile(profile_name)

    topology_path = None
    if doc.get("topology") is not None:
        topology_path = (base / doc["topology"]).resolve()
        if not topology_path.exists():
            raise ConfigError(f"topology file not found: {topology_path}")

    seed = args.seed if args.seed is not None else doc.get("corpus_seed", profile.corpus_seed)
    size = doc.get("corpus_size", profile.corpus_size)
    for key, value in (("corpus_seed", seed), ("corpus_size", size)):
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise ConfigError(f"'{key}' must be a non-negative integer")
    if size < 1:
        raise ConfigError("'corpus_size' must be >= 1")

    batches = doc.get("batches", list(profile.batches))
    if not isinstance(batches, list) or not batches:
        raise ConfigError("'batches' must be a non-empty list")
    if any(isinstance(b, bool) or not isinstance(b, int) or b < 1 for b in batches):
        raise ConfigError("'batches' entries must be positive integers")
    if max(batches) > size:
        raise ConfigError(f"batch {max(batches)} exceeds corpus_size {size}")

    out = args.out or doc.get("out")
    if out is None:
        raise ConfigError("no output directory (use --out or 'out' in config)")
    out = Path(out) if args.out else (base / out)

    controlled = None
    if doc.get("controlled") is not None:
        try:
            controlled = formats.policy_from_dict(doc["controlled"])
        except FormatError as exc:
            raise ConfigError(f"controlled: {exc}")
    return RunConfig(profile_name, topology_path, seed, size, tuple(batches), out, controlled)


def cmd_bench(args) -> int:
    cfg = load_run_config(args)
    profile = load_profile(cfg.profile)
    try:
        topology = formats.read_topology(cfg.topology_path) if cfg.topology_path else profile.topology
    except FormatError as exc:
        raise ConfigError(str(exc))
    corpus = build_corpus(cfg.corpus_seed, cfg.corpus_size, profile.n_authors)

    local = run_benchmark(topology, corpus, "local", cfg.batches)
    hybrid = run_benchmark(topology, corpus, "hybrid", cfg.batches)
    files = {
        "local.csv": formats.bench_csv(local),
        "hybrid.csv": formats.bench_csv(hybrid),
        "ratio.csv": formats.ratio_csv(formats.ratio_rows(local, hybrid)),
    }
    if cfg.controlled is not None:
        rows = run_benchmark(topology, corpus, Controlled(cfg.controlled, "cpu_load"), cfg.batches)
        files["controlled.csv"] = formats.bench_csv(rows)
    files["analysis.csv"] = _trace_analysis_csv(topology, corpus, cfg.corpus_seed)
    _write_outputs(cfg.out, files)
    for name in files:
        print(cfg.out / name)
    return EXIT_OK


def _trace_analysis_csv(topology, corpus, seed):
    """Identify the controlled-routing trace and summarize the fitted model."""
    trace = simulator_trace(topology, corpus, seed=seed)
    fit = fit_linear(center(trace))
    model = fit.model
    cpu_row = np.array([[1.0, 0.0, 0.0]])
    _, response = step_response(model, 0)
    rows = [
        ("spectral_radius", formats.fmt(spectral_radius(model.A))),
        ("stability", classify_stability(model.A).value),
        ("controllable", str(is_controllable(model)).lower()),
        ("observable_from_cpu_load", str(is_observable(model, cpu_row)).lower()),
        ("step_response", response.value),
        ("cpu_load_oscillation", detect_oscillation(trace, 0).value),
        ("residual_rms", formats.fmt(fit.residual_rms)),
    ]
    return formats.table_csv(["quantity", "value"], [list(r) for r in rows])


def analyze_model(model, C=None, channel=0):
    rho = spectral_radius(model.A)
    _, response = step_response(model, channel)
    rows = [
        ("spectral_radius", formats.fmt(rho)),
        ("stability", classify_stability(model.A).value),
        ("controllable", str(is_controllable(model)).lower()),
        ("observable", str(is_observable(model, C)).lower() if C is not None else "n/a"),
        ("step_response", response.value),
    ]
    return rows


def cmd_analyze(args) -> int:
    model, C = formats.read_model(args.model)
    rows = analyze_model(model, C)
    for key, value in rows:
        print(f"{key}: {value}")
    if args.out:
        _write_outputs(Path(args.out), {"analysis.csv": formats.table_csv(
            ["quantity", "value"], [list(r) for r in rows])})
    return EXIT_OK


def cmd_fit(args) -> int:
    traj = formats.read_trajectory(args.trace)
    if args.center:
        traj = center(traj)
    result = fit_linear(traj)
    _write_outputs(Path(args.out), {
        "model.json": formats.dumps(formats.model_to_dict(result.model)),
        "fit_report.csv": formats.fit_report_csv(result, traj.horizon),
    })
    print(f"residual_rms: {formats.fmt(result.residual_rms)}")
    print(f"condition_indicator: {formats.fmt(result.condition_indicator)}")
    return EXIT_OK


def _parse_x0(text, n):
    if text is None:
        return np.zeros(n)
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise FormatError(f"--x0 must be comma-separated numbers, got {text!r}", key="x0")
    if len(values) != n:
        raise FormatError(f"--x0 needs {n} values, got {len(values)}", key="x0")
    return np.array(values)


def cmd_simulate(args) -> int:
    model, _ = formats.read_model(args.model)
    controls = formats.read_controls(args.controls, model.m)
    traj = simulate(model, _parse_x0(args.x0, model.n), controls)
    _write_outputs(Path(args.out), {"trajectory.csv": formats.trajectory_csv(traj)})
    print(f"steps: {traj.horizon}, violations: {len(traj.violations)}")
    return EXIT_OK


def cmd_step(args) -> int:
    model, _ = formats.read_model(args.model)
    traj, response = step_response(model, args.channel, args.horizon)
    print(response.value)
    if args.out:
        _write_outputs(Path(args.out), {"step.csv": formats.trajectory_csv(traj)})
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="hybridcloud", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="local vs hybrid retrieval benchmark")
    p.add_argument("--config", help="run config JSON")
    p.add_argument("--profile", choices=PROFILE_NAMES, help="calibration profile")
    p.add_argument("--seed", type=int, help="corpus seed")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("analyze", help="stability/controllability/step analysis of a model")
    p.add_argument("model")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit", help="identify (A, B) from a trajectory CSV")
    p.add_argument("trace")
    p.add_argument("--out", required=True)
    p.add_argument("--center", action="store_true", help="subtract means before fitting")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="simulate a model over a controls CSV")
    p.add_argument("model")
    p.add_argument("controls")
    p.add_argument("--out", required=True)
    p.add_argument("--x0", help="initial state, comma separated (default zeros)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("step", help="unit step response and its class")
    p.add_argument("model")
    p.add_argument("--out")
    p.add_argument("--channel", type=int, default=0)
    p.add_argument("--horizon", type=int, default=200)
    p.set_defaults(func=cmd_step)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FormatError, KeyError, ValueError) as exc:
        if isinstance(exc, NUMERIC_ERRORS):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
