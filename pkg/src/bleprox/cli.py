"""Command-line front end: ``bleprox {simulate,smooth,train,evaluate,report,build-generative}``.

Every command accepts ``--config FILE`` (JSON of option names to values);
explicit flags override the file. Exit codes: 0 success, 2 bad
configuration, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import shutil
import sys
from pathlib import Path

import numpy as np

from .bayesopt import BayesOptAborted
from .calibration import build_from_files
from .errors import ConfigError, DataError, NumericError
from .evaluation import evaluate_scenarios, write_evaluation
from .ingest import TransformMode, load_manifest, parse_scenario
from .models import gaussian_band, known_device_model, load_model, save_model
from .risk import scenario_risk
from .seeds import derive_int
from .simulate import CIRCLE_WALK, proximity_corpus, random_walk_experiment, two_class_corpus, write_corpus
from .training import train_discriminative
from .ukf import GaussBelief, UtParams, smooth

log = logging.getLogger("bleprox")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def _add_shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file of option defaults")
    p.add_argument("--mode", choices=["lognormal", "gaussian"], default=None)
    p.add_argument("--dt", type=float, default=None, help="time step in seconds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", type=Path, default=None, help="model JSON")
    p.add_argument("--out", type=Path, required=False, default=None, help="output directory")


def _add_smoother(p: argparse.ArgumentParser) -> None:
    p.add_argument("--q", type=float, default=None, help="override transition variance")
    p.add_argument("--init-mean", type=float, default=2.0)
    p.add_argument("--init-var", type=float, default=4.0)
    p.add_argument("--ut-alpha", type=float, default=1.0)
    p.add_argument("--ut-beta", type=float, default=2.0)
    p.add_argument("--ut-kappa", type=float, default=2.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bleprox", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write synthetic scenario CSVs and a manifest")
    _add_shared(p)
    p.add_argument("--kind", choices=["walk", "proximity", "twoclass"], default="walk")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--q-sim", type=float, default=None)
    p.add_argument("--radius", type=float, default=CIRCLE_WALK["radius"])
    p.add_argument("--init", type=float, default=CIRCLE_WALK["init"])
    p.add_argument("--dropout", type=float, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("smooth", help="run the smoother over scenarios")
    _add_shared(p)
    _add_smoother(p)
    p.add_argument("--manifest", type=Path)
    p.add_argument("--input", type=Path, help="single capture CSV")
    p.add_argument("--truth", type=Path, help="truth sidecar for --input")
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("train", help="fit a discriminative model")
    _add_shared(p)
    _add_smoother(p)
    p.add_argument("--manifest", type=Path)
    p.add_argument("--form", choices=["scaled", "loglinear"], default="scaled")
    p.add_argument("--objective", choices=["proximity", "risk"], default="proximity")
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--init-points", type=int, default=10)
    p.add_argument("--rounds", type=int, default=100)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score labelled scenarios and compute AUC")
    _add_shared(p)
    _add_smoother(p)
    p.add_argument("--manifest", type=Path)
    p.add_argument("--positive", default="H1", help="label of the positive class")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="collate plot-ready data series")
    _add_shared(p)
    p.add_argument("--evaluation", type=Path)
    p.add_argument("--smooth-dir", type=Path)
    p.add_argument("--d-min", type=float, default=0.1)
    p.add_argument("--d-max", type=float, default=10.0)
    p.add_argument("--points", type=int, default=200)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("build-generative", help="assemble a generative model from calibration data")
    _add_shared(p)
    p.add_argument("--calibration", type=Path)
    p.add_argument("--shares", type=Path)
    p.add_argument("--respondents", type=int, default=2123)
    p.add_argument("--antenna-epsilon", type=float)
    p.add_argument("--context-dir", type=Path)
    p.add_argument("--q", type=float, default=0.09)
    p.set_defaults(func=cmd_build_generative)
    return parser


def _require(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise ConfigError(f"--{n.replace('_', '-')} is required")


def _ut(args) -> UtParams:
    return UtParams(args.ut_alpha, args.ut_beta, args.ut_kappa)


def _init(args) -> GaussBelief:
    return GaussBelief(args.init_mean, args.init_var)


def _model(args, default_mode: TransformMode | None = None):
    """Model from ``--model``, else the known-device fit for the mode."""
    if args.model is not None:
        if not args.model.exists():
            raise ConfigError(f"model file {args.model} does not exist")
        model = load_model(args.model)
        if args.mode is not None and TransformMode.parse(args.mode) is not model.mode:
            raise ConfigError(f"--mode {args.mode} conflicts with model mode {model.mode.value}")
        return model
    return known_device_model(args.mode or default_mode or TransformMode.LOG_NEG_RSSI)


def _scenarios(args):
    if args.manifest is not None:
        if not args.manifest.exists():
            raise ConfigError(f"manifest {args.manifest} does not exist")
        manifest = load_manifest(args.manifest)
        if args.mode is not None and TransformMode.parse(args.mode) is not manifest.mode:
            raise ConfigError("--mode conflicts with the manifest's mode")
        return manifest.load(), manifest.mode
    if getattr(args, "input", None) is not None:
        mode = TransformMode.parse(args.mode or "lognormal")
        s = parse_scenario(
            args.input, delta_t=args.dt or 1.0, mode=mode, scenario_id=args.input.stem,
            truth=args.truth,
        )
        return [s], mode
    raise ConfigError("--manifest (or --input) is required")


def cmd_simulate(args) -> None:
    _require(args, "out")
    mode = TransformMode.parse(args.mode or "lognormal")
    model = _model(args, mode)
    dt = args.dt or 1.0
    if args.kind == "walk":
        overrides = {k: v for k, v in {
            "steps": args.steps, "q_sim": args.q_sim, "dropout": args.dropout,
            "radius": args.radius, "init": args.init,
        }.items() if v is not None}
        scenarios = [
            random_walk_experiment(mode, seed=derive_int(args.seed, "scenario", i), model=model, **overrides)
            for i in range(args.count)
        ]
        for i, s in enumerate(scenarios):
            s.id = f"walk_{i}"
    elif args.kind == "proximity":
        scenarios = proximity_corpus(
            model, steps=args.steps or 1000, q_sim=args.q_sim or model.q or 0.02,
            dropout=0.3 if args.dropout is None else args.dropout, seed=args.seed,
        )
    else:
        scenarios = two_class_corpus(
            model, n=max(args.count, 2), steps=args.steps or 600, q_sim=args.q_sim or 0.0005,
            dropout=0.3 if args.dropout is None else args.dropout, seed=args.seed,
        )
    for s in scenarios:
        s.delta_t = dt
    path = write_corpus(scenarios, args.out)
    print(path)


def cmd_smooth(args) -> None:
    _require(args, "out")
    scenarios, mode = _scenarios(args)
    model = _model(args, mode)
    args.out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for s in scenarios:
        res = smooth(s, model, q=args.q, init=_init(args), params=_ut(args))
        res.write_csv(args.out / f"{s.id}_smooth.csv")
        risk = scenario_risk(res.smoothed_mean, s.delta_t)
        with open(args.out / f"{s.id}_risk.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "risk", "cumulative_risk", "high_risk"])
            for t, (r, c, m) in enumerate(
                zip(risk.per_step, np.cumsum(risk.per_step), res.smoothed_mean), start=1
            ):
                w.writerow([t, repr(float(r)), repr(float(c)), int(m < 1.0)])
        summary[s.id] = {
            "steps": s.T,
            "imputed": int(res.imputed.sum()),
            "total_risk": risk.total,
            "mean_distance": float(np.mean(res.smoothed_mean)),
        }
    (args.out / "smooth_summary.json").write_text(json.dumps(summary, indent=2) + "\n")


def cmd_train(args) -> None:
    _require(args, "out")
    scenarios, mode = _scenarios(args)
    model, report = train_discriminative(
        scenarios, form=args.form, mode=mode, objective=args.objective, folds=args.folds,
        init_points=args.init_points, rounds=args.rounds, seed=args.seed,
        init=_init(args), params=_ut(args),
    )
    args.out.mkdir(parents=True, exist_ok=True)
    save_model(model, args.out / "model.json")
    (args.out / "train_report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    print(args.out / "model.json")


def cmd_evaluate(args) -> None:
    _require(args, "out")
    scenarios, mode = _scenarios(args)
    model = _model(args, mode)
    report = evaluate_scenarios(
        scenarios, model, positive=args.positive, q=args.q, init=_init(args), params=_ut(args)
    )
    write_evaluation(report, args.out)
    print(f"AUC {report['auc']:.4f}")


def cmd_report(args) -> None:
    _require(args, "out")
    args.out.mkdir(parents=True, exist_ok=True)
    wrote = False
    if args.model is not None:
        model = _model(args)
        d = np.geomspace(args.d_min, args.d_max, args.points)
        mu, lo, hi = gaussian_band(model, d)
        with open(args.out / "gp_band.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["d", "mean", "q05", "q95"])
            for row in zip(d, mu, lo, hi):
                w.writerow([repr(float(v)) for v in row])
        wrote = True
    if args.evaluation is not None:
        doc = json.loads(args.evaluation.read_text(encoding="utf-8"))
        with open(args.out / "risk_scatter.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", "label", "bound_risk", "total_risk", "relative_risk", "mean_distance"])
            for r in doc["scenarios"]:
                w.writerow([
                    r["id"], r["label"] or "", r["bound_risk"], r["total_risk"],
                    r["relative_risk"], r["mean_distance"],
                ])
        wrote = True
    if args.smooth_dir is not None:
        for f in sorted(args.smooth_dir.glob("*_smooth.csv")):
            shutil.copyfile(f, args.out / f"timeseries_{f.name}")
        wrote = True
    if not wrote:
        raise ConfigError("report needs --model, --evaluation or --smooth-dir")


def cmd_build_generative(args) -> None:
    _require(args, "out")
    model = build_from_files(
        args.mode or "lognormal",
        calibration=args.calibration,
        shares=args.shares,
        respondents=args.respondents,
        antenna_epsilon=args.antenna_epsilon,
        context_dir=args.context_dir,
        q=args.q,
        seed=args.seed,
    )
    args.out.mkdir(parents=True, exist_ok=True)
    save_model(model, args.out / "model.json")
    print(args.out / "model.json")


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is None:
        return args
    try:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in known:
            raise ConfigError(f"unknown config key {key!r}")
        action = known[dest]
        if value is not None and action.type is not None:
            value = action.type(value)
        defaults[dest] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, BayesOptAborted, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
