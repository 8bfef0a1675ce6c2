#!/usr/bin/env python3
"""Train a discriminative model on walks simulated from known parameters and
check how closely the fitted mean curve and two-class AUC track the truth.

A full run (100 rounds per fold) takes several minutes on one core.
"""
import argparse
import json
import time

from bleprox.evaluation import evaluate_scenarios
from bleprox.ingest import TransformMode
from bleprox.models import DiscriminativeModel, known_device_model, rms_curve_error
from bleprox.simulate import proximity_corpus, two_class_corpus
from bleprox.training import train_discriminative


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mode", default="lognormal", choices=[m.value for m in TransformMode])
    ap.add_argument("--form", default="scaled", choices=["scaled", "loglinear"])
    ap.add_argument("--q", type=float, default=0.02, help="per-step walk variance of the simulated data")
    ap.add_argument("--steps", type=int, default=1000)
    ap.add_argument("--rounds", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    mode = TransformMode.parse(args.mode)
    base = known_device_model(mode)
    truth = DiscriminativeModel("loglinear", base.theta_mu1, base.theta_mu2, base.theta_r, q=args.q, mode=mode)

    t0 = time.perf_counter()
    corpus = proximity_corpus(truth, steps=args.steps, q_sim=args.q, seed=args.seed)
    fitted, report = train_discriminative(corpus, form=args.form, mode=mode, rounds=args.rounds, seed=args.seed)
    auc = evaluate_scenarios(two_class_corpus(truth, n=40, seed=args.seed + 1), fitted)["auc"]
    print(json.dumps({
        "mode": mode.value,
        "truth": truth.to_dict(),
        "fitted": fitted.to_dict(),
        "validation_objective": report.best_value,
        "mean_curve_rms": rms_curve_error(fitted, truth),
        "two_class_auc": auc,
        "seconds": round(time.perf_counter() - t0, 1),
    }, indent=2))


if __name__ == "__main__":
    main()
