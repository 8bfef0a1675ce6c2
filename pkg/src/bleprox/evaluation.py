"""Scenario-level risk evaluation and the report files built from it."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DegenerateLabels
from .ingest import Scenario
from .models import ObservationModel
from .risk import H0_BOUND_M, H1_BOUND_M, LabeledScore, bound_risk, roc_auc, scenario_risk
from .ukf import DEFAULT_INIT, GaussBelief, UtParams, smooth

EVAL_COLUMNS = (
    "id", "label", "positive", "steps", "observed", "total_risk", "bound_risk",
    "relative_risk", "mean_distance",
)

_DEFAULT_BOUNDS = {"H1": H1_BOUND_M, "H0": H0_BOUND_M}


def _bound_for(s: Scenario) -> float | None:
    if s.truth_bound is not None:
        return s.truth_bound
    return _DEFAULT_BOUNDS.get((s.label or "").upper())


def evaluate_scenarios(
    scenarios: Sequence[Scenario],
    model: ObservationModel,
    *,
    positive: str = "H1",
    q: float | None = None,
    init: GaussBelief = DEFAULT_INIT,
    params: UtParams = UtParams(),
) -> dict:
    """Smooth every scenario and score it by total inferred risk.

    The true risk is the bound trajectory's risk when a distance bound is
    known, otherwise the per-step truth's. AUC is over labelled scenarios,
    with ``positive`` naming the positive class.
    """
    rows = []
    for s in scenarios:
        res = smooth(s, model, q=q, init=init, params=params)
        total = scenario_risk(res.smoothed_mean, s.delta_t).total
        bound = _bound_for(s)
        if bound is not None:
            true_risk = bound_risk(bound, s.T, s.delta_t)
        elif s.truth is not None:
            true_risk = scenario_risk(s.truth, s.delta_t).total
        else:
            true_risk = None
        rows.append({
            "id": s.id,
            "label": s.label,
            "positive": None if s.label is None else s.label == positive,
            "steps": s.T,
            "observed": int(s.observed.sum()),
            "total_risk": total,
            "bound_risk": true_risk,
            "relative_risk": None if true_risk is None else total - true_risk,
            "mean_distance": float(np.mean(res.smoothed_mean)),
        })
    labelled = [r for r in rows if r["positive"] is not None]
    if not labelled:
        raise DegenerateLabels("no labelled scenarios to evaluate")
    auc = roc_auc(LabeledScore(r["positive"], r["total_risk"]) for r in labelled)
    return {"positive_label": positive, "auc": auc, "scenarios": rows}


def write_evaluation(report: dict, out_dir: str | Path) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jpath, cpath = out_dir / "evaluation.json", out_dir / "evaluation.csv"
    jpath.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    with open(cpath, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=EVAL_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in report["scenarios"]:
            w.writerow({k: ("" if r[k] is None else r[k]) for k in EVAL_COLUMNS})
    return jpath, cpath
