"""Fitting discriminative observation models by Bayesian optimisation over the smoother."""
from __future__ import annotations

import logging
from typing import Callable, Sequence

import numpy as np

from .bayesopt import SearchSpace, TrainReport, bayes_opt
from .errors import AllZeroWeights, ConfigError, EmptySequence, InfeasibleStratification
from .ingest import Scenario, TransformMode
from .models import DiscriminativeModel, ModelForm
from .risk import risk_step, scenario_risk
from .seeds import derive_int
from .ukf import DEFAULT_INIT, GaussBelief, UtParams, smooth

log = logging.getLogger(__name__)

PARAM_NAMES = ("theta_mu1", "theta_mu2", "theta_r", "q")

# zero observation variance is singular in the update
RAW_VAR_FLOOR = 1e-3

_BOXES = {
    (TransformMode.LOG_NEG_RSSI, ModelForm.SCALED_BASE): ((0.8, 1.2), (0.5, 5.0), (0.3, 1.5), (0.01, 0.05)),
    (TransformMode.LOG_NEG_RSSI, ModelForm.LOG_LINEAR): ((0.01, 1.0), (3.5, 4.5), (0.2, 1.5), (0.01, 0.05)),
    (TransformMode.RAW_RSSI, ModelForm.SCALED_BASE): ((1.0, 1.0), (-100.0, -10.0), (RAW_VAR_FLOOR, 300.0), (0.01, 0.05)),
    (TransformMode.RAW_RSSI, ModelForm.LOG_LINEAR): ((-20.0, -1.0), (-100.0, -10.0), (RAW_VAR_FLOOR, 300.0), (0.01, 0.05)),
}


def default_search_space(form: ModelForm | str, mode: TransformMode | str) -> SearchSpace:
    box = _BOXES[(TransformMode.parse(mode), ModelForm.parse(form))]
    return SearchSpace(dict(zip(PARAM_NAMES, box)))


def model_from_theta(theta: dict, form, mode) -> DiscriminativeModel:
    return DiscriminativeModel(
        ModelForm.parse(form),
        theta["theta_mu1"],
        theta["theta_mu2"],
        theta["theta_r"],
        q=theta["q"],
        mode=TransformMode.parse(mode),
    )


def _truth(s: Scenario) -> np.ndarray:
    if s.truth is None:
        raise ConfigError(f"scenario {s.id} has no per-step ground truth")
    return s.truth


def proximity_loss(truths: Sequence, inferred: Sequence) -> float:
    """Mean over scenarios of the per-step mean squared distance error."""
    if not truths:
        raise ConfigError("no scenarios")
    per = [float(np.mean((np.asarray(t) - np.asarray(e)) ** 2)) for t, e in zip(truths, inferred)]
    return float(np.mean(per))


def risk_loss(truths: Sequence, inferred: Sequence, delta_ts: Sequence[float]) -> float:
    """Risk-weighted mean of per-scenario mean squared risk error."""
    if not truths:
        raise ConfigError("no scenarios")
    w = np.array([scenario_risk(t, dt).total for t, dt in zip(truths, delta_ts)])
    if not w.sum() > 0:
        raise AllZeroWeights("every scenario has zero true risk")
    per = np.array([
        float(np.mean((np.asarray(risk_step(t, dt)) - np.asarray(risk_step(e, dt))) ** 2))
        if wi > 0 else 0.0
        for t, e, dt, wi in zip(truths, inferred, delta_ts, w)
    ])
    return float(np.sum(w * per) / w.sum())


def _inferred(theta, scenarios, form, mode, init, params) -> list[np.ndarray]:
    model = model_from_theta(theta, form, mode)
    return [smooth(s, model, init=init, params=params).smoothed_mean for s in scenarios]


def proximity_objective(
    theta: dict,
    scenarios: Sequence[Scenario],
    form: ModelForm | str,
    mode: TransformMode | str,
    init: GaussBelief = DEFAULT_INIT,
    params: UtParams = UtParams(),
) -> float:
    inferred = _inferred(theta, scenarios, form, mode, init, params)
    return proximity_loss([_truth(s) for s in scenarios], inferred)


def risk_objective(
    theta: dict,
    scenarios: Sequence[Scenario],
    form: ModelForm | str,
    mode: TransformMode | str,
    init: GaussBelief = DEFAULT_INIT,
    params: UtParams = UtParams(),
) -> float:
    truths = [_truth(s) for s in scenarios]
    inferred = _inferred(theta, scenarios, form, mode, init, params)
    return risk_loss(truths, inferred, [s.delta_t for s in scenarios])


OBJECTIVES: dict[str, Callable] = {"proximity": proximity_objective, "risk": risk_objective}


def proximity_label(s: Scenario):
    """Stratum for fold assignment: proximity level, else class label, else median truth."""
    if s.proximity is not None:
        return s.proximity
    if s.label is not None:
        return s.label
    return round(float(np.median(_truth(s))), 2)


def stratified_folds(labels: Sequence, k: int = 3, seed: int = 0, strict: bool = True) -> np.ndarray:
    """Fold id per item such that each fold's validation and training sides see every label.

    Items of each label are shuffled (seeded) and dealt round-robin, with the
    starting fold rotated per label to keep fold sizes even.
    """
    if k < 2:
        raise ConfigError("need at least two folds")
    labels = list(labels)
    rng = np.random.default_rng(seed)
    folds = np.empty(len(labels), dtype=int)
    offset = 0
    for lab in sorted(set(labels), key=repr):
        idx = np.array([i for i, l in enumerate(labels) if l == lab])
        if len(idx) < k and strict:
            raise InfeasibleStratification(f"label {lab!r} has {len(idx)} item(s) for {k} folds")
        idx = idx[rng.permutation(len(idx))]
        folds[idx] = (offset + np.arange(len(idx))) % k
        offset = (offset + len(idx)) % k
    return folds


def train_discriminative(
    scenarios: Sequence[Scenario],
    form: ModelForm | str = ModelForm.SCALED_BASE,
    mode: TransformMode | str | None = None,
    objective: str = "proximity",
    folds: int = 3,
    init_points: int = 10,
    rounds: int = 100,
    seed: int = 0,
    space: SearchSpace | None = None,
    init: GaussBelief = DEFAULT_INIT,
    params: UtParams = UtParams(),
) -> tuple[DiscriminativeModel, TrainReport]:
    """Cross-validated Bayesian optimisation of ``(theta_mu1, theta_mu2, theta_r, q)``.

    Each fold runs its own optimisation on its training side. The deployed
    parameters are the fold winner with the lowest validation objective
    averaged over all folds. With ``folds < 2`` a single run uses all data.
    """
    if not scenarios:
        raise EmptySequence("training corpus is empty")
    mode = TransformMode.parse(mode or scenarios[0].mode)
    form = ModelForm.parse(form)
    try:
        obj = OBJECTIVES[objective]
    except KeyError:
        raise ConfigError(f"unknown objective {objective!r}") from None
    space = space or default_search_space(form, mode)

    def run(train: Sequence[Scenario], fold_seed: int) -> TrainReport:
        return bayes_opt(
            lambda th: obj(th, train, form, mode, init, params),
            space, init_points=init_points, rounds=rounds, seed=fold_seed,
        )

    if folds < 2:
        report = run(scenarios, derive_int(seed, "all"))
        return model_from_theta(report.best_theta, form, mode), report

    fold_id = stratified_folds([proximity_label(s) for s in scenarios], folds, derive_int(seed, "folds"))
    fold_records = []
    for f in range(folds):
        train = [s for s, g in zip(scenarios, fold_id) if g != f]
        val = [s for s, g in zip(scenarios, fold_id) if g == f]
        rep = run(train, derive_int(seed, "fold", f))
        fold_records.append({
            "fold": f,
            "train_ids": [s.id for s in train],
            "validation_ids": [s.id for s in val],
            "best_theta": rep.best_theta,
            "train_value": rep.best_value,
            "validation_value": obj(rep.best_theta, val, form, mode, init, params),
            "trace": rep.trace,
        })
        log.info("fold %d: train %.6g validation %.6g", f, rep.best_value, fold_records[-1]["validation_value"])

    candidates = []
    for rec in fold_records:
        scores = [
            obj(rec["best_theta"], [s for s, g in zip(scenarios, fold_id) if g == f], form, mode, init, params)
            for f in range(folds)
        ]
        candidates.append({"theta": rec["best_theta"], "value": float(np.mean(scores)), "fold": rec["fold"]})
    best = min(candidates, key=lambda c: c["value"])
    report = TrainReport(dict(best["theta"]), best["value"], candidates, fold_records)
    return model_from_theta(best["theta"], form, mode), report
