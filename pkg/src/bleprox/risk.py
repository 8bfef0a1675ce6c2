"""Exposure-risk scoring and ROC evaluation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import DegenerateLabels, DomainError
from .ingest import FEET

H1_BOUND_M = 6 * FEET
H0_BOUND_M = 10 * FEET


def risk_step(d, delta_t: float = 1.0):
    """Per-step risk ``dt/60 * min(1, 1/d^2)`` at maximum infectiousness."""
    d = np.asarray(d, dtype=float)
    if not delta_t > 0 or np.any(~(d > 0)):
        raise DomainError("risk needs positive distances and time step")
    out = (delta_t / 60.0) * np.minimum(1.0, 1.0 / d**2)
    return out.item() if out.ndim == 0 else out


@dataclass(frozen=True)
class RiskScore:
    per_step: np.ndarray
    total: float


def scenario_risk(distances: Sequence[float], delta_t: float = 1.0) -> RiskScore:
    """Per-step risks and their sum; the sum doubles as the dataset weight."""
    d = np.asarray(distances, dtype=float).ravel()
    if d.size == 0:
        return RiskScore(np.zeros(0), 0.0)
    per = np.atleast_1d(risk_step(d, delta_t))
    return RiskScore(per, float(per.sum()))


def bound_risk(bound_m: float, steps: int, delta_t: float = 1.0) -> float:
    """Total risk of a trajectory pinned at a distance bound for ``steps`` slots."""
    return steps * float(risk_step(bound_m, delta_t))


def relative_risk(inferred: Sequence[float], truth_bound_risk: float, delta_t: float = 1.0) -> float:
    return scenario_risk(inferred, delta_t).total - truth_bound_risk


@dataclass(frozen=True)
class LabeledScore:
    positive: bool
    score: float


def roc_auc(scores: Iterable[LabeledScore]) -> float:
    """Mann-Whitney AUC; ties between classes count one half."""
    scores = list(scores)
    y = np.array([s.positive for s in scores], dtype=bool)
    s = np.array([s.score for s in scores], dtype=float)
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("AUC needs at least one positive and one negative")
    ranks = rankdata(s, method="average")
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auc_from_arrays(labels, scores) -> float:
    return roc_auc(LabeledScore(bool(l), float(s)) for l, s in zip(labels, scores))
