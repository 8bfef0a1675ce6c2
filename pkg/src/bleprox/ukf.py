"""Scalar unscented Kalman filter and RTS smoother over inter-device distance.

Transition ``D[t+1] = |D[t] + w|`` with ``w ~ N(0, q)``; observation
``X[t] ~ N(mean(D[t]), var(D[t]))`` from an :class:`ObservationModel`.
Slots without an observation get a predict-only step and are flagged as
imputed. Everything is one-dimensional, so the loops work on Python floats.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np
from scipy.special import gammaincinv

from .errors import ConfigError, DomainError, NumericError
from .ingest import Scenario
from .models import ObservationModel

_TINY = 1e-300
_MIN_MEAN = 1e-12

SMOOTH_CSV_COLUMNS = (
    "t", "imputed", "filt_mean", "filt_var", "smooth_mean", "smooth_var", "q05", "q95",
)


@dataclass(frozen=True)
class UtParams:
    """Scaled unscented transform parameters for a one-dimensional state."""

    alpha: float = 1.0
    beta: float = 2.0
    kappa: float = 2.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigError("alpha must be positive")
        if not self.lam > -1:
            raise ConfigError(f"alpha^2 (1 + kappa) must be positive, got lambda={self.lam}")

    @property
    def lam(self) -> float:
        return self.alpha**2 * (1.0 + self.kappa) - 1.0

    @property
    def spread(self) -> float:
        return math.sqrt(1.0 + self.lam)

    @property
    def weights(self) -> tuple[float, float, float]:
        """``(w_mean_centre, w_cov_centre, w_side)``."""
        wm0 = self.lam / (1.0 + self.lam)
        wc0 = wm0 + 1.0 - self.alpha**2 + self.beta
        return wm0, wc0, 0.5 / (1.0 + self.lam)


@dataclass(frozen=True)
class GaussBelief:
    mean: float
    var: float

    def __post_init__(self):
        if not self.var > 0:
            raise DomainError(f"belief variance must be positive, got {self.var}")


DEFAULT_INIT = GaussBelief(2.0, 4.0)


def sigma_points(belief: GaussBelief, params: UtParams = UtParams()):
    """Three points ``mean, mean +- sqrt((1 + lambda) var)`` with mean/cov weights."""
    wm0, wc0, wi = params.weights
    s = params.spread * math.sqrt(belief.var)
    pts = np.array([belief.mean, belief.mean + s, belief.mean - s])
    return pts, np.array([wm0, wi, wi]), np.array([wc0, wi, wi])


def _predict(m: float, P: float, q: float, params: UtParams) -> tuple[float, float, float]:
    """Predicted mean/variance and the cross-covariance Cov(D[t], D[t+1])."""
    wm0, wc0, wi = params.weights
    P_pre = P + q
    s = params.spread * math.sqrt(P_pre)
    # fold applied after adding the step: |D + w|
    y0, y1, y2 = abs(m), abs(m + s), abs(m - s)
    mp = wm0 * y0 + wi * (y1 + y2)
    Pp = wc0 * (y0 - mp) ** 2 + wi * ((y1 - mp) ** 2 + (y2 - mp) ** 2)
    # D[t] regressed on the pre-fold point: E[D | D + w = z] = m + P/(P+q) (z - m)
    C = (P / P_pre) * wi * s * ((y1 - mp) - (y2 - mp))
    return mp, max(Pp, _TINY), C


def predict(belief: GaussBelief, q: float, params: UtParams = UtParams()) -> GaussBelief:
    if not q > 0:
        raise ConfigError("transition variance q must be positive")
    mp, Pp, _ = _predict(belief.mean, belief.var, q, params)
    return GaussBelief(mp, Pp)


def _update(m: float, P: float, x: float, model: ObservationModel, params: UtParams):
    wm0, wc0, wi = params.weights
    s = params.spread * math.sqrt(P)
    mu, r = model.at_state(np.array([m, m + s, m - s]))
    y0, y1, y2 = float(mu[0]), float(mu[1]), float(mu[2])
    if not (math.isfinite(y0) and math.isfinite(y1) and math.isfinite(y2)):
        raise DomainError(f"observation mean undefined near d={m}")
    yh = wm0 * y0 + wi * (y1 + y2)
    r_mean = wm0 * float(r[0]) + wi * (float(r[1]) + float(r[2]))
    S = wc0 * (y0 - yh) ** 2 + wi * ((y1 - yh) ** 2 + (y2 - yh) ** 2) + r_mean
    if not S > 0:
        raise NumericError("non-positive innovation variance")
    C = wi * s * ((y1 - yh) - (y2 - yh))
    K = C / S
    return abs(m + K * (x - yh)), max(P - K * C, _TINY)


def update(
    predicted: GaussBelief, x_obs: float, model: ObservationModel, params: UtParams = UtParams()
) -> GaussBelief:
    m, P = _update(predicted.mean, predicted.var, float(x_obs), model, params)
    return GaussBelief(m, P)


@dataclass(frozen=True)
class SmoothResult:
    filtered_mean: np.ndarray
    filtered_var: np.ndarray
    smoothed_mean: np.ndarray
    smoothed_var: np.ndarray
    imputed: np.ndarray
    predicted_mean: np.ndarray
    predicted_var: np.ndarray

    def __len__(self) -> int:
        return len(self.smoothed_mean)

    def smoothed(self, t: int) -> GaussBelief:
        return GaussBelief(float(self.smoothed_mean[t]), float(self.smoothed_var[t]))

    def filtered(self, t: int) -> GaussBelief:
        return GaussBelief(float(self.filtered_mean[t]), float(self.filtered_var[t]))

    def quantiles(self, p: float) -> np.ndarray:
        return gamma_quantile(self.smoothed_mean, self.smoothed_var, p)

    def write_csv(self, dest: TextIO | str | Path) -> None:
        if isinstance(dest, (str, Path)):
            with open(dest, "w", newline="", encoding="utf-8") as fh:
                return self.write_csv(fh)
        q05, q95 = self.quantiles(0.05), self.quantiles(0.95)
        w = csv.writer(dest, lineterminator="\n")
        w.writerow(SMOOTH_CSV_COLUMNS)
        for t in range(len(self)):
            w.writerow([
                t + 1,
                int(self.imputed[t]),
                repr(float(self.filtered_mean[t])),
                repr(float(self.filtered_var[t])),
                repr(float(self.smoothed_mean[t])),
                repr(float(self.smoothed_var[t])),
                repr(float(q05[t])),
                repr(float(q95[t])),
            ])


def smooth(
    scenario: Scenario | np.ndarray,
    model: ObservationModel,
    q: float | None = None,
    init: GaussBelief = DEFAULT_INIT,
    params: UtParams = UtParams(),
) -> SmoothResult:
    """Forward unscented filter then backward RTS pass; O(T) time and memory.

    ``scenario`` may also be a bare array of observations with NaN gaps.
    ``q`` defaults to the model's own transition variance.
    """
    x = scenario.x if isinstance(scenario, Scenario) else np.asarray(scenario, dtype=float)
    q = model.q if q is None else q
    if q is None or not q > 0:
        raise ConfigError("a positive transition variance q is required")
    T = len(x)
    mp = np.empty(T)
    Pp = np.empty(T)
    mf = np.empty(T)
    Pf = np.empty(T)
    cross = np.zeros(T)
    imputed = np.isnan(x)

    m, P = float(init.mean), float(init.var)
    xs = x.tolist()
    for t in range(T):
        if t > 0:
            m, P, cross[t] = _predict(m, P, q, params)
        mp[t], Pp[t] = m, P
        if not imputed[t]:
            m, P = _update(m, P, xs[t], model, params)
        mf[t], Pf[t] = max(m, _MIN_MEAN), P

    ms = mf.copy()
    Ps = Pf.copy()
    for t in range(T - 2, -1, -1):
        G = cross[t + 1] / Pp[t + 1]
        ms[t] = max(abs(mf[t] + G * (ms[t + 1] - mp[t + 1])), _MIN_MEAN)
        Ps[t] = max(Pf[t] + G * G * (Ps[t + 1] - Pp[t + 1]), _TINY)

    return SmoothResult(mf, Pf, ms, Ps, imputed, mp, Pp)


def gamma_quantile(mean, var, p: float):
    """Quantile of the gamma distribution with the given mean and variance."""
    if not 0 < p < 1:
        raise ConfigError("quantile level must lie in (0, 1)")
    mean = np.asarray(mean, dtype=float)
    var = np.asarray(var, dtype=float)
    if np.any(~(mean > 0)):
        raise DomainError("gamma moment matching needs a positive mean")
    shape = mean**2 / var
    scale = var / mean
    out = gammaincinv(shape, p) * scale
    return out.item() if out.ndim == 0 else out


def posterior_quantiles(belief: GaussBelief, p: float) -> float:
    return float(gamma_quantile(belief.mean, belief.var, p))
