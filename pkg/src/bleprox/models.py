"""Gaussian observation models ``X | D ~ N(mean(D), var(D))``."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import norm

from .conjugate import NoiseVariance, noise_variance
from .errors import ConfigError, DomainError
from .friis import WAVELENGTH, base_function, min_model_distance, unit_gain_distance
from .ingest import TransformMode
from .mixture import ShiftVariable, shift_moments

DEFAULT_GRID = (0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 8.0)
RIDGE = 1e-6


class ModelForm(str, enum.Enum):
    SCALED_BASE = "scaled"  # theta1 * f(d) + theta2
    LOG_LINEAR = "loglinear"  # theta1 * log(d) + theta2

    @classmethod
    def parse(cls, value) -> "ModelForm":
        if isinstance(value, cls):
            return value
        v = str(value).lower().replace("_", "").replace("-", "")
        for form, names in {
            cls.SCALED_BASE: ("scaled", "scaledbase", "shift", "f"),
            cls.LOG_LINEAR: ("loglinear", "log", "l"),
        }.items():
            if v in names:
                return form
        raise ConfigError(f"unknown model form {value!r}")


class ObservationModel:
    """Base class. Subclasses provide ``mean(d)``, ``var(d)`` and ``to_dict()``.

    ``domain_floor`` is the smallest distance the smoother may evaluate the
    model at; sigma points are folded with ``abs`` and clamped to it. A value
    of None means the model is defined on the whole real line and sigma
    points pass through untouched.
    """

    mode: TransformMode
    q: float | None = None
    domain_floor: float | None = None

    def mean(self, d):
        raise NotImplementedError

    def var(self, d):
        raise NotImplementedError

    def at_state(self, d):
        """Mean and variance for raw (possibly negative) state values."""
        d = np.asarray(d, dtype=float)
        if self.domain_floor is not None:
            d = np.maximum(np.abs(d), self.domain_floor)
        return self.mean(d), self.var(d)

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class AffineModel(ObservationModel):
    """``x = slope * d + intercept + N(0, variance)`` on the whole real line."""

    slope: float
    intercept: float
    variance: float
    q: float | None = None
    mode: TransformMode = TransformMode.RAW_RSSI
    domain_floor: float | None = None

    def mean(self, d):
        return self.slope * np.asarray(d, dtype=float) + self.intercept

    def var(self, d):
        return np.full_like(np.asarray(d, dtype=float), self.variance)

    def to_dict(self) -> dict:
        return {
            "kind": "affine",
            "mode": self.mode.value,
            "slope": self.slope,
            "intercept": self.intercept,
            "variance": self.variance,
            "q": self.q,
        }


def discriminative_mean(d, theta: Sequence[float], form: ModelForm, mode: TransformMode):
    t1, t2 = theta
    if ModelForm.parse(form) is ModelForm.SCALED_BASE:
        return t1 * np.asarray(base_function(d, mode)) + t2
    d = np.asarray(d, dtype=float)
    if np.any(~(d > 0)):
        raise DomainError("log-linear mean needs d > 0")
    return t1 * np.log(d) + t2


@dataclass(frozen=True)
class DiscriminativeModel(ObservationModel):
    """Parametric mean with constant variance ``theta_r``."""

    form: ModelForm
    theta_mu1: float
    theta_mu2: float
    theta_r: float
    q: float | None = None
    mode: TransformMode = TransformMode.LOG_NEG_RSSI
    domain_floor: float | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "form", ModelForm.parse(self.form))
        object.__setattr__(self, "mode", TransformMode.parse(self.mode))
        if not self.theta_r > 0:
            raise DomainError("observation variance must be positive")
        if self.domain_floor is None:
            object.__setattr__(self, "domain_floor", min_model_distance())

    @property
    def theta(self) -> dict[str, float]:
        return {
            "theta_mu1": self.theta_mu1,
            "theta_mu2": self.theta_mu2,
            "theta_r": self.theta_r,
            "q": self.q,
        }

    def mean(self, d):
        return discriminative_mean(d, (self.theta_mu1, self.theta_mu2), self.form, self.mode)

    def var(self, d):
        return np.full_like(np.asarray(d, dtype=float), self.theta_r)

    def to_dict(self) -> dict:
        return {
            "kind": "discriminative",
            "mode": self.mode.value,
            "form": self.form.value,
            "theta": self.theta,
        }


@dataclass(frozen=True)
class GenerativeModel(ObservationModel):
    """Mean ``a * log(d) + b`` and variance interpolated over a distance grid."""

    grid: tuple[float, ...]
    mean_grid: tuple[float, ...]
    var_grid: tuple[float, ...]
    slope: float
    intercept: float
    q: float | None = None
    mode: TransformMode = TransformMode.LOG_NEG_RSSI
    domain_floor: float | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "mode", TransformMode.parse(self.mode))
        if self.domain_floor is None:
            object.__setattr__(self, "domain_floor", min_model_distance())

    def mean(self, d):
        return self.slope * np.log(np.asarray(d, dtype=float)) + self.intercept

    def var(self, d):
        # np.interp clamps to the end values outside the grid
        return np.interp(np.log(np.asarray(d, dtype=float)), np.log(self.grid), self.var_grid)

    def to_dict(self) -> dict:
        return {
            "kind": "generative",
            "mode": self.mode.value,
            "grid": list(self.grid),
            "mean_grid": list(self.mean_grid),
            "var_grid": list(self.var_grid),
            "coefficients": {"slope": self.slope, "intercept": self.intercept},
            "q": self.q,
        }


def ridge_log_fit(d, y, alpha: float = RIDGE) -> tuple[float, float]:
    """Fit ``y ~ a * log(d) + b`` with an L2 penalty on the slope only."""
    x = np.log(np.asarray(d, dtype=float))
    y = np.asarray(y, dtype=float)
    X = np.column_stack([x, np.ones_like(x)])
    A = X.T @ X + np.diag([alpha, 0.0])
    a, b = np.linalg.solve(A, X.T @ y)
    return float(a), float(b)


def build_generative_model(
    shifts: Sequence[Sequence[ShiftVariable]] | Sequence[ShiftVariable],
    noise: NoiseVariance,
    grid: Sequence[float] = DEFAULT_GRID,
    mode: TransformMode = TransformMode.LOG_NEG_RSSI,
    *,
    q: float | None = None,
    weight_uncertainty: bool = False,
    ridge: float = RIDGE,
) -> GenerativeModel:
    """Sum base function, shift moments and noise at each grid distance, then interpolate.

    ``shifts`` is either one list of shift variables per grid point, or a
    flat list applied at every grid point (distance-invariant shifts).
    """
    mode = TransformMode.parse(mode)
    grid = tuple(float(g) for g in grid)
    if not grid:
        raise ConfigError("distance grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("distance grid must be strictly increasing")
    if mode is TransformMode.LOG_NEG_RSSI and grid[0] <= unit_gain_distance(WAVELENGTH):
        raise DomainError("grid distances must exceed the unit-gain distance")
    if shifts and isinstance(shifts[0], ShiftVariable):
        per_point = [list(shifts)] * len(grid)
    else:
        per_point = [list(s) for s in shifts] if shifts else [[] for _ in grid]
    if len(per_point) != len(grid):
        raise ConfigError(f"{len(per_point)} shift lists for {len(grid)} grid points")

    z_var = noise_variance(noise)
    means, variances = [], []
    for d, svs in zip(grid, per_point):
        mu = float(base_function(d, mode))
        v = z_var
        for sv in svs:
            m_i, v_i = shift_moments(sv, weight_uncertainty=weight_uncertainty)
            mu += m_i
            v += v_i
        means.append(mu)
        variances.append(v)
    slope, intercept = ridge_log_fit(grid, means, ridge)
    return GenerativeModel(
        grid=grid,
        mean_grid=tuple(means),
        var_grid=tuple(variances),
        slope=slope,
        intercept=intercept,
        q=q,
        mode=mode,
    )


# Known-device fits from H0H1 iPhone XR data, one per transform mode.
KNOWN_DEVICE_FITS = {
    TransformMode.LOG_NEG_RSSI: (0.21, 3.92, 0.33),
    TransformMode.RAW_RSSI: (-8.69, -67.9, 97.03),
}
KNOWN_DEVICE_Q = 0.09


def known_device_model(mode: TransformMode | str = TransformMode.LOG_NEG_RSSI) -> DiscriminativeModel:
    """The fitted single-device-type process used for the random-walk experiment."""
    mode = TransformMode.parse(mode)
    a, b, var = KNOWN_DEVICE_FITS[mode]
    return DiscriminativeModel(ModelForm.LOG_LINEAR, a, b, var, q=KNOWN_DEVICE_Q, mode=mode)


def model_from_dict(doc: dict) -> ObservationModel:
    try:
        kind = doc["kind"]
        mode = TransformMode.parse(doc["mode"])
        if kind == "discriminative":
            th = doc["theta"]
            return DiscriminativeModel(
                ModelForm.parse(doc["form"]),
                float(th["theta_mu1"]),
                float(th["theta_mu2"]),
                float(th["theta_r"]),
                q=None if th.get("q") is None else float(th["q"]),
                mode=mode,
            )
        if kind == "generative":
            c = doc["coefficients"]
            return GenerativeModel(
                grid=tuple(doc["grid"]),
                mean_grid=tuple(doc["mean_grid"]),
                var_grid=tuple(doc["var_grid"]),
                slope=float(c["slope"]),
                intercept=float(c["intercept"]),
                q=doc.get("q"),
                mode=mode,
            )
        if kind == "affine":
            return AffineModel(
                float(doc["slope"]), float(doc["intercept"]), float(doc["variance"]),
                q=doc.get("q"), mode=mode,
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad model document: {exc}") from None
    raise ConfigError(f"unknown model kind {doc.get('kind')!r}")


def save_model(model: ObservationModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> ObservationModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return model_from_dict(doc)


def gaussian_band(model: ObservationModel, d, p_lo: float = 0.05, p_hi: float = 0.95):
    """Mean with lower/upper Gaussian quantiles of ``X | d`` over a distance array."""
    d = np.asarray(d, dtype=float)
    mu = np.asarray(model.mean(d), dtype=float)
    sd = np.sqrt(np.asarray(model.var(d), dtype=float))
    return mu, mu + norm.ppf(p_lo) * sd, mu + norm.ppf(p_hi) * sd


def rms_curve_error(a: ObservationModel, b: ObservationModel, lo=0.5, hi=5.0, n=200) -> float:
    """RMS difference between two mean curves on an even grid over ``[lo, hi]``."""
    d = np.linspace(lo, hi, n)
    return math.sqrt(float(np.mean((np.asarray(a.mean(d)) - np.asarray(b.mean(d))) ** 2)))
