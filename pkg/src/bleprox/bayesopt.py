"""Bayesian optimisation with a Matern-5/2 Gaussian-process surrogate and expected improvement."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize
from scipy.stats import norm, qmc

from .errors import ConfigError, SingularKernel

JITTER = 1e-6
LENGTHSCALE = 0.2  # fraction of each box width


def matern52(r, variance: float = 1.0, lengthscale: float = 1.0):
    r = np.abs(np.asarray(r, dtype=float)) / lengthscale
    s5 = math.sqrt(5.0) * r
    out = variance * (1.0 + s5 + 5.0 * r**2 / 3.0) * np.exp(-s5)
    return out.item() if out.ndim == 0 else out


def _scaled_dist(A: np.ndarray, B: np.ndarray, lengthscales: np.ndarray) -> np.ndarray:
    diff = (A[:, None, :] - B[None, :, :]) / lengthscales
    return np.sqrt(np.sum(diff**2, axis=-1))


@dataclass
class SurrogateState:
    """Evaluated points (already in the unit box) and their objective values."""

    X: np.ndarray
    y: np.ndarray
    variance: float = 1.0
    lengthscales: np.ndarray | float = LENGTHSCALE
    jitter: float = JITTER

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        self.lengthscales = np.broadcast_to(
            np.asarray(self.lengthscales, dtype=float), (self.X.shape[1],)
        ).copy()
        if len(self.y) != len(self.X) or len(self.y) == 0:
            raise ConfigError("surrogate needs matching, non-empty X and y")

    def kernel(self, A, B) -> np.ndarray:
        return matern52(_scaled_dist(A, B, self.lengthscales), self.variance, 1.0)

    @cached_property
    def _factor(self):
        K = self.kernel(self.X, self.X) + self.jitter * self.variance * np.eye(len(self.X))
        try:
            return cho_factor(K, lower=True)
        except np.linalg.LinAlgError:
            raise SingularKernel("kernel matrix not positive definite after jitter") from None

    @cached_property
    def _offset(self) -> float:
        return float(self.y.mean())

    @cached_property
    def _alpha(self) -> np.ndarray:
        return cho_solve(self._factor, self.y - self._offset)


def gp_posterior(state: SurrogateState, query) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance at ``query`` points (rows, unit-box coordinates)."""
    Q = np.atleast_2d(np.asarray(query, dtype=float))
    Ks = state.kernel(Q, state.X)
    mean = state._offset + Ks @ state._alpha
    v = cho_solve(state._factor, Ks.T)
    var = state.variance - np.sum(Ks * v.T, axis=1)
    return mean, np.maximum(var, 0.0)


def ei_from_moments(mean, sd, best):
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    improve = best - mean
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        z = np.where(sd > 0, improve / np.where(sd > 0, sd, 1.0), 0.0)
        ei = np.where(sd > 0, improve * norm.cdf(z) + sd * norm.pdf(z), np.maximum(improve, 0.0))
    return np.maximum(ei, 0.0)


def expected_improvement(state: SurrogateState, query, best_so_far: float) -> np.ndarray:
    """Expected improvement below ``best_so_far`` (minimisation)."""
    mean, var = gp_posterior(state, query)
    return ei_from_moments(mean, np.sqrt(var), best_so_far)


@dataclass(frozen=True)
class SearchSpace:
    """Closed box per parameter. Degenerate intervals are held fixed."""

    bounds: Mapping[str, tuple[float, float]]

    def __post_init__(self):
        for name, (lo, hi) in self.bounds.items():
            if hi < lo:
                raise ConfigError(f"{name}: upper bound below lower bound")

    @property
    def names(self) -> list[str]:
        return list(self.bounds)

    @property
    def free(self) -> list[str]:
        return [n for n, (lo, hi) in self.bounds.items() if hi > lo]

    def from_unit(self, u) -> dict[str, float]:
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        out = {}
        it = iter(u)
        for name, (lo, hi) in self.bounds.items():
            out[name] = float(lo + (hi - lo) * next(it)) if hi > lo else float(lo)
        return out

    def to_unit(self, theta: Mapping[str, float]) -> np.ndarray:
        return np.array([
            (theta[n] - lo) / (hi - lo) for n, (lo, hi) in self.bounds.items() if hi > lo
        ])

    def contains(self, theta: Mapping[str, float]) -> bool:
        return all(lo <= theta[n] <= hi for n, (lo, hi) in self.bounds.items())


@dataclass
class TrainReport:
    best_theta: dict[str, float]
    best_value: float
    trace: list[dict] = field(default_factory=list)
    folds: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "best_theta": self.best_theta,
            "best_value": self.best_value,
            "trace": self.trace,
            "folds": self.folds,
        }


class BayesOptAborted(RuntimeError):
    """Objective raised; ``report`` holds everything evaluated before the failure."""

    def __init__(self, report: TrainReport, cause: BaseException):
        super().__init__(f"objective failed after {len(report.trace)} evaluations: {cause}")
        self.report = report


def _report_from(trace: list[dict]) -> TrainReport:
    if not trace:
        return TrainReport({}, math.inf, [])
    best = min(trace, key=lambda r: r["value"])
    return TrainReport(dict(best["theta"]), best["value"], trace)


def bayes_opt(
    objective: Callable[[dict[str, float]], float],
    space: SearchSpace,
    init_points: int = 10,
    rounds: int = 100,
    seed=0,
    restarts: int = 256,
    refine: int = 8,
) -> TrainReport:
    """Minimise ``objective`` over ``space``.

    Starts from a scrambled Halton design, then each round maximises EI from
    ``restarts`` seeded random candidates, polishing the best ``refine`` of
    them with L-BFGS-B. Objective values are standardised before fitting.
    """
    if rounds < 1 or init_points < 2:
        raise ConfigError("need rounds >= 1 and init_points >= 2")
    dim = len(space.free)
    rng = np.random.default_rng(seed)
    trace: list[dict] = []
    X: list[np.ndarray] = []
    ys: list[float] = []

    def evaluate(u: np.ndarray):
        theta = space.from_unit(u)
        try:
            value = float(objective(theta))
        except Exception as exc:
            raise BayesOptAborted(_report_from(trace), exc) from exc
        trace.append({"theta": theta, "value": value})
        X.append(np.asarray(u, dtype=float))
        ys.append(value)

    if dim == 0:
        evaluate(np.zeros(0))
        return _report_from(trace)

    design = qmc.Halton(d=dim, scramble=True, seed=rng).random(init_points)
    for u in design:
        evaluate(u)

    for _ in range(rounds):
        y = np.asarray(ys)
        scale = y.std() or 1.0
        state = SurrogateState(np.array(X), (y - y.mean()) / scale)
        best = float(state.y.min())

        cand = rng.random((restarts, dim))
        ei = expected_improvement(state, cand, best)
        order = np.argsort(-ei, kind="stable")[:refine]
        best_u, best_ei = cand[order[0]], ei[order[0]]
        for i in order:
            res = minimize(
                lambda u: -float(expected_improvement(state, u, best)[0]),
                cand[i],
                method="L-BFGS-B",
                bounds=[(0.0, 1.0)] * dim,
            )
            if -res.fun > best_ei:
                best_u, best_ei = np.clip(res.x, 0.0, 1.0), -res.fun
        if np.min(np.linalg.norm(np.array(X) - best_u, axis=1)) < 1e-8:
            best_u = cand[order[-1]] if len(order) > 1 else rng.random(dim)
        evaluate(best_u)

    return _report_from(trace)
