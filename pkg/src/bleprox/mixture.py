"""Shift variables: Dirichlet-weighted mixtures of Student-t components.

Each shift variable is the posterior predictive of a Gaussian mixture whose
component parameters carry NIG posteriors and whose weights carry a
Dirichlet posterior. Integrating the weights out is linear, so the marginal
is a mixture with weights ``alpha_k / sum(alpha)`` and its moments are exact.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .conjugate import (
    DirichletPosterior,
    NigPosterior,
    TComponent,
    nig_update,
    posterior_predictive_t,
)
from .errors import InfiniteVariance, InsufficientData, InvalidDistribution, LengthMismatch
from .friis import shift_to_x_space
from .ingest import TransformMode

DEVICE_PRIOR = dict(lam=1.0, alpha=2.0, beta=0.1)
CONTEXT_PRIOR = NigPosterior(m=0.0, lam=0.1, alpha=2.0, beta=0.1)

P_INDOORS = 0.869
P_CONCEALED = 4.75 / 24.0
N_ANGLES = 8
CONTEXT_PSEUDOCOUNT = 10.0

_CHUNK = 200_000


@dataclass(frozen=True)
class ShiftVariable:
    components: tuple[TComponent, ...]
    weights: DirichletPosterior
    distance_dependent: bool = False
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise LengthMismatch("shift variable needs at least one component")
        if len(self.components) != len(self.weights):
            raise LengthMismatch(
                f"{len(self.components)} components but {len(self.weights)} weights"
            )

    @classmethod
    def single(cls, component: TComponent, **kwargs) -> "ShiftVariable":
        return cls((component,), DirichletPosterior((1.0,)), **kwargs)


def shift_moments(sv: ShiftVariable, weight_uncertainty: bool = False) -> tuple[float, float]:
    """Mean and variance of the marginal shift distribution.

    With ``weight_uncertainty`` the variance also gains ``Var_pi(sum pi_k mu_k)``,
    the spread of the conditional mean under the Dirichlet.
    """
    nu = np.array([c.nu for c in sv.components])
    if np.any(nu <= 2):
        raise InfiniteVariance("all components need nu > 2 for a finite variance")
    mu = np.array([c.mu for c in sv.components])
    var = np.array([c.variance for c in sv.components])
    w = sv.weights.expected_weights
    mean = float(w @ mu)
    variance = float(w @ (var + mu**2) - mean**2)
    if weight_uncertainty:
        a0 = float(np.sum(sv.weights.alphas))
        variance += float(w @ mu**2 - mean**2) / (a0 + 1.0)
    return mean, max(variance, 0.0)


def sample_shift(sv: ShiftVariable, n: int, seed=None) -> np.ndarray:
    """Draw ``pi ~ Dirichlet``, then a component from ``pi``, then from its t, per sample."""
    rng = np.random.default_rng(seed)
    alphas = np.asarray(sv.weights.alphas)
    nu = np.array([c.nu for c in sv.components])
    mu = np.array([c.mu for c in sv.components])
    sigma = np.array([c.sigma for c in sv.components])
    k = len(alphas)
    out = np.empty(n)
    chunk = max(1, min(_CHUNK, _CHUNK * 8 // max(k, 1)))
    for lo in range(0, n, chunk):
        m = min(chunk, n - lo)
        if k == 1:
            idx = np.zeros(m, dtype=np.int64)
        else:
            cum = np.cumsum(rng.standard_gamma(alphas, size=(m, k)), axis=1)
            u = rng.random(m) * cum[:, -1]
            idx = np.minimum((cum < u[:, None]).sum(axis=1), k - 1)
        out[lo : lo + m] = mu[idx] + sigma[idx] * rng.standard_t(nu[idx])
    return out


def _check_distribution(p, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise InvalidDistribution(f"{name} must be a probability vector, got {p}")
    return p


def device_pair_dirichlet(market_shares, respondents: int) -> DirichletPosterior:
    """Pair concentrations ``N(N-1) p_r p_t`` in row-major (receiver, transmitter) order."""
    p = _check_distribution(market_shares, "market shares")
    if respondents < 2:
        raise InvalidDistribution("need at least two respondents")
    n = float(respondents)
    alphas = n * (n - 1.0) * np.outer(p, p).ravel()
    return DirichletPosterior(tuple(np.maximum(alphas, np.finfo(float).tiny)))


def context_dirichlet(
    p_env=(P_INDOORS, 1 - P_INDOORS),
    p_loc=(P_CONCEALED, 1 - P_CONCEALED),
    p_pos=(1.0 / N_ANGLES,) * N_ANGLES,
    pseudocount: float = CONTEXT_PSEUDOCOUNT,
) -> DirichletPosterior:
    """Concentration ``N p(e) p(l) p(p)`` per cell, cells ordered (env, loc, pos)."""
    pe = _check_distribution(p_env, "environment")
    pl = _check_distribution(p_loc, "location")
    pp = _check_distribution(p_pos, "position")
    cells = pseudocount * np.einsum("i,j,k->ijk", pe, pl, pp).ravel()
    return DirichletPosterior(tuple(np.maximum(cells, np.finfo(float).tiny)))


def fit_reference_shifts(
    reference: Mapping[tuple, Sequence[float]],
    contexts: Mapping[tuple, Sequence[float]],
    seed=None,
) -> dict[tuple, np.ndarray]:
    """Observed shifts ``x_i - xhat_i`` against a fitted reference Normal.

    ``reference`` maps ``(loc, pos)`` to anechoic observations; ``contexts``
    maps ``(env, loc, pos)`` to in-context observations. Each context value is
    paired with a fresh draw from its reference Normal (sample mean and
    unbiased variance).
    """
    fits = {}
    for key, xs in reference.items():
        xs = np.asarray(xs, dtype=float)
        if xs.size < 2:
            raise InsufficientData(f"reference set {key} has {xs.size} point(s); need 2")
        fits[key] = (xs.mean(), xs.var(ddof=1))
    rng = np.random.default_rng(seed)
    shifts = {}
    for key in sorted(contexts):
        _, loc, pos = key
        if (loc, pos) not in fits:
            raise InsufficientData(f"no reference set for location={loc!r}, position={pos!r}")
        mean, var = fits[(loc, pos)]
        xs = np.asarray(contexts[key], dtype=float)
        shifts[key] = xs - rng.normal(mean, math.sqrt(var), size=xs.size)
    return shifts


def device_shift_variable(
    epsilons: Mapping[tuple[str, str], float],
    device_types: Sequence[str],
    weights: DirichletPosterior,
    d: float,
    mode: TransformMode,
    prior: Mapping[str, float] = DEVICE_PRIOR,
) -> ShiftVariable:
    """Device-pair shift at distance ``d``; pairs without calibration get zero prior mean."""
    comps = []
    for rx, tx in itertools.product(device_types, device_types):
        eps = epsilons.get((tx, rx), 0.0)
        nig = NigPosterior(m=shift_to_x_space(eps, d, mode), **prior)
        comps.append(posterior_predictive_t(nig))
    return ShiftVariable(tuple(comps), weights, distance_dependent=True, name="device")


def antenna_shift_variable(
    epsilon: float, d: float, mode: TransformMode, prior: Mapping[str, float] = DEVICE_PRIOR
) -> ShiftVariable:
    nig = NigPosterior(m=shift_to_x_space(epsilon, d, mode), **prior)
    return ShiftVariable.single(posterior_predictive_t(nig), distance_dependent=True, name="antenna")


def context_shift_variable(
    shifts: Mapping[tuple, Sequence[float]],
    envs: Sequence[str],
    locs: Sequence[str],
    positions: Sequence[str],
    weights: DirichletPosterior | None = None,
    prior: NigPosterior = CONTEXT_PRIOR,
) -> ShiftVariable:
    """Distance-invariant position/location/environment shift from observed shift data."""
    if weights is None:
        weights = context_dirichlet(
            p_env=_env_probs(envs),
            p_loc=_loc_probs(locs),
            p_pos=(1.0 / len(positions),) * len(positions),
        )
    comps = [
        posterior_predictive_t(nig_update(prior, shifts.get(key, ())))
        for key in itertools.product(envs, locs, positions)
    ]
    return ShiftVariable(tuple(comps), weights, distance_dependent=False, name="context")


def _env_probs(envs: Sequence[str]) -> tuple[float, ...]:
    if len(envs) == 2 and envs[0].lower().startswith("in"):
        return (P_INDOORS, 1 - P_INDOORS)
    return (1.0 / len(envs),) * len(envs)


def _loc_probs(locs: Sequence[str]) -> tuple[float, ...]:
    if len(locs) == 2 and locs[0].lower().startswith("conceal"):
        return (P_CONCEALED, 1 - P_CONCEALED)
    return (1.0 / len(locs),) * len(locs)
