"""Normal-inverse-gamma and Dirichlet conjugate updates, and Student-t predictives."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, LengthMismatch


@dataclass(frozen=True)
class NigPosterior:
    """NIG(m, lambda, alpha, beta) over a Gaussian's (mean, variance)."""

    m: float
    lam: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.lam > 0 and self.alpha > 0 and self.beta > 0):
            raise DomainError(f"NIG parameters must be positive: {self}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.m, self.lam, self.alpha, self.beta)


@dataclass(frozen=True)
class DirichletPosterior:
    alphas: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if len(self.alphas) == 0 or any(not a > 0 for a in self.alphas):
            raise DomainError("Dirichlet concentrations must be positive")

    def __len__(self) -> int:
        return len(self.alphas)

    @property
    def expected_weights(self) -> np.ndarray:
        a = np.asarray(self.alphas)
        return a / a.sum()


@dataclass(frozen=True)
class TComponent:
    """Location-scale Student-t with ``nu`` degrees of freedom."""

    nu: float
    mu: float
    sigma: float

    @property
    def variance(self) -> float:
        if self.nu <= 2:
            return math.inf
        return self.sigma**2 * self.nu / (self.nu - 2)


@dataclass(frozen=True)
class NoiseVariance:
    """Inverse-gamma prior on the unattributable noise variance."""

    alpha: float
    beta: float


def nig_update(prior: NigPosterior, data) -> NigPosterior:
    y = np.asarray(data, dtype=float).ravel()
    n = y.size
    if n == 0:
        return prior
    m0, lam0, a0, b0 = prior.as_tuple()
    ybar = y.mean()
    ss = float(np.sum((y - ybar) ** 2))
    return NigPosterior(
        m=(lam0 * m0 + y.sum()) / (lam0 + n),
        lam=lam0 + n,
        alpha=a0 + n / 2.0,
        beta=b0 + 0.5 * (ss + n * lam0 / (lam0 + n) * (ybar - m0) ** 2),
    )


def dirichlet_update(prior: DirichletPosterior, counts) -> DirichletPosterior:
    counts = np.asarray(counts, dtype=float)
    if counts.ndim == 2:
        counts = counts.sum(axis=0)
    if counts.shape != (len(prior),):
        raise LengthMismatch(f"expected {len(prior)} counts, got shape {counts.shape}")
    if np.any(counts < 0):
        raise DomainError("counts must be non-negative")
    return DirichletPosterior(tuple(np.asarray(prior.alphas) + counts))


def posterior_predictive_t(nig: NigPosterior) -> TComponent:
    m, lam, a, b = nig.as_tuple()
    return TComponent(nu=2.0 * a, mu=m, sigma=math.sqrt((1.0 + lam) * b / (lam * a)))


def noise_variance(nv: NoiseVariance) -> float:
    if nv.alpha <= 1:
        raise DomainError("noise variance needs alpha > 1")
    return nv.beta / (nv.alpha - 1.0)
