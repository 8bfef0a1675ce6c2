import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bleprox.conjugate import (
    DirichletPosterior,
    NigPosterior,
    NoiseVariance,
    dirichlet_update,
    nig_update,
    noise_variance,
    posterior_predictive_t,
)
from bleprox.errors import DomainError, LengthMismatch

from .oracles import nig_t_monte_carlo

PRIOR = NigPosterior(0.0, 1.0, 2.0, 0.1)


def _close(a, b, tol=1e-12):
    return all(abs(x - y) <= tol for x, y in zip(a, b))


def test_nig_vacuous():
    assert nig_update(PRIOR, []).as_tuple() == (0.0, 1.0, 2.0, 0.1)


def test_nig_single_point():
    assert _close(nig_update(PRIOR, [1.0]).as_tuple(), (0.5, 2.0, 2.5, 0.35))


def test_nig_two_points():
    assert _close(nig_update(PRIOR, [1.0, -1.0]).as_tuple(), (0.0, 3.0, 3.0, 1.1))


@given(
    st.lists(st.floats(-10, 10), min_size=1, max_size=30),
    st.floats(-3, 3),
    st.floats(0.05, 5),
    st.floats(0.5, 5),
    st.floats(0.01, 5),
)
def test_nig_batch_matches_direct_formula(ys, m0, lam0, a0, b0):
    y = np.array(ys)
    n = len(y)
    post = nig_update(NigPosterior(m0, lam0, a0, b0), y)
    ybar = y.mean()
    expect = (
        (lam0 * m0 + n * ybar) / (lam0 + n),
        lam0 + n,
        a0 + n / 2,
        b0 + 0.5 * (np.sum((y - ybar) ** 2) + n * lam0 / (lam0 + n) * (ybar - m0) ** 2),
    )
    np.testing.assert_allclose(post.as_tuple(), expect, rtol=1e-12, atol=1e-12)


def test_dirichlet_examples():
    assert dirichlet_update(DirichletPosterior((1, 1)), [0, 0]).alphas == (1.0, 1.0)
    assert dirichlet_update(DirichletPosterior((1, 1)), [3, 2]).alphas == (4.0, 3.0)
    assert dirichlet_update(DirichletPosterior((0.5, 0.5, 0.5)), [10, 0, 5]).alphas == (10.5, 0.5, 5.5)


def test_dirichlet_one_hot_rows_are_summed():
    rows = np.eye(3)[[0, 0, 2]]
    assert dirichlet_update(DirichletPosterior((1, 1, 1)), rows).alphas == (3.0, 1.0, 2.0)


def test_dirichlet_rejects_bad_counts():
    with pytest.raises(LengthMismatch):
        dirichlet_update(DirichletPosterior((1, 1)), [1, 2, 3])
    with pytest.raises(DomainError):
        dirichlet_update(DirichletPosterior((1, 1)), [1, -1])


def test_predictive_examples():
    t = posterior_predictive_t(PRIOR)
    assert (t.nu, t.mu) == (4.0, 0.0)
    assert t.sigma == pytest.approx(math.sqrt(0.1), abs=1e-12)
    assert t.variance == pytest.approx(0.2, abs=1e-12)
    t = posterior_predictive_t(NigPosterior(5, 10, 50, 10))
    assert (t.nu, t.mu) == (100.0, 5.0)
    assert t.sigma == pytest.approx(math.sqrt(11 * 10 / (10 * 50)), abs=1e-12)
    assert t.sigma == pytest.approx(0.469, abs=1e-3)


@pytest.mark.parametrize("nig", [(0.0, 1.0, 6.0, 0.5), (2.0, 0.3, 10.0, 4.0), (-1.0, 5.0, 25.0, 1.0)])
def test_predictive_variance_monte_carlo(nig):
    # heavier tails (alpha <= 4) make a 1% check at 1e6 draws unreliable
    y = nig_t_monte_carlo(*nig, n=10**6, seed=11)
    t = posterior_predictive_t(NigPosterior(*nig))
    assert y.var() == pytest.approx(t.variance, rel=0.01)


def test_noise_variance():
    assert noise_variance(NoiseVariance(2.0, 0.1)) == pytest.approx(0.1)
    assert noise_variance(NoiseVariance(2.0, 10.0)) == pytest.approx(10.0)
    with pytest.raises(DomainError):
        noise_variance(NoiseVariance(1.0, 1.0))
