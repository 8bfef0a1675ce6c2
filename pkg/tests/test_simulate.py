import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bleprox.errors import ConfigError
from bleprox.ingest import TransformMode, load_manifest
from bleprox.models import DiscriminativeModel, known_device_model
from bleprox.simulate import (
    CIRCLE_WALK,
    ObsConfig,
    WalkConfig,
    proximity_corpus,
    random_walk,
    random_walk_experiment,
    sample_observations,
    two_class_corpus,
    write_corpus,
)


def test_zero_noise_walk_is_constant():
    for geom in ("line", "circle"):
        d = random_walk(WalkConfig(50, 0.0, init=1.5, geometry=geom))
        np.testing.assert_allclose(d, 1.5, atol=1e-12)


@settings(max_examples=20)
@given(st.integers(0, 2**32), st.floats(0.001, 1.0))
def test_line_walk_non_negative(seed, q):
    d = random_walk(WalkConfig(200, q, init=0.1, seed=seed))
    assert np.all(d >= 0)


@settings(max_examples=20)
@given(st.integers(0, 2**32))
def test_circle_walk_bounded_by_diameter(seed):
    d = random_walk(WalkConfig(300, 0.09, geometry="circle", radius=2.0, seed=seed))
    assert np.all(d > 0) and np.all(d <= 4.0 + 1e-12)


def test_walk_config_validation():
    with pytest.raises(ConfigError):
        WalkConfig(0, 0.1)
    with pytest.raises(ConfigError):
        WalkConfig(10, 0.1, geometry="circle", radius=1.0, init=3.0)
    with pytest.raises(ConfigError):
        ObsConfig(known_device_model(), dropout=1.5)


def test_full_dropout():
    x = sample_observations(np.ones(100), ObsConfig(known_device_model(), dropout=1.0))
    assert np.isnan(x).all()


def test_noiseless_observations():
    m = DiscriminativeModel("loglinear", 0.21, 3.92, 1e-300, mode=TransformMode.LOG_NEG_RSSI)
    d = np.linspace(0.5, 4, 20)
    np.testing.assert_allclose(sample_observations(d, ObsConfig(m)), m.mean(d), atol=1e-12)


def test_circle_walk_observation_count():
    s = random_walk_experiment(seed=0)
    assert s.T == 1000
    n_obs = int(s.observed.sum())
    assert abs(n_obs - 500) <= 47
    assert CIRCLE_WALK["radius"] == 2.0 and CIRCLE_WALK["q_sim"] == 0.09


def test_empirical_mean_matches_model():
    m = known_device_model()
    n = 20_000
    x = sample_observations(np.full(n, 2.0), ObsConfig(m, seed=4))
    assert abs(x.mean() - m.mean(2.0)) <= 3 * math.sqrt(m.theta_r / n)


def test_dropout_count_is_binomial():
    m = known_device_model()
    for seed in range(5):
        x = sample_observations(np.ones(2000), ObsConfig(m, dropout=0.3, seed=seed))
        kept = int((~np.isnan(x)).sum())
        assert abs(kept - 1400) <= 4 * math.sqrt(2000 * 0.3 * 0.7)


def test_seeded_determinism():
    a = random_walk_experiment(seed=5)
    b = random_walk_experiment(seed=5)
    np.testing.assert_array_equal(a.truth, b.truth)
    np.testing.assert_array_equal(a.x, b.x)


def test_corpus_shapes():
    model = known_device_model()
    prox = proximity_corpus(model, steps=20)
    assert len(prox) == 24 and len({s.proximity for s in prox}) == 8
    tc = two_class_corpus(model, n=6, steps=20)
    assert [s.label for s in tc] == ["H1", "H0"] * 3
    assert all(s.truth_bound is not None for s in tc)


@pytest.mark.parametrize("mode", list(TransformMode))
def test_written_corpus_reads_back(tmp_path, mode):
    scen = [random_walk_experiment(mode, seed=i, steps=50) for i in range(2)]
    path = write_corpus(scen, tmp_path)
    back = load_manifest(path).load()
    for a, b in zip(scen, back):
        np.testing.assert_allclose(b.x, a.x, atol=1e-9, equal_nan=True)
        np.testing.assert_allclose(b.truth, a.truth)
        assert b.mode is mode
