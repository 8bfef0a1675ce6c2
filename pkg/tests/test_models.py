import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bleprox.conjugate import NoiseVariance, TComponent
from bleprox.errors import ConfigError, DomainError
from bleprox.friis import base_function, min_model_distance
from bleprox.ingest import TransformMode
from bleprox.mixture import ShiftVariable
from bleprox.models import (
    DEFAULT_GRID,
    AffineModel,
    DiscriminativeModel,
    ModelForm,
    build_generative_model,
    discriminative_mean,
    gaussian_band,
    known_device_model,
    load_model,
    model_from_dict,
    ridge_log_fit,
    rms_curve_error,
    save_model,
)

LOG, RAW = TransformMode.LOG_NEG_RSSI, TransformMode.RAW_RSSI
NOISE = NoiseVariance(2.0, 0.1)


def test_discriminative_mean_examples():
    assert discriminative_mean(1.0, (1.0, 0.0), ModelForm.SCALED_BASE, LOG) == pytest.approx(3.690, abs=1e-3)
    assert discriminative_mean(1.0, (0.21, 3.92), ModelForm.LOG_LINEAR, LOG) == pytest.approx(3.92)
    assert discriminative_mean(math.e, (-8.69, -67.9), ModelForm.LOG_LINEAR, RAW) == pytest.approx(-76.59, abs=1e-9)


def test_generative_without_shifts_raw_is_exact():
    m = build_generative_model([], NOISE, mode=RAW)
    d = np.array(DEFAULT_GRID)
    np.testing.assert_allclose(m.mean(d), base_function(d, RAW), atol=1e-6)
    np.testing.assert_allclose(m.var(np.array([0.1, 1.0, 20.0])), 0.1)


def test_generative_without_shifts_log_fits_base():
    m = build_generative_model([], NOISE, mode=LOG)
    d = np.array(DEFAULT_GRID)
    a, b = ridge_log_fit(d, base_function(d, LOG))
    assert (m.slope, m.intercept) == pytest.approx((a, b))
    assert np.max(np.abs(m.mean(d) - base_function(d, LOG))) < 0.05


def test_constant_shift_is_additive():
    delta = 0.3
    sv = ShiftVariable.single(TComponent(6.0, delta, 0.1))
    base = build_generative_model([], NOISE, mode=LOG)
    shifted = build_generative_model([sv], NOISE, mode=LOG)
    assert shifted.intercept - base.intercept == pytest.approx(delta, abs=1e-9)
    assert shifted.slope == pytest.approx(base.slope, abs=1e-9)
    assert shifted.var(1.0) == pytest.approx(0.1 + 0.01 * 6 / 4)


def test_per_grid_shift_lists():
    svs = [[ShiftVariable.single(TComponent(5.0, 0.0, 0.1 * (i + 1)))] for i in range(len(DEFAULT_GRID))]
    m = build_generative_model(svs, NOISE, mode=LOG)
    assert np.all(np.diff(m.var_grid) > 0)
    with pytest.raises(ConfigError):
        build_generative_model(svs[:3], NOISE, mode=LOG)


@given(st.lists(st.floats(-0.5, 0.5), min_size=1, max_size=4))
def test_generative_monotone_direction(offsets):
    # zero-mean shifts leave the Friis decay in place
    svs = [ShiftVariable.single(TComponent(5.0, 0.0, abs(o) + 0.01)) for o in offsets]
    d = np.geomspace(0.2, 10, 50)
    assert np.all(np.diff(build_generative_model(svs, NOISE, mode=LOG).mean(d)) >= 0)
    assert np.all(np.diff(build_generative_model(svs, NoiseVariance(2, 10), mode=RAW).mean(d)) <= 0)


def test_variance_interpolates_in_log_distance():
    m = build_generative_model(
        [[ShiftVariable.single(TComponent(5.0, 0.0, s))] for s in (0.1, 0.3)], NOISE,
        grid=(1.0, 4.0), mode=LOG,
    )
    v1, v4 = m.var_grid
    assert m.var(2.0) == pytest.approx((v1 + v4) / 2)
    assert m.var(100.0) == pytest.approx(v4)


def test_grid_inside_log_domain():
    with pytest.raises(DomainError):
        build_generative_model([], NOISE, grid=(0.005, 1.0), mode=LOG)


def test_at_state_folds_and_clamps():
    m = known_device_model(LOG)
    mu, _ = m.at_state(np.array([-2.0, 2.0, 0.0]))
    assert mu[0] == mu[1]
    assert mu[2] == pytest.approx(m.mean(min_model_distance()))
    a = AffineModel(2.0, 1.0, 1.0)
    assert a.at_state(np.array([-1.0]))[0].tolist() == [-1.0]


def test_round_trip(tmp_path):
    for model in (
        known_device_model(LOG),
        DiscriminativeModel("scaled", 1.0, 2.0, 0.5, q=0.02, mode=RAW),
        build_generative_model([], NOISE, mode=LOG, q=0.05),
        AffineModel(1.0, 0.0, 1.0, q=0.1),
    ):
        save_model(model, tmp_path / "m.json")
        back = load_model(tmp_path / "m.json")
        assert back.to_dict() == model.to_dict()
        assert back.mode is model.mode


def test_bad_model_document():
    with pytest.raises(ConfigError):
        model_from_dict({"kind": "nope", "mode": "lognormal"})
    with pytest.raises(ConfigError):
        model_from_dict({"kind": "discriminative", "mode": "lognormal"})


def test_band_and_curve_error():
    m = known_device_model(RAW)
    mu, lo, hi = gaussian_band(m, np.array([1.0, 2.0]))
    assert np.all(lo < mu) and np.all(mu < hi)
    assert hi[0] - mu[0] == pytest.approx(1.6448536 * math.sqrt(97.03), rel=1e-6)
    assert rms_curve_error(m, m) == 0.0


def test_nonpositive_variance_rejected():
    with pytest.raises(DomainError):
        DiscriminativeModel("loglinear", 0.2, 3.9, 0.0)
