import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bleprox.errors import DomainError
from bleprox.friis import (
    WAVELENGTH,
    base_function,
    friis_gain,
    min_model_distance,
    shift_to_x_space,
    unit_gain_distance,
)
from bleprox.ingest import TransformMode

LOG, RAW = TransformMode.LOG_NEG_RSSI, TransformMode.RAW_RSSI


def test_unit_gain_distance():
    d0 = unit_gain_distance()
    assert d0 == pytest.approx(0.009947, abs=1e-6)
    assert friis_gain(d0) == pytest.approx(0.0, abs=1e-12)


def test_gain_values():
    assert friis_gain(1.0) == pytest.approx(-40.046, abs=1e-3)
    assert friis_gain(2.0) == pytest.approx(-46.067, abs=1e-3)


def test_base_function_values():
    assert base_function(1.0, LOG) == pytest.approx(3.690, abs=1e-3)
    assert base_function(1.0, RAW) == friis_gain(1.0)


def test_base_function_domain():
    with pytest.raises(DomainError):
        base_function(unit_gain_distance(), LOG)
    with pytest.raises(DomainError):
        friis_gain(0.0)


def test_min_model_distance_is_inside_domain():
    assert min_model_distance() == pytest.approx(1.05 * WAVELENGTH / (4 * math.pi))
    assert math.isfinite(base_function(min_model_distance(), LOG))


@given(st.floats(0.02, 1e3))
def test_doubling_loses_6db(d):
    assert friis_gain(2 * d) - friis_gain(d) == pytest.approx(-20 * math.log10(2), abs=1e-9)


def test_shift_examples():
    assert shift_to_x_space(0.0, 2.5, LOG) == 0.0
    assert shift_to_x_space(3.0, 1.0, LOG) == pytest.approx(math.log(1 + 3 / 40.046), abs=1e-5)
    assert shift_to_x_space(3.0, 1.0, RAW) == -3.0


@given(st.floats(-1.0, 1.0), st.floats(0.05, 20.0))
def test_shift_first_order(eps, d):
    g = friis_gain(d)
    delta = shift_to_x_space(eps, d, LOG)
    assert abs(delta - (-eps / g)) <= eps**2 / g**2 + 1e-15


def test_shift_beyond_log_domain_is_rejected():
    with pytest.raises(DomainError):
        shift_to_x_space(-50.0, 1.0, LOG)
