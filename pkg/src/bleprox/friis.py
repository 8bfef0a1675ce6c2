"""Free-space path loss and its image in observation space."""
from __future__ import annotations

import math

import numpy as np

from .errors import DomainError
from .ingest import TransformMode

# 2402 MHz advertising channel
WAVELENGTH = 0.125


def unit_gain_distance(wavelength: float = WAVELENGTH) -> float:
    """Distance where the Friis ratio is 1, i.e. 0 dBm received."""
    return wavelength / (4.0 * math.pi)


def min_model_distance(wavelength: float = WAVELENGTH) -> float:
    """Smallest distance at which the smoother evaluates a distance-domain model."""
    return 1.05 * unit_gain_distance(wavelength)


def _scalar_or_array(out):
    return out.item() if np.ndim(out) == 0 else out


def friis_gain(d, wavelength: float = WAVELENGTH):
    """Received power in dBm at distance ``d`` metres for 0 dBm transmit and unit gains."""
    d = np.asarray(d, dtype=float)
    if wavelength <= 0 or np.any(~(d > 0)):
        raise DomainError("distance and wavelength must be positive")
    return _scalar_or_array(20.0 * np.log10(wavelength / (4.0 * math.pi * d)))


def base_function(d, mode: TransformMode, wavelength: float = WAVELENGTH):
    """Free-space observation mean: ``log(-g(d))`` or ``g(d)`` itself in raw mode."""
    g = np.asarray(friis_gain(d, wavelength))
    if TransformMode.parse(mode) is TransformMode.RAW_RSSI:
        return _scalar_or_array(g)
    if np.any(g >= 0):
        raise DomainError(
            f"base function undefined for d <= {unit_gain_distance(wavelength):.6g} m"
        )
    return _scalar_or_array(np.log(-g))


def shift_to_x_space(epsilon: float, d: float, mode: TransformMode, wavelength: float = WAVELENGTH):
    """Convert a dBm offset ``epsilon`` on -g(d) into an additive shift on the base function."""
    if TransformMode.parse(mode) is TransformMode.RAW_RSSI:
        return -float(epsilon)
    g = friis_gain(d, wavelength)
    arg = 1.0 - epsilon / g
    if arg <= 0:
        raise DomainError(f"shift {epsilon} dBm too large for g({d})={g:.3f}")
    return math.log(arg)
