"""Assembling a generative observation model from calibration and context files.

Inputs (all optional):

* calibration CSV ``tx_model,rx_model,epsilon_dbm``: anechoic pair offsets;
* market-share CSV ``model,share``;
* context directory of ``{env}_{loc}_{angle}.csv`` captures, where
  ``env == "reference"`` marks the anechoic reference sets.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .conjugate import NoiseVariance
from .errors import EmptyFile, InsufficientData, MalformedRow
from .ingest import TransformMode, read_samples, transform_observation
from .mixture import (
    antenna_shift_variable,
    context_shift_variable,
    device_pair_dirichlet,
    device_shift_variable,
    fit_reference_shifts,
)
from .models import DEFAULT_GRID, GenerativeModel, build_generative_model

REFERENCE_ENV = "reference"
GSMA_RESPONDENTS = 2123

DEFAULT_NOISE = {
    TransformMode.LOG_NEG_RSSI: NoiseVariance(alpha=2.0, beta=0.1),
    TransformMode.RAW_RSSI: NoiseVariance(alpha=2.0, beta=10.0),
}


def read_calibration(path: str | Path) -> dict[tuple[str, str], float]:
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                out[(row["tx_model"].strip(), row["rx_model"].strip())] = float(row["epsilon_dbm"])
            except (KeyError, AttributeError, ValueError):
                raise MalformedRow(f"{path}:{lineno}: {row!r}") from None
    if not out:
        raise EmptyFile(f"{path}: no calibration rows")
    return out


def read_market_shares(path: str | Path) -> tuple[list[str], np.ndarray]:
    names, shares = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                names.append(row["model"].strip())
                shares.append(float(row["share"]))
            except (KeyError, AttributeError, ValueError):
                raise MalformedRow(f"{path}:{lineno}: {row!r}") from None
    if not names:
        raise EmptyFile(f"{path}: no market-share rows")
    return names, np.asarray(shares)


def read_context_dir(path: str | Path, mode: TransformMode):
    """Split ``{env}_{loc}_{angle}.csv`` captures into reference and context sets."""
    reference, contexts = {}, {}
    for f in sorted(Path(path).glob("*.csv")):
        parts = f.stem.split("_")
        if len(parts) != 3:
            raise MalformedRow(f"{f.name}: expected {{env}}_{{loc}}_{{angle}}.csv")
        env, loc, pos = parts
        xs = np.atleast_1d(transform_observation(read_samples(f).rssi, mode))
        if env == REFERENCE_ENV:
            reference[(loc, pos)] = xs
        else:
            contexts[(env, loc, pos)] = xs
    if not contexts:
        raise InsufficientData(f"{path}: no context captures")
    return reference, contexts


def build_from_files(
    mode: TransformMode | str = TransformMode.LOG_NEG_RSSI,
    *,
    calibration: str | Path | None = None,
    shares: str | Path | None = None,
    respondents: int = GSMA_RESPONDENTS,
    antenna_epsilon: float | None = None,
    context_dir: str | Path | None = None,
    grid=DEFAULT_GRID,
    noise: NoiseVariance | None = None,
    q: float | None = None,
    seed: int = 0,
) -> GenerativeModel:
    mode = TransformMode.parse(mode)
    noise = noise or DEFAULT_NOISE[mode]
    per_point = [[] for _ in grid]

    if calibration is not None:
        eps = read_calibration(calibration)
        if shares is not None:
            types, p = read_market_shares(shares)
        else:
            types = sorted({m for pair in eps for m in pair})
            p = np.full(len(types), 1.0 / len(types))
        weights = device_pair_dirichlet(p, respondents)
        for i, d in enumerate(grid):
            per_point[i].append(device_shift_variable(eps, types, weights, d, mode))

    if antenna_epsilon is not None:
        for i, d in enumerate(grid):
            per_point[i].append(antenna_shift_variable(antenna_epsilon, d, mode))

    if context_dir is not None:
        reference, contexts = read_context_dir(context_dir, mode)
        shifts = fit_reference_shifts(reference, contexts, seed=seed)
        envs = sorted({k[0] for k in contexts}, key=lambda e: (not e.lower().startswith("in"), e))
        locs = sorted({k[1] for k in contexts}, key=lambda l: (not l.lower().startswith("conceal"), l))
        positions = sorted({k[2] for k in contexts})
        sv = context_shift_variable(shifts, envs, locs, positions)
        for lst in per_point:
            lst.append(sv)

    return build_generative_model(per_point, noise, grid, mode, q=q)
