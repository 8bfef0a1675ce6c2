"""Synthetic encounters: random-walk distances and model-generated observations."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .ingest import (
    Manifest,
    ManifestEntry,
    Scenario,
    TransformMode,
    inverse_transform,
    write_manifest,
)
from .models import ObservationModel, known_device_model
from .risk import H0_BOUND_M, H1_BOUND_M
from .seeds import derive_rng

MIN_DISTANCE = 1e-6


@dataclass(frozen=True)
class WalkConfig:
    steps: int
    q_sim: float
    init: float = 2.0
    geometry: str = "line"  # "line" (folded) or "circle"
    radius: float = 2.0
    seed: int | np.random.SeedSequence | None = 0

    def __post_init__(self):
        if self.steps < 1:
            raise ConfigError("walk needs at least one step")
        if self.q_sim < 0:
            raise ConfigError("q_sim must be non-negative")
        if self.geometry not in ("line", "circle"):
            raise ConfigError(f"unknown geometry {self.geometry!r}")
        if self.geometry == "circle" and not (self.radius > 0 and 0 <= self.init <= 2 * self.radius):
            raise ConfigError("circle walk needs radius > 0 and 0 <= init <= diameter")


@dataclass(frozen=True)
class ObsConfig:
    model: ObservationModel
    dropout: float = 0.0
    seed: int | np.random.SeedSequence | None = 0

    def __post_init__(self):
        if not 0.0 <= self.dropout <= 1.0:
            raise ConfigError("dropout must lie in [0, 1]")


def random_walk(config: WalkConfig) -> np.ndarray:
    """Distances for ``steps`` slots, starting at ``init``.

    Line: ``d[t+1] = |d[t] + w|``. Circle: both devices take independent
    angular steps with variance ``q_sim / radius^2`` and the distance is the
    chord between them.
    """
    rng = np.random.default_rng(config.seed)
    n = config.steps
    if config.geometry == "line":
        w = rng.normal(0.0, math.sqrt(config.q_sim), size=n - 1)
        d = np.empty(n)
        d[0] = config.init
        for t in range(1, n):
            d[t] = abs(d[t - 1] + w[t - 1])
    else:
        r = config.radius
        sd = math.sqrt(config.q_sim) / r
        gap0 = 2.0 * math.asin(config.init / (2.0 * r))
        steps = rng.normal(0.0, sd, size=(2, n - 1))
        a = np.concatenate([[0.0], np.cumsum(steps[0])])
        b = np.concatenate([[gap0], gap0 + np.cumsum(steps[1])])
        d = 2.0 * r * np.abs(np.sin((a - b) / 2.0))
    return np.maximum(d, MIN_DISTANCE)


def sample_observations(distances, config: ObsConfig) -> np.ndarray:
    """One ``N(mean(d), var(d))`` draw per slot, NaN where dropped."""
    rng = np.random.default_rng(config.seed)
    d = np.asarray(distances, dtype=float)
    # the same clamp the smoother applies, so walks touching zero stay inside the model's domain
    mu, var = config.model.at_state(d)
    x = np.asarray(mu, dtype=float) + np.sqrt(np.asarray(var, dtype=float)) * rng.standard_normal(d.size)
    keep = rng.random(d.size) >= config.dropout
    return np.where(keep, x, np.nan)


def simulate_scenario(
    walk: WalkConfig,
    obs: ObsConfig,
    *,
    delta_t: float = 1.0,
    scenario_id: str = "sim",
    label: str | None = None,
    truth_bound: float | None = None,
    proximity: float | None = None,
) -> Scenario:
    d = random_walk(walk)
    x = sample_observations(d, obs)
    return Scenario(
        id=scenario_id,
        delta_t=delta_t,
        x=x,
        mode=obs.model.mode,
        truth=d,
        label=label,
        truth_bound=truth_bound,
        proximity=proximity,
    )


def write_scenario(scenario: Scenario, directory: str | Path) -> ManifestEntry:
    """Write ``<id>.csv`` (time_s,rssi_dbm) and ``<id>_truth.csv`` (t,distance_m).

    Observation ``k`` (0-based slot) is stamped at the slot centre.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    obs_path = directory / f"{scenario.id}.csv"
    truth_path = directory / f"{scenario.id}_truth.csv"
    with open(obs_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_s", "rssi_dbm"])
        for k in np.flatnonzero(~np.isnan(scenario.x)):
            rssi = inverse_transform(scenario.x[k], scenario.mode)
            w.writerow([repr(float((k + 0.5) * scenario.delta_t)), repr(float(rssi))])
    if scenario.truth is not None:
        with open(truth_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "distance_m"])
            for t, dist in enumerate(scenario.truth, start=1):
                w.writerow([t, repr(float(dist))])
    return ManifestEntry(
        id=scenario.id,
        observations=Path(obs_path.name),
        truth=Path(truth_path.name) if scenario.truth is not None else None,
        label=scenario.label,
        truth_bound=scenario.truth_bound,
        proximity=scenario.proximity,
    )


def write_corpus(scenarios: Sequence[Scenario], directory: str | Path) -> Path:
    """Write every scenario plus ``manifest.json``; returns the manifest path."""
    if not scenarios:
        raise ConfigError("no scenarios to write")
    directory = Path(directory)
    entries = tuple(write_scenario(s, directory) for s in scenarios)
    manifest = Manifest(
        delta_t=scenarios[0].delta_t, mode=scenarios[0].mode, scenarios=entries, root=directory
    )
    path = directory / "manifest.json"
    write_manifest(manifest, path)
    return path


# Random-walk experiment: circle of radius 2 m, 1000 s, q = 0.09, half the samples dropped.
CIRCLE_WALK = dict(steps=1000, q_sim=0.09, radius=2.0, init=2.0, dropout=0.5)


def random_walk_experiment(
    mode: TransformMode | str = TransformMode.LOG_NEG_RSSI,
    seed: int = 0,
    model: ObservationModel | None = None,
    **overrides,
) -> Scenario:
    cfg = {**CIRCLE_WALK, **overrides}
    model = model or known_device_model(mode)
    walk = WalkConfig(
        steps=cfg["steps"], q_sim=cfg["q_sim"], init=cfg["init"], geometry="circle",
        radius=cfg["radius"], seed=derive_rng(seed, "walk").integers(2**63),
    )
    obs = ObsConfig(model, dropout=cfg["dropout"], seed=derive_rng(seed, "obs").integers(2**63))
    return simulate_scenario(walk, obs, scenario_id=f"walk_{seed}")


PROXIMITY_LEVELS = (0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0)


def proximity_corpus(
    model: ObservationModel,
    levels: Sequence[float] = PROXIMITY_LEVELS,
    per_level: int = 3,
    steps: int = 300,
    q_sim: float = 0.002,
    dropout: float = 0.3,
    seed: int = 0,
) -> list[Scenario]:
    """Folded-line walks started at each proximity level, ``per_level`` each."""
    out = []
    for i, level in enumerate(levels):
        for j in range(per_level):
            walk = WalkConfig(steps, q_sim, init=level, seed=derive_rng(seed, "walk", i, j).integers(2**63))
            obs = ObsConfig(model, dropout, seed=derive_rng(seed, "obs", i, j).integers(2**63))
            out.append(
                simulate_scenario(walk, obs, scenario_id=f"p{i}_{j}", proximity=float(level))
            )
    return out


def two_class_corpus(
    model: ObservationModel,
    n: int = 40,
    steps: int = 600,
    q_sim: float = 0.0005,
    dropout: float = 0.3,
    seed: int = 0,
) -> list[Scenario]:
    """Alternating high-risk (start within 6 ft) and low-risk (start beyond 10 ft) encounters."""
    rng = derive_rng(seed, "starts")
    out = []
    for k in range(n):
        high = k % 2 == 0
        start = rng.uniform(0.5, 1.5) if high else rng.uniform(3.5, 6.0)
        walk = WalkConfig(steps, q_sim, init=start, seed=derive_rng(seed, "walk", k).integers(2**63))
        obs = ObsConfig(model, dropout, seed=derive_rng(seed, "obs", k).integers(2**63))
        out.append(
            simulate_scenario(
                walk, obs, scenario_id=f"{'h1' if high else 'h0'}_{k}",
                label="H1" if high else "H0",
                truth_bound=H1_BOUND_M if high else H0_BOUND_M,
            )
        )
    return out
