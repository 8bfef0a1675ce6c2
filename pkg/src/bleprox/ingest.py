"""Reading RSSI captures and turning them into slot-indexed scenarios.

A scenario holds one device-pair encounter on a regular grid of ``T`` time
slots of width ``delta_t``. Observations live in transformed ``x`` space and
missing slots are ``NaN``. Ground truth, when known, is a distance per slot.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

import numpy as np

from .errors import (
    ConfigError,
    DomainError,
    EmptyFile,
    EmptySequence,
    MalformedRow,
    NonNegativeRssi,
)

FEET = 0.3048

# slack for float round-off when a time sits exactly on a slot edge
_EDGE_EPS = 1e-9


class TransformMode(str, enum.Enum):
    """How raw RSSI in dBm maps to the Gaussian observation variable."""

    LOG_NEG_RSSI = "lognormal"  # x = log(-rssi)
    RAW_RSSI = "gaussian"  # x = rssi

    @classmethod
    def parse(cls, value: "str | TransformMode") -> "TransformMode":
        if isinstance(value, cls):
            return value
        aliases = {
            "lognormal": cls.LOG_NEG_RSSI,
            "lognegrssi": cls.LOG_NEG_RSSI,
            "log": cls.LOG_NEG_RSSI,
            "gaussian": cls.RAW_RSSI,
            "rawrssi": cls.RAW_RSSI,
            "raw": cls.RAW_RSSI,
        }
        try:
            return aliases[str(value).lower().replace("_", "")]
        except KeyError:
            raise ConfigError(f"unknown transform mode {value!r}") from None


def transform_observation(rssi, mode: TransformMode):
    """Map RSSI (dBm) to observation space. Works on scalars and arrays."""
    mode = TransformMode.parse(mode)
    arr = np.asarray(rssi, dtype=float)
    if mode is TransformMode.RAW_RSSI:
        return arr.item() if arr.ndim == 0 else arr.copy()
    if np.any(arr >= 0):
        raise NonNegativeRssi(f"RSSI must be < 0 dBm under log transform, got {arr.max()}")
    out = np.log(-arr)
    return out.item() if out.ndim == 0 else out


def inverse_transform(x, mode: TransformMode):
    """Observation space back to RSSI (dBm)."""
    mode = TransformMode.parse(mode)
    arr = np.asarray(x, dtype=float)
    out = -np.exp(arr) if mode is TransformMode.LOG_NEG_RSSI else arr.copy()
    return out.item() if out.ndim == 0 else out


@dataclass(frozen=True)
class RssiSamples:
    """Raw capture: times in seconds (sorted) with RSSI in dBm."""

    time: np.ndarray
    rssi: np.ndarray
    distance: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.time)


@dataclass(frozen=True)
class Resampled:
    """Slot grid produced by :func:`resample`. ``values`` is NaN where empty."""

    start: float
    delta_t: float
    values: np.ndarray
    counts: np.ndarray

    @property
    def slot_times(self) -> np.ndarray:
        return self.start + self.delta_t * np.arange(len(self.values))

    @property
    def missing(self) -> np.ndarray:
        return self.counts == 0


@dataclass
class Scenario:
    """One encounter on a periodic grid of ``T`` slots.

    ``x`` has length ``T`` with NaN at slots lacking an observation. ``truth``
    is the per-slot distance in metres, or None for bound-only data where
    only ``truth_bound`` (metres) and ``label`` are known.
    """

    id: str
    delta_t: float
    x: np.ndarray
    mode: TransformMode
    truth: np.ndarray | None = None
    label: str | None = None
    truth_bound: float | None = None
    proximity: float | None = None
    samples: RssiSamples | None = field(default=None, repr=False)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        if self.delta_t <= 0:
            raise ConfigError("delta_t must be positive")
        if self.truth is not None:
            self.truth = np.asarray(self.truth, dtype=float)
            if self.truth.shape != self.x.shape:
                raise DomainError(
                    f"truth covers {len(self.truth)} slots but scenario has {len(self.x)}"
                )
            if np.any(~(self.truth > 0)):
                raise DomainError("ground-truth distances must be positive")

    @property
    def T(self) -> int:
        return len(self.x)

    @property
    def observed(self) -> np.ndarray:
        return ~np.isnan(self.x)

    def observations(self) -> list[tuple[int, float]]:
        """Observed ``(t, x)`` pairs with 1-based ``t``."""
        idx = np.flatnonzero(self.observed)
        return [(int(i) + 1, float(self.x[i])) for i in idx]


def read_samples(source: TextIO | str | Path, allow_empty: bool = False) -> RssiSamples:
    """Parse a ``time_s,rssi_dbm[,distance_m]`` CSV. Rows are stably sorted by time."""
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_samples(fh, allow_empty)
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None:
        raise EmptyFile("no header row")
    header = [h.strip() for h in header]
    try:
        i_t, i_r = header.index("time_s"), header.index("rssi_dbm")
    except ValueError:
        raise MalformedRow(f"header must contain time_s and rssi_dbm, got {header}") from None
    i_d = header.index("distance_m") if "distance_m" in header else None

    times, rssi, dist = [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            t = float(row[i_t])
            r = float(row[i_r])
            d = float(row[i_d]) if i_d is not None else None
        except (ValueError, IndexError):
            raise MalformedRow(f"line {lineno}: {row!r}") from None
        if not (math.isfinite(t) and math.isfinite(r)) or t < 0:
            raise MalformedRow(f"line {lineno}: non-finite or negative value in {row!r}")
        times.append(t)
        rssi.append(r)
        dist.append(d)
    if not times and not allow_empty:
        raise EmptyFile("no data rows")
    order = np.argsort(np.asarray(times), kind="stable")
    return RssiSamples(
        time=np.asarray(times)[order],
        rssi=np.asarray(rssi)[order],
        distance=np.asarray(dist, dtype=float)[order] if i_d is not None else None,
    )


def read_truth(source: TextIO | str | Path) -> np.ndarray:
    """Parse a ``t,distance_m`` sidecar (1-based, contiguous ``t``) into an array."""
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_truth(fh)
    reader = csv.DictReader(source)
    rows = []
    for lineno, row in enumerate(reader, start=2):
        try:
            rows.append((int(row["t"]), float(row["distance_m"])))
        except (KeyError, TypeError, ValueError):
            raise MalformedRow(f"truth line {lineno}: {row!r}") from None
    if not rows:
        raise EmptyFile("truth file has no rows")
    rows.sort()
    ts = [t for t, _ in rows]
    if ts != list(range(1, len(rows) + 1)):
        raise MalformedRow("truth indices must cover 1..T exactly once")
    return np.array([d for _, d in rows])


def resample(
    times,
    values,
    delta_t: float,
    *,
    start: float | None = None,
    n_slots: int | None = None,
) -> Resampled:
    """Average samples into half-open slots ``[start + k*dt, start + (k+1)*dt)``.

    By default the grid is anchored at ``floor(first / dt) * dt`` and ends at
    the slot holding the last sample. Samples outside an explicit
    ``n_slots`` window are dropped.
    """
    if delta_t <= 0:
        raise ConfigError("delta_t must be positive")
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size == 0 and (start is None or n_slots is None):
        raise EmptySequence("cannot resample an empty sequence without an explicit window")
    if start is None:
        start = math.floor(times.min() / delta_t + _EDGE_EPS) * delta_t
    slot = np.floor((times - start) / delta_t + _EDGE_EPS).astype(np.int64)
    if n_slots is None:
        n_slots = int(slot.max()) + 1
    keep = (slot >= 0) & (slot < n_slots)
    slot, values = slot[keep], values[keep]
    counts = np.bincount(slot, minlength=n_slots)
    sums = np.bincount(slot, weights=values, minlength=n_slots)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return Resampled(start=float(start), delta_t=float(delta_t), values=means, counts=counts)


def _nearest_truth(sample_times, sample_dist, slot_centres) -> np.ndarray:
    idx = np.searchsorted(sample_times, slot_centres)
    idx = np.clip(idx, 1, len(sample_times) - 1) if len(sample_times) > 1 else np.zeros_like(idx)
    if len(sample_times) > 1:
        left = sample_times[idx - 1]
        right = sample_times[idx]
        idx = np.where(np.abs(slot_centres - left) <= np.abs(right - slot_centres), idx - 1, idx)
    return sample_dist[idx]


def parse_scenario(
    source: TextIO | str | Path,
    *,
    delta_t: float = 1.0,
    mode: TransformMode | str = TransformMode.LOG_NEG_RSSI,
    scenario_id: str = "scenario",
    truth: TextIO | str | Path | np.ndarray | None = None,
    label: str | None = None,
    truth_bound: float | None = None,
    proximity: float | None = None,
) -> Scenario:
    """Build a :class:`Scenario` from a capture CSV.

    Values are transformed first and then averaged per slot. With a truth
    sidecar the grid starts at time 0 and spans exactly the truth length;
    otherwise it spans first to last sample and any ``distance_m`` column is
    aligned to slot centres by nearest neighbour.
    """
    mode = TransformMode.parse(mode)
    samples = read_samples(source, allow_empty=truth is not None)
    xs = transform_observation(samples.rssi, mode)
    xs = np.atleast_1d(xs)

    truth_arr = None
    if truth is not None:
        truth_arr = truth if isinstance(truth, np.ndarray) else read_truth(truth)
        grid = resample(samples.time, xs, delta_t, start=0.0, n_slots=len(truth_arr))
    else:
        grid = resample(samples.time, xs, delta_t)
        if samples.distance is not None:
            centres = grid.slot_times + 0.5 * delta_t
            truth_arr = _nearest_truth(samples.time, samples.distance, centres)

    return Scenario(
        id=scenario_id,
        delta_t=delta_t,
        x=grid.values,
        mode=mode,
        truth=truth_arr,
        label=label,
        truth_bound=truth_bound,
        proximity=proximity,
        samples=samples,
    )


def scenario_from_text(text: str, **kwargs) -> Scenario:
    return parse_scenario(io.StringIO(text), **kwargs)


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    observations: Path
    truth: Path | None = None
    label: str | None = None
    truth_bound: float | None = None
    proximity: float | None = None


@dataclass(frozen=True)
class Manifest:
    delta_t: float
    mode: TransformMode
    scenarios: tuple[ManifestEntry, ...]
    root: Path = Path(".")

    def load(self) -> list[Scenario]:
        out = []
        for e in self.scenarios:
            out.append(
                parse_scenario(
                    self.root / e.observations,
                    delta_t=self.delta_t,
                    mode=self.mode,
                    scenario_id=e.id,
                    truth=(self.root / e.truth) if e.truth is not None else None,
                    label=e.label,
                    truth_bound=e.truth_bound,
                    proximity=e.proximity,
                )
            )
        return out

    def to_dict(self) -> dict:
        return {
            "delta_t": self.delta_t,
            "mode": self.mode.value,
            "scenarios": [
                {
                    k: v
                    for k, v in {
                        "id": e.id,
                        "observations": e.observations.as_posix(),
                        "truth": e.truth.as_posix() if e.truth is not None else None,
                        "label": e.label,
                        "truth_bound_m": e.truth_bound,
                        "proximity_m": e.proximity,
                    }.items()
                    if v is not None
                }
                for e in self.scenarios
            ],
        }


def _bound_metres(entry: dict) -> float | None:
    if entry.get("truth_bound_m") is not None:
        return float(entry["truth_bound_m"])
    if entry.get("truth_bound_ft") is not None:
        return float(entry["truth_bound_ft"]) * FEET
    return None


def load_manifest(path: str | Path) -> Manifest:
    """Read a JSON manifest. Relative file paths resolve against its directory."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    try:
        entries = tuple(
            ManifestEntry(
                id=str(s.get("id", Path(s["observations"]).stem)),
                observations=Path(s["observations"]),
                truth=Path(s["truth"]) if s.get("truth") else None,
                label=s.get("label"),
                truth_bound=_bound_metres(s),
                proximity=float(s["proximity_m"]) if s.get("proximity_m") is not None else None,
            )
            for s in doc["scenarios"]
        )
        return Manifest(
            delta_t=float(doc.get("delta_t", 1.0)),
            mode=TransformMode.parse(doc.get("mode", "lognormal")),
            scenarios=entries,
            root=path.parent,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: bad manifest ({exc})") from None


def write_manifest(manifest: Manifest, path: str | Path) -> None:
    Path(path).write_text(json.dumps(manifest.to_dict(), indent=2) + "\n", encoding="utf-8")

