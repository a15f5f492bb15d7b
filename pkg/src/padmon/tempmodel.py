"""Temperature dependence of the pad resonance.

The seasonal model is piecewise linear in rail temperature: a falling
segment in the cold, a flat plateau in the middle, and a falling segment in
the warm range, continuous at both breakpoints. Residuals against this
model are what the detector monitors.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from datetime import datetime

import numpy as np

from .errors import DataError, FitError, ConfigError
from .modal import FrequencyEstimate

logger = logging.getLogger(__name__)

DEFAULT_RANGE = (-5.0, 30.0)
DEFAULT_BINS = 18


@dataclass
class TempFreqModel:
    """Continuous three-segment model of frequency versus temperature.

    ``c`` is the plateau level at the centre of the middle segment and
    ``s1``/``s3`` the outer slopes in Hz per degree. ``s2`` is zero for the
    standard flat plateau; fits may release it for sensitivity checks.
    ``y_offset`` is a per-location vertical shift on top of the shared
    shape.
    """

    s1: float
    c: float
    s3: float
    b1: float
    b2: float
    s2: float = 0.0
    y_offset: float = 0.0
    valid_range: tuple[float, float] = DEFAULT_RANGE
    fit_rss: float | None = None
    n_points: int | None = None

    def __post_init__(self) -> None:
        if not self.b1 < self.b2:
            raise ConfigError(
                f"breakpoints must satisfy b1 < b2, got {self.b1}, {self.b2}"
            )
        lo, hi = self.valid_range
        if not lo < hi:
            raise ConfigError("empty validity range")

    def shape(self, temp_c: float | np.ndarray) -> np.ndarray:
        """Model value without the per-location offset."""
        t = np.clip(np.asarray(temp_c, dtype=float), *self.valid_range)
        mid = 0.5 * (self.b1 + self.b2)
        middle = self.c + self.s2 * (np.clip(t, self.b1, self.b2) - mid)
        out = (
            middle
            + self.s1 * np.minimum(t - self.b1, 0.0)
            + self.s3 * np.maximum(t - self.b2, 0.0)
        )
        return out


def evaluate(model: TempFreqModel, temp_c: float | np.ndarray) -> float | np.ndarray:
    """Model frequency at ``temp_c``, clamping outside the validity range."""
    t = np.asarray(temp_c, dtype=float)
    lo, hi = model.valid_range
    n_clamped = int(np.sum((t < lo) | (t > hi)))
    if n_clamped:
        logger.warning(
            "%d temperature value(s) outside [%g, %g] clamped", n_clamped, lo, hi
        )
    out = model.shape(t) + model.y_offset
    if np.isscalar(temp_c) or np.ndim(temp_c) == 0:
        return float(out)
    return out


@dataclass
class TempFreqPoint:
    """Aggregated frequency in one temperature bin.

    ``temp_c`` is the mean temperature of the contributing estimates, not
    the bin midpoint; with unevenly filled bins the member mean keeps the
    point on the underlying curve.
    """

    temp_c: float
    freq_hz: float
    n: int
    mad_hz: float


def bin_by_temperature(
    estimates: list[FrequencyEstimate],
    n_bins: int = DEFAULT_BINS,
    t_range: tuple[float, float] = DEFAULT_RANGE,
) -> list[TempFreqPoint]:
    """Median frequency per temperature bin.

    Bins partition ``t_range`` evenly; estimates outside the range count
    toward the nearest end bin. Empty bins are omitted.
    """
    if not estimates:
        raise DataError("no estimates to bin")
    if n_bins < 1:
        raise ConfigError("need at least one bin")
    lo, hi = t_range
    if not lo < hi:
        raise ConfigError("empty temperature range")
    width = (hi - lo) / n_bins
    temps = np.array([e.temp_c for e in estimates])
    freqs = np.array([e.value_hz for e in estimates])
    idx = np.clip(((temps - lo) // width).astype(int), 0, n_bins - 1)
    points: list[TempFreqPoint] = []
    for b in range(n_bins):
        sel = idx == b
        if not sel.any():
            continue
        chosen = freqs[sel]
        med = float(np.median(chosen))
        points.append(
            TempFreqPoint(
                temp_c=float(temps[sel].mean()),
                freq_hz=med,
                n=int(sel.sum()),
                mad_hz=float(np.median(np.abs(chosen - med))),
            )
        )
    return points


def fit_piecewise(
    points: list[TempFreqPoint],
    flat_middle: bool = True,
    grid_step: float = 0.1,
    t_range: tuple[float, float] = DEFAULT_RANGE,
) -> TempFreqModel:
    """Least-squares fit of the three-segment model with breakpoint search.

    Breakpoint pairs are scanned on a grid between the 10th and 90th
    temperature percentiles; for each pair the segment parameters solve a
    weighted linear least-squares problem (weights proportional to the
    member count behind each point, since a median over n estimates has
    variance falling as 1/n), and the pair with the smallest weighted
    residual sum of squares wins.
    """
    if len(points) < 6:
        raise FitError(f"need at least 6 binned points, got {len(points)}")
    if grid_step <= 0:
        raise ConfigError("grid step must be positive")
    temps = np.array([p.temp_c for p in points])
    freqs = np.array([p.freq_hz for p in points])
    root_w = np.sqrt(np.array([max(p.n, 1) for p in points], dtype=float))
    t_lo, t_hi = np.percentile(temps, [10.0, 90.0])
    grid = np.arange(t_lo, t_hi + 0.5 * grid_step, grid_step)
    if grid.size < 2:
        raise FitError("temperature span too narrow to place two breakpoints")

    target = root_w * freqs
    best: tuple[float, float, float, np.ndarray] | None = None
    for i, b1 in enumerate(grid[:-1]):
        below = temps < b1
        if not below.any():
            continue
        for b2 in grid[i + 1:]:
            if not (temps > b2).any():
                break
            design = root_w[:, None] * _design_matrix(temps, b1, b2, flat_middle)
            coef, rss, rank, _ = np.linalg.lstsq(design, target, rcond=None)
            if rank < design.shape[1]:
                continue
            total = float(rss[0]) if rss.size else float(
                np.sum((design @ coef - target) ** 2)
            )
            if best is None or total < best[0]:
                best = (total, float(b1), float(b2), coef)
    if best is None:
        raise FitError(
            "no breakpoint pair leaves points on both outer segments; "
            "temperature span is insufficient"
        )
    total, b1, b2, coef = best
    if flat_middle:
        c, s1, s3 = coef
        s2 = 0.0
    else:
        c, s2, s1, s3 = coef
    model = TempFreqModel(
        s1=float(s1),
        c=float(c),
        s3=float(s3),
        b1=b1,
        b2=b2,
        s2=float(s2),
        valid_range=t_range,
        fit_rss=total,
        n_points=len(points),
    )
    if abs(model.s1) < 1e-12 and abs(model.s3) < 1e-12:
        logger.warning("fitted slopes are both zero; model is flat")
    return model


def _design_matrix(
    temps: np.ndarray, b1: float, b2: float, flat_middle: bool
) -> np.ndarray:
    cold = np.minimum(temps - b1, 0.0)
    warm = np.maximum(temps - b2, 0.0)
    ones = np.ones_like(temps)
    if flat_middle:
        return np.column_stack([ones, cold, warm])
    mid = 0.5 * (b1 + b2)
    plateau = np.clip(temps, b1, b2) - mid
    return np.column_stack([ones, plateau, cold, warm])


def shift_to_location(
    model: TempFreqModel, estimates: list[FrequencyEstimate]
) -> TempFreqModel:
    """Refit only the vertical offset so the shared shape matches a site.

    The returned model keeps slopes and breakpoints; ``y_offset`` becomes
    the least-squares shift for the given estimates.
    """
    if not estimates:
        raise DataError("no estimates to shift against")
    temps = np.array([e.temp_c for e in estimates])
    freqs = np.array([e.value_hz for e in estimates])
    offset = float(np.mean(freqs - model.shape(temps)))
    return TempFreqModel(
        s1=model.s1,
        c=model.c,
        s3=model.s3,
        b1=model.b1,
        b2=model.b2,
        s2=model.s2,
        y_offset=offset,
        valid_range=model.valid_range,
        fit_rss=model.fit_rss,
        n_points=model.n_points,
    )


@dataclass
class ResidualSequence:
    """Frequency residuals for one location over one calendar month."""

    values: np.ndarray
    timestamps: tuple[datetime, ...]
    temps_c: np.ndarray
    location_id: str
    window: str

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        self.temps_c = np.asarray(self.temps_c, dtype=float)
        if not (
            self.values.size == len(self.timestamps) == self.temps_c.size
        ):
            raise DataError("residual columns must have matching lengths")
        if self.values.size == 0:
            raise DataError("empty residual sequence")
        if not np.isfinite(self.values).all():
            raise DataError("residuals must be finite")

    @property
    def n(self) -> int:
        return int(self.values.size)


def residuals(
    estimates: list[FrequencyEstimate], model: TempFreqModel
) -> list[ResidualSequence]:
    """Estimate-minus-model residuals grouped into calendar months.

    All estimates must come from one location; sequences are returned in
    chronological window order.
    """
    if not estimates:
        raise DataError("no estimates to compute residuals from")
    locations = {e.location_id for e in estimates}
    if len(locations) != 1:
        raise DataError(
            f"residuals expect a single location, got {sorted(locations)}"
        )
    location = locations.pop()
    by_month: dict[str, list[FrequencyEstimate]] = {}
    for e in sorted(estimates, key=lambda e: e.timestamp):
        by_month.setdefault(e.timestamp.strftime("%Y-%m"), []).append(e)
    out: list[ResidualSequence] = []
    for window in sorted(by_month):
        members = by_month[window]
        temps = np.array([e.temp_c for e in members])
        vals = np.array([e.value_hz for e in members]) - (
            model.shape(temps) + model.y_offset
        )
        out.append(
            ResidualSequence(
                values=vals,
                timestamps=tuple(e.timestamp for e in members),
                temps_c=temps,
                location_id=location,
                window=window,
            )
        )
    return out


# ---------------------------------------------------------------------------
# Model and residual files


def write_model(model: TempFreqModel, path: str) -> None:
    payload = {
        "s1": model.s1,
        "c": model.c,
        "s3": model.s3,
        "b1": model.b1,
        "b2": model.b2,
        "s2": model.s2,
        "y_offset": model.y_offset,
        "valid_range": list(model.valid_range),
        "fit_rss": model.fit_rss,
        "n_points": model.n_points,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_model(path: str) -> TempFreqModel:
    try:
        with open(path) as fh:
            payload = json.load(fh)
        return TempFreqModel(
            s1=float(payload["s1"]),
            c=float(payload["c"]),
            s3=float(payload["s3"]),
            b1=float(payload["b1"]),
            b2=float(payload["b2"]),
            s2=float(payload.get("s2", 0.0)),
            y_offset=float(payload.get("y_offset", 0.0)),
            valid_range=tuple(payload.get("valid_range", DEFAULT_RANGE)),
            fit_rss=payload.get("fit_rss"),
            n_points=payload.get("n_points"),
        )
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: malformed model file ({exc})") from exc


def write_residuals(sequences: list[ResidualSequence], path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "location_id", "residual_hz", "temp_c"])
        for seq in sequences:
            for ts, r, t in zip(seq.timestamps, seq.values, seq.temps_c):
                w.writerow(
                    [ts.isoformat(), seq.location_id, repr(float(r)), repr(float(t))]
                )


def read_residuals(path: str) -> list[ResidualSequence]:
    """Read a residual log back into monthly sequences per location."""
    rows: list[tuple[datetime, str, float, float]] = []
    try:
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r, None)
            if header is None or header[0] != "timestamp":
                raise DataError(f"{path}: missing residual header")
            for row in r:
                if not row:
                    continue
                rows.append(
                    (
                        datetime.fromisoformat(row[0]),
                        row[1],
                        float(row[2]),
                        float(row[3]),
                    )
                )
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: malformed residual log ({exc})") from exc
    groups: dict[tuple[str, str], list[tuple[datetime, float, float]]] = {}
    for ts, loc, val, temp in sorted(rows, key=lambda r: (r[1], r[0])):
        groups.setdefault((loc, ts.strftime("%Y-%m")), []).append((ts, val, temp))
    out = []
    for (loc, window), members in sorted(groups.items()):
        out.append(
            ResidualSequence(
                values=np.array([m[1] for m in members]),
                timestamps=tuple(m[0] for m in members),
                temps_c=np.array([m[2] for m in members]),
                location_id=loc,
                window=window,
            )
        )
    return out


__all__ = [
    "TempFreqModel",
    "TempFreqPoint",
    "ResidualSequence",
    "DEFAULT_RANGE",
    "DEFAULT_BINS",
    "evaluate",
    "bin_by_temperature",
    "fit_piecewise",
    "shift_to_location",
    "residuals",
    "write_model",
    "read_model",
    "write_residuals",
    "read_residuals",
]
