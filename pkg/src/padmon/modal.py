"""Subspace identification of the pad resonance and per-passage estimation.

A second-order discrete state-space model is identified from the selected
IMF via a block-Hankel SVD; its complex eigenvalue pair gives the modal
frequency. Per-passage aggregation applies the filter, slices bogies, and
takes the median over segment estimates.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, replace
from datetime import datetime

import numpy as np

from . import emd
from .errors import (
    ConfigError,
    DataError,
    DecompositionError,
    EstimationError,
    IdentificationError,
)
from .ingest import PassageRecord, TemperatureSeries, lowpass, normalize, slice_bogies

logger = logging.getLogger(__name__)

#: Estimates outside this band are discarded as misidentified modes.
DEFAULT_BAND = (400.0, 650.0)

#: Block-Hankel depth.  Sixty rows (3 ms at 20 kHz) span roughly 1.5
#: periods of the slowest accepted mode, which the shallower depths do not;
#: below ~30 rows the residual mixing from decomposition biases the
#: frequency by several hertz.
DEFAULT_HANKEL_ROWS = 60

#: Hankel columns closer than this to a wheel impact are dropped: the free
#: decay assumed by the shift-invariance step does not hold across an
#: impulsive re-excitation, and the causal filter onset behaves the same way.
DEFAULT_GUARD_S = 0.003

#: One-step-ahead relative prediction error above which a model is rejected.
DEFAULT_QUALITY_MAX = 0.9

_MIN_LENGTH_FACTOR = 4


@dataclass
class StateSpaceModel:
    """Order-2 discrete LTI model with an oscillatory eigenvalue pair."""

    a: np.ndarray
    c: np.ndarray
    fit_quality: float

    def __post_init__(self) -> None:
        self.a = np.asarray(self.a, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        if self.a.shape != (2, 2) or self.c.shape != (2,):
            raise IdentificationError("model must be order 2 with a 1x2 output map")
        lam = np.linalg.eigvals(self.a)
        if np.max(np.abs(lam.imag)) <= 1e-9 * np.max(np.abs(lam)):
            raise IdentificationError(
                "eigenvalues are effectively real; no oscillatory mode present"
            )
        if np.max(np.abs(lam)) >= 1.05:
            raise IdentificationError(
                f"unstable model, spectral radius {np.max(np.abs(lam)):.3f}"
            )

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.a)


def identify_order2(
    imf: np.ndarray,
    ts_s: float,
    hankel_rows: int = DEFAULT_HANKEL_ROWS,
    excitation_idx: np.ndarray | None = None,
    guard_s: float = DEFAULT_GUARD_S,
) -> StateSpaceModel:
    """Identify an order-2 model from one IMF by block-Hankel SVD.

    ``excitation_idx`` lists sample indices of known wheel impacts within
    the IMF; columns overlapping those instants (plus ``guard_s`` after)
    are excluded before the SVD so only free-decay data constrains the
    model.
    """
    if hankel_rows < 4:
        raise ConfigError(f"hankel_rows must be at least 4, got {hankel_rows}")
    if ts_s <= 0:
        raise ConfigError("sample interval must be positive")
    y = np.asarray(imf, dtype=float)
    if y.size < _MIN_LENGTH_FACTOR * hankel_rows:
        raise DataError(
            f"IMF too short for identification: {y.size} samples, "
            f"need {_MIN_LENGTH_FACTOR * hankel_rows}"
        )

    n_cols = y.size - hankel_rows + 1
    hankel = np.lib.stride_tricks.sliding_window_view(y, hankel_rows).T
    keep = np.ones(n_cols, dtype=bool)
    if excitation_idx is not None:
        guard = int(round(guard_s / ts_s))
        for k0 in np.asarray(excitation_idx, dtype=int):
            keep[max(0, k0 - hankel_rows): min(n_cols, k0 + guard)] = False
    if keep.sum() < 4:
        raise IdentificationError("excitation guard left too few Hankel columns")

    u, s, _ = np.linalg.svd(hankel[:, keep], full_matrices=False)
    if s[1] <= 1e-10 * s[0]:
        raise IdentificationError("Hankel matrix is numerically rank deficient")
    gamma = u[:, :2] * np.sqrt(s[:2])
    a, *_ = np.linalg.lstsq(gamma[:-1], gamma[1:], rcond=None)
    c = gamma[0]

    model = StateSpaceModel(a=a, c=c, fit_quality=0.0)
    model.fit_quality = _one_step_error(model, hankel, keep, gamma)
    return model


def _one_step_error(
    model: StateSpaceModel,
    hankel: np.ndarray,
    keep: np.ndarray,
    gamma: np.ndarray,
) -> float:
    """Relative RMS error predicting each kept column's successor."""
    states = np.linalg.pinv(gamma) @ hankel
    pred = model.c @ (model.a @ states[:, :-1])
    actual = hankel[0, 1:]
    mask = keep[:-1] & keep[1:]
    if not mask.any():
        return float("inf")
    err = pred[mask] - actual[mask]
    denom = float(np.sum(actual[mask] ** 2))
    if denom == 0.0:
        return float("inf")
    return float(np.sqrt(np.sum(err**2) / denom))


def eigen_frequency(model: StateSpaceModel, ts_s: float) -> float:
    """Modal frequency in Hz from the eigenvalue with positive imaginary part.

    The magnitude of the matrix logarithm's eigenvalue folds the decay rate
    back into the undamped natural frequency, so the returned value is the
    natural frequency, not the damped one.
    """
    if ts_s <= 0:
        raise ConfigError("sample interval must be positive")
    lam = model.eigenvalues()
    lam = lam[np.argmax(lam.imag)]
    if lam.imag <= 0:
        raise IdentificationError("no eigenvalue with positive imaginary part")
    log_lam = complex(np.log(np.abs(lam)), np.angle(lam))
    return abs(log_lam) / (2.0 * np.pi * ts_s)


@dataclass
class EstimationSettings:
    """Knobs for the per-passage frequency estimator."""

    band_hz: tuple[float, float] = DEFAULT_BAND
    cutoff_hz: float = 1000.0
    filter_order: int = 3
    max_imfs: int = emd.MAX_IMFS
    sd_stop: float = emd.SD_STOP
    max_sift: int = emd.MAX_SIFT
    hankel_rows: int = DEFAULT_HANKEL_ROWS
    guard_s: float = DEFAULT_GUARD_S
    quality_max: float = DEFAULT_QUALITY_MAX

    def __post_init__(self) -> None:
        lo, hi = self.band_hz
        if not (0 < lo < hi):
            raise ConfigError(f"invalid acceptance band {self.band_hz}")
        if self.quality_max <= 0:
            raise ConfigError("quality_max must be positive")


@dataclass
class FrequencyEstimate:
    """Per-passage pad-resonance estimate with its dispersion and context."""

    value_hz: float
    mad_hz: float
    n_segments: int
    timestamp: datetime
    temp_c: float
    location_id: str
    train_index: int = 0
    per_segment_hz: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.per_segment_hz is not None:
            if len(self.per_segment_hz) != self.n_segments:
                raise DataError("segment count does not match per-segment values")
            med = float(np.median(self.per_segment_hz))
            if abs(med - self.value_hz) > 1e-9:
                raise DataError("estimate must be the median of segment values")
        if self.mad_hz < 0:
            raise DataError("dispersion cannot be negative")


def estimate_passage(
    record: PassageRecord,
    temps: TemperatureSeries,
    train_index: int = 0,
    settings: EstimationSettings | None = None,
) -> FrequencyEstimate:
    """Run filter, slicing, decomposition, and identification on one passage.

    Segments whose decomposition or identification fails, whose model is
    rejected on fit quality, or whose frequency falls outside the band are
    dropped; the estimate is the median of the survivors.
    """
    st = settings or EstimationSettings()
    temp_c = temps.at(record.timestamp)

    filtered = lowpass(
        record.accel, record.fs_hz, cutoff_hz=st.cutoff_hz, order=st.filter_order
    )
    conditioned = replace(record, accel=normalize(filtered))
    segments = slice_bogies(conditioned, train_index=train_index)
    if not segments:
        raise EstimationError("no usable bogie segments in passage")

    ts = 1.0 / record.fs_hz
    values: list[float] = []
    for seg in segments:
        t_end = seg.t0 + seg.samples.size * ts
        in_seg = (record.wheel_times_s >= seg.t0 - 0.5 * ts) & (
            record.wheel_times_s < t_end
        )
        excitation = np.round(
            (record.wheel_times_s[in_seg] - seg.t0) * record.fs_hz
        ).astype(int)
        try:
            imfs = emd.decompose(
                seg, max_imfs=st.max_imfs, sd_stop=st.sd_stop, max_sift=st.max_sift
            )
            imf2 = emd.select_imf2(imfs)
            model = identify_order2(
                imf2,
                ts,
                hankel_rows=st.hankel_rows,
                excitation_idx=excitation,
                guard_s=st.guard_s,
            )
        except (DecompositionError, IdentificationError, DataError) as exc:
            logger.debug("segment %d dropped: %s", seg.segment_index, exc)
            continue
        if model.fit_quality > st.quality_max:
            logger.debug(
                "segment %d rejected on fit quality %.3f",
                seg.segment_index,
                model.fit_quality,
            )
            continue
        freq = eigen_frequency(model, ts)
        if not (st.band_hz[0] <= freq <= st.band_hz[1]):
            logger.debug(
                "segment %d frequency %.1f Hz outside band", seg.segment_index, freq
            )
            continue
        values.append(freq)

    if not values:
        raise EstimationError(
            f"passage at {record.timestamp.isoformat()} produced no "
            "in-band segment estimates"
        )
    arr = np.array(values)
    med = float(np.median(arr))
    mad = float(np.median(np.abs(arr - med)))
    return FrequencyEstimate(
        value_hz=med,
        mad_hz=mad,
        n_segments=arr.size,
        timestamp=record.timestamp,
        temp_c=temp_c,
        location_id=record.location_id,
        train_index=train_index,
        per_segment_hz=tuple(float(v) for v in arr),
    )


# ---------------------------------------------------------------------------
# Estimate log


def write_estimates(estimates: list[FrequencyEstimate], path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["timestamp", "location_id", "freq_hz", "mad_hz", "temp_c", "n_segments"]
        )
        for e in estimates:
            w.writerow(
                [
                    e.timestamp.isoformat(),
                    e.location_id,
                    repr(float(e.value_hz)),
                    repr(float(e.mad_hz)),
                    repr(float(e.temp_c)),
                    str(e.n_segments),
                ]
            )


def read_estimates(path: str) -> list[FrequencyEstimate]:
    """Read an estimate log. Per-segment values are not stored in the log."""
    out: list[FrequencyEstimate] = []
    try:
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r, None)
            if header is None or header[0] != "timestamp":
                raise DataError(f"{path}: missing estimate header")
            for row in r:
                if not row:
                    continue
                out.append(
                    FrequencyEstimate(
                        value_hz=float(row[2]),
                        mad_hz=float(row[3]),
                        n_segments=int(row[5]),
                        timestamp=datetime.fromisoformat(row[0]),
                        temp_c=float(row[4]),
                        location_id=row[1],
                    )
                )
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: malformed estimate log ({exc})") from exc
    return out


__all__ = [
    "StateSpaceModel",
    "EstimationSettings",
    "FrequencyEstimate",
    "DEFAULT_BAND",
    "DEFAULT_HANKEL_ROWS",
    "DEFAULT_GUARD_S",
    "DEFAULT_QUALITY_MAX",
    "identify_order2",
    "eigen_frequency",
    "estimate_passage",
    "write_estimates",
    "read_estimates",
]
