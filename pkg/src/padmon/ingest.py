"""Passage records, screening, and signal conditioning.

Everything upstream of mode decomposition lives here: the on-disk passage
format, wheel-detector synchronisation, per-bogie slicing, and the hourly
temperature series that later stages interpolate against.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np
from scipy.signal import butter, lfilter

from .errors import ConfigError, DataError

logger = logging.getLogger(__name__)

#: Samples below this count carry too few oscillation periods to identify.
MIN_SEGMENT_SAMPLES = 512

#: Intra-bogie wheel gaps are accepted while shorter than this multiple of
#: the median inter-wheel gap.
_PAIR_GAP_FACTOR = 1.5


@dataclass
class PassageRecord:
    """One train passage measured at a fixed trackside location.

    ``accel`` holds vertical rail acceleration in g at ``fs_hz``;
    ``wheel_times_s`` are wheel arrival instants in seconds from the start
    of the record, already on the sample grid when written by this package.
    ``true_f2_hz`` is populated by the simulator only and never serialised.
    """

    accel: np.ndarray
    fs_hz: float
    wheel_times_s: np.ndarray
    timestamp: datetime
    train_type: str
    speed_kmh: float
    axle_loads_t: tuple[float, ...]
    location_id: str
    true_f2_hz: float | None = None

    def __post_init__(self) -> None:
        self.accel = np.asarray(self.accel, dtype=float)
        self.wheel_times_s = np.asarray(self.wheel_times_s, dtype=float)
        if self.accel.ndim != 1 or self.accel.size == 0:
            raise DataError("passage needs a non-empty 1-D acceleration signal")
        if not np.isfinite(self.accel).all():
            raise DataError("acceleration contains non-finite samples")
        if self.fs_hz <= 0:
            raise ConfigError(f"sample rate must be positive, got {self.fs_hz}")
        if self.wheel_times_s.size and np.any(np.diff(self.wheel_times_s) <= 0):
            raise DataError("wheel times must be strictly increasing")
        span = (self.accel.size - 1) / self.fs_hz
        if self.wheel_times_s.size and (
            self.wheel_times_s[0] < 0 or self.wheel_times_s[-1] > span
        ):
            raise DataError("wheel times fall outside the recorded span")
        if self.speed_kmh <= 0:
            raise DataError(f"speed must be positive, got {self.speed_kmh}")
        if any(load <= 0 for load in self.axle_loads_t):
            raise DataError("axle loads must be positive")

    @property
    def duration_s(self) -> float:
        return self.accel.size / self.fs_hz


@dataclass
class BogieSegment:
    """Slice of a passage covering one bogie's excitation and ring-down."""

    samples: np.ndarray
    segment_index: int
    train_index: int
    t0: float

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.size < MIN_SEGMENT_SAMPLES:
            raise DataError(
                f"segment {self.segment_index} has {self.samples.size} samples, "
                f"need at least {MIN_SEGMENT_SAMPLES}"
            )


@dataclass
class ScreeningRule:
    """Train-selection filter applied before any signal processing."""

    train_type: str = "IC3"
    speed_min_kmh: float = 155.0
    speed_max_kmh: float = 160.0
    max_load_cov: float = 0.05

    def __post_init__(self) -> None:
        if self.speed_min_kmh >= self.speed_max_kmh:
            raise ConfigError("speed window is empty")
        if self.max_load_cov < 0:
            raise ConfigError("load coefficient of variation bound must be >= 0")

    def accepts(self, record: PassageRecord) -> bool:
        if record.train_type != self.train_type:
            return False
        if not (self.speed_min_kmh <= record.speed_kmh <= self.speed_max_kmh):
            return False
        loads = np.asarray(record.axle_loads_t, dtype=float)
        if loads.size == 0:
            return False
        cov = loads.std() / loads.mean()
        return bool(cov <= self.max_load_cov)


def normalize(accel: np.ndarray) -> np.ndarray:
    """Scale a signal so its peak absolute value is exactly one."""
    accel = np.asarray(accel, dtype=float)
    peak = np.max(np.abs(accel)) if accel.size else 0.0
    if peak == 0.0:
        raise DataError("cannot normalize an all-zero signal")
    return accel / peak


def lowpass(
    accel: np.ndarray,
    fs_hz: float,
    cutoff_hz: float = 1000.0,
    order: int = 3,
) -> np.ndarray:
    """Causal Butterworth low-pass with unity DC gain.

    The causal single pass keeps the filter realisable online, at the cost
    of a short onset transient that downstream identification masks out.
    """
    if cutoff_hz <= 0 or cutoff_hz >= fs_hz / 2:
        raise ConfigError(
            f"cutoff {cutoff_hz} Hz must lie inside (0, {fs_hz / 2}) Hz"
        )
    if order < 1:
        raise ConfigError("filter order must be at least 1")
    b, a = butter(order, cutoff_hz, btype="low", fs=fs_hz)
    return lfilter(b, a, np.asarray(accel, dtype=float))


def sync_wheel_detector(record: PassageRecord, detector_distance_m: float) -> np.ndarray:
    """Shift wheel-detector pulses to the measurement point.

    A detector mounted ``detector_distance_m`` up the track sees each wheel
    early by distance over speed; the returned times are aligned with the
    acceleration record.
    """
    delay = detector_distance_m / (record.speed_kmh / 3.6)
    shifted = record.wheel_times_s + delay
    span = (record.accel.size - 1) / record.fs_hz
    if shifted.size and (shifted[0] < 0 or shifted[-1] > span):
        raise DataError(
            "shifted wheel times fall outside the record; check detector distance"
        )
    return shifted


def slice_bogies(
    record: PassageRecord,
    wheel_times_s: np.ndarray | None = None,
    train_index: int = 0,
    min_samples: int = MIN_SEGMENT_SAMPLES,
) -> list[BogieSegment]:
    """Cut a passage into per-bogie segments.

    Wheels are paired into bogies by gap statistics: consecutive arrivals
    closer than 1.5 times the median gap belong to the same bogie.  Each
    segment starts at the bogie's first wheel and extends half an
    intra-bogie interval past the second, so the ring-down after the last
    impact is kept while the next bogie's impact is excluded.
    """
    times = record.wheel_times_s if wheel_times_s is None else np.asarray(
        wheel_times_s, dtype=float
    )
    if times.size < 2:
        raise DataError("need at least two wheel arrivals to form a bogie")
    gaps = np.diff(times)
    pair_limit = _PAIR_GAP_FACTOR * float(np.median(gaps))

    pairs: list[tuple[float, float]] = []
    i = 0
    while i < times.size - 1:
        if gaps[i] < pair_limit:
            pairs.append((times[i], times[i + 1]))
            i += 2
        else:
            raise DataError(
                f"wheel {i} has no partner within the pairing gap; "
                "odd wheel count or irregular spacing"
            )
    if i == times.size - 1:
        raise DataError("trailing wheel has no partner; odd wheel count")

    fs = record.fs_hz
    segments: list[BogieSegment] = []
    for s, (t1, t2) in enumerate(pairs):
        end = t2 + 0.5 * (t2 - t1)
        i0 = int(round(t1 * fs))
        i1 = int(round(end * fs)) + 1
        if s + 1 < len(pairs):
            i1 = min(i1, int(round(pairs[s + 1][0] * fs)))
        i1 = min(i1, record.accel.size)
        if i1 - i0 < min_samples:
            logger.debug(
                "segment %d of %s too short (%d samples), skipped",
                s, record.location_id, i1 - i0,
            )
            continue
        segments.append(
            BogieSegment(
                samples=record.accel[i0:i1],
                segment_index=s,
                train_index=train_index,
                t0=i0 / fs,
            )
        )
    return segments


def max_accel_stat(
    record: PassageRecord, wheel_times_s: np.ndarray | None = None
) -> float:
    """Mean over bogies of the per-segment peak absolute acceleration.

    This is the coarse comparison statistic used alongside the modal
    estimate; it is not an alarm input.
    """
    segments = slice_bogies(record, wheel_times_s)
    if not segments:
        raise DataError("no usable segments for the peak-acceleration statistic")
    return float(np.mean([np.max(np.abs(s.samples)) for s in segments]))


def screen_passages(
    records: list[PassageRecord], rule: ScreeningRule
) -> dict[tuple[str, str], list[PassageRecord]]:
    """Group accepted passages by location and calendar month.

    Keys are ``(location_id, "YYYY-MM")`` in sorted order; each group is
    ordered by timestamp.
    """
    groups: dict[tuple[str, str], list[PassageRecord]] = {}
    for rec in records:
        if not rule.accepts(rec):
            continue
        key = (rec.location_id, rec.timestamp.strftime("%Y-%m"))
        groups.setdefault(key, []).append(rec)
    for members in groups.values():
        members.sort(key=lambda r: r.timestamp)
    return dict(sorted(groups.items()))


# ---------------------------------------------------------------------------
# Passage file format
#
# Header rows are key,value pairs; a "samples,<n>" sentinel then introduces
# the index,accel_g,wheel_pulse table.  Floats are written with repr() so a
# write/read cycle is bit-exact.


def write_passage(record: PassageRecord, path: str) -> None:
    """Serialise a passage to CSV. Wheel times must lie on the sample grid."""
    pulse_idx = np.round(record.wheel_times_s * record.fs_hz).astype(int)
    recon = pulse_idx / record.fs_hz
    if not np.array_equal(recon, record.wheel_times_s):
        raise DataError(
            "wheel times are off the sample grid; quantise before writing"
        )
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["location_id", record.location_id])
        w.writerow(["timestamp", record.timestamp.isoformat()])
        w.writerow(["train_type", record.train_type])
        w.writerow(["speed_kmh", repr(float(record.speed_kmh))])
        w.writerow(["fs_hz", repr(float(record.fs_hz))])
        w.writerow(["axle_loads_t"] + [repr(float(x)) for x in record.axle_loads_t])
        w.writerow(["samples", str(record.accel.size)])
        w.writerow(["index", "accel_g", "wheel_pulse"])
        pulses = np.zeros(record.accel.size, dtype=int)
        pulses[pulse_idx] = 1
        for i, (a, p) in enumerate(zip(record.accel, pulses)):
            w.writerow([str(i), repr(float(a)), str(int(p))])


def read_passage(path: str) -> PassageRecord:
    """Read a passage written by :func:`write_passage`."""
    header: dict[str, list[str]] = {}
    accel: list[float] = []
    pulse_idx: list[int] = []
    try:
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            in_table = False
            for row in r:
                if not row:
                    continue
                if in_table:
                    if row[0] == "index":
                        continue
                    accel.append(float(row[1]))
                    if int(row[2]):
                        pulse_idx.append(int(row[0]))
                else:
                    header[row[0]] = row[1:]
                    if row[0] == "samples":
                        in_table = True
        fs = float(header["fs_hz"][0])
        n_expected = int(header["samples"][0])
        if len(accel) != n_expected:
            raise DataError(
                f"{path}: sample count {len(accel)} does not match "
                f"declared {n_expected}"
            )
        return PassageRecord(
            accel=np.array(accel),
            fs_hz=fs,
            wheel_times_s=np.array(pulse_idx, dtype=float) / fs,
            timestamp=datetime.fromisoformat(header["timestamp"][0]),
            train_type=header["train_type"][0],
            speed_kmh=float(header["speed_kmh"][0]),
            axle_loads_t=tuple(float(x) for x in header["axle_loads_t"]),
            location_id=header["location_id"][0],
        )
    except DataError:
        raise
    except (KeyError, ValueError, IndexError) as exc:
        raise DataError(f"{path}: malformed passage file ({exc})") from exc


# ---------------------------------------------------------------------------
# Temperature series


@dataclass
class TemperatureSeries:
    """Hourly rail temperature at one site."""

    times: tuple[datetime, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if len(self.times) != self.values.size or self.values.size == 0:
            raise DataError("temperature series needs matching, non-empty columns")
        deltas = {
            (b - a).total_seconds() for a, b in zip(self.times, self.times[1:])
        }
        if deltas and deltas != {3600.0}:
            raise DataError("temperature series must be hourly and increasing")
        if not np.isfinite(self.values).all():
            raise DataError("temperature series contains non-finite values")

    def at(self, ts: datetime) -> float:
        """Temperature at the nearest hour to ``ts``.

        Timestamps more than 30 minutes outside the series span are refused
        rather than extrapolated.
        """
        offset_h = (ts - self.times[0]).total_seconds() / 3600.0
        idx = int(round(offset_h))
        if idx < 0 or idx >= self.values.size:
            raise DataError(
                f"timestamp {ts.isoformat()} outside temperature coverage"
            )
        return float(self.values[idx])

    @property
    def start(self) -> datetime:
        return self.times[0]

    @property
    def end(self) -> datetime:
        return self.times[-1]


def write_temperature(series: TemperatureSeries, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp_iso8601", "temp_c"])
        for t, v in zip(series.times, series.values):
            w.writerow([t.isoformat(), repr(float(v))])


def read_temperature(path: str) -> TemperatureSeries:
    times: list[datetime] = []
    values: list[float] = []
    try:
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r, None)
            if header is None or header[0] != "timestamp_iso8601":
                raise DataError(f"{path}: missing temperature header")
            for row in r:
                if not row:
                    continue
                times.append(datetime.fromisoformat(row[0]))
                values.append(float(row[1]))
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: malformed temperature file ({exc})") from exc
    return TemperatureSeries(times=tuple(times), values=np.array(values))


def as_utc(ts: datetime) -> datetime:
    """Attach UTC to a naive timestamp; convert an aware one."""
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


__all__ = [
    "PassageRecord",
    "BogieSegment",
    "ScreeningRule",
    "TemperatureSeries",
    "MIN_SEGMENT_SAMPLES",
    "normalize",
    "lowpass",
    "sync_wheel_detector",
    "slice_bogies",
    "max_accel_stat",
    "screen_passages",
    "write_passage",
    "read_passage",
    "write_temperature",
    "read_temperature",
    "as_utc",
]
