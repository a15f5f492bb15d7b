"""Synthetic passage generator with a temperature-dependent pad resonance.

Each wheel impact excites three decaying modes: a low track mode, the pad
resonance whose frequency follows the temperature map, and a fast contact
mode above the pad band. The fast mode is deliberately strong enough to
occupy the first IMF after low-pass filtering, which places the pad
resonance in the second one, as the estimator expects.
"""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone

import numpy as np

from .errors import ConfigError, DataError
from .ingest import PassageRecord, TemperatureSeries, write_passage
from .tempmodel import TempFreqModel, evaluate

logger = logging.getLogger(__name__)

#: Mean days per month, used wherever the simulator needs fractional months.
DAYS_PER_MONTH = 30.4375

_LEAD_S = 0.05
_TAIL_S = 0.15


def default_f2_map() -> TempFreqModel:
    """Temperature map matching field behaviour of a stiff studded pad."""
    return TempFreqModel(s1=-5.9, c=578.8, s3=-5.3, b1=3.3, b2=19.3)


@dataclass
class TrackConfig:
    """Modal content of the simulated track at one location.

    Mode amplitudes are per unit wheel impact before filtering; the fast
    contact mode's 2.9 factor lands near parity with the pad mode after
    the 1 kHz low-pass, enough to claim the first IMF on its own.
    """

    f1_hz: float = 180.0
    zeta1: float = 0.05
    f2_map: TempFreqModel = field(default_factory=default_f2_map)
    zeta2: float = 0.02
    mode_amplitude_ratio: float = 0.5
    f_hf_hz: float = 1400.0
    zeta_hf: float = 0.006
    hf_amplitude: float = 2.9
    noise_std: float = 0.05
    f2_jitter_hz: float = 0.0

    def __post_init__(self) -> None:
        for name, z in (("zeta1", self.zeta1), ("zeta2", self.zeta2),
                        ("zeta_hf", self.zeta_hf)):
            if not (0.0 < z < 1.0):
                raise ConfigError(f"{name} must lie in (0, 1), got {z}")
        if self.noise_std < 0:
            raise ConfigError("noise level cannot be negative")
        if self.f2_jitter_hz < 0:
            raise ConfigError("pad frequency jitter cannot be negative")
        lo, hi = self.f2_range()
        if lo < 400.0 or hi > 650.0:
            raise ConfigError(
                f"temperature map produces {lo:.1f}..{hi:.1f} Hz, "
                "outside the 400..650 Hz pad band"
            )
        if self.f1_hz <= 0 or self.f1_hz >= lo:
            raise ConfigError(
                f"track mode {self.f1_hz} Hz must sit below the pad band ({lo:.1f} Hz)"
            )
        if self.f_hf_hz <= hi:
            raise ConfigError(
                f"contact mode {self.f_hf_hz} Hz must sit above the pad band "
                f"({hi:.1f} Hz)"
            )

    def f2_range(self) -> tuple[float, float]:
        """Extreme pad frequencies over the map's validity range."""
        m = self.f2_map
        lo, hi = m.valid_range
        corners = np.array([evaluate(m, lo), m.c + m.y_offset, evaluate(m, hi)])
        return float(corners.min()), float(corners.max())


@dataclass
class TrainConfig:
    """Geometry and loading of the simulated train."""

    bogie_positions_m: tuple[float, ...] = (0.0, 13.5, 27.0, 40.5)
    axle_spacing_m: float = 2.6
    speed_kmh: float = 157.5
    speed_jitter_kmh: float = 2.0
    axle_load_mean_t: float = 16.0
    axle_load_std_t: float = 0.3
    train_type: str = "IC3"

    def __post_init__(self) -> None:
        pos = np.asarray(self.bogie_positions_m, dtype=float)
        if pos.size == 0 or np.any(np.diff(pos) <= 0):
            raise ConfigError("bogie positions must be non-empty and increasing")
        if self.axle_spacing_m <= 0:
            raise ConfigError("axle spacing must be positive")
        if pos.size > 1 and self.axle_spacing_m >= np.min(np.diff(pos)):
            raise ConfigError("axle spacing must be shorter than the bogie pitch")
        if self.speed_kmh <= 0 or self.speed_jitter_kmh < 0:
            raise ConfigError("speed must be positive and jitter non-negative")
        if self.axle_load_mean_t <= 0 or self.axle_load_std_t < 0:
            raise ConfigError("axle loads must be positive")

    @property
    def n_bogies(self) -> int:
        return len(self.bogie_positions_m)


@dataclass
class DegradationSchedule:
    """Optional pad softening: a relative frequency drop with a linear ramp.

    ``onset_month`` is a convenience for configs that count months from the
    campaign start; callers resolve it into ``onset`` once the start is
    known.
    """

    onset: datetime | None = None
    onset_month: int | None = None
    ramp_months: float = 1.0
    drop_fraction: float = 0.05

    def __post_init__(self) -> None:
        if self.ramp_months <= 0:
            raise ConfigError("ramp must span a positive number of months")
        if not (0.0 <= self.drop_fraction < 1.0):
            raise ConfigError("drop fraction must lie in [0, 1)")
        if self.onset_month is not None and self.onset_month < 0:
            raise ConfigError("onset month cannot be negative")

    def resolve_onset(self, campaign_start: datetime) -> None:
        if self.onset is None and self.onset_month is not None:
            self.onset = add_months(campaign_start, self.onset_month)

    def offset_hz(self, ts: datetime, healthy_hz: float) -> float:
        """Frequency reduction in Hz at time ``ts``."""
        if self.onset is None or ts <= self.onset:
            return 0.0
        ramp_days = self.ramp_months * DAYS_PER_MONTH
        progress = min(1.0, (ts - self.onset).total_seconds() / (ramp_days * 86400.0))
        return progress * self.drop_fraction * healthy_hz


def _damped_mode(
    t: np.ndarray, f0_hz: float, zeta: float, t0: float
) -> np.ndarray:
    """Decaying sinusoid parameterised by natural frequency.

    The envelope decays with the natural angular rate and the oscillation
    runs at the damped rate, so the discrete eigenvalue magnitude-of-log
    readout returns exactly ``f0_hz``.
    """
    out = np.zeros_like(t)
    tau = t - t0
    m = tau >= 0
    wn = 2.0 * np.pi * f0_hz
    wd = wn * np.sqrt(1.0 - zeta * zeta)
    out[m] = np.exp(-zeta * wn * tau[m]) * np.sin(wd * tau[m])
    return out


def synth_passage(
    track: TrackConfig,
    train: TrainConfig,
    temp_c: float,
    degradation_offset_hz: float = 0.0,
    seed: int = 0,
    timestamp: datetime | None = None,
    location_id: str = "SIM",
    fs_hz: float = 20000.0,
    speed_kmh: float | None = None,
) -> PassageRecord:
    """Generate one passage at a given rail temperature.

    Wheel arrival times are quantised to the sample grid so the record
    round-trips through the passage file format bit-exactly. The record's
    ``true_f2_hz`` carries the pad frequency actually synthesised.
    """
    lo, hi = track.f2_map.valid_range
    if not (lo <= temp_c <= hi):
        raise ConfigError(
            f"temperature {temp_c} outside the map's range [{lo}, {hi}]"
        )
    if fs_hz <= 0:
        raise ConfigError("sample rate must be positive")
    healthy = float(evaluate(track.f2_map, temp_c))
    rng = np.random.default_rng(seed)
    f2_true = healthy - degradation_offset_hz
    if track.f2_jitter_hz > 0:
        # Passage-to-passage pad variability (load history, contact state);
        # keeps the draw out of the stream entirely when disabled so that
        # records with jitter 0 stay bit-identical across configs.
        f2_true += float(rng.normal(0.0, track.f2_jitter_hz))
    if f2_true <= 0 or f2_true >= fs_hz / 2:
        raise ConfigError(f"degraded pad frequency {f2_true:.1f} Hz is unusable")
    speed = train.speed_kmh if speed_kmh is None else speed_kmh
    if speed <= 0:
        raise ConfigError("speed must be positive")
    v_ms = speed / 3.6

    wheel_times = []
    for pos in train.bogie_positions_m:
        for offset in (0.0, train.axle_spacing_m):
            t = _LEAD_S + (pos + offset) / v_ms
            wheel_times.append(round(t * fs_hz) / fs_hz)
    wheel_times = np.array(sorted(wheel_times))
    if np.any(np.diff(wheel_times) <= 0):
        raise ConfigError("wheel times collide on the sample grid; geometry too tight")

    n_axles = 2 * train.n_bogies
    loads = rng.normal(train.axle_load_mean_t, train.axle_load_std_t, n_axles)
    loads = np.maximum(loads, 0.1)

    n = int(round((wheel_times[-1] + _TAIL_S) * fs_hz))
    t = np.arange(n) / fs_hz
    clean = np.zeros(n)
    mean_load = float(loads.mean())
    for tw, load in zip(wheel_times, loads):
        scale = load / mean_load
        clean += scale * (
            track.mode_amplitude_ratio * _damped_mode(t, track.f1_hz, track.zeta1, tw)
            + _damped_mode(t, f2_true, track.zeta2, tw)
            + track.hf_amplitude * _damped_mode(t, track.f_hf_hz, track.zeta_hf, tw)
        )

    accel = clean
    if track.noise_std > 0:
        sigma = track.noise_std * float(np.max(np.abs(clean)))
        accel = clean + rng.normal(0.0, sigma, n)

    ts = timestamp or datetime(2021, 1, 1, 12, 0, tzinfo=timezone.utc)
    return PassageRecord(
        accel=accel,
        fs_hz=fs_hz,
        wheel_times_s=wheel_times,
        timestamp=ts,
        train_type=train.train_type,
        speed_kmh=float(speed),
        axle_loads_t=tuple(float(x) for x in loads),
        location_id=location_id,
        true_f2_hz=f2_true,
    )


def noise_std_for_snr(
    track: TrackConfig,
    train: TrainConfig,
    temp_c: float,
    snr_db: float,
    seed: int = 0,
) -> float:
    """Noise level (as a fraction of peak) giving a target passage SNR.

    SNR is the clean signal's mean square power over the whole record
    against the white noise variance, in dB.
    """
    quiet = replace(track, noise_std=0.0)
    clean = synth_passage(quiet, train, temp_c, seed=seed).accel
    power = float(np.mean(clean**2))
    peak = float(np.max(np.abs(clean)))
    sigma = np.sqrt(power * 10.0 ** (-snr_db / 10.0))
    return float(sigma / peak)


def synth_temperature(
    months: float,
    seed: int = 0,
    start: datetime | None = None,
    t_range: tuple[float, float] = (-5.0, 30.0),
) -> TemperatureSeries:
    """Hourly rail temperature with annual and daily cycles plus noise.

    Values are clipped into ``t_range``; a campaign of a year or more
    sweeps most of it.
    """
    if months < 1:
        raise ConfigError("temperature series must span at least one month")
    lo, hi = t_range
    if not lo < hi:
        raise ConfigError("empty temperature range")
    rng = np.random.default_rng(seed)
    t0 = start or datetime(2021, 1, 1, 0, 0, tzinfo=timezone.utc)
    if float(months).is_integer() and t0 == _month_start(t0):
        # Whole months from a month boundary cover exactly that many
        # calendar months, so downstream monthly grouping sees no stub.
        end = add_months(t0, int(months))
        n_hours = int((end - t0).total_seconds() // 3600.0)
    else:
        n_hours = int(round(months * DAYS_PER_MONTH * 24.0))
    hours = np.arange(n_hours, dtype=float)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    # Phase puts the annual minimum near the series start (winter start).
    # Amplitudes leave headroom so the clip below rarely engages: hard
    # clipping would pile probability mass at the range edges and distort
    # the temperature-bin medians downstream.
    annual = 0.69 * half * -np.cos(2.0 * np.pi * hours / 8766.0)
    daily = 0.09 * half * np.sin(2.0 * np.pi * (hours % 24.0) / 24.0)
    noise = rng.normal(0.0, 0.10 * half, n_hours)
    values = np.clip(mid + annual + daily + noise, lo, hi)
    times = tuple(t0 + timedelta(hours=h) for h in range(n_hours))
    return TemperatureSeries(times=times, values=values)


def _month_start(ts: datetime) -> datetime:
    return ts.replace(day=1, hour=0, minute=0, second=0, microsecond=0)


def _next_month(ts: datetime) -> datetime:
    if ts.month == 12:
        return ts.replace(year=ts.year + 1, month=1)
    return ts.replace(month=ts.month + 1)


def add_months(ts: datetime, n: int) -> datetime:
    """Shift a timestamp by whole calendar months."""
    out = _month_start(ts)
    for _ in range(n):
        out = _next_month(out)
    return out.replace(
        day=min(ts.day, 28), hour=ts.hour, minute=ts.minute, second=ts.second
    )


def synth_campaign(
    track: TrackConfig,
    train: TrainConfig,
    temps: TemperatureSeries,
    trains_per_month: int = 40,
    schedule: DegradationSchedule | None = None,
    seed: int = 0,
    location_id: str = "SIM",
) -> list[PassageRecord]:
    """Simulate a monitoring campaign over the temperature series' span.

    Every calendar month covered by the series gets ``trains_per_month``
    passages at random instants, each with its own speed and load draw.
    Speeds stay within the configured jitter of the nominal value, inside
    the standard screening window for the defaults.
    """
    if trains_per_month < 1:
        raise ConfigError("need at least one train per month")
    rng = np.random.default_rng(seed)
    records: list[PassageRecord] = []
    month = _month_start(temps.start)
    while month <= temps.end:
        window_start = max(month, temps.start)
        window_end = min(_next_month(month), temps.end)
        span_s = (window_end - window_start).total_seconds()
        if span_s <= 0:
            month = _next_month(month)
            continue
        offsets = np.sort(rng.uniform(0.0, span_s, trains_per_month))
        for off in offsets:
            ts = window_start + timedelta(seconds=float(off))
            temp = temps.at(ts)
            healthy = float(evaluate(track.f2_map, temp))
            drop = schedule.offset_hz(ts, healthy) if schedule else 0.0
            speed = train.speed_kmh + rng.uniform(
                -train.speed_jitter_kmh, train.speed_jitter_kmh
            )
            records.append(
                synth_passage(
                    track,
                    train,
                    temp,
                    degradation_offset_hz=drop,
                    seed=int(rng.integers(0, 2**63 - 1)),
                    timestamp=ts,
                    location_id=location_id,
                    speed_kmh=speed,
                )
            )
        month = _next_month(month)
    if not records:
        raise DataError("temperature series too short to place any passages")
    return records


# ---------------------------------------------------------------------------
# Campaign manifest


def write_campaign(
    records: list[PassageRecord], passage_dir: str, manifest_path: str
) -> list[str]:
    """Write passage files plus a manifest carrying the ground truth."""
    os.makedirs(passage_dir, exist_ok=True)
    paths: list[str] = []
    with open(manifest_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "timestamp", "location_id", "true_f2_hz"])
        for i, rec in enumerate(records):
            path = os.path.join(passage_dir, f"passage_{i:05d}.csv")
            write_passage(rec, path)
            paths.append(path)
            w.writerow(
                [
                    path,
                    rec.timestamp.isoformat(),
                    rec.location_id,
                    "" if rec.true_f2_hz is None else repr(float(rec.true_f2_hz)),
                ]
            )
    return paths


def read_manifest(path: str) -> list[tuple[str, datetime, str, float | None]]:
    out: list[tuple[str, datetime, str, float | None]] = []
    try:
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r, None)
            if header is None or header[0] != "path":
                raise DataError(f"{path}: missing manifest header")
            for row in r:
                if not row:
                    continue
                out.append(
                    (
                        row[0],
                        datetime.fromisoformat(row[1]),
                        row[2],
                        float(row[3]) if row[3] else None,
                    )
                )
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: malformed manifest ({exc})") from exc
    return out


__all__ = [
    "TrackConfig",
    "TrainConfig",
    "DegradationSchedule",
    "TemperatureSeries",
    "DAYS_PER_MONTH",
    "default_f2_map",
    "synth_passage",
    "synth_temperature",
    "synth_campaign",
    "noise_std_for_snr",
    "write_campaign",
    "read_manifest",
    "add_months",
]
