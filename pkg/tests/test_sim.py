"""Tests for the synthetic passage, temperature, and campaign generator."""

from __future__ import annotations

from dataclasses import replace
from datetime import datetime, timezone

import numpy as np
import pytest

from padmon import sim
from padmon.errors import ConfigError, DataError
from padmon.tempmodel import TempFreqModel

MAP = sim.default_f2_map()


def one_bogie_train() -> sim.TrainConfig:
    return sim.TrainConfig(
        bogie_positions_m=(0.0,), axle_load_std_t=0.0, speed_jitter_kmh=0.0
    )


class TestTrackConfig:
    def test_damping_must_be_fractional(self):
        with pytest.raises(ConfigError):
            sim.TrackConfig(zeta2=0.0)
        with pytest.raises(ConfigError):
            sim.TrackConfig(zeta1=1.0)

    def test_negative_noise_and_jitter_rejected(self):
        with pytest.raises(ConfigError):
            sim.TrackConfig(noise_std=-0.1)
        with pytest.raises(ConfigError):
            sim.TrackConfig(f2_jitter_hz=-1.0)

    def test_map_must_stay_inside_pad_band(self):
        bad = TempFreqModel(s1=-5.9, c=700.0, s3=-5.3, b1=3.3, b2=19.3)
        with pytest.raises(ConfigError):
            sim.TrackConfig(f2_map=bad)

    def test_neighbour_modes_must_bracket_band(self):
        with pytest.raises(ConfigError):
            sim.TrackConfig(f1_hz=550.0)
        with pytest.raises(ConfigError):
            sim.TrackConfig(f_hf_hz=600.0)

    def test_f2_range_covers_map_corners(self):
        lo, hi = sim.TrackConfig().f2_range()
        assert lo == pytest.approx(578.8 - 5.3 * 10.7, abs=1e-9)
        assert hi == pytest.approx(578.8 + 5.9 * 8.3, abs=1e-9)


class TestTrainConfig:
    def test_geometry_validation(self):
        with pytest.raises(ConfigError):
            sim.TrainConfig(bogie_positions_m=())
        with pytest.raises(ConfigError):
            sim.TrainConfig(bogie_positions_m=(0.0, 13.5, 13.5))
        with pytest.raises(ConfigError):
            sim.TrainConfig(axle_spacing_m=14.0)
        with pytest.raises(ConfigError):
            sim.TrainConfig(speed_kmh=0.0)
        with pytest.raises(ConfigError):
            sim.TrainConfig(axle_load_mean_t=-1.0)


class TestDegradationSchedule:
    def test_validation(self):
        with pytest.raises(ConfigError):
            sim.DegradationSchedule(ramp_months=0.0)
        with pytest.raises(ConfigError):
            sim.DegradationSchedule(drop_fraction=1.0)
        with pytest.raises(ConfigError):
            sim.DegradationSchedule(onset_month=-1)

    def test_onset_month_resolves_against_start(self):
        sched = sim.DegradationSchedule(onset_month=7)
        start = datetime(2021, 1, 1, tzinfo=timezone.utc)
        sched.resolve_onset(start)
        assert sched.onset == datetime(2021, 8, 1, tzinfo=timezone.utc)

    def test_explicit_onset_not_overridden(self):
        onset = datetime(2021, 5, 20, tzinfo=timezone.utc)
        sched = sim.DegradationSchedule(onset=onset, onset_month=2)
        sched.resolve_onset(datetime(2021, 1, 1, tzinfo=timezone.utc))
        assert sched.onset == onset

    def test_offset_ramps_linearly_to_full_drop(self):
        onset = datetime(2021, 8, 1, tzinfo=timezone.utc)
        sched = sim.DegradationSchedule(
            onset=onset, ramp_months=1.0, drop_fraction=0.05
        )
        healthy = 578.8
        assert sched.offset_hz(onset, healthy) == 0.0
        mid = onset + (sim.add_months(onset, 1) - onset) / 2
        partial = sched.offset_hz(mid, healthy)
        assert 0.0 < partial < 0.05 * healthy
        late = datetime(2021, 12, 1, tzinfo=timezone.utc)
        assert sched.offset_hz(late, healthy) == pytest.approx(
            0.05 * healthy, abs=1e-12
        )


class TestSynthPassage:
    def test_single_mode_record_is_two_decaying_sinusoids(self):
        track = sim.TrackConfig(
            mode_amplitude_ratio=0.0, hf_amplitude=0.0, noise_std=0.0
        )
        rec = sim.synth_passage(track, one_bogie_train(), temp_c=10.0, seed=1)
        t = np.arange(rec.accel.size) / rec.fs_hz
        expected = np.zeros_like(t)
        for tw in rec.wheel_times_s:
            expected += sim._damped_mode(t, 578.8, track.zeta2, float(tw))
        assert np.array_equal(rec.accel, expected)
        assert len(rec.wheel_times_s) == 2
        gap = rec.wheel_times_s[1] - rec.wheel_times_s[0]
        assert gap == pytest.approx(2.6 / (157.5 / 3.6), abs=1e-4)

    def test_spectrum_peaks_at_map_frequency(self):
        # One burst only: the two-wheel comb would shift the whole-record
        # peak. Zero-padding interpolates the line finely.
        track = sim.TrackConfig(
            mode_amplitude_ratio=0.0, hf_amplitude=0.0, noise_std=0.0
        )
        rec = sim.synth_passage(track, one_bogie_train(), temp_c=10.0, seed=2)
        i0 = int(round(rec.wheel_times_s[0] * rec.fs_hz))
        i1 = int(round(rec.wheel_times_s[1] * rec.fs_hz))
        burst = rec.accel[i0:i1]
        n = 2**17
        spec = np.abs(np.fft.rfft(burst, n=n))
        freqs = np.fft.rfftfreq(n, 1.0 / rec.fs_hz)
        peak = freqs[int(np.argmax(spec))]
        assert abs(peak - 578.8) <= 1.0

    def test_true_frequency_follows_map(self):
        rec = sim.synth_passage(sim.TrackConfig(), sim.TrainConfig(), 10.0)
        assert rec.true_f2_hz == pytest.approx(578.8, abs=1e-12)
        cold = sim.synth_passage(sim.TrackConfig(), sim.TrainConfig(), 0.0)
        assert cold.true_f2_hz == pytest.approx(578.8 + 5.9 * 3.3, abs=1e-9)
        assert cold.true_f2_hz == pytest.approx(597.8, abs=0.7)

    def test_degradation_offset_is_subtracted(self):
        drop = 0.05 * 578.8
        rec = sim.synth_passage(
            sim.TrackConfig(), sim.TrainConfig(), 10.0,
            degradation_offset_hz=drop,
        )
        assert rec.true_f2_hz == pytest.approx(0.95 * 578.8, abs=1e-12)

    def test_deterministic_per_seed(self):
        track, train = sim.TrackConfig(), sim.TrainConfig()
        a = sim.synth_passage(track, train, 10.0, seed=7)
        b = sim.synth_passage(track, train, 10.0, seed=7)
        c = sim.synth_passage(track, train, 10.0, seed=8)
        assert np.array_equal(a.accel, b.accel)
        assert np.array_equal(a.wheel_times_s, b.wheel_times_s)
        assert a.axle_loads_t == b.axle_loads_t
        assert not np.array_equal(a.accel, c.accel)

    def test_wheel_times_quantised_to_grid(self):
        rec = sim.synth_passage(sim.TrackConfig(), sim.TrainConfig(), 10.0)
        ticks = rec.wheel_times_s * rec.fs_hz
        assert np.allclose(ticks, np.round(ticks), atol=1e-6)

    def test_temperature_outside_map_rejected(self):
        with pytest.raises(ConfigError):
            sim.synth_passage(sim.TrackConfig(), sim.TrainConfig(), -20.0)

    def test_axle_count_follows_bogies(self):
        rec = sim.synth_passage(sim.TrackConfig(), sim.TrainConfig(), 10.0)
        assert len(rec.wheel_times_s) == 8
        assert len(rec.axle_loads_t) == 8


class TestFrequencyJitter:
    def test_jitter_spreads_true_frequency(self):
        track = replace(sim.TrackConfig(), f2_jitter_hz=2.0)
        vals = np.array(
            [
                sim.synth_passage(track, one_bogie_train(), 10.0, seed=s).true_f2_hz
                for s in range(200)
            ]
        )
        assert float(vals.std()) == pytest.approx(2.0, abs=0.35)
        assert float(vals.mean()) == pytest.approx(578.8, abs=0.45)

    def test_zero_jitter_is_exact(self):
        vals = {
            sim.synth_passage(sim.TrackConfig(), one_bogie_train(), 10.0, seed=s).true_f2_hz
            for s in range(5)
        }
        assert vals == {578.8}


class TestSynthTemperature:
    def test_zero_months_rejected(self):
        with pytest.raises(ConfigError):
            sim.synth_temperature(0)

    def test_whole_year_covers_exact_calendar_span(self):
        temps = sim.synth_temperature(12, seed=1)
        assert len(temps.times) == 365 * 24
        assert temps.start == datetime(2021, 1, 1, 0, 0, tzinfo=timezone.utc)
        assert temps.values.min() >= -5.0
        assert temps.values.max() <= 30.0

    def test_fractional_months_use_mean_length(self):
        temps = sim.synth_temperature(1.5, seed=1)
        assert len(temps.times) == int(round(1.5 * sim.DAYS_PER_MONTH * 24))

    def test_seeded_and_distinct(self):
        a = sim.synth_temperature(2, seed=4)
        b = sim.synth_temperature(2, seed=4)
        c = sim.synth_temperature(2, seed=5)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_winter_start_phase(self):
        temps = sim.synth_temperature(12, seed=2)
        jan = temps.values[: 31 * 24]
        jul = temps.values[181 * 24 : 212 * 24]
        assert jan.mean() < jul.mean()

    def test_clipping_is_rare(self):
        temps = sim.synth_temperature(12, seed=3)
        at_edges = np.mean((temps.values == -5.0) | (temps.values == 30.0))
        assert at_edges < 0.01


class TestAddMonths:
    def test_plain_shift(self):
        t = datetime(2021, 1, 15, 9, 30, tzinfo=timezone.utc)
        assert sim.add_months(t, 1) == datetime(2021, 2, 15, 9, 30, tzinfo=timezone.utc)

    def test_year_rollover(self):
        t = datetime(2021, 12, 3, tzinfo=timezone.utc)
        assert sim.add_months(t, 2) == datetime(2022, 2, 3, tzinfo=timezone.utc)

    def test_late_day_clamped(self):
        t = datetime(2021, 1, 31, tzinfo=timezone.utc)
        assert sim.add_months(t, 1) == datetime(2021, 2, 28, tzinfo=timezone.utc)


class TestSynthCampaign:
    def test_record_count_and_order(self):
        temps = sim.synth_temperature(18, seed=10)
        records = sim.synth_campaign(
            sim.TrackConfig(), one_bogie_train(), temps,
            trains_per_month=100, seed=10,
        )
        assert len(records) == 1800
        stamps = [r.timestamp for r in records]
        assert stamps == sorted(stamps)
        by_month: dict[str, int] = {}
        for r in records:
            key = r.timestamp.strftime("%Y-%m")
            by_month[key] = by_month.get(key, 0) + 1
        assert len(by_month) == 18
        assert set(by_month.values()) == {100}

    def test_trains_per_month_validated(self):
        temps = sim.synth_temperature(1, seed=0)
        with pytest.raises(ConfigError):
            sim.synth_campaign(
                sim.TrackConfig(), sim.TrainConfig(), temps, trains_per_month=0
            )

    def test_degradation_reaches_planted_drop(self):
        temps = sim.synth_temperature(6, seed=20)
        sched = sim.DegradationSchedule(
            onset_month=2, ramp_months=1.0, drop_fraction=0.05
        )
        sched.resolve_onset(temps.start)
        records = sim.synth_campaign(
            sim.TrackConfig(), one_bogie_train(), temps,
            trains_per_month=20, schedule=sched, seed=20,
        )
        ramp_end = datetime(2021, 4, 1, tzinfo=timezone.utc)
        ratios = []
        for rec in records:
            healthy = sim.evaluate(MAP, temps.at(rec.timestamp))
            ratio = rec.true_f2_hz / healthy
            ratios.append((rec.timestamp, ratio))
            if rec.timestamp <= sched.onset:
                assert ratio == pytest.approx(1.0, abs=1e-12)
            elif rec.timestamp >= ramp_end:
                assert ratio == pytest.approx(0.95, abs=1e-12)
        values = [r for _, r in ratios]
        assert all(b <= a + 1e-9 for a, b in zip(values, values[1:]))

    def test_without_schedule_stays_healthy(self):
        temps = sim.synth_temperature(2, seed=30)
        records = sim.synth_campaign(
            sim.TrackConfig(), one_bogie_train(), temps,
            trains_per_month=5, seed=30,
        )
        for rec in records:
            healthy = sim.evaluate(MAP, temps.at(rec.timestamp))
            assert rec.true_f2_hz == pytest.approx(healthy, abs=1e-12)


class TestNoiseCalibration:
    def test_requested_snr_is_reproduced(self):
        track, train = sim.TrackConfig(), sim.TrainConfig()
        ratio = sim.noise_std_for_snr(track, train, 10.0, 20.0, seed=3)
        clean = sim.synth_passage(
            replace(track, noise_std=0.0), train, 10.0, seed=3
        ).accel
        power = float(np.mean(clean**2))
        sigma = ratio * float(np.max(np.abs(clean)))
        snr_db = 10.0 * np.log10(power / sigma**2)
        assert snr_db == pytest.approx(20.0, abs=1e-9)


class TestCampaignManifest:
    def test_round_trip(self, tmp_path):
        temps = sim.synth_temperature(1, seed=40)
        records = sim.synth_campaign(
            sim.TrackConfig(), one_bogie_train(), temps,
            trains_per_month=4, seed=40, location_id="A2",
        )
        pdir = str(tmp_path / "passages")
        manifest = str(tmp_path / "manifest.csv")
        paths = sim.write_campaign(records, pdir, manifest)
        assert len(paths) == len(records)
        rows = sim.read_manifest(manifest)
        assert len(rows) == len(records)
        for (path, ts, loc, f2), rec in zip(rows, records):
            import os

            assert os.path.exists(path)
            assert ts == rec.timestamp
            assert loc == "A2"
            assert f2 == rec.true_f2_hz

    def test_bad_header_rejected(self, tmp_path):
        bad = tmp_path / "manifest.csv"
        bad.write_text("nope,b,c,d\n")
        with pytest.raises(DataError):
            sim.read_manifest(str(bad))
