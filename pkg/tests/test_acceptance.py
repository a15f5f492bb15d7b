"""Acceptance checks for the whole monitoring chain.

Ten numbered criteria, one test each, covering the headline requirements:
threshold calibration identity, frequency-recovery accuracy at 20 dB SNR,
decomposition completeness, modal identification exactness, temperature
model recovery, GEV estimator calibration, false-alarm rate, the two
end-to-end campaign scenarios, the score identity, and the distribution
comparison ordering.  Each test prints one ``PASS criterion N`` line with
the measured figures so a verbose run doubles as an acceptance report.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
import yaml
from scipy.integrate import quad
from scipy.stats import genextreme

from padmon import cli, detect, emd, evd, modal, sim, tempmodel
from padmon.ingest import TemperatureSeries, lowpass, normalize, slice_bogies

A2 = evd.GevParams(mu=-8.97, sigma=28.71, xi=-0.48)

_TRAIN = sim.TrainConfig()
_TS = datetime(2021, 6, 15, tzinfo=timezone.utc)
_TEMPS = TemperatureSeries(
    times=tuple(_TS + timedelta(hours=h - 24) for h in range(49)),
    values=np.full(49, 10.0),
)


def _flat_track(f2_hz: float, noise_std: float) -> sim.TrackConfig:
    """Track whose pad resonance sits at ``f2_hz`` regardless of temperature."""
    return sim.TrackConfig(
        f2_map=sim.TempFreqModel(s1=0.0, c=f2_hz, s3=0.0, b1=3.3, b2=19.3),
        noise_std=noise_std,
    )


def _sweep_case(args: tuple[float, float, int]) -> tuple[float, float]:
    f2_hz, noise_std, seed = args
    track = _flat_track(f2_hz, noise_std)
    rec = sim.synth_passage(track, _TRAIN, 10.0, seed=seed, timestamp=_TS)
    est = modal.estimate_passage(rec, _TEMPS)
    return f2_hz, est.value_hz


def test_criterion_01_threshold_identity():
    alpha, gamma = detect.calibrate([15.74] * 6, p_fa=0.083)
    assert alpha == pytest.approx(15.74, abs=1e-12)
    assert gamma == pytest.approx(39.2, abs=0.1)
    print(f"PASS criterion 1: alpha0g=15.74, P_FA=0.083 -> gamma_g={gamma:.3f} (39.2 +/- 0.1)")


def test_criterion_02_frequency_recovery_sweep():
    t0 = time.monotonic()
    freqs = np.linspace(420.0, 640.0, 9)
    cases = []
    for i, f2 in enumerate(freqs):
        quiet = _flat_track(float(f2), 0.0)
        noise = sim.noise_std_for_snr(quiet, _TRAIN, 10.0, 20.0)
        cases += [(float(f2), noise, 4000 + 100 * i + k) for k in range(50)]
    with ProcessPoolExecutor(max_workers=4) as pool:
        results = list(pool.map(_sweep_case, cases, chunksize=10))

    errors: dict[float, list[float]] = {float(f): [] for f in freqs}
    for f2, value in results:
        errors[f2].append(abs(value - f2))
    mae = {f2: float(np.mean(errs)) for f2, errs in errors.items()}
    worst_mae = max(mae.values())
    worst_single = max(max(errs) for errs in errors.values())
    assert all(len(errs) == 50 for errs in errors.values())
    assert worst_mae <= 2.0
    assert worst_single <= 10.0
    elapsed = time.monotonic() - t0
    print(
        f"PASS criterion 2: 9x50 passages at SNR 20 dB, worst per-frequency "
        f"MAE {worst_mae:.2f} Hz (<= 2), worst single error {worst_single:.2f} Hz "
        f"(<= 10), {elapsed:.0f}s"
    )


def test_criterion_03_decomposition_completeness():
    rng = np.random.default_rng(300)
    worst = 0.0
    for _ in range(100):
        f2 = float(rng.uniform(420.0, 640.0))
        track = _flat_track(f2, 0.05)
        rec = sim.synth_passage(track, _TRAIN, 10.0, seed=int(rng.integers(1 << 30)))
        rec.accel = normalize(lowpass(rec.accel, rec.fs_hz))
        seg = slice_bogies(rec)[0]
        out = emd.decompose(seg)
        rel = np.linalg.norm(out.reconstruct() - seg.samples) / np.linalg.norm(seg.samples)
        worst = max(worst, float(rel))
    assert worst <= 1e-10

    n = 4000
    t = np.arange(n) / 20000.0
    fast = np.sin(2 * np.pi * 550.0 * t)
    slow = np.sin(2 * np.pi * 80.0 * t)
    sep = emd.decompose(fast + slow)

    def corr(a, b):
        a = a - a.mean()
        b = b - b.mean()
        return float(np.dot(a, b) / np.sqrt(np.dot(a, a) * np.dot(b, b)))

    rho_fast = corr(sep.imfs[0], fast)
    rho_slow = corr(sep.imfs[1], slow)
    assert rho_fast > 0.95
    assert rho_slow > 0.95
    print(
        f"PASS criterion 3: 100 segments reconstruct within {worst:.2e} relative "
        f"(<= 1e-10); two-tone correlations {rho_fast:.3f}/{rho_slow:.3f} (> 0.95)"
    )


def test_criterion_04_modal_identification_exactness():
    fs = 20000.0
    t = np.arange(6000) / fs
    worst_rel = 0.0
    for zeta in (0.005, 0.02, 0.05):
        for f0 in (420.0, 500.0, 640.0):
            x = sim._damped_mode(t, f0, zeta, 0.0)
            model = modal.identify_order2(x, 1.0 / fs)
            f_hat = modal.eigen_frequency(model, 1.0 / fs)
            rel = abs(f_hat - f0) / f0
            worst_rel = max(worst_rel, rel)
            assert rel <= 0.01
    print(
        f"PASS criterion 4: noiseless damped cosines, 3 dampings x 3 frequencies, "
        f"worst relative frequency error {worst_rel:.2e} (<= 0.01)"
    )


def test_criterion_05_temperature_model_recovery():
    base = sim.default_f2_map()
    edges = np.linspace(-5.0, 30.0, 19)
    mids = 0.5 * (edges[:-1] + edges[1:])
    points = [
        tempmodel.TempFreqPoint(
            temp_c=float(c), freq_hz=float(base.shape(float(c))), n=40, mad_hz=0.0
        )
        for c in mids
    ]
    fit = tempmodel.fit_piecewise(points)
    assert fit.b1 == pytest.approx(base.b1, abs=0.5)
    assert fit.b2 == pytest.approx(base.b2, abs=0.5)
    assert fit.s1 == pytest.approx(base.s1, abs=0.2)
    assert fit.s3 == pytest.approx(base.s3, abs=0.2)
    assert fit.c == pytest.approx(base.c, abs=0.5)

    rng = np.random.default_rng(55)
    ts0 = datetime(2021, 1, 1, tzinfo=timezone.utc)
    ests = [
        modal.FrequencyEstimate(
            value_hz=float(base.shape(float(temp))) + 40.0,
            mad_hz=0.0,
            n_segments=8,
            timestamp=ts0 + timedelta(hours=6 * i),
            temp_c=float(temp),
            location_id="B7",
        )
        for i, temp in enumerate(rng.uniform(-5.0, 30.0, 60))
    ]
    shifted = tempmodel.shift_to_location(base, ests)
    assert shifted.y_offset == pytest.approx(40.0, abs=0.1)
    print(
        f"PASS criterion 5: breakpoints ({fit.b1:.2f}, {fit.b2:.2f}) vs (3.30, 19.30), "
        f"slopes ({fit.s1:.2f}, {fit.s3:.2f}) vs (-5.90, -5.30), middle {fit.c:.2f} vs "
        f"578.80; planted 40 Hz offset recovered as {shifted.y_offset:+.3f} Hz"
    )


def test_criterion_06_gev_estimator_calibration():
    # The maximum-likelihood estimator carries a real finite-sample bias at
    # this shape (xi = -0.48 sits near the regularity boundary), so the
    # acceptance band is centered on the bias a reference fitter measures on
    # the same draws, not on zero; 200 repeats resolve the intrinsic bias.
    runs, n = 200, 2000
    fitted = np.empty((runs, 3))
    oracle = np.empty((runs, 3))
    for r in range(runs):
        data = evd.gev_sample(n, A2, np.random.default_rng(6000 + r))
        fit = evd.fit_gev(data)
        fitted[r] = (fit.params.mu, fit.params.sigma, fit.params.xi)
        c, loc, scale = genextreme.fit(data, -A2.xi, loc=A2.mu, scale=A2.sigma)
        oracle[r] = (loc, scale, -c)
    truth = np.array([A2.mu, A2.sigma, A2.xi])
    bias = fitted.mean(axis=0) - truth
    oracle_bias = oracle.mean(axis=0) - truth
    band = 3.0 * oracle.std(axis=0, ddof=1) / np.sqrt(runs)
    assert np.all(np.abs(bias - oracle_bias) <= band), (
        f"bias {bias} vs oracle band {oracle_bias} +/- {band}"
    )
    assert np.all(np.abs(bias) <= np.array([0.5, 0.5, 0.01]))

    upper = A2.mu - A2.sigma / A2.xi
    total, _ = quad(lambda v: evd.gev_pdf(v, A2), -np.inf, upper, limit=200)
    assert total == pytest.approx(1.0, abs=1e-6)
    off = np.abs(bias - oracle_bias) / band
    print(
        f"PASS criterion 6: 200 fits at N=2000, bias (mu/sigma/xi) = "
        f"{bias[0]:+.4f}/{bias[1]:+.4f}/{bias[2]:+.4f}, offset from oracle band "
        f"centre {off[0]:.3f}/{off[1]:.3f}/{off[2]:.3f} of 3-SE halfwidth; "
        f"pdf integrates to {total:.8f}"
    )


def _h0_score(seed: int, n: int = 100) -> float:
    window = evd.gev_sample(n, A2, np.random.default_rng(seed))
    g, _ = detect.glrt_statistic(window, A2)
    return g


def test_criterion_07_false_alarm_rate():
    t0 = time.monotonic()
    pool = [_h0_score(70000 + k) for k in range(40)]
    alpha, gamma = detect.calibrate(pool, p_fa=0.083)
    hits = sum(_h0_score(71000 + k) > gamma for k in range(1000))
    rate = hits / 1000.0
    assert 0.04 <= rate <= 0.17
    elapsed = time.monotonic() - t0
    print(
        f"PASS criterion 7: gamma_g={gamma:.2f} from 40-window pool "
        f"(alpha0g={alpha:.2f}), exceedance {rate:.3f} on 1000 fresh H0 windows "
        f"(within [0.04, 0.17]), {elapsed:.0f}s"
    )


def _run_stages(cfg_path: str) -> None:
    for stage in ("simulate", "fit-temp", "residuals", "fit-dist", "detect", "report"):
        if stage == "fit-temp":
            assert cli.main(["extract", "-c", cfg_path, "--jobs", "4"]) == cli.EXIT_OK
        assert cli.main([stage, "-c", cfg_path]) == cli.EXIT_OK


def test_criterion_08_end_to_end_scenarios(tmp_path):
    t0 = time.monotonic()
    healthy_out = tmp_path / "healthy"
    degraded_out = tmp_path / "degraded"

    healthy_cfg = tmp_path / "healthy.yaml"
    healthy_cfg.write_text(
        yaml.safe_dump(
            {
                "paths": {"output_dir": str(healthy_out)},
                "simulate": {
                    "months": 18,
                    "trains_per_month": 40,
                    "seed": 2024,
                    "location_id": "H1",
                    "track": {"f2_jitter_hz": 2.0},
                },
            }
        )
    )
    degraded_cfg = tmp_path / "degraded.yaml"
    degraded_cfg.write_text(
        yaml.safe_dump(
            {
                "paths": {"output_dir": str(degraded_out)},
                "simulate": {
                    "months": 18,
                    "trains_per_month": 40,
                    "seed": 101,
                    "location_id": "D1",
                    "track": {"f2_jitter_hz": 2.0},
                    "degradation": {
                        "onset_month": 7,
                        "ramp_months": 1.0,
                        "drop_fraction": 0.05,
                    },
                },
                "tempmodel": {
                    "reference_model": str(healthy_out / "model.json"),
                    "baseline_months": 6,
                },
                "detect": {"calibration_log": str(healthy_out / "residuals.csv")},
            }
        )
    )

    _run_stages(str(healthy_cfg))
    _run_stages(str(degraded_cfg))

    healthy_rows = [r for _, r in detect.read_detections(str(healthy_out / "detections.csv"))]
    assert len(healthy_rows) == 17
    healthy_alarms = [r for r in healthy_rows if r.alarm]
    assert len(healthy_alarms) <= 2
    windows = [r.window for r in healthy_rows]
    for row in healthy_alarms:
        i = windows.index(row.window)
        assert any(f.withdrawal for f in healthy_rows[i + 1 : i + 3]), (
            f"alarm at {row.window} not withdrawn within 2 windows"
        )

    degraded_rows = [r for _, r in detect.read_detections(str(degraded_out / "detections.csv"))]
    alarm_windows = [r.window for r in degraded_rows if r.alarm]
    assert alarm_windows, "degraded campaign raised no alarm"
    first_alarm = min(alarm_windows)
    assert first_alarm <= "2021-10", f"first alarm {first_alarm} later than month 10"
    assert not any(r.withdrawal for r in degraded_rows if r.window >= first_alarm), (
        "withdrawal after the first degradation alarm"
    )

    elapsed = time.monotonic() - t0
    assert elapsed < 600.0
    print(
        f"PASS criterion 8: healthy {len(healthy_alarms)} alarm(s) in 17 windows; "
        f"degraded first alarm {first_alarm} (<= 2021-10), "
        f"{len(alarm_windows)} alarm windows, no withdrawal after onset; "
        f"both pipelines in {elapsed:.0f}s (< 600)"
    )


def test_criterion_09_score_identity_and_nonnegativity():
    worst = 0.0
    min_direct = np.inf
    for k in range(1000):
        window = evd.gev_sample(50, A2, np.random.default_rng(90000 + k))
        g, theta_hat = detect.glrt_statistic(window, A2)
        direct = evd.gev_loglik(window, theta_hat) - evd.gev_loglik(window, A2)
        assert g >= 0.0
        worst = max(worst, abs(g - direct))
        min_direct = min(min_direct, direct)
    assert worst <= 1e-8
    assert min_direct >= -1e-8
    print(
        f"PASS criterion 9: max |g - (l(theta_hat) - l(theta0))| = {worst:.2e} "
        f"(<= 1e-8) over 1000 windows, min raw difference {min_direct:.2e} (>= -1e-8)"
    )


def test_criterion_10_distribution_comparison_ordering():
    wins = 0
    for r in range(200):
        data = evd.gev_sample(500, A2, np.random.default_rng(95000 + r))
        p_gev = evd.fit_report_gev(data).ks_p_value
        p_gauss = evd.fit_gaussian(data).ks_p_value
        wins += p_gev > p_gauss
    assert wins >= 180
    print(
        f"PASS criterion 10: GEV K-S p-value beat the Gaussian one in {wins}/200 "
        f"repeats at N=500 (>= 180)"
    )
