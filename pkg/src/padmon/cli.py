"""Command-line pipeline: simulate, extract, model, and detect.

Every stage reads and writes plain files under a configured output
directory, so stages can be rerun independently and outputs are
byte-reproducible for identical inputs.
"""

from __future__ import annotations

import argparse
import csv
import glob
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields as dc_fields

import numpy as np
import yaml

from . import detect as det
from . import evd, modal, sim, tempmodel
from .errors import ConfigError, DataError, PadmonError
from .ingest import (
    ScreeningRule,
    read_passage,
    read_temperature,
    write_temperature,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2


@dataclass
class Paths:
    """Resolved locations of every pipeline artifact."""

    output_dir: str
    passage_dir: str
    temperature_file: str

    @property
    def manifest_file(self) -> str:
        return os.path.join(self.output_dir, "manifest.csv")

    @property
    def estimates_file(self) -> str:
        return os.path.join(self.output_dir, "estimates.csv")

    @property
    def model_file(self) -> str:
        return os.path.join(self.output_dir, "model.json")

    @property
    def residuals_file(self) -> str:
        return os.path.join(self.output_dir, "residuals.csv")

    @property
    def fit_reports_file(self) -> str:
        return os.path.join(self.output_dir, "fit_reports.csv")

    @property
    def detections_file(self) -> str:
        return os.path.join(self.output_dir, "detections.csv")

    @property
    def state_file(self) -> str:
        return os.path.join(self.output_dir, "state.json")

    @property
    def report_dir(self) -> str:
        return os.path.join(self.output_dir, "report")


@dataclass
class SimulateConfig:
    months: float = 18.0
    trains_per_month: int = 40
    seed: int = 1234
    location_id: str = "SIM"
    track: sim.TrackConfig = field(default_factory=sim.TrackConfig)
    train: sim.TrainConfig = field(default_factory=sim.TrainConfig)
    degradation: sim.DegradationSchedule | None = None


@dataclass
class TempModelConfig:
    """Temperature-model stage options.

    ``baseline_months`` restricts the fit (or the transfer shift) to the
    first n calendar months of estimates, so a later stiffness change
    cannot contaminate the model. ``reference_model`` skips fitting
    altogether: the stored model is loaded and only its vertical offset
    is refit against this location's baseline.
    """

    n_bins: int = tempmodel.DEFAULT_BINS
    t_range: tuple[float, float] = tempmodel.DEFAULT_RANGE
    grid_step: float = 0.1
    flat_middle: bool = True
    baseline_months: int | None = None
    reference_model: str | None = None


@dataclass
class DetectConfig:
    p_fa: float = det.DEFAULT_P_FA
    m_e_months: int = 1
    m_d_months: int = 1
    calibration_log: str | None = None


@dataclass
class PipelineConfig:
    paths: Paths
    screening: ScreeningRule = field(default_factory=ScreeningRule)
    estimation: modal.EstimationSettings = field(
        default_factory=modal.EstimationSettings
    )
    tempmodel: TempModelConfig = field(default_factory=TempModelConfig)
    detect: DetectConfig = field(default_factory=DetectConfig)
    simulate: SimulateConfig = field(default_factory=SimulateConfig)
    location: str | None = None
    jobs: int = 1


def _build(cls, data: dict, context: str):
    """Construct a dataclass from a config mapping, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError(f"{context}: expected a mapping, got {type(data).__name__}")
    names = {f.name for f in dc_fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}")
    return cls(**data)


def _tupled(value, context: str) -> tuple[float, float]:
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise ConfigError(f"{context}: expected a two-element list")
    return float(value[0]), float(value[1])


def load_config(path: str) -> PipelineConfig:
    """Parse and validate a YAML pipeline configuration.

    Relative paths are resolved against the config file's directory.
    """
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    known = {
        "paths", "screening", "estimation", "tempmodel", "detect",
        "simulate", "location", "jobs",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{path}: unknown sections {sorted(unknown)}")

    base = os.path.dirname(os.path.abspath(path))

    def resolve(p: str) -> str:
        return p if os.path.isabs(p) else os.path.join(base, p)

    paths_raw = raw.get("paths")
    if not isinstance(paths_raw, dict) or "output_dir" not in paths_raw:
        raise ConfigError(f"{path}: paths.output_dir is required")
    out_dir = resolve(str(paths_raw["output_dir"]))
    paths = Paths(
        output_dir=out_dir,
        passage_dir=resolve(str(paths_raw.get("passage_dir", os.path.join(out_dir, "passages")))),
        temperature_file=resolve(
            str(paths_raw.get("temperature_file", os.path.join(out_dir, "temperature.csv")))
        ),
    )
    extra = set(paths_raw) - {"output_dir", "passage_dir", "temperature_file"}
    if extra:
        raise ConfigError(f"{path}: unknown path keys {sorted(extra)}")

    screening = _build(ScreeningRule, raw.get("screening", {}), "screening")

    est_raw = dict(raw.get("estimation", {}))
    if "band_hz" in est_raw:
        est_raw["band_hz"] = _tupled(est_raw["band_hz"], "estimation.band_hz")
    estimation = _build(modal.EstimationSettings, est_raw, "estimation")

    tm_raw = dict(raw.get("tempmodel", {}))
    if "t_range" in tm_raw:
        tm_raw["t_range"] = _tupled(tm_raw["t_range"], "tempmodel.t_range")
    if tm_raw.get("reference_model"):
        tm_raw["reference_model"] = resolve(str(tm_raw["reference_model"]))
    tm = _build(TempModelConfig, tm_raw, "tempmodel")
    if tm.baseline_months is not None and tm.baseline_months < 1:
        raise ConfigError("tempmodel.baseline_months must be at least 1")

    det_raw = dict(raw.get("detect", {}))
    if det_raw.get("calibration_log"):
        det_raw["calibration_log"] = resolve(str(det_raw["calibration_log"]))
    detect_cfg = _build(DetectConfig, det_raw, "detect")

    sim_raw = dict(raw.get("simulate", {}))
    track_raw = dict(sim_raw.pop("track", {}))
    if "f2_map" in track_raw:
        track_raw["f2_map"] = _build(
            tempmodel.TempFreqModel, track_raw["f2_map"], "simulate.track.f2_map"
        )
    train_raw = sim_raw.pop("train", {})
    degr_raw = sim_raw.pop("degradation", None)
    simulate = _build(SimulateConfig, sim_raw, "simulate")
    simulate.track = _build(sim.TrackConfig, track_raw, "simulate.track")
    simulate.train = _build(sim.TrainConfig, train_raw, "simulate.train")
    if degr_raw:
        simulate.degradation = _build(
            sim.DegradationSchedule, dict(degr_raw), "simulate.degradation"
        )

    location = raw.get("location")
    jobs = int(raw.get("jobs", 1))
    if jobs < 1:
        raise ConfigError("jobs must be at least 1")
    return PipelineConfig(
        paths=paths,
        screening=screening,
        estimation=estimation,
        tempmodel=tm,
        detect=detect_cfg,
        simulate=simulate,
        location=None if location is None else str(location),
        jobs=jobs,
    )


# ---------------------------------------------------------------------------
# Commands


def cmd_simulate(cfg: PipelineConfig, seed: int | None = None) -> int:
    sc = cfg.simulate
    use_seed = sc.seed if seed is None else seed
    os.makedirs(cfg.paths.output_dir, exist_ok=True)
    temps = sim.synth_temperature(sc.months, seed=use_seed)
    write_temperature(temps, cfg.paths.temperature_file)

    schedule = sc.degradation
    if schedule is not None:
        schedule.resolve_onset(temps.start)
    records = sim.synth_campaign(
        sc.track,
        sc.train,
        temps,
        trains_per_month=sc.trains_per_month,
        schedule=schedule,
        seed=use_seed + 1,
        location_id=sc.location_id,
    )
    sim.write_campaign(records, cfg.paths.passage_dir, cfg.paths.manifest_file)
    print(
        f"simulated {len(records)} passages at {sc.location_id} "
        f"over {sc.months:g} months"
    )
    return EXIT_OK


#: Per-process cache of parsed temperature series, keyed by path.
_WORKER_TEMPS: dict = {}


def _extract_one(args: tuple) -> tuple[str, object]:
    """Worker for one passage file; lives at module level for pickling."""
    path, temp_path, rule, settings = args
    if temp_path not in _WORKER_TEMPS:
        _WORKER_TEMPS[temp_path] = read_temperature(temp_path)
    try:
        record = read_passage(path)
        if not rule.accepts(record):
            return ("screened", path)
        est = modal.estimate_passage(record, _WORKER_TEMPS[temp_path], settings=settings)
        return ("ok", est)
    except PadmonError as exc:
        return ("failed", f"{path}: {exc}")


def cmd_extract(cfg: PipelineConfig, jobs: int | None = None) -> int:
    n_jobs = cfg.jobs if jobs is None else jobs
    if n_jobs < 1:
        raise ConfigError("jobs must be at least 1")
    if not os.path.isdir(cfg.paths.passage_dir):
        raise DataError(f"missing passage directory {cfg.paths.passage_dir}")
    if not os.path.isfile(cfg.paths.temperature_file):
        raise DataError(f"missing temperature file {cfg.paths.temperature_file}")
    paths = sorted(glob.glob(os.path.join(cfg.paths.passage_dir, "*.csv")))
    if not paths:
        logger.warning("no passage files under %s", cfg.paths.passage_dir)
        os.makedirs(cfg.paths.output_dir, exist_ok=True)
        modal.write_estimates([], cfg.paths.estimates_file)
        return EXIT_OK

    work = [
        (p, cfg.paths.temperature_file, cfg.screening, cfg.estimation)
        for p in paths
    ]
    if n_jobs == 1:
        results = [_extract_one(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_extract_one, work, chunksize=8))

    estimates: list[modal.FrequencyEstimate] = []
    n_screened = n_failed = 0
    for status, payload in results:
        if status == "ok":
            estimates.append(payload)
        elif status == "screened":
            n_screened += 1
        else:
            n_failed += 1
            logger.warning("passage skipped: %s", payload)
    estimates.sort(key=lambda e: (e.location_id, e.timestamp))
    os.makedirs(cfg.paths.output_dir, exist_ok=True)
    modal.write_estimates(estimates, cfg.paths.estimates_file)
    print(
        f"extracted {len(estimates)} estimates "
        f"({n_screened} screened out, {n_failed} failed)"
    )
    if not estimates:
        logger.warning("estimate log is empty")
    return EXIT_OK


def _select_location(
    estimates: list[modal.FrequencyEstimate], cfg: PipelineConfig,
    override: str | None,
) -> tuple[str, list[modal.FrequencyEstimate]]:
    target = override or cfg.location
    present = sorted({e.location_id for e in estimates})
    if not present:
        raise DataError("estimate log is empty")
    if target is None:
        if len(present) > 1:
            raise ConfigError(
                f"multiple locations present {present}; pass --location"
            )
        target = present[0]
    selected = [e for e in estimates if e.location_id == target]
    if not selected:
        raise DataError(f"no estimates for location {target}")
    return target, selected


def _baseline_slice(
    estimates: list[modal.FrequencyEstimate], months: int | None
) -> list[modal.FrequencyEstimate]:
    """First n calendar months of a chronologically sorted estimate list."""
    if months is None or not estimates:
        return estimates
    start = min(e.timestamp for e in estimates)
    cutoff = sim.add_months(start, months)
    return [e for e in estimates if e.timestamp < cutoff]


def cmd_fit_temp(cfg: PipelineConfig, location: str | None = None) -> int:
    estimates = modal.read_estimates(cfg.paths.estimates_file)
    target, selected = _select_location(estimates, cfg, location)
    baseline = _baseline_slice(selected, cfg.tempmodel.baseline_months)
    if not baseline:
        raise DataError(f"no baseline estimates for location {target}")
    if cfg.tempmodel.reference_model:
        reference = tempmodel.read_model(cfg.tempmodel.reference_model)
        model = tempmodel.shift_to_location(reference, baseline)
        tempmodel.write_model(model, cfg.paths.model_file)
        print(
            f"shifted reference model to {target}: offset {model.y_offset:+.1f} Hz "
            f"from {len(baseline)} baseline estimates"
        )
        return EXIT_OK
    points = tempmodel.bin_by_temperature(
        baseline, n_bins=cfg.tempmodel.n_bins, t_range=cfg.tempmodel.t_range
    )
    model = tempmodel.fit_piecewise(
        points,
        flat_middle=cfg.tempmodel.flat_middle,
        grid_step=cfg.tempmodel.grid_step,
        t_range=cfg.tempmodel.t_range,
    )
    tempmodel.write_model(model, cfg.paths.model_file)
    print(
        f"fitted temperature model for {target}: "
        f"plateau {model.c:.1f} Hz, slopes {model.s1:.2f}/{model.s3:.2f} Hz/degC, "
        f"breakpoints {model.b1:.1f}/{model.b2:.1f} degC "
        f"({model.n_points} points, rss {model.fit_rss:.3g})"
    )
    return EXIT_OK


def cmd_residuals(cfg: PipelineConfig, location: str | None = None) -> int:
    estimates = modal.read_estimates(cfg.paths.estimates_file)
    target, selected = _select_location(estimates, cfg, location)
    model = tempmodel.read_model(cfg.paths.model_file)
    sequences = tempmodel.residuals(selected, model)
    tempmodel.write_residuals(sequences, cfg.paths.residuals_file)
    total = sum(s.n for s in sequences)
    print(
        f"computed {total} residuals for {target} "
        f"in {len(sequences)} monthly windows"
    )
    return EXIT_OK


def cmd_fit_dist(cfg: PipelineConfig, location: str | None = None) -> int:
    sequences = tempmodel.read_residuals(cfg.paths.residuals_file)
    target = location or cfg.location
    if target is not None:
        sequences = [s for s in sequences if s.location_id == target]
    if not sequences:
        raise DataError("no residuals to fit")
    by_location: dict[str, list[np.ndarray]] = {}
    for seq in sequences:
        by_location.setdefault(seq.location_id, []).append(seq.values)
    rows: list[tuple[str, evd.FitReport]] = []
    for loc in sorted(by_location):
        pooled = np.concatenate(by_location[loc])
        for fitter in (evd.fit_report_gev, evd.fit_gaussian, evd.fit_weibull3):
            try:
                rows.append((loc, fitter(pooled)))
            except PadmonError as exc:
                logger.warning("%s: %s fit failed: %s", loc, fitter.__name__, exc)
    if not rows:
        raise DataError("every distribution fit failed")
    evd.write_fit_reports(rows, cfg.paths.fit_reports_file)
    for loc, rep in rows:
        pretty = ", ".join(f"{k}={v:.2f}" for k, v in rep.params.items())
        print(f"{loc} {rep.family}: {pretty} (KS p={rep.ks_p_value:.3f}, n={rep.n})")
    return EXIT_OK


def _calibration_pool(
    cfg: PipelineConfig, own_scores: list[float]
) -> list[float]:
    """Healthy score pool: a reference residual log, or this site's own."""
    log_path = cfg.detect.calibration_log
    if log_path is None:
        return own_scores
    sequences = tempmodel.read_residuals(log_path)
    ref_locations = {s.location_id for s in sequences}
    if len(ref_locations) > 1:
        raise DataError(
            f"calibration log {log_path} mixes locations {sorted(ref_locations)}"
        )
    if len(sequences) < cfg.detect.m_e_months + 6:
        raise DataError(
            f"calibration log {log_path} has too few windows "
            f"({len(sequences)})"
        )
    est = np.concatenate(
        [s.values for s in sequences[: cfg.detect.m_e_months]]
    )
    theta_ref = evd.fit_gev(est).params
    pool: list[float] = []
    for seq in sequences[cfg.detect.m_e_months:]:
        if seq.n < det.MIN_WINDOW:
            continue
        try:
            g, _ = det.glrt_statistic(seq.values, theta_ref)
        except PadmonError:
            continue
        if math.isfinite(g):
            pool.append(g)
    return pool


def cmd_detect(cfg: PipelineConfig, location: str | None = None) -> int:
    sequences = tempmodel.read_residuals(cfg.paths.residuals_file)
    target = location or cfg.location
    if target is not None:
        sequences = [s for s in sequences if s.location_id == target]
    else:
        present = sorted({s.location_id for s in sequences})
        if len(present) > 1:
            raise ConfigError(
                f"multiple locations present {present}; pass --location"
            )
    if not sequences:
        raise DataError("no residual windows to score")
    m_e = cfg.detect.m_e_months
    if len(sequences) <= m_e:
        raise DataError(
            f"need more than {m_e} windows to split estimation and detection, "
            f"got {len(sequences)}"
        )
    target = sequences[0].location_id
    estimation = np.concatenate([s.values for s in sequences[:m_e]])
    monitoring = sequences[m_e:]

    state = det.initialize(
        estimation,
        p_fa=cfg.detect.p_fa,
        m_e_months=m_e,
        m_d_months=cfg.detect.m_d_months,
    )

    own_scores: list[float] = []
    for seq in monitoring:
        if seq.n < det.MIN_WINDOW:
            continue
        try:
            g, _ = det.glrt_statistic(seq.values, state.theta0)
        except PadmonError:
            continue
        if math.isfinite(g):
            own_scores.append(g)
    pool = _calibration_pool(cfg, own_scores)
    alpha, _gamma = det.calibrate(pool, p_fa=cfg.detect.p_fa)
    det.apply_calibration(state, alpha)

    reports = [det.step(state, seq) for seq in monitoring]
    det.write_detections(reports, target, cfg.paths.detections_file)
    det.state_to_json(state, cfg.paths.state_file)

    n_alarm = sum(1 for r in reports if r.alarm)
    n_withdraw = sum(1 for r in reports if r.withdrawal)
    n_indet = sum(1 for r in reports if r.alarm is None)
    for r in reports:
        mark = "ALARM" if r.alarm else ("indeterminate" if r.alarm is None else "ok")
        extra = " withdrawal" if r.withdrawal else ""
        print(f"{r.window}  g={r.g:9.3f}  gamma={r.threshold:.3f}  {mark}{extra}")
    print(
        f"{target}: {n_alarm} alarm(s), {n_withdraw} withdrawal(s), "
        f"{n_indet} indeterminate of {len(reports)} windows "
        f"(threshold {state.gamma_g:.2f})"
    )
    return EXIT_OK


def cmd_report(cfg: PipelineConfig, location: str | None = None) -> int:
    os.makedirs(cfg.paths.report_dir, exist_ok=True)
    target = location or cfg.location

    points_path = os.path.join(cfg.paths.report_dir, "temp_freq_points.csv")
    with open(points_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["location_id", "temp_c", "freq_hz", "n", "mad_hz"])
        if os.path.isfile(cfg.paths.estimates_file):
            estimates = modal.read_estimates(cfg.paths.estimates_file)
            by_loc: dict[str, list] = {}
            for e in estimates:
                if target is None or e.location_id == target:
                    by_loc.setdefault(e.location_id, []).append(e)
            for loc in sorted(by_loc):
                for p in tempmodel.bin_by_temperature(
                    by_loc[loc], n_bins=cfg.tempmodel.n_bins,
                    t_range=cfg.tempmodel.t_range,
                ):
                    w.writerow(
                        [loc, repr(p.temp_c), repr(p.freq_hz), str(p.n),
                         repr(p.mad_hz)]
                    )

    prob_path = os.path.join(cfg.paths.report_dir, "probability_plot.csv")
    acf_path = os.path.join(cfg.paths.report_dir, "autocorrelation.csv")
    with open(prob_path, "w", newline="") as pf, open(acf_path, "w", newline="") as af:
        pw, aw = csv.writer(pf), csv.writer(af)
        pw.writerow(["location_id", "residual_hz", "plot_position"])
        aw.writerow(["location_id", "lag", "autocorrelation"])
        if os.path.isfile(cfg.paths.residuals_file):
            sequences = tempmodel.read_residuals(cfg.paths.residuals_file)
            by_loc2: dict[str, list[np.ndarray]] = {}
            for s in sequences:
                if target is None or s.location_id == target:
                    by_loc2.setdefault(s.location_id, []).append(s.values)
            for loc in sorted(by_loc2):
                pooled = np.sort(np.concatenate(by_loc2[loc]))
                n = pooled.size
                for i, v in enumerate(pooled, start=1):
                    pw.writerow([loc, repr(float(v)), repr((i - 0.5) / n)])
                if n > 1:
                    acf = evd.autocorrelation(pooled, min(40, n - 1))
                    for lag, r in enumerate(acf):
                        aw.writerow([loc, str(lag), repr(float(r))])

    g_path = os.path.join(cfg.paths.report_dir, "g_series.csv")
    with open(g_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["location_id", "window", "g", "gamma_g", "alarm", "withdrawal"])
        if os.path.isfile(cfg.paths.detections_file):
            for loc, rep in det.read_detections(cfg.paths.detections_file):
                if target is not None and loc != target:
                    continue
                w.writerow(
                    [
                        loc, rep.window, repr(rep.g), repr(rep.threshold),
                        "" if rep.alarm is None else str(int(rep.alarm)),
                        str(int(rep.withdrawal)),
                    ]
                )
    print(f"report written under {cfg.paths.report_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point


class _Parser(argparse.ArgumentParser):
    """Argparse variant whose usage failures exit with the config code."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise SystemExit2(message)


class SystemExit2(Exception):
    """Internal marker for usage errors; mapped to exit code 1."""


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="padmon",
        description="Railpad condition monitoring pipeline",
    )
    parser.add_argument(
        "--verbose", "-v", action="store_true", help="log at INFO level"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", "-c", required=True, help="pipeline YAML")
        return p

    p = add("simulate", "generate a synthetic monitoring campaign")
    p.add_argument("--seed", type=int, default=None, help="override the seed")
    p = add("extract", "estimate pad frequencies from passage files")
    p.add_argument("--jobs", "-j", type=int, default=None, help="parallel workers")
    for name, help_text in (
        ("fit-temp", "fit the temperature model from the estimate log"),
        ("residuals", "compute temperature-corrected residuals"),
        ("fit-dist", "fit candidate distributions to residuals"),
        ("detect", "score monthly windows and raise alarms"),
        ("report", "write plot-ready summary tables"),
    ):
        p = add(name, help_text)
        p.add_argument("--location", default=None, help="target location id")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit2 as exc:
        print(f"padmon: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config)
        if args.command == "simulate":
            return cmd_simulate(cfg, seed=args.seed)
        if args.command == "extract":
            return cmd_extract(cfg, jobs=args.jobs)
        if args.command == "fit-temp":
            return cmd_fit_temp(cfg, location=args.location)
        if args.command == "residuals":
            return cmd_residuals(cfg, location=args.location)
        if args.command == "fit-dist":
            return cmd_fit_dist(cfg, location=args.location)
        if args.command == "detect":
            return cmd_detect(cfg, location=args.location)
        if args.command == "report":
            return cmd_report(cfg, location=args.location)
        raise ConfigError(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"padmon: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"padmon: missing input: {exc.filename or exc}", file=sys.stderr)
        return EXIT_DATA
    except (DataError, OSError) as exc:
        print(f"padmon: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
