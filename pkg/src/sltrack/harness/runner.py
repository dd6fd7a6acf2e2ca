"""Single runs and Monte-Carlo aggregation of the tracker plus self-assessment."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..assessment import ASPECTS, AspectBinning, AssessmentTrack, NISWindow, build_references, observe_step
from ..tracker import (
    MeasurementScan,
    MotionModel,
    NumericalError,
    SensorModel,
    TrackState,
    associate_nn,
    association_reference,
    predict,
    reference_coeffs,
    steady_state_innovation_covs,
    update,
)
from .config import ScenarioConfig
from .scenario import generate_scenario, run_rng

log = logging.getLogger(__name__)

METRICS = tuple(
    [f"dc_{a.short}" for a in ASPECTS]
    + [f"thr_{a.short}" for a in ASPECTS]
    + [f"u_{a.short}" for a in ASPECTS]
    + ["nis_avg", "nis_lo", "nis_hi", "err_m"]
)
METRIC_INDEX = {m: i for i, m in enumerate(METRICS)}


@dataclass
class RunRecord:
    """Per (step, sensor) metrics of one run; missing values are NaN."""

    metrics: np.ndarray  # (num_steps, num_sensors, len(METRICS))
    flags: np.ndarray  # (num_steps, num_sensors, 4) bool
    associated: np.ndarray  # (num_steps, num_sensors) bool
    resets: np.ndarray  # (num_steps, num_sensors, 4) bool
    warnings: list[str] = field(default_factory=list)

    def metric(self, name: str) -> np.ndarray:
        return self.metrics[:, :, METRIC_INDEX[name]]


@dataclass
class MonteCarloResult:
    mean: RunRecord
    runs: list[RunRecord]

    @property
    def num_runs(self) -> int:
        return len(self.runs)


@dataclass(frozen=True)
class Setup:
    """Everything the tracker and monitor assume; fixed for a whole configuration."""

    motion: MotionModel
    sensors: tuple[SensorModel, ...]
    binning: tuple[AspectBinning, ...]
    references: tuple[dict, ...]


def build_setup(cfg: ScenarioConfig) -> Setup:
    motion = MotionModel.constant_velocity(cfg.dt, cfg.accel_std)
    sensors = []
    for sid in range(1, cfg.num_sensors + 1):
        p = cfg.sensor_params(sid)
        sensors.append(SensorModel(p.detection_prob, p.clutter_mean, cfg.fov_volume, p.meas_noise_std**2 * np.eye(2)))
    covs = steady_state_innovation_covs(motion, sensors)
    binnings, refs = [], []
    for sensor, s_cov in zip(sensors, covs):
        if cfg.sa.reference == "closed_form":
            ref_model = reference_coeffs(sensor)
        else:
            ref_model = association_reference(sensor, s_cov)
        binning = AspectBinning.create(cfg.sa.bins, sensor.meas_dim, cfg.sa.gate_prob, sensor.clutter_mean)
        binnings.append(binning)
        refs.append(build_references(sensor.clutter_mean, ref_model, binning))
    return Setup(motion, tuple(sensors), tuple(binnings), tuple(refs))


def run_once(cfg: ScenarioConfig, run_index: int = 0, setup: Setup | None = None) -> RunRecord:
    """One run: predict once per step, then each sensor in order associates, updates and self-assesses."""
    setup = setup or build_setup(cfg)
    scen = generate_scenario(cfg, run_rng(cfg.seed, run_index))
    n, ns, sa = cfg.num_steps, cfg.num_sensors, cfg.sa

    metrics = np.full((n, ns, len(METRICS)), np.nan)
    flags = np.zeros((n, ns, len(ASPECTS)), dtype=bool)
    resets = np.zeros_like(flags)
    associated = np.zeros((n, ns), dtype=bool)
    warnings = list(scen.warnings)

    tracks = [
        [AssessmentTrack(a, setup.references[s][a], sa.n_st, sa.p_td, sa.alpha, s + 1) for a in ASPECTS]
        for s in range(ns)
    ]
    base_rates = [[t.base_rate for t in row] for row in tracks]
    nis = [NISWindow(sa.effective_nis_window, 2) for _ in range(ns)]

    std0 = cfg.sensor_params(1).meas_noise_std
    mean0 = np.array([*scen.initial_position, *cfg.initial_speed])
    cov0 = np.diag([std0**2, std0**2, cfg.initial_speed_std**2, cfg.initial_speed_std**2])
    state = TrackState(mean0, cov0, 0)
    misses = 0
    diverged = False

    for k in range(n):
        if k > 0:
            try:
                state = predict(state, setup.motion)
            except NumericalError as exc:
                warnings.append(f"step {k}: {exc}; track re-initialised")
                state = TrackState(np.array([*scen.truth[k, :2], *cfg.initial_speed]), cov0, k)
        any_assoc = False
        for s in range(ns):
            sensor = setup.sensors[s]
            scan = MeasurementScan(scen.scans[s][k], s + 1, k)
            innov = associate_nn(state, scan, sensor, sa.gate_prob)
            if innov.assoc_index:
                associated[k, s] = any_assoc = True
                state = update(state, innov, sensor)
                d2 = float(innov.mahalanobis_sq[innov.assoc_index - 1])
            else:
                d2 = None
            row = metrics[k, s]
            for j, track in enumerate(tracks[s]):
                out = track.step(observe_step(track.aspect, innov, scan, setup.binning[s], base_rates[s][j]))
                row[j] = out.dc_score
                row[4 + j] = out.threshold
                row[8 + j] = out.long_term_uncertainty
                flags[k, s, j] = out.flag
                resets[k, s, j] = out.reset
            res = nis[s].push(d2)
            if res is not None:
                row[12], row[13], row[14] = res.average, res.ci_low, res.ci_high
            row[15] = math.hypot(*(state.mean[:2] - scen.truth[k, :2]))

        misses = 0 if any_assoc else misses + 1
        if not diverged and (misses > cfg.divergence_misses or np.trace(state.covariance) > cfg.divergence_trace):
            diverged = True
            warnings.append(f"step {k}: track divergence (misses={misses}, trace={np.trace(state.covariance):.3g})")
            log.info("run %d: track divergence at step %d", run_index, k)
        elif diverged and any_assoc and np.trace(state.covariance) <= cfg.divergence_trace:
            diverged = False

    return RunRecord(metrics, flags, associated, resets, warnings)


def _run_worker(args):
    cfg, index = args
    return run_once(cfg, index, _worker_setup(cfg))


@lru_cache(maxsize=4)
def _worker_setup(cfg: ScenarioConfig) -> Setup:
    return build_setup(cfg)


def average_records(runs: list[RunRecord]) -> RunRecord:
    """Mean over runs, ignoring missing values.

    Values are sorted along the run axis before summation, which makes the
    result independent of run order.
    """
    stack = np.stack([r.metrics for r in runs])
    present = ~np.isnan(stack)
    ordered = np.sort(stack, axis=0)  # NaN sorts last
    total = np.nansum(ordered, axis=0)
    count = present.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(count > 0, total / np.maximum(count, 1), np.nan)
    flag_rate = np.stack([r.flags for r in runs]).mean(axis=0)
    assoc_rate = np.stack([r.associated for r in runs]).mean(axis=0)
    reset_rate = np.stack([r.resets for r in runs]).mean(axis=0)
    warnings = [f"run {i}: {w}" for i, r in enumerate(runs) for w in r.warnings]
    return RunRecord(mean, flag_rate, assoc_rate, reset_rate, warnings)


def run_monte_carlo(cfg: ScenarioConfig, workers: int = 1, runs: int | None = None) -> MonteCarloResult:
    """``runs`` (default ``cfg.mc_runs``) independent runs, optionally in worker processes."""
    count = cfg.mc_runs if runs is None else runs
    if count < 1:
        raise ValueError("need at least one run")
    if workers <= 1:
        setup = build_setup(cfg)
        records = [run_once(cfg, i, setup) for i in range(count)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_worker, [(cfg, i) for i in range(count)], chunksize=max(1, count // (4 * workers))))
    return MonteCarloResult(average_records(records), records)
