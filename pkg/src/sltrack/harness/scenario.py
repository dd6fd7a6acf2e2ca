"""Ground truth and sensor scans for one Monte-Carlo run."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..tracker import MotionModel
from .config import ScenarioConfig

log = logging.getLogger(__name__)


@dataclass
class Scenario:
    truth: np.ndarray  # (num_steps, 4): x, y, vx, vy
    scans: list[list[np.ndarray]]  # scans[sensor_index][step] -> (m_k, 2)
    detected: np.ndarray  # (num_sensors, num_steps) bool, object measurement present
    initial_position: np.ndarray  # first detection used to start the track
    warnings: list[str] = field(default_factory=list)


def run_rng(master_seed: int, run_index: int) -> np.random.Generator:
    """Counter-derived generator so serial and parallel execution agree."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(run_index,)))


def true_parameter_arrays(cfg: ScenarioConfig, sensor_id: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    steps = range(cfg.num_steps)
    params = [cfg.true_params(sensor_id, k) for k in steps]
    return (
        np.array([p.detection_prob for p in params]),
        np.array([p.clutter_mean for p in params]),
        np.array([p.meas_noise_std for p in params]),
    )


def generate_scenario(cfg: ScenarioConfig, rng: np.random.Generator | int) -> Scenario:
    """Simulate the object and every sensor's scans.

    The object follows the constant-velocity model with white acceleration
    noise.  Each sensor detects it with its true ``p_D`` and adds Gaussian noise
    with its true standard deviation; Poisson clutter is uniform on the FOV.
    Disturbances change only these true parameters.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    n = cfg.num_steps
    motion = MotionModel.constant_velocity(cfg.dt, cfg.accel_std)

    truth = np.empty((n, 4))
    v0 = np.asarray(cfg.initial_speed) + cfg.initial_speed_std * rng.standard_normal(2)
    truth[0] = (0.0, 0.0, v0[0], v0[1])
    dt = cfg.dt
    g = np.array([[0.5 * dt**2, 0.0], [0.0, 0.5 * dt**2], [dt, 0.0], [0.0, dt]])
    accel = cfg.accel_std * rng.standard_normal((n, 2))
    for k in range(1, n):
        truth[k] = motion.transition @ truth[k - 1] + g @ accel[k]

    x0, x1, y0, y1 = cfg.fov
    if cfg.fov_anchor == "ego":
        anchors = truth[:, :2]
    else:
        anchors = np.zeros((n, 2))
    lower = anchors + (x0, y0)
    extent = np.array([x1 - x0, y1 - y0])

    warnings = []
    if cfg.fov_anchor == "fixed":
        inside = (truth[:, 0] >= x0) & (truth[:, 0] <= x1) & (truth[:, 1] >= y0) & (truth[:, 1] <= y1)
        if not inside.all():
            first = int(np.argmin(inside))
            warnings.append(f"object outside the FOV from step {first}")
            log.warning("object outside the FOV from step %d", first)

    nominal_std = cfg.sensor_params(1).meas_noise_std
    initial_position = truth[0, :2] + nominal_std * rng.standard_normal(2)

    scans: list[list[np.ndarray]] = []
    detected = np.zeros((cfg.num_sensors, n), dtype=bool)
    for s in range(cfg.num_sensors):
        pd, lam, std = true_parameter_arrays(cfg, s + 1)
        det = rng.random(n) < pd
        noise = rng.standard_normal((n, 2)) * std[:, None]
        counts = rng.poisson(lam)
        unit = rng.random((int(counts.sum()), 2))
        slots = rng.integers(0, counts + 1)  # position of the object measurement in the scan
        detected[s] = det
        sensor_scans = []
        offset = 0
        for k in range(n):
            c = int(counts[k])
            clutter = lower[k] + unit[offset : offset + c] * extent
            offset += c
            if det[k]:
                z = truth[k, :2] + noise[k]
                pts = np.insert(clutter, int(slots[k]), z, axis=0)
            else:
                pts = clutter
            sensor_scans.append(pts)
        scans.append(sensor_scans)
    return Scenario(truth, scans, detected, initial_position, warnings)
