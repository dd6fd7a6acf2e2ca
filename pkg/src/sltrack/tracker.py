"""Linear-Gaussian single-object tracker in clutter with nearest-neighbour association.

Also holds the reference distribution of the transformed measurement
likelihood: the weights of the missed-detection event and of the chi-square
distributed Mahalanobis distances of associated measurements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .stats import (
    chi2_cdf,
    chi2_quantile,
    generalized_factorial,
    log_generalized_factorial,
    unit_ball_volume,
)


class NumericalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class TrackState:
    mean: np.ndarray
    covariance: np.ndarray
    time_step: int = 0

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"covariance shape {cov.shape} does not match state size {mean.size}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)


@dataclass(frozen=True)
class MeasurementScan:
    points: np.ndarray  # (m_k, m_z)
    sensor_id: int = 1
    time_step: int = 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(0, 2) if pts.size == 0 else pts.reshape(1, -1)
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]


def position_matrix(state_dim: int = 4, meas_dim: int = 2) -> np.ndarray:
    h = np.zeros((meas_dim, state_dim))
    h[:, :meas_dim] = np.eye(meas_dim)
    return h


@dataclass(frozen=True)
class SensorModel:
    detection_prob: float
    clutter_mean: float
    fov_volume: float
    meas_noise_cov: np.ndarray
    meas_matrix: np.ndarray = field(default_factory=position_matrix)

    def __post_init__(self):
        if not 0.0 <= self.detection_prob <= 1.0:
            raise ValueError(f"detection probability {self.detection_prob!r} outside [0, 1]")
        if self.clutter_mean < 0.0:
            raise ValueError(f"clutter mean {self.clutter_mean!r} must be non-negative")
        if not self.fov_volume > 0.0:
            raise ValueError(f"FOV volume {self.fov_volume!r} must be positive")
        object.__setattr__(self, "meas_noise_cov", np.atleast_2d(np.asarray(self.meas_noise_cov, dtype=float)))
        object.__setattr__(self, "meas_matrix", np.atleast_2d(np.asarray(self.meas_matrix, dtype=float)))

    @property
    def meas_dim(self) -> int:
        return self.meas_noise_cov.shape[0]

    @property
    def clutter_density(self) -> float:
        return self.clutter_mean / self.fov_volume


@dataclass(frozen=True)
class MotionModel:
    transition: np.ndarray
    process_noise: np.ndarray

    @classmethod
    def constant_velocity(cls, dt: float = 1.0, accel_std: float = 0.1) -> "MotionModel":
        """2-D constant velocity, state ``(x, y, vx, vy)``, white acceleration noise."""
        f = np.eye(4)
        f[0, 2] = f[1, 3] = dt
        g = np.array([[0.5 * dt**2, 0.0], [0.0, 0.5 * dt**2], [dt, 0.0], [0.0, dt]])
        return cls(f, accel_std**2 * g @ g.T)


@dataclass(frozen=True)
class InnovationData:
    predicted_meas: np.ndarray
    innovation_cov: np.ndarray
    residuals: np.ndarray  # (m_k, m_z)
    mahalanobis_sq: np.ndarray  # (m_k,)
    assoc_index: int  # 0 = missed detection, otherwise 1-based

    @property
    def associated(self) -> bool:
        return self.assoc_index > 0

    @property
    def residual(self) -> np.ndarray | None:
        return self.residuals[self.assoc_index - 1] if self.assoc_index else None


def _symmetrize(p: np.ndarray) -> np.ndarray:
    return 0.5 * (p + p.T)


def predict(state: TrackState, motion: MotionModel) -> TrackState:
    f = motion.transition
    mean = f @ state.mean
    cov = _symmetrize(f @ state.covariance @ f.T + motion.process_noise)
    if not np.all(np.isfinite(cov)) or np.any(np.diag(cov) <= 0.0):
        raise NumericalError("predicted covariance is not positive definite")
    return TrackState(mean, cov, state.time_step + 1)


def innovation_covariance(state: TrackState, sensor: SensorModel) -> np.ndarray:
    h = sensor.meas_matrix
    return _symmetrize(h @ state.covariance @ h.T + sensor.meas_noise_cov)


def associate_nn(pred: TrackState, scan: MeasurementScan, sensor: SensorModel, gate_prob: float = 0.99) -> InnovationData:
    """Nearest-neighbour association inside a chi-square gate.

    Ties on the squared Mahalanobis distance go to the lowest measurement index.
    """
    if not 0.0 < gate_prob < 1.0:
        raise ValueError(f"gate probability {gate_prob!r} outside (0, 1)")
    h = sensor.meas_matrix
    zhat = h @ pred.mean
    s = innovation_covariance(pred, sensor)
    residuals = scan.points - zhat
    if residuals.shape[0] == 0:
        return InnovationData(zhat, s, residuals.reshape(0, zhat.size), np.zeros(0), 0)
    d2 = np.einsum("ij,ij->i", residuals @ np.linalg.inv(s), residuals)
    gate = chi2_quantile(gate_prob, zhat.size)
    best = int(np.argmin(d2))  # argmin returns the first minimum
    idx = best + 1 if d2[best] <= gate else 0
    return InnovationData(zhat, s, residuals, d2, idx)


def update(state: TrackState, innov: InnovationData, sensor: SensorModel) -> TrackState:
    if innov.assoc_index == 0:
        return state
    s = innov.innovation_cov
    try:
        s_inv = np.linalg.inv(s)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular innovation covariance") from exc
    h = sensor.meas_matrix
    p = state.covariance
    gain = p @ h.T @ s_inv
    mean = state.mean + gain @ innov.residual
    ikh = np.eye(p.shape[0]) - gain @ h
    # Joseph form keeps the covariance positive semi-definite under round-off
    cov = _symmetrize(ikh @ p @ ikh.T + gain @ sensor.meas_noise_cov @ gain.T)
    return TrackState(mean, cov, state.time_step)


def transformed_likelihood_value(innov: InnovationData) -> float | None:
    """Squared Mahalanobis distance of the associated measurement; ``None`` on a miss."""
    if innov.assoc_index == 0:
        return None
    return float(innov.mahalanobis_sq[innov.assoc_index - 1])


def mahalanobis_sq(residual: Sequence[float], cov: np.ndarray) -> float:
    r = np.asarray(residual, dtype=float)
    return float(r @ np.linalg.solve(np.asarray(cov, dtype=float), r))


# ---------------------------------------------------------------------------
# reference distribution of the transformed measurement likelihood


@dataclass(frozen=True)
class ReferenceModel:
    """Mixture ``c0 * [missed] + c1 * chi2_{m_z}`` of the transformed likelihood.

    ``gate_clutter_rate`` is the expected number of clutter points per unit of
    the chi-square volume ``t**(m_z/2)``; when positive, a clutter point closer
    than the object measurement steals the association, which is accounted
    for by :meth:`survival`.
    """

    c0_tilde: float
    c1_tilde: float
    meas_dim: int
    gate_clutter_rate: float = 0.0

    def __post_init__(self):
        if self.c0_tilde < 0.0 or self.c1_tilde < 0.0:
            raise ValueError("reference coefficients must be non-negative")
        if self.c0_tilde + self.c1_tilde <= 0.0:
            raise ValueError("reference coefficients are both zero")

    @property
    def normalizer(self) -> float:
        return self.c0_tilde + self.c1_tilde

    def survival(self, t: float) -> float:
        """Probability that no measurement is associated at distance ``<= t``."""
        c1 = self.c1_tilde / self.normalizer
        s = 1.0 - c1 * chi2_cdf(t, self.meas_dim)
        if self.gate_clutter_rate > 0.0 and t > 0.0:
            s *= math.exp(-self.gate_clutter_rate * t ** (self.meas_dim / 2.0))
        return s

    def missed_prob(self, gate: float) -> float:
        return self.survival(gate)

    def bin_probs(self, edges: Sequence[float], gate: float) -> tuple[float, ...]:
        """Probabilities of an association with distance in each ``[edges[i], edges[i+1])``.

        Edges beyond the gate are truncated at the gate; the last bin is open
        up to the gate.
        """
        cuts = [min(e, gate) for e in edges] + [gate]
        return tuple(max(0.0, self.survival(lo) - self.survival(hi)) for lo, hi in zip(cuts[:-1], cuts[1:]))


def reference_coeffs(sensor: SensorModel) -> ReferenceModel:
    """Closed-form weights with the expected measurement count ``lambda_c + p_D``.

    The factorial is extended to real arguments through the Gamma function.
    The ``p_D = 1, lambda_c -> 0`` corner case gives exactly ``(0, 1)``.
    """
    pd = sensor.detection_prob
    lam = sensor.clutter_mean
    if lam < 0.0:
        raise ValueError(f"clutter mean {lam!r} must be non-negative")
    m_z = sensor.meas_dim
    if lam == 0.0:
        if pd == 1.0:
            return ReferenceModel(0.0, 1.0, m_z)
        raise ValueError("clutter mean must be positive unless p_D = 1 (corner case)")
    density = lam / sensor.fov_volume
    em = lam + pd
    log_common = -lam - log_generalized_factorial(em)
    c0 = (1.0 - pd) * math.exp(log_common + em * math.log(density))
    c1 = pd * math.exp(log_common + (em - 1.0) * math.log(density)) * em
    return ReferenceModel(c0, c1, m_z)


def gate_clutter_rate(sensor: SensorModel, innovation_cov: np.ndarray) -> float:
    """Expected clutter count in ``{d2 <= t}`` divided by ``t**(m_z/2)``."""
    m_z = sensor.meas_dim
    det = float(np.linalg.det(np.asarray(innovation_cov, dtype=float)))
    return sensor.clutter_density * unit_ball_volume(m_z) * math.sqrt(det)


def association_reference(sensor: SensorModel, innovation_cov: np.ndarray | None = None) -> ReferenceModel:
    """Reference of the gated nearest-neighbour outcome.

    Weights ``(1 - p_D, p_D)``: the object is detected with probability
    ``p_D`` and its distance is chi-square; clutter competes inside the gate
    when ``innovation_cov`` is given.  Reduces to ``(0, 1)`` for ``p_D = 1``.
    """
    pd = sensor.detection_prob
    rate = 0.0 if innovation_cov is None else gate_clutter_rate(sensor, innovation_cov)
    return ReferenceModel(1.0 - pd, pd, sensor.meas_dim, rate)


def steady_state_innovation_covs(
    motion: MotionModel,
    sensors: Sequence[SensorModel],
    steps: int = 500,
    initial_cov: np.ndarray | None = None,
) -> list[np.ndarray]:
    """Innovation covariance of each sensor after the Riccati recursion settles.

    Sensors update sequentially every step with detection assumed; the result
    seeds the in-gate clutter term of the association reference.
    """
    n = motion.transition.shape[0]
    p = np.eye(n) * 100.0 if initial_cov is None else np.array(initial_cov, dtype=float)
    covs: list[np.ndarray] = []
    for _ in range(steps):
        f = motion.transition
        p = _symmetrize(f @ p @ f.T + motion.process_noise)
        covs = []
        for sensor in sensors:
            h = sensor.meas_matrix
            s = _symmetrize(h @ p @ h.T + sensor.meas_noise_cov)
            covs.append(s)
            gain = p @ h.T @ np.linalg.inv(s)
            ikh = np.eye(n) - gain @ h
            p = _symmetrize(ikh @ p @ ikh.T + gain @ sensor.meas_noise_cov @ gain.T)
    return covs


__all__ = [
    "InnovationData",
    "MeasurementScan",
    "MotionModel",
    "NumericalError",
    "ReferenceModel",
    "SensorModel",
    "TrackState",
    "associate_nn",
    "association_reference",
    "chi2_cdf",
    "chi2_quantile",
    "gate_clutter_rate",
    "generalized_factorial",
    "innovation_covariance",
    "mahalanobis_sq",
    "position_matrix",
    "predict",
    "reference_coeffs",
    "steady_state_innovation_covs",
    "transformed_likelihood_value",
    "update",
]
