"""Summary statistics over averaged Monte-Carlo records.

All functions read the run-averaged record: a score "flags" at a step when the
averaged degree of conflict exceeds the averaged threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..assessment import ASPECTS, Aspect, AspectBinning
from ..tracker import MeasurementScan, SensorModel, TrackState, associate_nn
from .runner import RunRecord


def exceed(record: RunRecord, sensor_id: int, aspect: Aspect) -> np.ndarray:
    dc = record.metric(f"dc_{aspect.short}")[:, sensor_id - 1]
    thr = record.metric(f"thr_{aspect.short}")[:, sensor_id - 1]
    return dc > thr


def first_exceed(record: RunRecord, sensor_id: int, aspect: Aspect, start: int, end: int) -> int | None:
    hits = np.flatnonzero(exceed(record, sensor_id, aspect)[start : end + 1])
    return int(start + hits[0]) if hits.size else None


def nis_outside(record: RunRecord, sensor_id: int) -> np.ndarray:
    """Boolean per step; NaN (no NIS yet) counts as inside."""
    avg = record.metric("nis_avg")[:, sensor_id - 1]
    lo = record.metric("nis_lo")[:, sensor_id - 1]
    hi = record.metric("nis_hi")[:, sensor_id - 1]
    with np.errstate(invalid="ignore"):
        return (avg < lo) | (avg > hi)


def below_fraction(record: RunRecord, start: int) -> dict[tuple[int, Aspect], float]:
    """Fraction of steps from ``start`` on where the averaged score stays at or below its threshold."""
    out = {}
    for s in range(1, record.metrics.shape[1] + 1):
        for a in ASPECTS:
            out[(s, a)] = float(np.mean(~exceed(record, s, a)[start:]))
    return out


@dataclass
class DisturbanceSummary:
    onset_assoc: int | None
    onset_overall: int | None
    onset_meas: int | None
    sensor2_sl_max_exceed: int
    sensor2_nis_outside_frac: float
    clutter_onset: int | None
    clutter_other_exceed: dict
    nis_inside_frac_clutter: float
    pd_assoc_onset: int | None
    pd_overall_exceed: int


def summarize_paper_run(record: RunRecord) -> DisturbanceSummary:
    noise = (100, 200)
    clutter = (300, 350)
    pd = (450, 500)
    s2_exceed = sum(int(exceed(record, 2, a)[noise[0] : noise[1] + 1].sum()) for a in ASPECTS)
    return DisturbanceSummary(
        onset_assoc=first_exceed(record, 1, Aspect.ASSOCIATION, *noise),
        onset_overall=first_exceed(record, 1, Aspect.OVERALL, *noise),
        onset_meas=first_exceed(record, 1, Aspect.MEASUREMENT, *noise),
        sensor2_sl_max_exceed=s2_exceed,
        sensor2_nis_outside_frac=float(nis_outside(record, 2)[noise[0] : noise[1] + 1].mean()),
        clutter_onset=first_exceed(record, 1, Aspect.CLUTTER, *clutter),
        clutter_other_exceed={
            a.value: int(exceed(record, 1, a)[clutter[0] : clutter[1] + 1].sum()) for a in ASPECTS if a is not Aspect.CLUTTER
        },
        nis_inside_frac_clutter=float(1.0 - nis_outside(record, 1)[clutter[0] : clutter[1] + 1].mean()),
        pd_assoc_onset=first_exceed(record, 1, Aspect.ASSOCIATION, *pd),
        pd_overall_exceed=int(exceed(record, 1, Aspect.OVERALL)[pd[0] : pd[1] + 1].sum()),
    )


def sample_outcome_frequencies(
    sensor: SensorModel,
    innovation_cov: np.ndarray,
    binning: AspectBinning,
    num_scans: int,
    rng: np.random.Generator,
    fov_extent: tuple[float, float] = (200.0, 100.0),
) -> np.ndarray:
    """Empirical frequencies of the overall-aspect events over single simulated scans.

    Each scan holds the object measurement (with probability ``p_D``) drawn
    from the predicted measurement distribution ``N(0, S)`` and Poisson
    clutter uniform on a box of ``fov_extent`` centred on the prediction.  The
    scan goes through the same gated nearest-neighbour association as the
    tracker.  Returns the frequencies of the chi-square bins then the missed event.
    """
    m_z = sensor.meas_dim
    s_cov = np.asarray(innovation_cov, dtype=float)
    n = sensor.meas_matrix.shape[1]
    p_cov = np.eye(n)
    p_cov[:m_z, :m_z] = s_cov - sensor.meas_noise_cov
    pred = TrackState(np.zeros(n), p_cov)
    extent = np.asarray(fov_extent, dtype=float)
    if extent.prod() != sensor.fov_volume:
        raise ValueError(f"FOV extent {fov_extent} does not match the sensor FOV volume {sensor.fov_volume}")

    detected = rng.random(num_scans) < sensor.detection_prob
    objects = rng.multivariate_normal(np.zeros(m_z), s_cov, size=num_scans)
    counts = rng.poisson(sensor.clutter_mean, size=num_scans)
    clutter = (rng.random((int(counts.sum()), m_z)) - 0.5) * extent
    offsets = np.concatenate([[0], np.cumsum(counts)])

    hist = np.zeros(binning.cardinality(Aspect.OVERALL))
    for i in range(num_scans):
        pts = clutter[offsets[i] : offsets[i + 1]]
        if detected[i]:
            pts = np.vstack([objects[i], pts])
        innov = associate_nn(pred, MeasurementScan(pts), sensor, binning.gate_prob)
        if innov.assoc_index:
            hist[binning.distance_bin(float(innov.mahalanobis_sq[innov.assoc_index - 1]))] += 1
        else:
            hist[-1] += 1
    return hist / num_scans
