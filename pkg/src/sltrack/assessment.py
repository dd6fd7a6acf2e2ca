"""Four-aspect self-assessment of a tracker: overall, association, measurement, clutter.

Each (sensor, aspect) pair owns an :class:`AssessmentTrack` that turns the
per-step event into a single-step opinion, keeps a sliding short-term opinion
and a discounted long-term opinion, and scores the long-term opinion against
a dogmatic reference with the degree of conflict.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .opinion import (
    DegenerateUnfusion,
    Opinion,
    _threshold_fast,
    degree_of_conflict,
    evidence_amount,
    fuse_acbf,
    opinion_from_evidence,
    trust_discount,
    unfuse,
)
from .stats import chi2_quantile, poisson_cdf, poisson_sf
from .tracker import InnovationData, MeasurementScan, ReferenceModel


class Aspect(str, enum.Enum):
    OVERALL = "overall"
    ASSOCIATION = "association"
    MEASUREMENT = "measurement"
    CLUTTER = "clutter"

    @property
    def short(self) -> str:
        return _SHORT[self]


_SHORT = {
    Aspect.OVERALL: "overall",
    Aspect.ASSOCIATION: "assoc",
    Aspect.MEASUREMENT: "meas",
    Aspect.CLUTTER: "clutter",
}

ASPECTS = tuple(Aspect)

ASSOCIATED, NOT_ASSOCIATED = 0, 1
CLUTTER_FLOOR = 1e-12


def poisson_interval_bins(mean: float, central_mass: float = 0.5) -> tuple[int, int]:
    """Smallest contiguous count interval ``[lo, hi]`` around the mode holding ``central_mass``.

    Grows greedily towards the heavier neighbour; the tails below ``lo`` and
    above ``hi`` form the low and high bins.  ``lo`` is at least 1 so the
    low bin is never empty.
    """
    if mean <= 0.0:
        raise ValueError(f"Poisson mean must be positive, got {mean!r}")
    mode = int(math.floor(mean))
    if mode == mean and mode > 0:
        mode -= 1  # two modes; either is fine, the lower keeps the interval left-aligned
    lo = hi = mode

    def mass(a: int, b: int) -> float:
        return poisson_cdf(b, mean) - poisson_cdf(a - 1, mean)

    while mass(lo, hi) < central_mass:
        left = mass(lo - 1, lo - 1) if lo > 0 else -1.0
        right = mass(hi + 1, hi + 1)
        if right >= left:
            hi += 1
        else:
            lo -= 1
    if lo == 0:
        # sparse clutter: the low bin is {0} and the interval starts at 1
        lo, hi = 1, max(hi, 1)
    return lo, hi


@dataclass(frozen=True)
class AspectBinning:
    """Event domains of the four aspects.

    overall: ``bins`` chi-square bins then the missed-detection event;
    measurement: the ``bins`` chi-square bins; association: {associated,
    not associated}; clutter: counts below, inside and above ``clutter_range``.
    """

    bins: int
    meas_dim: int
    gate_prob: float
    clutter_range: tuple[int, int]

    @classmethod
    def create(cls, bins: int, meas_dim: int, gate_prob: float, clutter_mean: float) -> "AspectBinning":
        if bins < 2:
            raise ValueError(f"need at least 2 chi-square bins, got {bins!r}")
        return cls(bins, meas_dim, gate_prob, poisson_interval_bins(clutter_mean))

    @property
    def edges(self) -> tuple[float, ...]:
        return (0.0,) + tuple(chi2_quantile(j / self.bins, self.meas_dim) for j in range(1, self.bins))

    @property
    def gate(self) -> float:
        return chi2_quantile(self.gate_prob, self.meas_dim)

    def cardinality(self, aspect: Aspect) -> int:
        return {
            Aspect.OVERALL: self.bins + 1,
            Aspect.ASSOCIATION: 2,
            Aspect.MEASUREMENT: self.bins,
            Aspect.CLUTTER: 3,
        }[aspect]

    def distance_bin(self, d2: float) -> int:
        edges = self.edges
        for j in range(len(edges) - 1, -1, -1):
            if d2 >= edges[j]:
                return j
        return 0

    def clutter_bin(self, count: int) -> int:
        lo, hi = self.clutter_range
        return 0 if count < lo else (1 if count <= hi else 2)


def reference_probabilities(
    aspect: Aspect, binning: AspectBinning, ref_model: ReferenceModel, clutter_mean: float
) -> tuple[float, ...]:
    gate = binning.gate
    if aspect is Aspect.CLUTTER:
        lo, hi = binning.clutter_range
        low = poisson_cdf(lo - 1, clutter_mean)
        mid = poisson_cdf(hi, clutter_mean) - low
        # floor keeps the reference a valid dogmatic opinion when clutter is very sparse
        probs = tuple(max(p, CLUTTER_FLOOR) for p in (low, mid, poisson_sf(hi, clutter_mean)))
    else:
        chi = ref_model.bin_probs(binning.edges, gate)
        missed = ref_model.missed_prob(gate)
        if aspect is Aspect.OVERALL:
            probs = chi + (missed,)
        elif aspect is Aspect.ASSOCIATION:
            probs = (1.0 - missed, missed)
        else:
            total = sum(chi)
            if total <= 0.0:
                raise ValueError("reference assigns no mass to associated measurements")
            probs = tuple(p / total for p in chi)
    total = sum(probs)
    probs = tuple(p / total for p in probs)
    if min(probs) <= 0.0:
        raise ValueError(f"degenerate binning for {aspect.value}: reference probabilities {probs!r}")
    return probs


def build_references(
    clutter_mean: float, ref_model: ReferenceModel, binning: AspectBinning
) -> dict[Aspect, Opinion]:
    """Dogmatic reference opinion per aspect; beliefs double as base rates."""
    refs = {}
    for aspect in ASPECTS:
        probs = reference_probabilities(aspect, binning, ref_model, clutter_mean)
        refs[aspect] = Opinion.dogmatic(probs)
    return refs


def observe_step(
    aspect: Aspect,
    innov: InnovationData | None,
    scan: MeasurementScan,
    binning: AspectBinning,
    base_rate: Sequence[float] | None = None,
) -> Opinion:
    """Single-step opinion holding one unit of evidence (or none).

    ``innov=None`` is treated as a missed detection.
    """
    w = binning.cardinality(aspect)
    if base_rate is None:
        base_rate = (1.0 / w,) * w
    assoc = innov is not None and innov.assoc_index > 0
    if aspect is Aspect.MEASUREMENT and not assoc:
        return Opinion.vacuous(base_rate)
    counts = [0.0] * w
    if aspect is Aspect.ASSOCIATION:
        counts[ASSOCIATED if assoc else NOT_ASSOCIATED] = 1.0
    elif aspect is Aspect.CLUTTER:
        counts[binning.clutter_bin(scan.size - (1 if assoc else 0))] = 1.0
    elif assoc:
        counts[binning.distance_bin(float(innov.mahalanobis_sq[innov.assoc_index - 1]))] = 1.0
    else:
        counts[w - 1] = 1.0
    return opinion_from_evidence(counts, base_rate)


@dataclass(frozen=True, slots=True)
class SAOutput:
    dc_score: float
    threshold: float
    long_term_uncertainty: float
    evidence: float
    flag: bool
    reset: bool = False


class AssessmentTrack:
    """Short-/long-term opinion state machine for one (sensor, aspect) pair.

    Per step: the single-step opinion enters the short-term window (the
    oldest entry is unfused once ``window_len`` entries are held); the
    long-term opinion is trust-discounted and fused with the new opinion;
    when the window is full and conflicts with the long-term opinion, the
    long-term opinion is overwritten by the window.  The score is the degree
    of conflict between the long-term opinion and the reference.

    Vacuous step opinions carry no evidence and are not stored in the window.
    Until the window fills for the first time the reported threshold is 1,
    so no flag can be raised.
    """

    def __init__(
        self,
        aspect: Aspect,
        reference: Opinion,
        window_len: int = 50,
        discount: float = 0.995,
        alpha: float = 0.99,
        sensor_id: int = 1,
    ):
        if not reference.is_dogmatic:
            raise ValueError("reference opinion must be dogmatic")
        if window_len < 1:
            raise ValueError(f"window length must be >= 1, got {window_len!r}")
        if not 0.0 <= discount <= 1.0:
            raise ValueError(f"discount {discount!r} outside [0, 1]")
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha {alpha!r} outside (0, 1)")
        self.aspect = aspect
        self.sensor_id = sensor_id
        self.reference = reference
        self.window_len = window_len
        self.discount = discount
        self.alpha = alpha
        self.cardinality = reference.cardinality
        base = reference.belief
        self.base_rate = base
        self.short_term = Opinion.vacuous(base)
        self.long_term = Opinion.vacuous(base)
        self.fifo: deque[Opinion] = deque()
        self.warmed_up = False
        self.resets = 0

    def _rebuild_short_term(self) -> None:
        op = Opinion.vacuous(self.base_rate)
        for entry in self.fifo:
            op = fuse_acbf(op, entry)
        self.short_term = op

    def step(self, step_opinion: Opinion) -> SAOutput:
        w = self.cardinality
        if not step_opinion.is_vacuous:
            self.fifo.append(step_opinion)
            self.short_term = fuse_acbf(self.short_term, step_opinion)
            if len(self.fifo) > self.window_len:
                oldest = self.fifo.popleft()
                try:
                    self.short_term = unfuse(self.short_term, oldest, self.base_rate)
                except DegenerateUnfusion:
                    self._rebuild_short_term()
        self.long_term = fuse_acbf(trust_discount(self.long_term, self.discount), step_opinion)

        reset = False
        if len(self.fifo) >= self.window_len:
            self.warmed_up = True
            n_st = evidence_amount(self.short_term)
            if degree_of_conflict(self.short_term, self.long_term) > _threshold_fast(self.alpha, w, n_st):
                self.long_term = self.short_term
                self.resets += 1
                reset = True

        n_lt = evidence_amount(self.long_term)
        dc = degree_of_conflict(self.long_term, self.reference)
        threshold = _threshold_fast(self.alpha, w, n_lt) if self.warmed_up else 1.0
        return SAOutput(dc, threshold, self.long_term.uncertainty, n_lt, dc > threshold, reset)


def track_step(track: AssessmentTrack, step_opinion: Opinion) -> tuple[AssessmentTrack, SAOutput]:
    out = track.step(step_opinion)
    return track, out


# ---------------------------------------------------------------------------
# time-average NIS baseline


@dataclass(frozen=True, slots=True)
class NISResult:
    average: float
    ci_low: float
    ci_high: float
    samples: int


def nis_time_average(history: Sequence[float | None], window: int, meas_dim: int = 2, conf: float = 0.99) -> NISResult | None:
    """Average of the last ``window`` available NIS values with its chi-square interval.

    ``None`` entries (missed detections) are skipped.  Returns ``None`` when no
    value is available.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window!r}")
    values = [v for v in history if v is not None]
    if not values:
        return None
    used = values[-window:]
    k = len(used)
    lo, hi = nis_interval(k, meas_dim, conf)
    return NISResult(math.fsum(used) / k, lo, hi, k)


def nis_interval(samples: int, meas_dim: int, conf: float = 0.99) -> tuple[float, float]:
    tail = 0.5 * (1.0 - conf)
    dof = samples * meas_dim
    return chi2_quantile(tail, dof) / samples, chi2_quantile(1.0 - tail, dof) / samples


class NISWindow:
    """Running time-average NIS over the last ``window`` associated steps."""

    def __init__(self, window: int, meas_dim: int = 2, conf: float = 0.99):
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window!r}")
        self.window = window
        self.meas_dim = meas_dim
        self.conf = conf
        self.values: deque[float] = deque(maxlen=window)

    def push(self, value: float | None) -> NISResult | None:
        if value is None:
            return None
        self.values.append(value)
        k = len(self.values)
        lo, hi = nis_interval(k, self.meas_dim, self.conf)
        return NISResult(math.fsum(self.values) / k, lo, hi, k)
