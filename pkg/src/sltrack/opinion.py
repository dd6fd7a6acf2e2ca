"""Multinomial subjective-logic opinions and the operators used for self-assessment.

Opinions are immutable; every operator returns a new value.  Beliefs and base
rates are stored as plain tuples because the domains here are tiny (W <= ~10)
and tuple arithmetic beats numpy at that size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .stats import inverse_normal_cdf

TOL = 1e-9
# unfusion round-off below this magnitude is clamped to zero
NEG_FLOOR = 1e-12


class OpinionError(ValueError):
    """Raised for invalid opinions or operator preconditions."""


class DomainMismatch(OpinionError):
    pass


class DegenerateUnfusion(OpinionError):
    pass


@dataclass(frozen=True, slots=True)
class Opinion:
    belief: tuple[float, ...]
    uncertainty: float
    base_rate: tuple[float, ...]

    def __post_init__(self):
        b, a = self.belief, self.base_rate
        if len(b) < 2 or len(a) != len(b):
            raise OpinionError(f"need W >= 2 beliefs with matching base rate, got {len(b)}/{len(a)}")
        u = self.uncertainty
        if not -TOL <= u <= 1.0 + TOL:
            raise OpinionError(f"uncertainty {u!r} outside [0, 1]")
        if any(x < -TOL or x > 1.0 + TOL for x in b):
            raise OpinionError(f"belief {b!r} outside [0, 1]")
        if abs(sum(b) + u - 1.0) > TOL:
            raise OpinionError(f"belief + uncertainty = {sum(b) + u!r}, expected 1")
        if any(x < -TOL or x > 1.0 + TOL for x in a) or abs(sum(a) - 1.0) > TOL:
            raise OpinionError(f"base rate {a!r} is not a distribution")

    @property
    def cardinality(self) -> int:
        return len(self.belief)

    @property
    def is_vacuous(self) -> bool:
        return self.uncertainty >= 1.0 - TOL

    @property
    def is_dogmatic(self) -> bool:
        return self.uncertainty <= TOL

    @classmethod
    def create(cls, belief: Sequence[float], uncertainty: float, base_rate: Sequence[float] | None = None) -> "Opinion":
        belief = tuple(float(x) for x in belief)
        if base_rate is None:
            base_rate = (1.0 / len(belief),) * len(belief)
        return cls(belief, float(uncertainty), tuple(float(x) for x in base_rate))

    @classmethod
    def vacuous(cls, base_rate: Sequence[float]) -> "Opinion":
        base_rate = tuple(float(x) for x in base_rate)
        return cls((0.0,) * len(base_rate), 1.0, base_rate)

    @classmethod
    def dogmatic(cls, probabilities: Sequence[float], base_rate: Sequence[float] | None = None) -> "Opinion":
        probabilities = tuple(float(x) for x in probabilities)
        return cls(probabilities, 0.0, probabilities if base_rate is None else tuple(base_rate))


def _check_domain(a: Opinion, b: Opinion) -> None:
    if len(a.belief) != len(b.belief):
        raise DomainMismatch(f"domain cardinalities differ: {len(a.belief)} vs {len(b.belief)}")


def project(op: Opinion) -> tuple[float, ...]:
    u = op.uncertainty
    return tuple(b + a * u for b, a in zip(op.belief, op.base_rate))


def fuse_acbf(a: Opinion, b: Opinion) -> Opinion:
    """Aleatory cumulative belief fusion.

    Two dogmatic inputs fuse to the average of their beliefs; two vacuous
    inputs fuse to a vacuous opinion with averaged base rates.
    """
    _check_domain(a, b)
    ua, ub = a.uncertainty, b.uncertainty
    if ua <= 0.0 and ub <= 0.0:
        belief = tuple(0.5 * (x + y) for x, y in zip(a.belief, b.belief))
        base = tuple(0.5 * (x + y) for x, y in zip(a.base_rate, b.base_rate))
        return Opinion(belief, 0.0, base)
    if ua >= 1.0 and ub >= 1.0:
        return Opinion(a.belief, 1.0, tuple(0.5 * (x + y) for x, y in zip(a.base_rate, b.base_rate)))
    denom = ua + ub - ua * ub
    belief = tuple((x * ub + y * ua) / denom for x, y in zip(a.belief, b.belief))
    u = ua * ub / denom
    if a.base_rate == b.base_rate:
        base = a.base_rate
    else:
        d2 = ua + ub - 2.0 * ua * ub
        if d2 <= 0.0:
            base = tuple(0.5 * (x + y) for x, y in zip(a.base_rate, b.base_rate))
        else:
            uab = ua * ub
            base = tuple((x * ub + y * ua - (x + y) * uab) / d2 for x, y in zip(a.base_rate, b.base_rate))
    return Opinion(belief, u, base)


def unfuse(c: Opinion, b: Opinion, shared_base_rate: Sequence[float] | None = None) -> Opinion:
    """Remove the constituent ``b`` from the cumulatively fused opinion ``c``."""
    _check_domain(c, b)
    uc, ub = c.uncertainty, b.uncertainty
    denom = ub - uc + ub * uc
    if denom <= 0.0 or (uc <= 0.0 and ub <= 0.0):
        raise DegenerateUnfusion(f"unfusion denominator {denom!r} (u_C={uc!r}, u_B={ub!r})")
    belief = [(x * ub - y * uc) / denom for x, y in zip(c.belief, b.belief)]
    u = ub * uc / denom
    if u > 1.0:
        if u - 1.0 > NEG_FLOOR:
            raise DegenerateUnfusion(f"unfused uncertainty {u!r} exceeds 1")
        u = 1.0
    if min(belief) < 0.0:
        if min(belief) < -NEG_FLOOR:
            raise DegenerateUnfusion(f"negative unfused belief {min(belief)!r}: {c!r} cannot contain {b!r}")
        belief = [max(x, 0.0) for x in belief]
    total = sum(belief) + u
    if total != 1.0:
        belief = [x / total for x in belief]
        u /= total
    base = c.base_rate if shared_base_rate is None else tuple(float(x) for x in shared_base_rate)
    return Opinion(tuple(belief), u, base)


def trust_discount(a: Opinion, p_td: float) -> Opinion:
    if not 0.0 <= p_td <= 1.0:
        raise OpinionError(f"discount probability {p_td!r} outside [0, 1]")
    belief = tuple(p_td * x for x in a.belief)
    # 1 - sum(belief) keeps the additivity constraint exact in floating point
    return Opinion(belief, max(0.0, 1.0 - sum(belief)), a.base_rate)


def projected_distance(a: Opinion, b: Opinion) -> float:
    _check_domain(a, b)
    return 0.5 * sum(abs(x - y) for x, y in zip(project(a), project(b)))


def conjunctive_certainty(a: Opinion, b: Opinion) -> float:
    return (1.0 - a.uncertainty) * (1.0 - b.uncertainty)


def degree_of_conflict(a: Opinion, b: Opinion) -> float:
    dc = projected_distance(a, b) * conjunctive_certainty(a, b)
    return min(1.0, max(0.0, dc))


@dataclass(frozen=True, slots=True)
class EvidenceVector:
    counts: tuple[float, ...]
    prior_weight: float

    def __post_init__(self):
        if any(c < 0.0 for c in self.counts):
            raise OpinionError(f"evidence counts must be non-negative, got {self.counts!r}")
        if not self.prior_weight > 0.0:
            raise OpinionError(f"prior weight must be positive, got {self.prior_weight!r}")

    @property
    def total(self) -> float:
        return sum(self.counts)


def opinion_from_evidence(ev: EvidenceVector | Sequence[float], base_rate: Sequence[float] | None = None) -> Opinion:
    """Map Dirichlet evidence to an opinion.

    A bare count sequence is accepted and gets a prior weight equal to the
    domain cardinality.
    """
    if not isinstance(ev, EvidenceVector):
        counts = tuple(float(c) for c in ev)
        ev = EvidenceVector(counts, float(len(counts)))
    w = len(ev.counts)
    if base_rate is None:
        base_rate = (1.0 / w,) * w
    s = ev.prior_weight + ev.total
    return Opinion(tuple(c / s for c in ev.counts), ev.prior_weight / s, tuple(float(x) for x in base_rate))


def evidence_of(op: Opinion, prior_weight: float | None = None) -> EvidenceVector:
    if op.uncertainty <= 0.0:
        raise OpinionError("a dogmatic opinion corresponds to infinite evidence")
    w = float(op.cardinality) if prior_weight is None else prior_weight
    return EvidenceVector(tuple(w * b / op.uncertainty for b in op.belief), w)


def evidence_amount(op: Opinion, prior_weight: float | None = None) -> float:
    """Total evidence behind an opinion (``inf`` for dogmatic ones)."""
    u = op.uncertainty
    if u <= 0.0:
        return math.inf
    w = float(op.cardinality) if prior_weight is None else prior_weight
    return w * (1.0 - u) / u


@dataclass(frozen=True, slots=True)
class ThresholdParams:
    alpha: float
    cardinality: int
    sample_size: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise OpinionError(f"alpha must lie strictly inside (0, 1), got {self.alpha!r}")
        if self.cardinality < 2:
            raise OpinionError(f"cardinality must be >= 2, got {self.cardinality!r}")
        if not self.sample_size > 0:
            raise OpinionError(f"sample size must be positive, got {self.sample_size!r}")


@lru_cache(maxsize=256)
def _d2n(alpha: float, w: int) -> float:
    z = inverse_normal_cdf(1.0 - (1.0 - alpha) / (2.0 * w))
    return z * z * (w - 1) / (w * w)


def confidence_limit(alpha: float, w: int, n_s: float) -> float:
    """Half-width ``d`` of the simultaneous multinomial confidence interval."""
    return math.sqrt(_d2n(alpha, w) / n_s)


def dc_threshold(p: ThresholdParams | float, cardinality: int | None = None, sample_size: float | None = None) -> float:
    """Degree-of-conflict threshold for a dogmatic reference vs. evidence of size ``n_s``.

    Accepts either a :class:`ThresholdParams` or ``(alpha, W, n_s)``.
    """
    if not isinstance(p, ThresholdParams):
        p = ThresholdParams(float(p), int(cardinality), float(sample_size))
    w, n = p.cardinality, float(p.sample_size)
    return 0.5 * w * confidence_limit(p.alpha, w, n) * (1.0 - w / (w + n))


def _threshold_fast(alpha: float, w: int, n: float) -> float:
    # unchecked variant for the per-step monitor loop
    if n <= 0.0:
        return 0.0
    return 0.5 * w * math.sqrt(_d2n(alpha, w) / n) * (n / (w + n))
