"""Scalar distribution routines shared by the tracker and the opinion algebra.

Thin wrappers over ``scipy.special`` with argument checking; the hot paths
call these once per configuration, so results are cached where cheap.
"""

from __future__ import annotations

import math
from functools import lru_cache

from scipy import special


def inverse_normal_cdf(p: float) -> float:
    """Standard normal quantile."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie strictly inside (0, 1), got {p!r}")
    return float(special.ndtri(p))


def normal_cdf(x: float) -> float:
    return float(special.ndtr(x))


def chi2_cdf(x: float, dof: int) -> float:
    if dof < 1:
        raise ValueError(f"degrees of freedom must be >= 1, got {dof!r}")
    if x <= 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    return float(special.gammainc(dof / 2.0, x / 2.0))


@lru_cache(maxsize=1024)
def chi2_quantile(p: float, dof: int) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie strictly inside (0, 1), got {p!r}")
    if dof < 1:
        raise ValueError(f"degrees of freedom must be >= 1, got {dof!r}")
    return float(2.0 * special.gammaincinv(dof / 2.0, p))


def generalized_factorial(x: float) -> float:
    """``x! = Gamma(x + 1)`` for real ``x >= 0``."""
    if x < 0.0:
        raise ValueError(f"generalized factorial needs x >= 0, got {x!r}")
    return float(special.gamma(x + 1.0))


def log_generalized_factorial(x: float) -> float:
    if x < 0.0:
        raise ValueError(f"generalized factorial needs x >= 0, got {x!r}")
    return float(special.gammaln(x + 1.0))


def poisson_pmf(k: int, mean: float) -> float:
    if k < 0:
        return 0.0
    if mean == 0.0:
        return 1.0 if k == 0 else 0.0
    return math.exp(k * math.log(mean) - mean - math.lgamma(k + 1))


def poisson_cdf(k: int, mean: float) -> float:
    if k < 0:
        return 0.0
    return float(special.pdtr(k, mean))


def poisson_sf(k: int, mean: float) -> float:
    """``P(X > k)`` without cancellation in the far tail."""
    if k < 0:
        return 1.0
    return float(special.pdtrc(k, mean))


def unit_ball_volume(dim: int) -> float:
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)
