"""Point estimators for the extreme value index and high log-quantiles.

All estimators consume per-block top order statistics on log scale. With k
blocks of size m and the r+1 largest retained, the index estimate is the
mean of the scaled log-spacings

    gamma_hat = (1 / (k r)) sum_i sum_{j<=r} (L[i,j] - L[i,r+1])

and the log-quantile estimate extrapolates from the (r+1)-th order statistic:

    log_xp_hat = mean_i L[i,r+1] - a(m,r,p) * gamma_hat,

where the scaling coefficient a(m,r,p) = sum_{j=r+1}^m 1/j + log(p) is
negative for quantiles beyond the per-block top ranks. Starred variants pool
blocks with differing (m_i, r_i), weighting by r_i.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .blocks import BlockData
from .exceptions import DomainError, NonNegativeACoeffWarning

__all__ = [
    "QuantileEstimate",
    "harmonic_tail",
    "a_coeff",
    "gamma_hat",
    "gamma_hat_star",
    "quantile_hat",
    "quantile_hat_star",
    "bias_constant_br",
]


@dataclass(frozen=True)
class QuantileEstimate:
    """Point estimate of a high log-quantile with its ingredients.

    Attributes:
        gamma_hat: extreme value index estimate (>= 0).
        log_xp_hat: estimated log of the upper p-quantile.
        a_coeff: the scaling coefficient used for extrapolation.
        total_ranks: sum of r_i over blocks, the gap sample size.
        se_log_xp: asymptotic standard error |a_coeff| * gamma_hat / sqrt(total_ranks).
    """

    gamma_hat: float
    log_xp_hat: float
    a_coeff: float
    total_ranks: int
    se_log_xp: float


def _check_m_r(m: int, r: int) -> None:
    if int(r) != r or r < 1:
        raise DomainError(f"need integer r >= 1, got {r}")
    if int(m) != m or m <= r:
        raise DomainError(f"need integer m > r, got m={m}, r={r}")


def harmonic_tail(m: int, r: int) -> float:
    """sum_{j=r+1}^m 1/j, accumulated exactly."""
    _check_m_r(m, r)
    return math.fsum(1.0 / j for j in range(int(m), int(r), -1))


def a_coeff(m: int, r: int, p: float) -> float:
    """Extrapolation coefficient a(m, r, p) = harmonic_tail(m, r) + log(p).

    Negative whenever the target quantile lies beyond the expected reach of
    the per-block (r+1)-th order statistic; it satisfies
    log(r/(m p)) < -a < log(r/(m p)) + 1/r.
    """
    if not (0.0 < p < 1.0):
        raise DomainError(f"tail probability must lie in (0, 1), got {p}")
    return harmonic_tail(m, r) + math.log(p)


def gamma_hat(data: BlockData) -> float:
    """Extreme value index estimate from homogeneous block data."""
    mat = data.top_log_matrix()
    r = data.r
    excess = mat[:, :r] - mat[:, r:]
    return float(excess.sum() / (data.k * r))


def gamma_hat_star(data: BlockData) -> float:
    """Pooled index estimate for blocks with differing (m_i, r_i).

    Reduces exactly to gamma_hat on homogeneous data.
    """
    if data.homogeneous:
        return gamma_hat(data)
    num = math.fsum(
        math.fsum(b.top_log[j] - b.top_log[b.r] for j in range(b.r)) for b in data.blocks
    )
    return num / data.total_ranks


def _warn_if_nonnegative(a: float) -> None:
    if a >= 0.0:
        warnings.warn(
            f"scaling coefficient a = {a:g} is >= 0: the requested quantile is not "
            "beyond the per-block top ranks; extrapolation is interpolation here",
            NonNegativeACoeffWarning,
            stacklevel=3,
        )


def quantile_hat(data: BlockData, p: float) -> QuantileEstimate:
    """Log-quantile estimate for homogeneous block data.

    Warns (NonNegativeACoeffWarning) when a(m,r,p) >= 0; the formula stays
    well defined, but confidence interval inversion will refuse such inputs.
    """
    mat = data.top_log_matrix()
    m, r, k = data.m, data.r, data.k
    a = a_coeff(m, r, p)
    _warn_if_nonnegative(a)
    g = gamma_hat(data)
    tail_mean = float(mat[:, r].mean())
    total = k * r
    return QuantileEstimate(
        gamma_hat=g,
        log_xp_hat=tail_mean - a * g,
        a_coeff=a,
        total_ranks=total,
        se_log_xp=abs(a) * g / math.sqrt(total),
    )


def quantile_hat_star(data: BlockData, p: float) -> QuantileEstimate:
    """Pooled log-quantile estimate for heterogeneous block data.

    Uses the r_i-weighted tail mean and the r_i-weighted average of the
    per-layout coefficients a(m_i, r_i, p). Reduces exactly to quantile_hat
    on homogeneous data.
    """
    if data.homogeneous:
        return quantile_hat(data, p)
    total = data.total_ranks
    a_pooled = math.fsum(b.r * a_coeff(b.m, b.r, p) for b in data.blocks) / total
    _warn_if_nonnegative(a_pooled)
    g = gamma_hat_star(data)
    tail_mean = math.fsum(b.r * b.top_log[b.r] for b in data.blocks) / total
    return QuantileEstimate(
        gamma_hat=g,
        log_xp_hat=tail_mean - a_pooled * g,
        a_coeff=a_pooled,
        total_ranks=total,
        se_log_xp=abs(a_pooled) * g / math.sqrt(total),
    )


def bias_constant_br(r: int, rho: float) -> float:
    """Bias constant b_r(rho) appearing in the asymptotic mean shift.

    b_r = (1 / (r rho)) * (sum_{j=1}^r Gamma(j - rho)/(j-1)! - Gamma(r+1-rho)/(r-1)!)

    for rho < 0; equals Gamma(1 - rho) at r = 1. Evaluated through log-gamma
    differences so large r or very negative rho do not overflow.
    """
    if int(r) != r or r < 1:
        raise DomainError(f"need integer r >= 1, got {r}")
    if not (rho < 0):
        raise DomainError(f"need rho < 0, got {rho}")
    js = np.arange(1, r + 1, dtype=float)
    terms = np.exp(gammaln(js - rho) - gammaln(js))
    last = math.exp(gammaln(r + 1 - rho) - gammaln(r))
    return (math.fsum(terms) - last) / (r * rho)
