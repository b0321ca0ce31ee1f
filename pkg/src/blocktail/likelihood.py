"""Empirical likelihood inference for the block-top quantile.

For homogeneous data with coefficient a = a_coeff(m, r, p) < 0, each block
contributes r constraint values

    z_ij(y) = j * (L[i,j] - L[i,j+1]) - (L[i,r+1] - y) / a,   j = 1..r,

which have mean zero in y = true log-quantile, asymptotically. All z_ij share
the slope 1/a in y, so the set where the profile statistic is finite is an
interval and the level set {y : statistic(y) < c} is an interval around the
point estimate (where the z sample has exact mean zero and the statistic
vanishes).

The profile statistic for a candidate y is the usual one-constraint EL form
2 * sum log(1 + lambda z) with lambda solving sum z / (1 + lambda z) = 0 on
(-1/max z, -1/min z). The adjusted variant appends the pseudo-value
-c_n * mean(z) (c_n defaults to 19/12), which keeps zero inside the convex
hull and the statistic finite everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.stats import chi2, norm

from .blocks import BlockData
from .estimators import QuantileEstimate, a_coeff, quantile_hat
from .exceptions import (
    CorrectionFactorWarning,
    DegenerateEstimate,
    DomainError,
    ValidationError,
    ZeroACoeff,
    ZeroNotInHull,
)

import warnings

__all__ = [
    "DEFAULT_CORRECTION",
    "ZSample",
    "ConfidenceInterval",
    "z_sample",
    "el_lambda",
    "el_statistic",
    "ael_statistic",
    "normal_ci",
    "likelihood_ci",
]

DEFAULT_CORRECTION = 19.0 / 12.0

# diagnostic flag names carried by ConfidenceInterval
HULL_FAILURE_AT_ENDPOINTS = "hull_failure_at_endpoints"
BRACKET_EXPANDED = "bracket_expanded"
BRACKET_FAILURE = "bracket_failure"
NEGATIVE_LOWER = "negative_lower"

_LAMBDA_MAX_ITER = 100
_BRACKET_MAX_EXPAND = 50
_Y_TOL = 1e-6


@dataclass(frozen=True)
class ZSample:
    """Flat constraint sample (block-major, rank-minor) plus optional pseudo-value."""

    values: np.ndarray
    pseudo: Optional[float] = None

    def with_pseudo_array(self) -> np.ndarray:
        if self.pseudo is None:
            return np.asarray(self.values, dtype=float)
        return np.append(np.asarray(self.values, dtype=float), self.pseudo)


@dataclass(frozen=True)
class ConfidenceInterval:
    """Two-sided interval for the log-quantile.

    diagnostics is a frozenset of flag strings; empty means a clean
    construction. Flags: hull_failure_at_endpoints (EL statistic became
    infinite at a bracket endpoint), bracket_expanded (statistic dipped back
    under the threshold beyond the reported endpoint), bracket_failure (no
    threshold crossing within the expansion budget; the affected bound is the
    last bracket edge), negative_lower (lower endpoint below 0, reported
    as computed).
    """

    method: str
    level: float
    lower: float
    upper: float
    point: float
    diagnostics: frozenset[str] = frozenset()


# -- array kernels ------------------------------------------------------------

def _gap_terms(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split (..., r+1) log order statistics into scaled gaps and the tail value.

    Returns (gaps, tail) with gaps[..., j-1] = j * (L_j - L_{j+1}) and
    tail = L_{r+1}.
    """
    r = matrix.shape[-1] - 1
    j = np.arange(1, r + 1, dtype=float)
    gaps = j * (matrix[..., :-1] - matrix[..., 1:])
    return gaps, matrix[..., r]


def _z_rows(gaps: np.ndarray, tail: np.ndarray, a: float, y) -> np.ndarray:
    """Constraint values for per-row candidates y; returns (R, k*r)."""
    y = np.asarray(y, dtype=float)
    shift = (tail - y[..., None]) / a
    z = gaps - shift[..., None]
    return z.reshape(z.shape[0], -1)


def _solve_lambda_rows(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise Lagrange multipliers for sum z/(1+lambda z) = 0.

    z: (R, n). Returns (lam, solvable) where solvable marks rows whose convex
    hull contains 0 strictly (rows of identical zeros are reported solvable
    with lam = 0). Unsolvable rows keep lam = 0.

    Safeguarded Newton iteration on the strictly decreasing map
    g(lam) = sum z/(1+lam z), bracketed on (-1/max z, -1/min z) with the
    endpoints pulled in by 1e-12 of the bracket width. Each row's iteration
    depends only on that row, so results do not change under batching.
    """
    z = np.asarray(z, dtype=float)
    rows, _ = z.shape
    zmin = z.min(axis=1)
    zmax = z.max(axis=1)
    hull = (zmin < 0.0) & (zmax > 0.0)
    all_zero = (zmin == 0.0) & (zmax == 0.0)

    lam = np.zeros(rows)
    if not hull.any():
        return lam, hull | all_zero

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lo = np.where(hull, -1.0 / np.where(zmax > 0, zmax, 1.0), 0.0)
        hi = np.where(hull, -1.0 / np.where(zmin < 0, zmin, -1.0), 0.0)
        width = hi - lo
        lo = lo + 1e-12 * width
        hi = hi - 1e-12 * width

        active = hull.copy()
        for _ in range(_LAMBDA_MAX_ITER):
            t = 1.0 + lam[:, None] * z
            u = z / t
            g = u.sum(axis=1)
            gp = -(u * u).sum(axis=1)
            lo = np.where(active & (g > 0), lam, lo)
            hi = np.where(active & (g < 0), lam, hi)
            newton = lam - g / gp
            inside = (newton > lo) & (newton < hi)
            proposal = np.where(inside, newton, 0.5 * (lo + hi))
            done = (np.abs(proposal - lam) <= 1e-12 * (1.0 + np.abs(proposal))) | (g == 0.0)
            lam = np.where(active, proposal, lam)
            active = active & ~done
            if not active.any():
                break
    return lam, hull | all_zero


def _el_stat_rows(z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row-wise EL statistic. Returns (stat, lam, solvable); stat is +inf on
    rows whose hull does not contain zero."""
    lam, solvable = _solve_lambda_rows(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        stat = 2.0 * np.log1p(lam[:, None] * z).sum(axis=1)
    stat = np.where(solvable, stat, np.inf)
    return stat, lam, solvable


def _augment_rows(z: np.ndarray, correction: float) -> np.ndarray:
    pseudo = -correction * z.mean(axis=1)
    return np.concatenate([z, pseudo[:, None]], axis=1)


def _levelset_bound(
    stat_at: Callable[[np.ndarray], np.ndarray],
    point: np.ndarray,
    step: np.ndarray,
    crit: float,
    direction: int,
    max_expand: int = _BRACKET_MAX_EXPAND,
    ytol: float = _Y_TOL,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One endpoint of {y : stat(y) < crit}, per row, by expansion + bisection.

    Starting from the per-row point (where the statistic is 0), the bracket
    grows geometrically in units of step until the statistic reaches crit
    (an infinite EL statistic also terminates the bracket), then bisects to
    ytol. Rows without a crossing within max_expand expansions keep the last
    bracket edge and are flagged.

    Returns (bound, bracket_failed, dipped_back, hull_terminated).
    """
    point = np.asarray(point, dtype=float)
    step = np.asarray(step, dtype=float)
    rows = point.shape[0]

    inner = point.copy()
    offset = np.where(step > 0, step, 1.0)
    outer = point + direction * offset
    found = np.zeros(rows, dtype=bool)
    hull_terminated = np.zeros(rows, dtype=bool)

    for _ in range(max_expand):
        s = stat_at(outer)
        newly = ~found & (s >= crit)
        hull_terminated |= newly & np.isinf(s)
        inner = np.where(found | newly, inner, outer)
        found |= newly
        if found.all():
            break
        offset = np.where(found, offset, 2.0 * offset)
        outer = np.where(found, outer, point + direction * offset)

    failed = ~found

    # probe two further doublings: does the statistic dip back under crit
    # beyond the endpoint we are about to report?
    dipped = np.zeros(rows, dtype=bool)
    for factor in (2.0, 4.0):
        probe = np.where(found, point + direction * factor * offset, outer)
        dipped |= found & (stat_at(probe) < crit)

    lo = inner
    hi = outer
    for _ in range(200):
        active = found & (np.abs(hi - lo) > ytol)
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        s = stat_at(mid)
        inside = s < crit
        lo = np.where(active & inside, mid, lo)
        hi = np.where(active & ~inside, mid, hi)
    bound = np.where(found, 0.5 * (lo + hi), outer)
    return bound, failed, dipped, hull_terminated


# -- public operations --------------------------------------------------------

def z_sample(
    data: BlockData,
    p: float,
    y: float,
    with_pseudo: bool = False,
    correction: float = DEFAULT_CORRECTION,
) -> ZSample:
    """Constraint values z_ij(y) for homogeneous block data, flattened
    block-major; optionally with the adjustment pseudo-value appended.

    Raises ZeroACoeff when a(m,r,p) = 0. Warns when the pseudo-value weight
    exceeds k^(2/3), outside the regime where the adjusted statistic keeps
    its chi-square calibration.
    """
    mat = data.top_log_matrix()
    a = a_coeff(data.m, data.r, p)
    if a == 0.0:
        raise ZeroACoeff("a(m, r, p) = 0: constraint values are undefined")
    gaps, tail = _gap_terms(mat)
    z = gaps - ((tail - y) / a)[:, None]
    flat = z.reshape(-1)
    pseudo = None
    if with_pseudo:
        if not (correction > 0):
            raise DomainError(f"pseudo-value weight must be > 0, got {correction}")
        if correction > data.k ** (2.0 / 3.0):
            warnings.warn(
                f"pseudo-value weight {correction:g} exceeds k^(2/3) = {data.k ** (2/3):.3g}; "
                "chi-square calibration of the adjusted statistic is not guaranteed",
                CorrectionFactorWarning,
                stacklevel=2,
            )
        pseudo = float(-correction * flat.mean())
    return ZSample(values=flat, pseudo=pseudo)


def el_lambda(z) -> float:
    """Lagrange multiplier for a ZSample or flat array of constraint values.

    The pseudo-value, when present, participates like any other value.
    Raises ZeroNotInHull when all values sit on one side of zero.
    """
    if isinstance(z, ZSample):
        arr = z.with_pseudo_array()
    else:
        arr = np.asarray(z, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError("z must be a non-empty one-dimensional sample")
    lam, solvable = _solve_lambda_rows(arr[None, :])
    if not solvable[0]:
        raise ZeroNotInHull("all constraint values share one sign")
    return float(lam[0])


def el_statistic(data: BlockData, p: float, y: float) -> float:
    """Profile EL statistic at candidate log-quantile y; +inf when zero is
    outside the convex hull of the constraint values."""
    zs = z_sample(data, p, y)
    stat, _, _ = _el_stat_rows(zs.values[None, :])
    return float(stat[0])


def ael_statistic(
    data: BlockData, p: float, y: float, correction: float = DEFAULT_CORRECTION
) -> float:
    """Adjusted EL statistic at candidate y; finite for every finite y."""
    zs = z_sample(data, p, y, with_pseudo=True, correction=correction)
    stat, _, _ = _el_stat_rows(zs.with_pseudo_array()[None, :])
    return float(stat[0])


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")


def normal_ci(est: QuantileEstimate, alpha: float) -> ConfidenceInterval:
    """Normal-approximation interval log_xp_hat +/- z_{alpha/2} * se."""
    _check_alpha(alpha)
    if est.a_coeff == 0.0:
        raise ZeroACoeff("a(m, r, p) = 0: interval width is degenerate")
    if est.gamma_hat == 0.0:
        raise DegenerateEstimate("gamma_hat = 0 gives a zero-width interval")
    zq = float(norm.ppf(1.0 - alpha / 2.0))
    half = zq * est.se_log_xp
    diagnostics = set()
    if est.log_xp_hat - half < 0:
        diagnostics.add(NEGATIVE_LOWER)
    return ConfidenceInterval(
        method="normal",
        level=1.0 - alpha,
        lower=est.log_xp_hat - half,
        upper=est.log_xp_hat + half,
        point=est.log_xp_hat,
        diagnostics=frozenset(diagnostics),
    )


def likelihood_ci(
    data: BlockData,
    p: float,
    alpha: float = 0.05,
    method: str = "ael",
    correction: float = DEFAULT_CORRECTION,
) -> ConfidenceInterval:
    """Likelihood-ratio interval {y : statistic(y) < chi2_1 upper-alpha point}.

    method is "el" or "ael". The bracket for each endpoint starts one
    normal-interval half-width from the point estimate and doubles until the
    statistic crosses the threshold, then bisects to 1e-6 in y. Lower
    endpoints may be negative; they are reported as computed and flagged.

    Refuses (DomainError) when a(m,r,p) >= 0: extrapolation-side inversion
    is the only calibrated regime.
    """
    if method not in ("el", "ael"):
        raise ValidationError(f"method must be 'el' or 'ael', got {method!r}")
    _check_alpha(alpha)
    a = a_coeff(data.m, data.r, p)
    if a >= 0.0:
        raise DomainError(
            f"a(m, r, p) = {a:g} >= 0: likelihood interval requires a tail-side quantile"
        )
    est = quantile_hat(data, p)
    if est.gamma_hat == 0.0:
        raise DegenerateEstimate("gamma_hat = 0: no scale for the interval bracket")

    if method == "ael" and correction > data.k ** (2.0 / 3.0):
        warnings.warn(
            f"pseudo-value weight {correction:g} exceeds k^(2/3); calibration not guaranteed",
            CorrectionFactorWarning,
            stacklevel=2,
        )

    mat = data.top_log_matrix()
    gaps, tail = _gap_terms(mat)
    gaps = gaps[None, ...]
    tail = tail[None, ...]

    if method == "el":
        def stat_at(y: np.ndarray) -> np.ndarray:
            return _el_stat_rows(_z_rows(gaps, tail, a, y))[0]
    else:
        def stat_at(y: np.ndarray) -> np.ndarray:
            return _el_stat_rows(_augment_rows(_z_rows(gaps, tail, a, y), correction))[0]

    crit = float(chi2.ppf(1.0 - alpha, df=1))
    zq = float(norm.ppf(1.0 - alpha / 2.0))
    point = np.array([est.log_xp_hat])
    step = np.array([zq * est.se_log_xp])

    upper, fail_u, dip_u, hull_u = _levelset_bound(stat_at, point, step, crit, +1)
    lower, fail_l, dip_l, hull_l = _levelset_bound(stat_at, point, step, crit, -1)

    diagnostics = set()
    if hull_u[0] or hull_l[0]:
        diagnostics.add(HULL_FAILURE_AT_ENDPOINTS)
    if dip_u[0] or dip_l[0]:
        diagnostics.add(BRACKET_EXPANDED)
    if fail_u[0] or fail_l[0]:
        diagnostics.add(BRACKET_FAILURE)
    if lower[0] < 0:
        diagnostics.add(NEGATIVE_LOWER)
    return ConfidenceInterval(
        method=method,
        level=1.0 - alpha,
        lower=float(lower[0]),
        upper=float(upper[0]),
        point=est.log_xp_hat,
        diagnostics=frozenset(diagnostics),
    )
