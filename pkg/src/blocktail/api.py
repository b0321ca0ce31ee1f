"""Estimator-style front end.

HighQuantileEstimator wraps the functional core in the fit/attributes idiom
so block-top quantile estimation drops into pipelines and tooling that
expect scikit-learn conventions (get_params/set_params, trailing-underscore
fitted attributes, fit returning self).
"""

from __future__ import annotations

import math
from typing import Optional, Union

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .blocks import Block, BlockData, blockify, validate
from .estimators import quantile_hat_star
from .exceptions import ValidationError
from .likelihood import (
    DEFAULT_CORRECTION,
    ConfidenceInterval,
    likelihood_ci,
    normal_ci,
)

__all__ = ["HighQuantileEstimator", "as_block_data"]


def as_block_data(
    X,
    k: Optional[int] = None,
    r: int = 1,
    m: Optional[Union[int, np.ndarray]] = None,
) -> BlockData:
    """Validation helper: coerce supported inputs into BlockData.

    Accepts a BlockData (validated as-is), a 1-D raw sample (split into k
    blocks of which the top r+1 are kept; k is required), or a 2-D array of
    per-block top observations on the original scale, one row per block in
    decreasing order (the block size m is required, scalar or per-row).
    """
    if isinstance(X, BlockData):
        return X
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        if k is None:
            raise ValidationError("a raw 1-D sample needs the block count k")
        return blockify(arr, k=k, r=r)
    if arr.ndim == 2:
        if m is None:
            raise ValidationError("a 2-D top-value matrix needs the block size m")
        ms = np.broadcast_to(np.asarray(m, dtype=int), (arr.shape[0],))
        if np.any(arr <= 0):
            raise ValidationError("top observations must be positive")
        logs = np.log(np.maximum(arr, 1.0))
        blocks = tuple(
            Block(m=int(ms[i]), top_log=tuple(float(v) for v in logs[i]))
            for i in range(arr.shape[0])
        )
        return validate(blocks)
    raise ValidationError(f"cannot interpret a {arr.ndim}-D array as block data")


class HighQuantileEstimator(BaseEstimator):
    """Extreme upper-quantile estimator for heavy-tailed block data.

    Fits the pooled tail-index and log-quantile estimators to per-block top
    order statistics and exposes likelihood-ratio or normal confidence
    intervals for the log-quantile.

    Parameters:
        p: tail probability of the target quantile.
        r: per-block count of gap statistics (the top r+1 values are used).
        k: block count, only needed when fitting a raw 1-D sample.
        m: block size, only needed when fitting a 2-D top-value matrix.
        alpha: default significance level for confidence_interval.
        method: default interval method, "ael", "el" or "normal".
        correction: pseudo-value weight of the adjusted likelihood.

    Attributes (after fit):
        data_: the validated BlockData.
        estimate_: the full QuantileEstimate.
        gamma_: extreme value index estimate.
        log_quantile_: estimated log of the upper p-quantile.
        quantile_: exp(log_quantile_).
        se_log_quantile_: standard error of log_quantile_.
        heterogeneous_: whether blocks differ in (m, r).
    """

    def __init__(
        self,
        p: float = 1e-3,
        r: int = 1,
        k: Optional[int] = None,
        m: Optional[int] = None,
        alpha: float = 0.05,
        method: str = "ael",
        correction: float = DEFAULT_CORRECTION,
    ):
        self.p = p
        self.r = r
        self.k = k
        self.m = m
        self.alpha = alpha
        self.method = method
        self.correction = correction

    def fit(self, X, y=None):
        data = as_block_data(X, k=self.k, r=self.r, m=self.m)
        est = quantile_hat_star(data, self.p)
        self.data_ = data
        self.estimate_ = est
        self.gamma_ = est.gamma_hat
        self.log_quantile_ = est.log_xp_hat
        self.quantile_ = math.exp(est.log_xp_hat)
        self.se_log_quantile_ = est.se_log_xp
        self.heterogeneous_ = not data.homogeneous
        return self

    def confidence_interval(
        self, alpha: Optional[float] = None, method: Optional[str] = None
    ) -> ConfidenceInterval:
        """Interval for the log-quantile at 1 - alpha, by the chosen method."""
        if not hasattr(self, "data_"):
            raise NotFittedError("call fit before confidence_interval")
        alpha = self.alpha if alpha is None else alpha
        method = self.method if method is None else method
        if method == "normal":
            return normal_ci(self.estimate_, alpha)
        return likelihood_ci(
            self.data_, self.p, alpha=alpha, method=method, correction=self.correction
        )
