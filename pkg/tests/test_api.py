import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from blocktail import (
    BlockData,
    Block,
    HighQuantileEstimator,
    as_block_data,
    blockify,
    quantile_hat_star,
)
from blocktail.exceptions import ValidationError


def pareto_sample(rng, n=2000, gamma=1.0):
    return rng.pareto(1.0 / gamma, size=n) + 1.0


class TestAsBlockData:
    def test_block_data_passes_through(self):
        data = BlockData((Block(3, (2.0, 1.0)), Block(3, (3.0, 2.5))))
        assert as_block_data(data) is data

    def test_raw_sample_needs_k(self):
        with pytest.raises(ValidationError, match="block count"):
            as_block_data(np.arange(1.0, 11.0))

    def test_raw_sample_matches_blockify(self):
        sample = np.arange(1.0, 21.0)
        assert as_block_data(sample, k=4, r=1) == blockify(sample, k=4, r=1)

    def test_matrix_needs_m(self):
        with pytest.raises(ValidationError, match="block size"):
            as_block_data([[7.4, 3.9], [9.1, 5.0]])

    def test_matrix_with_scalar_m(self):
        data = as_block_data([[7.4, 3.9], [9.1, 5.0]], m=25)
        assert data.k == 2 and data.m == 25
        assert data.blocks[0].top_log == pytest.approx((math.log(7.4), math.log(3.9)))

    def test_matrix_with_per_row_m(self):
        data = as_block_data([[7.4, 3.9], [9.1, 5.0]], m=[25, 40])
        assert not data.homogeneous
        assert data.blocks[1].m == 40

    def test_matrix_rejects_nonpositive(self):
        with pytest.raises(ValidationError, match="positive"):
            as_block_data([[7.4, -3.9], [9.1, 5.0]], m=25)

    def test_matrix_clamps_values_below_one(self):
        data = as_block_data([[7.4, 0.2], [9.1, 5.0]], m=25)
        assert data.blocks[0].top_log[1] == 0.0

    def test_rejects_higher_dimensions(self):
        with pytest.raises(ValidationError):
            as_block_data(np.ones((2, 2, 2)), m=5)


class TestHighQuantileEstimator:
    def test_sklearn_param_protocol(self):
        est = HighQuantileEstimator(p=1e-4, k=20)
        params = est.get_params()
        assert params["p"] == 1e-4 and params["k"] == 20
        cloned = clone(est)
        assert cloned.get_params() == params
        est.set_params(alpha=0.1)
        assert est.alpha == 0.1

    def test_unfitted_interval_raises(self):
        with pytest.raises(NotFittedError):
            HighQuantileEstimator().confidence_interval()

    def test_fit_raw_sample(self):
        rng = np.random.default_rng(40)
        est = HighQuantileEstimator(p=1e-3, k=40, r=1).fit(pareto_sample(rng))
        assert est.gamma_ > 0
        assert est.quantile_ == pytest.approx(math.exp(est.log_quantile_))
        assert not est.heterogeneous_
        assert est.data_.k == 40

    def test_fit_matches_functional_api(self):
        rng = np.random.default_rng(41)
        sample = pareto_sample(rng)
        est = HighQuantileEstimator(p=1e-3, k=25).fit(sample)
        direct = quantile_hat_star(blockify(sample, k=25, r=1), 1e-3)
        assert est.estimate_ == direct

    def test_fit_top_value_matrix(self):
        rng = np.random.default_rng(42)
        tops = np.sort(rng.pareto(1.0, size=(30, 3)) + 1.0, axis=1)[:, ::-1]
        est = HighQuantileEstimator(p=1e-4, m=100).fit(tops)
        assert est.data_.m == 100 and est.data_.r == 2

    def test_fit_block_data_directly(self):
        data = BlockData((Block(50, (4.0, 2.0)), Block(50, (5.0, 3.0))))
        est = HighQuantileEstimator(p=1e-3).fit(data)
        assert est.data_ is data

    def test_interval_methods_and_overrides(self):
        rng = np.random.default_rng(43)
        est = HighQuantileEstimator(p=1e-3, k=40, method="normal").fit(pareto_sample(rng, 4000))
        normal = est.confidence_interval()
        assert normal.method == "normal"
        ael = est.confidence_interval(method="ael")
        assert ael.method == "ael"
        assert ael.lower < est.log_quantile_ < ael.upper
        el = est.confidence_interval(method="el", alpha=0.1)
        assert el.level == pytest.approx(0.9)

    def test_interval_consistent_with_default_alpha(self):
        rng = np.random.default_rng(44)
        est = HighQuantileEstimator(p=1e-3, k=40, alpha=0.2).fit(pareto_sample(rng, 4000))
        assert est.confidence_interval().level == pytest.approx(0.8)
