import math

import numpy as np
import pytest
from scipy.stats import gamma as gamma_dist
from scipy.stats import kstest

from blocktail import (
    Block,
    BlockData,
    a_coeff,
    bias_constant_br,
    gamma_hat,
    gamma_hat_star,
    harmonic_tail,
    quantile_hat,
    quantile_hat_star,
    validate,
)
from blocktail.distributions import exponential_top_orders
from blocktail.exceptions import (
    DomainError,
    HeterogeneousData,
    NonNegativeACoeffWarning,
)

TWO_BLOCKS = BlockData((Block(3, (2.0, 1.0)), Block(3, (3.0, 2.5))))
# with m=3, r=1 the harmonic tail is 5/6, so this p gives a = -2 exactly
P_ORACLE = math.exp(-5.0 / 6.0 - 2.0)


def random_block_data(rng, k=20, m=40, r=2):
    e = exponential_top_orders(m, r, k, rng)
    return validate([(m, row) for row in e])


class TestACoeff:
    def test_harmonic_tail_small_case(self):
        assert harmonic_tail(3, 1) == pytest.approx(5.0 / 6.0, rel=1e-15)
        assert harmonic_tail(3, 2) == pytest.approx(1.0 / 3.0, rel=1e-15)
        with pytest.raises(DomainError):
            harmonic_tail(10, 10)

    def test_oracle_value(self):
        assert a_coeff(3, 1, P_ORACLE) == pytest.approx(-2.0, abs=1e-12)

    def test_p_domain(self):
        with pytest.raises(DomainError):
            a_coeff(10, 1, 0.0)
        with pytest.raises(DomainError):
            a_coeff(10, 1, 1.0)

    def test_bracketing_bounds_property(self):
        # log(r/(mp)) < -a < log(r/(mp)) + 1/r, strictly, whatever (m, r, p)
        rng = np.random.default_rng(11)
        for _ in range(1000):
            m = int(rng.integers(2, 2000))
            r = int(rng.integers(1, m))
            p = float(rng.uniform(1e-8, 1.0 - 1e-8))
            low = math.log(r / (m * p))
            neg_a = -a_coeff(m, r, p)
            assert low < neg_a < low + 1.0 / r


class TestPointEstimates:
    def test_gamma_hat_oracle(self):
        assert gamma_hat(TWO_BLOCKS) == pytest.approx(0.75, rel=1e-15)

    def test_quantile_hat_oracle(self):
        est = quantile_hat(TWO_BLOCKS, P_ORACLE)
        assert est.gamma_hat == pytest.approx(0.75, rel=1e-15)
        assert est.a_coeff == pytest.approx(-2.0, abs=1e-12)
        assert est.log_xp_hat == pytest.approx(3.25, rel=1e-12)
        assert est.total_ranks == 2
        assert est.se_log_xp == pytest.approx(2.0 * 0.75 / math.sqrt(2.0), rel=1e-12)

    def test_warns_when_target_is_not_in_the_tail(self):
        # large p makes a >= 0 and the estimate an interpolation, not extrapolation
        with pytest.warns(NonNegativeACoeffWarning):
            quantile_hat(TWO_BLOCKS, 0.9)

    def test_location_equivariance(self):
        rng = np.random.default_rng(12)
        data = random_block_data(rng)
        shift = 1.75
        shifted = validate(
            [(b.m, tuple(v + shift for v in b.top_log)) for b in data.blocks]
        )
        base = quantile_hat(data, 1e-3)
        moved = quantile_hat(shifted, 1e-3)
        assert moved.gamma_hat == pytest.approx(base.gamma_hat, rel=1e-12)
        assert moved.log_xp_hat == pytest.approx(base.log_xp_hat + shift, rel=1e-12)
        assert moved.se_log_xp == pytest.approx(base.se_log_xp, rel=1e-12)

    def test_gamma_pivot_distribution(self):
        # k*r*gamma_hat is a sum of kr unit exponentials for unit-Pareto logs
        k, r, n = 20, 1, 10000
        rng = np.random.default_rng(13)
        sums = np.empty(n)
        for i in range(n):
            e = exponential_top_orders(30, r, k, rng)
            sums[i] = (e[:, 0] - e[:, 1]).sum()
        d, pval = kstest(sums, gamma_dist(a=k * r).cdf)
        assert pval > 1e-3


class TestStarredReduction:
    def test_gamma_star_reduces_exactly(self):
        rng = np.random.default_rng(14)
        for _ in range(20):
            data = random_block_data(rng, k=int(rng.integers(2, 30)))
            assert gamma_hat_star(data) == gamma_hat(data)  # bit-for-bit

    def test_quantile_star_reduces_exactly(self):
        rng = np.random.default_rng(15)
        data = random_block_data(rng, k=12, m=25, r=3)
        a = quantile_hat(data, 1e-4)
        b = quantile_hat_star(data, 1e-4)
        assert a == b  # frozen dataclass equality, field by field

    def test_heterogeneous_hand_computed(self):
        data = validate([(3, (2.0, 1.0)), (4, (3.0, 2.5, 2.0))])
        # gaps: block 1 gives 1, block 2 gives 1 + 0.5; total ranks 3
        assert gamma_hat_star(data) == pytest.approx(5.0 / 6.0, rel=1e-14)
        # rank-weighted aratio: [1*(5/6) + 2*(7/12)]/3 + log p = 2/3 + log p
        p = math.exp(-2.0 / 3.0 - 1.0)
        est = quantile_hat_star(data, p)
        assert est.a_coeff == pytest.approx(-1.0, abs=1e-12)
        # rank-weighted tail mean is [1*1 + 2*2]/3 = 5/3
        assert est.log_xp_hat == pytest.approx(5.0 / 3.0 + 5.0 / 6.0, rel=1e-12)
        assert est.total_ranks == 3
        assert est.se_log_xp == pytest.approx((5.0 / 6.0) / math.sqrt(3.0), rel=1e-12)

    def test_unstarred_estimators_refuse_mixed_blocks(self):
        data = validate([(3, (2.0, 1.0)), (4, (3.0, 2.5, 2.0))])
        with pytest.raises(HeterogeneousData):
            gamma_hat(data)


class TestBiasConstant:
    def test_reference_values(self):
        assert bias_constant_br(1, -1.0) == pytest.approx(1.0, rel=1e-12)
        assert bias_constant_br(2, -1.0) == pytest.approx(1.5, rel=1e-12)
        assert bias_constant_br(1, -2.0) == pytest.approx(2.0, rel=1e-12)

    def test_r_one_is_gamma_function(self):
        assert bias_constant_br(1, -0.5) == pytest.approx(math.gamma(1.5), rel=1e-12)

    def test_rejects_nonnegative_rho(self):
        with pytest.raises(DomainError):
            bias_constant_br(1, 0.0)
        with pytest.raises(DomainError):
            bias_constant_br(3, 0.5)

    def test_rejects_bad_r(self):
        with pytest.raises(DomainError):
            bias_constant_br(0, -1.0)
