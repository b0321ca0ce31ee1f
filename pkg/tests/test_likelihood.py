import math

import numpy as np
import pytest
from scipy.stats import chi2, norm

from blocktail import (
    Block,
    BlockData,
    DEFAULT_CORRECTION,
    ael_statistic,
    el_lambda,
    el_statistic,
    likelihood_ci,
    normal_ci,
    quantile_hat,
    validate,
    z_sample,
)
from blocktail.distributions import Frechet, exponential_top_orders, sample_top_block
from blocktail.exceptions import (
    CorrectionFactorWarning,
    DomainError,
    ValidationError,
    ZeroNotInHull,
)
from blocktail.likelihood import (
    BRACKET_FAILURE,
    HULL_FAILURE_AT_ENDPOINTS,
    NEGATIVE_LOWER,
)

TWO_BLOCKS = BlockData((Block(3, (2.0, 1.0)), Block(3, (3.0, 2.5))))
P_ORACLE = math.exp(-5.0 / 6.0 - 2.0)  # a(3, 1, p) = -2

# blocks engineered so the constraint values at y=3 are exactly {-1, 2}
Z_UNIT_BLOCKS = BlockData((Block(3, (1.0, 1.0)), Block(3, (6.0, 5.0))))


def frechet_data(rng, k=25, m=50, r=1):
    blocks = [sample_top_block(Frechet(1.0), m, r, rng) for _ in range(k)]
    return validate([(b.m, b.top_log) for b in blocks])


class TestZSample:
    def test_oracle_values(self):
        zs = z_sample(TWO_BLOCKS, P_ORACLE, 3.25)
        assert zs.values == pytest.approx([-0.125, 0.125], abs=1e-12)
        assert zs.pseudo is None

    def test_mean_zero_at_point_estimate(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            data = frechet_data(rng, k=int(rng.integers(5, 40)), r=int(rng.integers(1, 4)))
            est = quantile_hat(data, 1e-3)
            zs = z_sample(data, 1e-3, est.log_xp_hat)
            assert abs(zs.values.mean()) < 1e-12

    def test_pseudo_value_is_scaled_negative_mean(self):
        zs = z_sample(TWO_BLOCKS, P_ORACLE, 3.0, with_pseudo=True)
        expect = -DEFAULT_CORRECTION * zs.values.mean()
        assert zs.pseudo == pytest.approx(expect, rel=1e-14)
        assert zs.with_pseudo_array().shape == (3,)

    def test_oversized_correction_warns(self):
        with pytest.warns(CorrectionFactorWarning):
            z_sample(TWO_BLOCKS, P_ORACLE, 3.0, with_pseudo=True, correction=2.0)

    def test_rejects_nonpositive_correction(self):
        with pytest.raises(DomainError):
            z_sample(TWO_BLOCKS, P_ORACLE, 3.0, with_pseudo=True, correction=0.0)


class TestLambdaSolver:
    def test_closed_form_two_point_case(self):
        # for z = {-1, 2}: sum z/(1+lambda z) = 0 at lambda = 1/4
        assert el_lambda(np.array([-1.0, 2.0])) == pytest.approx(0.25, abs=1e-12)

    def test_residual_is_tiny(self):
        rng = np.random.default_rng(22)
        for _ in range(200):
            n = int(rng.integers(2, 60))
            z = rng.normal(size=n)
            if z.min() >= 0 or z.max() <= 0:
                continue
            lam = el_lambda(z)
            resid = np.sum(z / (1.0 + lam * z))
            assert abs(resid) < 1e-10 * n
            # multiplier stays inside the admissible open interval
            assert -1.0 / z.max() < lam < -1.0 / z.min()

    def test_zero_mean_gives_zero_lambda(self):
        z = np.array([-1.5, 0.5, 1.0])
        assert el_lambda(z) == pytest.approx(0.0, abs=1e-12)

    def test_one_sided_values_have_no_solution(self):
        with pytest.raises(ZeroNotInHull):
            el_lambda(np.array([0.5, 1.0, 2.0]))

    def test_input_validation(self):
        with pytest.raises(ValidationError):
            el_lambda(np.array([]))
        with pytest.raises(ValidationError):
            el_lambda(np.ones((2, 2)))


class TestStatistics:
    def test_el_statistic_closed_form(self):
        # z = {-1, 2}, lambda = 1/4: 2*(log(3/4) + log(3/2))
        stat = el_statistic(Z_UNIT_BLOCKS, P_ORACLE, 3.0)
        assert stat == pytest.approx(2.0 * (math.log(0.75) + math.log(1.5)), rel=1e-12)
        assert stat == pytest.approx(0.23525, abs=1e-3)

    def test_statistic_vanishes_at_point_estimate(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            data = frechet_data(rng)
            est = quantile_hat(data, 1e-3)
            assert el_statistic(data, 1e-3, est.log_xp_hat) < 1e-12
            assert ael_statistic(data, 1e-3, est.log_xp_hat) < 1e-12

    def test_hull_failure_gives_infinity(self):
        # far from the estimate every z shares a sign
        assert el_statistic(TWO_BLOCKS, P_ORACLE, 100.0) == math.inf
        assert el_statistic(TWO_BLOCKS, P_ORACLE, -100.0) == math.inf

    def test_adjusted_never_exceeds_plain(self):
        rng = np.random.default_rng(24)
        data = frechet_data(rng, k=15)
        est = quantile_hat(data, 1e-3)
        for y in np.linspace(est.log_xp_hat - 4, est.log_xp_hat + 6, 60):
            ael = ael_statistic(data, 1e-3, y)
            el = el_statistic(data, 1e-3, y)
            assert ael <= el + 1e-12
            assert math.isfinite(ael)

    def test_adjusted_is_continuous_in_y(self):
        rng = np.random.default_rng(25)
        data = frechet_data(rng, k=12)
        est = quantile_hat(data, 1e-3)
        ys = np.linspace(est.log_xp_hat - 3, est.log_xp_hat + 3, 400)
        vals = np.array([ael_statistic(data, 1e-3, y) for y in ys])
        assert np.all(np.isfinite(vals))
        assert np.max(np.abs(np.diff(vals))) < 0.3  # no jumps on a fine grid


class TestNormalInterval:
    def test_half_width(self):
        est = quantile_hat(TWO_BLOCKS, P_ORACLE)
        ci = normal_ci(est, 0.05)
        half = norm.ppf(0.975) * est.se_log_xp
        assert ci.upper - ci.lower == pytest.approx(2 * half, rel=1e-12)
        assert ci.point == est.log_xp_hat
        assert ci.level == 0.95
        assert (ci.lower + ci.upper) / 2 == pytest.approx(est.log_xp_hat, rel=1e-12)

    def test_alpha_monotonicity(self):
        est = quantile_hat(TWO_BLOCKS, P_ORACLE)
        widths = [
            normal_ci(est, alpha).upper - normal_ci(est, alpha).lower
            for alpha in (0.2, 0.1, 0.05, 0.01)
        ]
        assert widths == sorted(widths)

    def test_negative_lower_is_flagged(self):
        est = quantile_hat(TWO_BLOCKS, P_ORACLE)  # wide interval, point at 3.25
        ci = normal_ci(est, 1e-6)
        assert ci.lower < 0
        assert NEGATIVE_LOWER in ci.diagnostics

    def test_alpha_domain(self):
        est = quantile_hat(TWO_BLOCKS, P_ORACLE)
        with pytest.raises(DomainError):
            normal_ci(est, 0.0)
        with pytest.raises(DomainError):
            normal_ci(est, 1.0)


class TestLikelihoodInterval:
    def test_statistic_crosses_threshold_at_endpoints(self):
        rng = np.random.default_rng(26)
        data = frechet_data(rng, k=30)
        crit = chi2.ppf(0.95, df=1)
        for method, stat in (("el", el_statistic), ("ael", ael_statistic)):
            ci = likelihood_ci(data, 1e-3, method=method)
            for edge in (ci.lower, ci.upper):
                inner = stat(data, 1e-3, edge - 1e-4 if edge > ci.point else edge + 1e-4)
                outer = stat(data, 1e-3, edge + 1e-4 if edge > ci.point else edge - 1e-4)
                assert inner < crit < outer

    def test_point_estimate_always_inside(self):
        rng = np.random.default_rng(27)
        for _ in range(5):
            data = frechet_data(rng, k=20)
            est = quantile_hat(data, 1e-3)
            ci = likelihood_ci(data, 1e-3, method="ael")
            assert ci.lower < est.log_xp_hat < ci.upper

    def test_plain_interval_nested_in_adjusted(self):
        rng = np.random.default_rng(28)
        for _ in range(5):
            data = frechet_data(rng, k=25)
            el = likelihood_ci(data, 1e-3, method="el")
            ael = likelihood_ci(data, 1e-3, method="ael")
            assert ael.lower <= el.lower + 1e-9
            assert el.upper <= ael.upper + 1e-9

    def test_level_monotonicity(self):
        rng = np.random.default_rng(29)
        data = frechet_data(rng, k=25)
        narrow = likelihood_ci(data, 1e-3, alpha=0.10, method="ael")
        wide = likelihood_ci(data, 1e-3, alpha=0.01, method="ael")
        assert wide.lower <= narrow.lower and narrow.upper <= wide.upper

    def test_location_equivariance(self):
        rng = np.random.default_rng(30)
        data = frechet_data(rng, k=20)
        shift = 2.5
        shifted = validate(
            [(b.m, tuple(v + shift for v in b.top_log)) for b in data.blocks]
        )
        for method in ("el", "ael"):
            base = likelihood_ci(data, 1e-3, method=method)
            moved = likelihood_ci(shifted, 1e-3, method=method)
            assert moved.lower == pytest.approx(base.lower + shift, abs=1e-8)
            assert moved.upper == pytest.approx(base.upper + shift, abs=1e-8)

    def test_small_sample_flags(self):
        # two blocks: the plain statistic hits the hull, the adjusted one
        # plateaus below the threshold and cannot bracket
        el = likelihood_ci(TWO_BLOCKS, P_ORACLE, method="el")
        assert HULL_FAILURE_AT_ENDPOINTS in el.diagnostics
        ael = likelihood_ci(TWO_BLOCKS, P_ORACLE, method="ael")
        assert BRACKET_FAILURE in ael.diagnostics

    def test_refuses_interpolation_side(self):
        with pytest.raises(DomainError):
            likelihood_ci(TWO_BLOCKS, 0.9, method="ael")

    def test_rejects_unknown_method(self):
        with pytest.raises(ValidationError):
            likelihood_ci(TWO_BLOCKS, P_ORACLE, method="bootstrap")

    def test_coverage_decision_matches_direct_statistic(self):
        # y0 inside the interval iff the statistic at y0 clears the threshold
        rng = np.random.default_rng(31)
        crit = chi2.ppf(0.95, df=1)
        hits = 0
        for _ in range(40):
            data = frechet_data(rng, k=12, m=20)
            ci = likelihood_ci(data, 1e-3, method="ael")
            y0 = Frechet(1.0).true_log_quantile(1e-3)
            inside = ci.lower <= y0 <= ci.upper
            stat = ael_statistic(data, 1e-3, y0)
            assert inside == (stat < crit)
            hits += inside
        assert hits > 20  # sanity: coverage is far from degenerate
