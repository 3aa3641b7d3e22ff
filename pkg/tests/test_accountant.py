import math

import numpy as np
import pytest

from qdp.accountant import (
    DEFAULT_ALPHA_GRID,
    DpPoint,
    MechanismSpec,
    RdpPoint,
    budget_sweep,
    calibrate_sigma,
    compose,
    epsilon_infinity,
    epsilon_one,
    gaussian_rdp_baseline,
    rdp_to_dp,
    renyi_divergence,
)
from qdp.pmf import LevelPmf, NoiseSpec, quantized_gaussian_pmf
from qdp.quantizer import QuantizerSpec

from oracles import kl_sum, quad_partial_first_moment, quad_pmf

ALPHAS = (1.0, 1.5, 2.0, 4.0, 8.0, math.inf)


def two_level_pmf(p0):
    spec = QuantizerSpec(k=2, c_q=1.0)
    return LevelPmf(spec=spec, center=0.0, probs=np.array([p0, 1.0 - p0]))


def random_pmf_pair(rng, k):
    spec = QuantizerSpec(k=k, c_q=1.0)
    p = LevelPmf(spec=spec, center=0.0, probs=rng.dirichlet(np.ones(k)))
    q = LevelPmf(spec=spec, center=0.0, probs=rng.dirichlet(np.ones(k)))
    return p, q


class TestRenyiDivergence:
    def test_identical_distributions_give_zero(self):
        p = two_level_pmf(0.3)
        q = two_level_pmf(0.3)
        for alpha in ALPHAS:
            assert renyi_divergence(p, q, alpha) == 0.0

    def test_kl_closed_form(self):
        # KL((3/4,1/4) || (1/4,3/4)) = (1/2) log 3
        p = two_level_pmf(0.75)
        q = two_level_pmf(0.25)
        assert renyi_divergence(p, q, 1.0) == pytest.approx(0.5 * math.log(3.0), abs=1e-6)

    def test_monotone_in_alpha(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            p, q = random_pmf_pair(rng, int(rng.integers(2, 9)))
            values = [renyi_divergence(p, q, a) for a in ALPHAS]
            for lo, hi in zip(values, values[1:]):
                assert lo <= hi + 1e-12

    def test_mismatched_lattices_rejected(self):
        p = two_level_pmf(0.5)
        spec = QuantizerSpec(k=2, c_q=2.0)
        q = LevelPmf(spec=spec, center=0.0, probs=np.array([0.5, 0.5]))
        with pytest.raises(ValueError, match="different lattices"):
            renyi_divergence(p, q, 2.0)

    def test_explicit_infinity_when_q_vanishes_on_support(self):
        spec = QuantizerSpec(k=3, c_q=1.0)
        p = LevelPmf(spec=spec, center=0.0, probs=np.array([0.5, 0.5, 0.0]))
        q = LevelPmf(spec=spec, center=0.0, probs=np.array([0.5, 0.0, 0.5]))
        for alpha in (1.0, 2.0, math.inf):
            assert renyi_divergence(p, q, alpha) == math.inf

    def test_zero_in_p_contributes_nothing(self):
        spec = QuantizerSpec(k=3, c_q=1.0)
        p = LevelPmf(spec=spec, center=0.0, probs=np.array([0.0, 0.5, 0.5]))
        q = LevelPmf(spec=spec, center=0.0, probs=np.array([0.2, 0.4, 0.4]))
        expected = 0.5 * math.log(0.5 / 0.4) * 2
        assert renyi_divergence(p, q, 1.0) == pytest.approx(expected, rel=1e-12)

    def test_rejects_order_below_one(self):
        p = two_level_pmf(0.5)
        with pytest.raises(ValueError, match=">= 1"):
            renyi_divergence(p, p, 0.5)


def mech(sigma, k, c_q=1.0):
    return MechanismSpec(noise=NoiseSpec(sigma), quant=QuantizerSpec(k=k, c_q=c_q))


class TestMechanismSpec:
    def test_sensitivity_defaults_to_clip_radius(self):
        assert mech(1.0, 4, c_q=2.0).sensitivity == 2.0

    def test_rejects_inconsistent_sensitivity(self):
        with pytest.raises(ValueError, match="must equal c_q"):
            MechanismSpec(
                noise=NoiseSpec(1.0), quant=QuantizerSpec(k=4, c_q=1.0), sensitivity=3.0
            )


class TestEpsilonOne:
    def test_below_gaussian_budget_for_all_levels(self):
        for k in (2, 3, 4, 8, 16, 32, 64):
            assert 0.0 < epsilon_one(mech(1.0, k)) < 0.5

    def test_vanishes_when_noise_dominates(self):
        assert epsilon_one(mech(1e3, 4)) < 1e-4

    def test_matches_quadrature_oracle(self):
        value = epsilon_one(mech(1.0, 2))
        oracle = kl_sum(quad_pmf(0.5, 1.0, 2, 1.0), quad_pmf(-0.5, 1.0, 2, 1.0))
        assert value == pytest.approx(oracle, abs=1e-8)


class TestEpsilonInfinity:
    def test_strictly_increasing_in_k(self):
        values = [epsilon_infinity(mech(1.0, k)) for k in range(2, 17)]
        assert all(b - a > 1e-9 for a, b in zip(values, values[1:]))

    def test_matches_quadrature_oracle(self):
        value = epsilon_infinity(mech(1.0, 2))
        integral = quad_partial_first_moment(-1.0, 1.0, -0.5, 1.0)
        assert value == pytest.approx(math.log(2.0 / integral), abs=1e-8)

    def test_budget_chain(self):
        # eps1 <= worst-case log ratio of the extremal pmfs <= eps_inf
        for sigma, k in [(0.5, 2), (1.0, 4), (1.0, 16), (2.0, 8)]:
            m = mech(sigma, k)
            p = quantized_gaussian_pmf(0.5, m.noise, m.quant)
            q = quantized_gaussian_pmf(-0.5, m.noise, m.quant)
            d_inf = renyi_divergence(p, q, math.inf)
            assert epsilon_one(m) <= d_inf + 1e-12
            assert d_inf <= epsilon_infinity(m) + 1e-12


class TestGaussianBaseline:
    def test_reference_setting(self):
        assert gaussian_rdp_baseline(1.0, 1.0, 1.0).epsilon == 0.5

    def test_formula_at_alpha_two(self):
        assert gaussian_rdp_baseline(1.0, 1.0, 2.0).epsilon == 1.0

    def test_zero_sensitivity(self):
        assert gaussian_rdp_baseline(0.0, 1.0, 4.0).epsilon == 0.0

    def test_unbounded_at_infinite_order(self):
        point = gaussian_rdp_baseline(1.0, 1.0, math.inf)
        assert point.epsilon == math.inf


class TestCompose:
    def test_single_point_unchanged(self):
        point = RdpPoint(2.0, 0.7)
        assert compose([point]) == point

    def test_additivity(self):
        total = compose([RdpPoint(3.0, 0.2)] * 10)
        assert total.alpha == 3.0
        assert total.epsilon == pytest.approx(2.0)

    def test_pairwise(self):
        assert compose([RdpPoint(2.0, 0.1), RdpPoint(2.0, 0.3)]).epsilon == pytest.approx(0.4)

    def test_mixed_orders_rejected(self):
        with pytest.raises(ValueError, match="common"):
            compose([RdpPoint(2.0, 0.1), RdpPoint(3.0, 0.1)])


class TestRdpToDp:
    def test_infinite_order_is_pure_dp(self):
        assert rdp_to_dp(RdpPoint(math.inf, 3.0), 1e-5) == DpPoint(3.0, 1e-5)

    def test_large_order_limit(self):
        point = rdp_to_dp(RdpPoint(1e12, 0.7), 1e-9)
        assert point.epsilon == pytest.approx(0.7, abs=1e-9)

    def test_unit_slack(self):
        # log(1/delta)/(alpha-1) = 1 at alpha=2, delta=1/e
        point = rdp_to_dp(RdpPoint(2.0, 1.0), math.exp(-1.0))
        assert point.epsilon == pytest.approx(2.0, rel=1e-12)

    def test_alpha_one_rejected(self):
        with pytest.raises(ValueError, match="alpha = 1"):
            rdp_to_dp(RdpPoint(1.0, 0.5), 1e-5)


class TestCalibrateSigma:
    def test_inverts_single_order(self):
        # at alpha=2, delta=1/e: converted eps = 1/sigma^2 + 1, so target 2 -> sigma 1
        target = DpPoint(epsilon=2.0, delta=math.exp(-1.0))
        sigma = calibrate_sigma(target, rounds=1, sensitivity=1.0, alpha_grid=(2.0,))
        assert sigma == pytest.approx(1.0, abs=1e-3)

    def test_more_rounds_need_more_noise(self):
        target = DpPoint(epsilon=5.0, delta=1e-5)
        s1 = calibrate_sigma(target, rounds=10, sensitivity=1.0)
        s2 = calibrate_sigma(target, rounds=20, sensitivity=1.0)
        assert s2 > s1

    def test_looser_target_needs_less_noise(self):
        s_tight = calibrate_sigma(DpPoint(2.0, 1e-5), rounds=50, sensitivity=1.0)
        s_loose = calibrate_sigma(DpPoint(8.0, 1e-5), rounds=50, sensitivity=1.0)
        assert s_loose < s_tight

    def test_returned_sigma_meets_target(self):
        target = DpPoint(epsilon=5.0, delta=1e-5)
        sigma = calibrate_sigma(target, rounds=150, sensitivity=1.0)
        best = min(
            rdp_to_dp(compose([gaussian_rdp_baseline(1.0, sigma, a)] * 150), 1e-5).epsilon
            for a in DEFAULT_ALPHA_GRID
        )
        assert best <= 5.0

    def test_unreachable_target_diagnosed(self):
        # conversion slack alone exceeds the target on this grid
        with pytest.raises(ValueError, match="unreachable"):
            calibrate_sigma(DpPoint(0.01, 0.5), rounds=1, sensitivity=1.0, alpha_grid=(1.5,))


class TestBudgetSweep:
    def test_single_level_matches_direct_calls(self):
        noise = NoiseSpec(1.0)
        (row,) = budget_sweep([2], noise, 1.0)
        assert row.k == 2
        assert row.eps1 == epsilon_one(mech(1.0, 2))
        assert row.eps_inf == epsilon_infinity(mech(1.0, 2))
        assert row.eps_gauss_alpha1 == 0.5

    def test_rows_sorted_and_deterministic(self):
        noise = NoiseSpec(1.0)
        rows = budget_sweep([16, 2, 8, 4], noise, 1.0)
        assert [r.k for r in rows] == [2, 4, 8, 16]
        assert rows == budget_sweep([2, 4, 8, 16], noise, 1.0)


class TestDivergenceBounds:
    """Structural bounds the budgets must satisfy on an input grid."""

    @pytest.mark.parametrize("sigma,k", [(1.0, 6), (0.5, 3)])
    def test_gaussian_post_processing_bound(self, sigma, k):
        quant = QuantizerSpec(k=k, c_q=1.0)
        noise = NoiseSpec(sigma)
        grid = np.linspace(-0.5, 0.5, 11)
        pmfs = [quantized_gaussian_pmf(x, noise, quant) for x in grid]
        for alpha in (1.0, 2.0, 8.0):
            for i, x in enumerate(grid):
                for j, x_prime in enumerate(grid):
                    bound = alpha * (x - x_prime) ** 2 / (2.0 * sigma**2)
                    assert renyi_divergence(pmfs[i], pmfs[j], alpha) <= bound + 1e-9

    def test_extremal_inputs_maximize_divergence(self):
        m = mech(1.0, 4)
        grid = np.linspace(-0.5, 0.5, 11)
        pmfs = [quantized_gaussian_pmf(x, m.noise, m.quant) for x in grid]
        eps1 = epsilon_one(m)
        eps_inf = epsilon_infinity(m)
        for p in pmfs:
            for q in pmfs:
                assert renyi_divergence(p, q, 1.0) <= eps1 + 1e-12
                assert renyi_divergence(p, q, math.inf) <= eps_inf + 1e-12

    def test_order_monotonicity_on_mechanism_pmfs(self):
        rng = np.random.default_rng(11)
        noise = NoiseSpec(0.6)
        quant = QuantizerSpec(k=5, c_q=1.0)
        for _ in range(30):
            x, x_prime = rng.uniform(-0.5, 0.5, size=2)
            p = quantized_gaussian_pmf(x, noise, quant)
            q = quantized_gaussian_pmf(x_prime, noise, quant)
            values = [renyi_divergence(p, q, a) for a in ALPHAS]
            for lo, hi in zip(values, values[1:]):
                assert lo <= hi + 1e-12
