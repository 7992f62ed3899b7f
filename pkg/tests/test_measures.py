from __future__ import annotations

import math

import numpy as np
import pytest

from dimdecomp.measures import (
    GAUSS_MAX_ORDER,
    MarginalMeasure,
    ProductMeasure,
    QuadratureRule,
    gauss_exactness_residual,
    gauss_rule,
    product_rules,
    sample,
)

UNIFORMS = [
    MarginalMeasure.uniform(-1.0, 1.0),
    MarginalMeasure.uniform(0.0, 1.0),
    MarginalMeasure.uniform(2.0, 5.0),
]
NORMAL = MarginalMeasure.standard_normal()


class TestMarginalValidation:
    def test_uniform_needs_ordered_finite_bounds(self):
        with pytest.raises(ValueError):
            MarginalMeasure.uniform(1.0, 1.0)
        with pytest.raises(ValueError):
            MarginalMeasure.uniform(2.0, -2.0)
        with pytest.raises(ValueError):
            MarginalMeasure.uniform(0.0, math.inf)

    def test_normal_takes_no_bounds(self):
        with pytest.raises(ValueError):
            MarginalMeasure("standard_normal", 0.0, 1.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            MarginalMeasure("beta")


class TestDensity:
    @pytest.mark.parametrize("marg", UNIFORMS + [NORMAL])
    def test_density_integrates_to_one(self, marg):
        # composite Gauss panels over the (effective) support; independent of
        # the probability-normalized rules under test elsewhere
        if marg.kind == "uniform":
            lo, hi = marg.lo, marg.hi
        else:
            lo, hi = -10.0, 10.0  # tail mass beyond is ~1.5e-23
        x, w = np.polynomial.legendre.leggauss(20)
        total = 0.0
        edges = np.linspace(lo, hi, 21)
        for a, b in zip(edges[:-1], edges[1:]):
            nodes = 0.5 * (b - a) * x + 0.5 * (a + b)
            total += 0.5 * (b - a) * np.dot(w, marg.density(nodes))
        assert abs(total - 1.0) <= 1e-12

    def test_uniform_density_vanishes_outside(self):
        marg = MarginalMeasure.uniform(0.0, 1.0)
        assert marg.density(-0.1) == 0.0
        assert marg.density(0.5) == 1.0

    def test_moments_against_numerical_integration(self):
        # brute-force Riemann check of the closed-form moments
        marg = MarginalMeasure.uniform(-1.0, 2.0)
        xs = np.linspace(-1.0, 2.0, 2_000_001)
        for k in range(6):
            ref = np.trapezoid(xs**k / 3.0, xs)
            assert abs(marg.moment(k) - ref) <= 1e-9 * max(1.0, abs(ref))
        xs = np.linspace(-12.0, 12.0, 2_000_001)
        dens = NORMAL.density(xs)
        for k in range(8):
            ref = np.trapezoid(xs**k * dens, xs)
            assert abs(NORMAL.moment(k) - ref) <= 1e-6 * max(1.0, abs(ref))


class TestGaussRules:
    @pytest.mark.parametrize("marg", UNIFORMS + [NORMAL])
    @pytest.mark.parametrize("order", [1, 2, 3, 5, 8, 13, 21, 34, 64])
    def test_weights_normalized_and_positive(self, marg, order):
        rule = gauss_rule(marg, order)
        assert abs(float(np.sum(rule.weights)) - 1.0) <= 1e-14
        assert np.all(rule.weights > 0)
        assert np.all(np.diff(rule.nodes) > 0)

    @pytest.mark.parametrize("marg", UNIFORMS + [NORMAL])
    @pytest.mark.parametrize("order", [1, 2, 3, 5, 8, 13, 21, 34, 64])
    def test_exact_up_to_degree_2n_minus_1(self, marg, order):
        rule = gauss_rule(marg, order)
        assert gauss_exactness_residual(marg, rule) <= 1e-12

    def test_one_point_rules_sit_at_the_mean(self):
        rule = gauss_rule(MarginalMeasure.uniform(0.0, 1.0), 1)
        np.testing.assert_allclose(rule.nodes, [0.5])
        np.testing.assert_allclose(rule.weights, [1.0])
        rule = gauss_rule(NORMAL, 1)
        np.testing.assert_allclose(rule.nodes, [0.0])
        np.testing.assert_allclose(rule.weights, [1.0])

    def test_two_point_rule_from_moment_equations(self):
        # hand oracle: symmetric nodes ±t, equal weights w; normalization
        # gives 2w = 1, and exactness on x² gives 2·w·t² = 1/3 ⇒ t = √(1/3)
        rule = gauss_rule(MarginalMeasure.uniform(-1.0, 1.0), 2)
        t = math.sqrt(1.0 / 3.0)
        np.testing.assert_allclose(rule.nodes, [-t, t], rtol=1e-15)
        np.testing.assert_allclose(rule.weights, [0.5, 0.5], rtol=1e-15)

    def test_affine_map_of_interval(self):
        base = gauss_rule(MarginalMeasure.uniform(-1.0, 1.0), 7)
        shifted = gauss_rule(MarginalMeasure.uniform(2.0, 5.0), 7)
        np.testing.assert_allclose(shifted.nodes, 1.5 * base.nodes + 3.5, rtol=1e-14)
        np.testing.assert_allclose(shifted.weights, base.weights, rtol=1e-14)

    def test_order_bounds(self):
        with pytest.raises(ValueError):
            gauss_rule(NORMAL, 0)
        with pytest.raises(ValueError):
            gauss_rule(NORMAL, GAUSS_MAX_ORDER + 1)
        rule = gauss_rule(NORMAL, 80, max_order=128)
        assert rule.order == 80

    def test_rule_arrays_are_frozen(self):
        rule = gauss_rule(NORMAL, 4)
        with pytest.raises(ValueError):
            rule.nodes[0] = 0.0

    def test_malformed_rule_rejected(self):
        with pytest.raises(ValueError):
            QuadratureRule(np.zeros((2, 2)), np.zeros(4))
        with pytest.raises(ValueError):
            QuadratureRule(np.zeros(3), np.zeros(4))


class TestProductMeasure:
    def test_iid_and_density_product(self):
        m = ProductMeasure.iid(MarginalMeasure.uniform(0.0, 2.0), 3)
        assert m.dim == 3
        pt = np.array([0.5, 1.0, 1.5])
        np.testing.assert_allclose(m.density(pt), 0.5**3)
        assert m.density(np.array([0.5, 1.0, 2.5])) == 0.0

    def test_mixed_marginals(self):
        m = ProductMeasure((MarginalMeasure.uniform(0.0, 1.0), NORMAL))
        pt = np.array([0.25, 0.0])
        np.testing.assert_allclose(m.density(pt), 1.0 / math.sqrt(2 * math.pi))

    def test_needs_at_least_one_marginal(self):
        with pytest.raises(ValueError):
            ProductMeasure(())

    def test_rules_per_coordinate(self):
        m = ProductMeasure((MarginalMeasure.uniform(0.0, 1.0), NORMAL))
        rules = product_rules(m, (3, 5))
        assert rules[0].order == 3 and rules[1].order == 5
        with pytest.raises(ValueError):
            product_rules(m, (3, 5, 7))


class TestSampling:
    def test_deterministic_given_seed(self):
        m = ProductMeasure.iid(MarginalMeasure.uniform(-1.0, 1.0), 4)
        a = sample(m, np.random.default_rng(42), 100)
        b = sample(m, np.random.default_rng(42), 100)
        np.testing.assert_array_equal(a, b)
        # a single draw is the first row of a size-1 batch
        c = sample(m, np.random.default_rng(42))
        np.testing.assert_array_equal(c, sample(m, np.random.default_rng(42), 1)[0])

    def test_samples_in_support(self):
        m = ProductMeasure((MarginalMeasure.uniform(0.0, 1.0), NORMAL))
        X = sample(m, np.random.default_rng(7), 1000)
        assert X.shape == (1000, 2)
        assert np.all(m.contains(X))

    def test_sample_mean_near_true_mean(self):
        # 3σ gate: sd of uniform(0,1) is 1/√12, n = 10^6
        m = ProductMeasure.iid(MarginalMeasure.uniform(0.0, 1.0), 1)
        X = sample(m, np.random.default_rng(123), 1_000_000)
        gate = 3.0 / math.sqrt(12.0) / math.sqrt(1_000_000)
        assert abs(float(np.mean(X)) - 0.5) <= gate
