import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from conftest import INTERIOR_T, mean_and_stderr
from oracle_values import THRESHOLD_H
from renewal_ldp.errors import DomainError, UnsupportedTiltError
from renewal_ldp.marginals import Exponential, Gamma, parse_marginal
from renewal_ldp.models import (
    MODELS,
    GaussSign,
    IndependentProduct,
    KernelMeasure,
    PiecewisePolynomial,
    PoissonEpoch,
    PoissonEpochUnit,
    Threshold,
    default_instances,
)
from renewal_ldp.rate import solve_h, slope


class TestJointMgf:
    def test_unit_model_at_ln2(self, unit):
        assert unit.mgf(math.log(2.0), -1.0) == pytest.approx(1.0, abs=1e-13)

    def test_origin_is_one(self, any_law):
        assert any_law.mgf(0.0, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_threshold_root_from_scalar_oracle(self):
        h = THRESHOLD_H[(1, 1)]
        assert Threshold(1.0).mgf(1.0, -h) == pytest.approx(1.0, abs=1e-12)

    def test_divergence_is_infinite_not_error(self, unit, threshold, indep, gauss):
        assert unit.mgf(0.5, 5.0) == math.inf
        assert threshold.mgf(0.0, 2.0) == math.inf
        assert indep.mgf(1.5, 0.0) == math.inf
        assert math.isfinite(gauss.mgf(0.5, 3.0))

    @pytest.mark.parametrize("t", [-0.5, 0.0, 0.3, 0.6])
    @pytest.mark.parametrize("s", [-2.0, -0.7, 0.0, 0.2])
    def test_quadrature_matches_unit_closed_form(self, t, s):
        general = PoissonEpoch([(0.0, [1.0])])
        exact = 1.0 / (2.0 - math.exp(t) - s)
        if exact <= 0:
            pytest.skip("outside the domain")
        assert general.mgf(t, s) == pytest.approx(exact, rel=1e-8)

    @pytest.mark.parametrize("M", [0.5, 2.0])
    @pytest.mark.parametrize("t,s", [(0.5, -0.3), (1.0, -0.9), (-0.4, 0.3)])
    def test_threshold_closed_form_against_quad(self, M, t, s):
        law = Threshold(M)
        below, _ = integrate.quad(lambda x: math.exp((s - 1) * x), 0, M)
        above, _ = integrate.quad(lambda x: math.exp(t + (s - 1) * x), M, math.inf)
        assert law.mgf(t, s) == pytest.approx(below + above, rel=1e-10)

    @pytest.mark.parametrize("t,s", [(0.4, -0.4), (0.8, 0.0), (0.1, 1.5)])
    def test_gauss_sign_against_quad(self, gauss, t, s):
        def dens(x):
            return math.exp(s * x + (t if x >= 1.0 else -t)) * stats.norm.pdf(x)

        ref = integrate.quad(dens, -40, 1.0)[0] + integrate.quad(dens, 1.0, 40)[0]
        assert gauss.mgf(t, s) == pytest.approx(ref, rel=1e-10)


class TestTiltedMoment:
    @pytest.mark.parametrize("t", [0.1, 0.5, 1.0])
    def test_unit_first_x_moment_at_root(self, unit, t):
        assert unit.tilted_moment(t, -math.expm1(t), 1, 0) == pytest.approx(1.0, rel=1e-12)

    def test_independent_cross_moment(self, indep):
        assert indep.tilted_moment(0.0, 0.0, 1, 1) == pytest.approx(1.0, rel=1e-14)

    def test_zero_order_equals_mgf(self, any_law):
        t = INTERIOR_T[any_law.kind]
        for s in (-0.5, 0.0):
            assert any_law.tilted_moment(t, s, 0, 0) == any_law.mgf(t, s)

    @pytest.mark.parametrize("ij", [(3, 0), (1, 2), (-1, 0)])
    def test_order_restriction(self, unit, ij):
        with pytest.raises(ValueError):
            unit.tilted_moment(0.1, 0.0, *ij)

    @pytest.mark.parametrize("i,j", [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)])
    def test_general_poisson_epoch_against_quad(self, pe_general, i, j):
        t, s = 0.3, -0.4
        f = pe_general.f

        def integrand(x):
            F = f.integral(x)
            lam = F * math.exp(t)
            # E[Y^j e^{tY} | X=x] for Poisson(F): moments of Poisson(F e^t) times g_x(t)
            ym = {0: 1.0, 1: lam, 2: lam + lam * lam}[j]
            return x**i * ym * math.exp(F * math.expm1(t) + (s - 1) * x)

        ref = sum(integrate.quad(integrand, a, b, epsabs=0, epsrel=1e-12)[0] for a, b in [(0, 2), (2, np.inf)])
        assert pe_general.tilted_moment(t, s, i, j) == pytest.approx(ref, rel=1e-8)


class TestConditionalMgf:
    @pytest.mark.parametrize("t", [-0.3, 0.4, 1.1])
    @pytest.mark.parametrize("x", [0.0, 0.7, 5.0])
    def test_unit(self, unit, t, x):
        assert unit.conditional_mgf(t, x) == pytest.approx(math.exp(x * math.expm1(t)), rel=1e-14)

    def test_zero_tilt(self, any_law):
        xs = np.array([0.0, 0.5, 2.0])
        np.testing.assert_allclose(any_law.conditional_mgf(0.0, xs), 1.0)

    def test_threshold_above_cut(self):
        assert Threshold(2.0).conditional_mgf(1.0, 3.0) == pytest.approx(math.e, rel=1e-15)

    @pytest.mark.parametrize("law", [PoissonEpochUnit(), Threshold(1.0), IndependentProduct()], ids=lambda l: l.kind)
    def test_outside_support(self, law):
        with pytest.raises(DomainError):
            law.conditional_mgf(0.5, -1.0)


class TestTailX:
    def test_unit_values(self, unit):
        assert unit.tail_x(0.0) == 1.0
        assert unit.tail_x(1.0) == pytest.approx(math.exp(-1.0), rel=1e-15)

    def test_gauss_sign_symmetry(self, gauss):
        assert gauss.tail_x(0.0) == pytest.approx(0.5, abs=1e-15)

    def test_monotone_and_one_below_support(self, any_law):
        xs = np.linspace(-30, 30, 601)
        vals = np.asarray(any_law.tail_x(xs))
        assert np.all(np.diff(vals) <= 0)
        assert vals[0] == pytest.approx(1.0, abs=1e-15)


class TestSampling:
    def test_threshold_functional_relation(self):
        law = Threshold(0.8)
        x, y = law.sample(np.random.default_rng(1), size=5000)
        np.testing.assert_array_equal(y, (x > 0.8).astype(float))

    def test_poisson_counts(self, pe_general):
        _, y = pe_general.sample(np.random.default_rng(2), size=5000)
        assert np.all(y >= 0) and np.all(y == np.round(y))

    def test_unit_reward_mean(self, unit):
        _, y = unit.sample(np.random.default_rng(3), size=1_000_000)
        m, se = mean_and_stderr(y)
        assert abs(m - 1.0) <= 3 * se

    def test_span_and_sign_invariants(self, any_law):
        x, y = any_law.sample(np.random.default_rng(4), size=20000)
        if any_law.y_span is not None:
            q = y / any_law.y_span
            np.testing.assert_array_equal(q, np.round(q))
        if any_law.x_nonneg:
            assert np.all(x >= 0)
        else:
            assert np.any(x < 0)

    def test_deterministic_given_rng(self, any_law):
        a = any_law.sample(np.random.default_rng(9), size=100)
        b = any_law.sample(np.random.default_rng(9), size=100)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

    def test_scalar_draw(self, any_law):
        x, y = any_law.sample(np.random.default_rng(0))
        assert isinstance(x, float) and isinstance(y, float)


class TestTiltedSampling:
    def test_unit_tilted_duration_is_exp1(self, unit):
        t = 0.7
        x, _ = unit.sample_tilted(t, math.expm1(t), np.random.default_rng(5), size=50000)
        assert stats.kstest(x, "expon").pvalue > 1e-3

    def test_zero_tilt_matches_base_law(self, any_law):
        x0, y0 = any_law.sample(np.random.default_rng(6), size=40000)
        x1, y1 = any_law.sample_tilted(0.0, 0.0, np.random.default_rng(7), size=40000)
        assert stats.ks_2samp(x0, x1).pvalue > 1e-3
        m0, s0 = mean_and_stderr(y0)
        m1, s1 = mean_and_stderr(y1)
        assert abs(m0 - m1) <= 4 * math.hypot(s0, s1)

    def test_reward_duration_balance(self, any_law):
        t = INTERIOR_T[any_law.kind]
        h = solve_h(any_law, t)
        c = slope(any_law, t)
        x, y = any_law.sample_tilted(t, h, np.random.default_rng(8), size=1_000_000)
        m, se = mean_and_stderr(y - c * x)
        assert abs(m) <= 3 * se

    def test_change_of_measure(self, any_law):
        t = INTERIOR_T[any_law.kind]
        h = solve_h(any_law, t)
        x, y = any_law.sample_tilted(t, h, np.random.default_rng(10), size=100_000)
        m, se = mean_and_stderr(np.exp(-t * y + h * x))
        assert abs(m - 1.0) <= 4 * se

    def test_tilted_moments_match(self, any_law):
        t = INTERIOR_T[any_law.kind]
        h = solve_h(any_law, t)
        x, y = any_law.sample_tilted(t, h, np.random.default_rng(11), size=400_000)
        for i, j, v in ((1, 0, x), (0, 1, y)):
            m, se = mean_and_stderr(v)
            assert abs(m - any_law.tilted_moment(t, -h, i, j)) <= 4 * se

    def test_scalar_draw(self, any_law):
        t = INTERIOR_T[any_law.kind]
        x, y = any_law.sample_tilted(t, solve_h(any_law, t), np.random.default_rng(0))
        assert isinstance(x, float) and isinstance(y, float)

    def test_rejects_wrong_rate(self, any_law):
        t = INTERIOR_T[any_law.kind]
        with pytest.raises(ValueError):
            any_law.sample_tilted(t, solve_h(any_law, t) + 0.05, np.random.default_rng(0), size=3)

    def test_unbounded_envelope(self):
        # intensity 2 beyond x = 1: the tilted duration law is not integrable at large t
        law = PoissonEpoch([(0.0, [0.0]), (1.0, [2.0])])
        t = 0.45
        h = solve_h(law, t)
        law.sample_tilted(t, h, np.random.default_rng(0), size=10)
        law.f = PiecewisePolynomial([(0.0, [0.0]), (1.0, [2.0])])
        law._check_tilt = lambda *a: None
        with pytest.raises(UnsupportedTiltError):
            law.sample_tilted(0.8, 0.0, np.random.default_rng(0), size=10)


class TestCapabilities:
    def test_registry(self):
        assert set(MODELS) == {"poisson-epoch", "poisson-epoch-unit", "threshold", "gauss-sign", "independent-product"}
        assert [law.kind for law in default_instances()] == list(MODELS)

    def test_flags(self, unit, threshold, gauss, indep):
        assert gauss.capabilities()["x_nonneg"] is False
        assert unit.x_nonneg and threshold.x_nonneg and indep.x_nonneg
        assert unit.y_span == 1.0 and threshold.y_span == 1.0
        assert gauss.y_span == 1.0
        assert indep.y_span is None
        assert unit.capabilities()["closed_form_rate"] is True
        assert gauss.capabilities()["closed_form_rate"] is False
        assert threshold.y_mgf_finite and gauss.y_mgf_finite
        assert not unit.y_mgf_finite

    def test_tail_exponents(self, unit, gauss, indep):
        assert unit.beta_x == -1.0
        assert gauss.beta_x == -math.inf
        assert IndependentProduct(Gamma(2.0, 3.0)).beta_x == -3.0

    def test_gauss_sign_t_range(self):
        law = GaussSign(0.5)
        lo, hi = law.t_range
        assert lo == 0.0
        assert hi == pytest.approx(math.log(stats.norm.cdf(0.5) / stats.norm.cdf(-0.5)))

    def test_gauss_sign_rate_negative(self, gauss):
        hi = gauss.t_range[1]
        for t in np.linspace(0.05, 0.95, 7) * hi:
            assert solve_h(gauss, t) < 0

    @pytest.mark.parametrize("bad", [lambda: Threshold(0.0), lambda: GaussSign(-1.0)])
    def test_invalid_parameters(self, bad):
        with pytest.raises(ValueError):
            bad()


class TestKernelMeasure:
    def test_unit_mass_at_root(self, any_law):
        t = INTERIOR_T[any_law.kind]
        k = KernelMeasure(any_law, t, -solve_h(any_law, t))
        assert k.total_mass() == pytest.approx(1.0, abs=1e-9)
        assert k.mean() > 0

    def test_cdf_sf_complement(self, any_law):
        t = INTERIOR_T[any_law.kind]
        k = KernelMeasure(any_law, t, -0.1)
        xs = np.linspace(-3, 6, 19)
        np.testing.assert_allclose(k.cdf(xs) + k.sf(xs), k.total_mass(), rtol=1e-9)
        assert np.all(np.diff(k.cdf(xs)) >= -1e-15)

    def test_cdf_matches_density(self, any_law):
        t = INTERIOR_T[any_law.kind]
        k = KernelMeasure(any_law, t, -0.2)
        a, b = 0.3, 2.5
        ref = integrate.quad(k.pdf, a, b, points=list(any_law.breakpoints) + [1.0, 2.0], epsrel=1e-12)[0]
        assert k.cdf(b) - k.cdf(a) == pytest.approx(ref, rel=1e-8)


class TestPiecewisePolynomial:
    @settings(max_examples=40, deadline=None)
    @given(
        c0=st.floats(0.0, 3.0),
        c1=st.floats(0.0, 2.0),
        c2=st.floats(0.0, 1.0),
        cut=st.floats(0.2, 4.0),
        tail=st.floats(0.05, 3.0),
        x=st.floats(0.0, 10.0),
    )
    def test_integral_matches_quadrature(self, c0, c1, c2, cut, tail, x):
        f = PiecewisePolynomial([(0.0, [c0, c1, c2]), (cut, [tail])])
        ref = integrate.quad(f, 0, x, points=[cut] if cut < x else None, epsabs=1e-13, epsrel=1e-12)[0]
        assert f.integral(x) == pytest.approx(ref, rel=1e-9, abs=1e-11)

    def test_excess_range(self):
        f = PiecewisePolynomial([(0.0, [0.5, 0.5]), (2.0, [1.5])])
        xs = np.linspace(0, 20, 20001)
        excess = f.integral(xs) - f.nu * xs
        lo, hi = f.excess_range()
        assert lo == pytest.approx(excess.min(), abs=1e-6)
        assert hi == pytest.approx(excess.max(), abs=1e-6)

    @pytest.mark.parametrize(
        "pieces",
        [[], [(1.0, [1.0])], [(0.0, [1.0, 1.0])], [(0.0, [1.0, -1.0]), (3.0, [1.0])], [(0.0, [0.0])]],
    )
    def test_invalid(self, pieces):
        with pytest.raises(ValueError):
            PiecewisePolynomial(pieces)


class TestMarginals:
    @pytest.mark.parametrize("text,cls", [("exp:rate=2", Exponential), ("gamma:shape=2,rate=1", Gamma)])
    def test_parse(self, text, cls):
        law = parse_marginal(text)
        assert isinstance(law, cls)
        assert parse_marginal(law.spec()) == law

    @pytest.mark.parametrize("text", ["beta:a=1", "gamma:shape", "exp:scale=2"])
    def test_parse_errors(self, text):
        with pytest.raises(ValueError):
            parse_marginal(text)

    @pytest.mark.parametrize("s", [-1.0, 0.0, 0.4])
    @pytest.mark.parametrize("i", [0, 1, 2])
    def test_gamma_tilted_moments(self, s, i):
        g = Gamma(2.5, 1.5)
        ref = integrate.quad(lambda x: x**i * math.exp(s * x) * g.pdf(x), 0, 200.0, limit=200)[0]
        assert g.moment_tilted(s, i) == pytest.approx(ref, rel=1e-9)
