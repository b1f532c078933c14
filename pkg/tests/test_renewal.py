import math

import numpy as np
import pytest
from scipy import stats

from conftest import INTERIOR_T
from renewal_ldp.asymptotics import prefactor
from renewal_ldp.errors import ConfigurationError, DomainError, RenewalDivergenceError
from renewal_ldp.marginals import Exponential, Gamma
from renewal_ldp.models import KernelMeasure
from renewal_ldp.rate import solve_h
from renewal_ldp.renewal import (
    Grid,
    RenewalProfile,
    decay_fit,
    empirical_renewal_density,
    growth_bound,
    mgf_profile,
    renewal_density_oracle,
    solve_renewal,
    truncation_point,
)
from renewal_ldp.simulate import simulate_paths


class ShiftedSupport:
    """Wrap a law on [0, inf) so that it advertises a negative lower bound."""

    def __init__(self, law):
        self.law = law

    def cdf(self, x):
        return self.law.cdf(x)

    def sf(self, x):
        return self.law.sf(x)

    def mean(self):
        return self.law.mean()

    def support(self):
        return (-1.0, math.inf)


class NormalLaw:
    def __init__(self, mu, sigma):
        self.d = stats.norm(mu, sigma)
        self.mu = mu

    def cdf(self, x):
        return self.d.cdf(x)

    def sf(self, x):
        return self.d.sf(x)

    def mean(self):
        return self.mu

    def support(self):
        return (-math.inf, math.inf)


class TestGrid:
    def test_points(self):
        g = Grid(10.0, 0.01)
        assert g.n_points == 1001
        assert g.x[-1] == pytest.approx(10.0)

    @pytest.mark.parametrize("kw", [{"x_max": 1.0, "step": 0.0}, {"x_max": 0.0, "step": 0.1}])
    def test_invalid(self, kw):
        with pytest.raises(ConfigurationError):
            Grid(**kw)


class TestSolveRenewal:
    def test_poisson_renewal_function(self):
        p = Exponential(1.0)
        prof = solve_renewal(lambda x: np.exp(-x), p, Grid(20.0, 0.01))
        np.testing.assert_allclose(prof.values, 1.0, atol=1e-4)

    def test_zero_forcing(self):
        prof = solve_renewal(lambda x: 0.0 * x, Gamma(2.0, 1.0), Grid(10.0, 0.01))
        assert np.all(prof.values == 0.0)

    def test_key_renewal_limit(self):
        prof = solve_renewal(lambda x: np.exp(-2 * x), Exponential(1.0), Grid(40.0, 0.01))
        assert prof.limit_estimate == pytest.approx(0.5, abs=1e-4)

    def test_key_renewal_gamma(self):
        # mean 2, integral of e^{-x} is 1
        prof = solve_renewal(lambda x: np.exp(-x), Gamma(2.0, 1.0), Grid(40.0, 0.01))
        assert prof.limit_estimate == pytest.approx(0.5, abs=1e-4)
        assert prof.decay_rate_estimate == pytest.approx(2.0, rel=0.05)

    def test_residual_one_sided(self):
        prof = solve_renewal(lambda x: np.exp(-2 * x), Gamma(2.0, 1.0), Grid(30.0, 0.02))
        assert prof.residual <= 1e-10

    def test_array_forcing(self):
        g = Grid(5.0, 0.01)
        a = solve_renewal(np.exp(-g.x), Exponential(1.0), g)
        b = solve_renewal(lambda x: np.exp(-x), Exponential(1.0), g)
        np.testing.assert_array_equal(a.values, b.values)
        with pytest.raises(ConfigurationError):
            solve_renewal(np.ones(3), Exponential(1.0), g)

    def test_step_limit(self):
        with pytest.raises(ConfigurationError):
            solve_renewal(lambda x: np.exp(-x), Exponential(1.0), Grid(5.0, 0.1))

    def test_two_sided_reduces_to_forward(self):
        g = Grid(15.0, 0.01)
        z = lambda x: np.exp(-2 * x)  # noqa: E731
        fwd = solve_renewal(z, Gamma(2.0, 1.0), g)
        gs = solve_renewal(z, ShiftedSupport(Gamma(2.0, 1.0)), g)
        assert gs.form == "gauss-seidel"
        np.testing.assert_allclose(gs.values, fwd.values, rtol=1e-9, atol=1e-12)

    def test_two_sided_truncation_defect(self):
        p = NormalLaw(1.0, 1.0)
        g = Grid(30.0, 0.01)
        z = lambda x: np.exp(-x)  # noqa: E731
        L = truncation_point(p)
        a = solve_renewal(z, p, g, x_neg=L)
        b = solve_renewal(z, p, g, x_neg=2 * L)
        assert abs(a.limit_estimate - b.limit_estimate) < 1e-6
        assert a.residual < 1e-10

    def test_nonpositive_mean(self):
        with pytest.raises(DomainError):
            solve_renewal(lambda x: np.exp(-x), NormalLaw(-0.5, 1.0), Grid(5.0, 0.01))

    def test_divergent_sweeps(self):
        # more than unit mass on backward lags: the sweeps cannot contract
        class Heavy(NormalLaw):
            def cdf(self, x):
                return 3.0 * self.d.cdf(x)

            def sf(self, x):
                return 3.0 * self.d.sf(x)

        with pytest.raises(RenewalDivergenceError):
            solve_renewal(lambda x: np.exp(-x), Heavy(0.2, 1.0), Grid(10.0, 0.01), max_sweeps=3000)


class TestMgfProfile:
    @pytest.mark.parametrize("t", [0.5, 1.0])
    def test_unit_prefactor_limit(self, unit, t):
        prof = mgf_profile(unit, t, Grid(60.0, 0.01))
        assert prof.limit_estimate == pytest.approx(math.exp(-t), abs=1e-3)

    def test_empty_sum_at_origin(self, unit, threshold, indep):
        for law in (unit, threshold, indep):
            prof = mgf_profile(law, 0.4, Grid(10.0, 0.01))
            assert prof.unnormalized[0] == pytest.approx(1.0, abs=1e-12)

    def test_log_growth(self, unit):
        t = 0.5
        h = math.expm1(t)
        prof = mgf_profile(unit, t, Grid(60.0, 0.01))
        lam = prof.log_unnormalized()[-1] / 60.0
        assert abs(lam - h) <= t / 60.0 + 1e-3

    def test_raw_and_normalized_agree(self, threshold):
        g = Grid(15.0, 0.01)
        raw = mgf_profile(threshold, 1.0, g, form="raw")
        norm = mgf_profile(threshold, 1.0, g, form="normalized")
        assert raw.form.startswith("raw") and norm.form.startswith("normalized")
        np.testing.assert_allclose(raw.values, norm.unnormalized, rtol=1e-4)

    def test_raw_overflow_falls_back(self, unit):
        with pytest.warns(RuntimeWarning, match="overflowed"):
            prof = mgf_profile(unit, 1.0, Grid(600.0, 0.05), form="raw")
        assert prof.form.startswith("normalized")

    def test_grid_refinement_second_order(self, unit):
        vals = [mgf_profile(unit, 0.5, Grid(20.0, s)).values[-1] for s in (0.04, 0.02, 0.01)]
        d1, d2 = abs(vals[0] - vals[1]), abs(vals[1] - vals[2])
        assert d2 <= d1 / 3.0

    def test_positive(self, any_law):
        t = INTERIOR_T[any_law.kind]
        prof = mgf_profile(any_law, t, Grid(20.0, 0.01))
        assert np.all(prof.values > 0)

    def test_growth_bound(self, unit):
        t, eps = 0.5, 0.1
        h = math.expm1(t)
        prof = mgf_profile(unit, t, Grid(40.0, 0.01), h=h)
        K = growth_bound(unit, t, h, eps)
        assert np.all(prof.log_unnormalized() <= math.log(K) + (h + eps) * prof.x)

    def test_growth_bound_needs_contraction(self, unit):
        with pytest.raises(DomainError):
            growth_bound(unit, 0.5, math.expm1(0.5), -0.2)

    def test_first_passage_limit(self, threshold):
        t = 1.0
        h = solve_h(threshold, t)
        prof = mgf_profile(threshold, t, Grid(40.0, 0.01), first_passage=True, h=h)
        assert prof.limit_estimate == pytest.approx(prefactor(threshold, t, h, "first_passage").phi, rel=1e-4)

    def test_two_sided_against_simulation(self, gauss):
        """M_x(t) exp(-h x) for Gaussian durations against tilted sampling."""
        t = 0.5
        h = solve_h(gauss, t)
        prof = mgf_profile(gauss, t, Grid(20.0, 0.01), h=h)
        for x in (0.0, 3.0):
            paths = simulate_paths(gauss, x, 100_000, 3, (t, h))
            # E[e^{tW}] = E_t[e^{tW} * LR] with LR = exp(h S_T - t W_bar)
            v = np.exp(t * paths["w"] + paths["log_weight"] - h * x)
            m, se = v.mean(), v.std(ddof=1) / math.sqrt(v.size)
            assert abs(prof.at(x) - m) <= 4 * se

    def test_two_sided_truncation(self, gauss):
        t = 0.5
        h = solve_h(gauss, t)
        k = KernelMeasure(gauss, t, -h)
        z = lambda x: np.exp(-h * x) * gauss.tail_x(x)  # noqa: E731
        L = truncation_point(k)
        a = solve_renewal(z, k, Grid(30.0, 0.01), x_neg=L)
        b = solve_renewal(z, k, Grid(30.0, 0.01), x_neg=2 * L)
        assert abs(a.limit_estimate - b.limit_estimate) < 1e-6

    def test_unknown_form(self, unit):
        with pytest.raises(ConfigurationError):
            mgf_profile(unit, 0.5, Grid(5.0, 0.01), form="other")


class TestProfile:
    def test_csv_and_helpers(self, unit, tmp_path):
        prof = mgf_profile(unit, 0.5, Grid(2.0, 0.5 / 20))
        text = prof.to_csv()
        lines = text.strip().splitlines()
        assert lines[0] == "x,value,normalized_value"
        assert len(lines) == prof.grid.n_points + 1
        prof.to_csv(tmp_path / "p.csv")
        assert (tmp_path / "p.csv").read_text() == text
        np.testing.assert_allclose(prof.normalized_by(prof.scale_rate), prof.values)
        assert prof.at(0.0) == prof.values[0]

    def test_rejects_nonfinite(self):
        with pytest.raises(RenewalDivergenceError):
            RenewalProfile(Grid(1.0, 0.5), np.array([1.0, np.inf, 2.0]))

    def test_decay_fit(self):
        x = np.linspace(0, 20, 401)
        vals = 0.7 + 0.3 * np.exp(-1.3 * x)
        assert decay_fit(x, vals, 0.7) == pytest.approx(1.3, rel=1e-6)


class TestRenewalDensity:
    def test_exponential_flat(self):
        diag = empirical_renewal_density(Exponential(1.0), [1, 2, 4, 8], 1.0, 100_000, 21)
        assert np.all(np.abs(diag.z_scores()) <= 3)
        assert diag.target == 1.0
        assert np.all(diag.stderrs > 0)

    def test_gamma_oracle(self, gamma2):
        centers = np.array([2.0, 8.0, 10.0])
        width = 1.0
        diag = empirical_renewal_density(gamma2, centers, width, 100_000, 22)
        oracle = renewal_density_oracle(gamma2, centers - width / 2, centers + width / 2)
        assert np.all(np.abs(diag.z_scores(oracle)) <= 3)
        assert abs(diag.z_scores()[2]) <= 3

    def test_oracle_matches_closed_form(self, gamma2):
        lo, hi = np.array([3.0]), np.array([3.0 + 1e-6])
        assert renewal_density_oracle(gamma2, lo, hi)[0] == pytest.approx(0.5 * (1 - math.exp(-6.0)), rel=1e-6)
        assert renewal_density_oracle(Gamma(3.0, 1.0), lo, hi) is None

    def test_worker_invariance(self, gamma2):
        a = empirical_renewal_density(gamma2, [2, 5], 0.5, 20_000, 5, workers=1)
        b = empirical_renewal_density(gamma2, [2, 5], 0.5, 20_000, 5, workers=2)
        np.testing.assert_array_equal(a.q_estimates, b.q_estimates)
        np.testing.assert_array_equal(a.stderrs, b.stderrs)

    @pytest.mark.parametrize(
        "kw",
        [{"n": 100}, {"width": 0.0}],
    )
    def test_invalid(self, kw):
        args = {"p": Exponential(1.0), "windows": [1.0], "width": 1.0, "n": 10_000, "seed": 1}
        args.update(kw)
        with pytest.raises(ConfigurationError):
            empirical_renewal_density(**args)

    def test_negative_increments(self):
        with pytest.raises(DomainError):
            empirical_renewal_density(NormalLaw(1.0, 1.0), [1.0], 1.0, 10_000, 1)
