"""Lattice-sum oracle tests: truncated series vs closed forms."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from cyckde import densities, lattice
from cyckde.lattice import (
    CAUCHY_CLOSED_SCALE, DomainError, LatticeSumSpec, ToleranceError,
    alpha_closed, alpha_series, beta_cauchy_closed, beta_closed, beta_series, beta_weighted,
)

TWO_PI = 2 * np.pi
GRID = np.linspace(0.01, TWO_PI - 0.01, 200)


def brute_pair_sum(term, K):
    # plain symmetric pairing with no tail estimate; reference for small cases
    k = np.arange(1, K + 1, dtype=float)
    return term(0.0) + float(np.sum(term(k) + term(-k)))


class TestAlpha:
    def test_pairwise_cancellation_at_pi(self):
        assert abs(alpha_series(np.pi, LatticeSumSpec(1000, 1e-6))) < 1e-12

    def test_closed_at_pi_and_half_pi(self):
        assert alpha_closed(np.pi) == pytest.approx(0.0, abs=1e-15)
        assert alpha_closed(np.pi / 2) == pytest.approx(0.5, abs=1e-12)

    def test_series_matches_closed_on_grid(self):
        spec = LatticeSumSpec(max_terms=100_000, tail_tol=1e-8)
        err = max(abs(alpha_series(x, spec) - alpha_closed(x)) for x in GRID)
        assert err < 1e-7

    def test_series_is_oracle_for_half_pi(self):
        spec = LatticeSumSpec(max_terms=1_000_000, tail_tol=1e-9)
        assert alpha_series(np.pi / 2, spec) == pytest.approx(0.5, abs=1e-5)

    def test_pole_growth_near_zero(self):
        x = 1e-3
        assert alpha_series(x, LatticeSumSpec(10_000, 1e-6)) * x == pytest.approx(1.0, abs=1e-4)

    def test_domain_errors(self):
        for bad in (0.0, TWO_PI, -1.0, 7.0, np.nan):
            with pytest.raises(DomainError):
                alpha_closed(bad)
            with pytest.raises(DomainError):
                alpha_series(bad)

    def test_tail_bound_certification(self):
        # the certified residual must really bound the truncation error
        spec = LatticeSumSpec(max_terms=50, tail_tol=1e-6)
        for x in (0.3, 2.0, 5.9):
            assert abs(alpha_series(x, spec) - alpha_closed(x)) < 4e-10
        with pytest.raises(ToleranceError):
            alpha_series(1.0, LatticeSumSpec(max_terms=5, tail_tol=1e-14))

    def test_antisymmetry_about_pi(self):
        for x in GRID[:50]:
            assert alpha_closed(TWO_PI - x) == pytest.approx(-alpha_closed(x), abs=1e-10)


class TestBeta:
    def test_value_at_pi_against_brute_series(self):
        brute = brute_pair_sum(lambda k: 1.0 / (np.pi + TWO_PI * k) ** 2, 100_000)
        assert brute == pytest.approx(0.25, abs=1e-5)
        assert beta_closed(np.pi) == pytest.approx(brute, abs=1e-5)
        assert beta_series(np.pi, LatticeSumSpec(100_000, 1e-8)) == pytest.approx(0.25, abs=1e-5)

    def test_series_matches_closed_on_grid(self):
        spec = LatticeSumSpec(max_terms=100_000, tail_tol=1e-8)
        err = max(abs(beta_series(x, spec) - beta_closed(x)) for x in GRID)
        assert err < 1e-7

    def test_positive_and_dominates_central_term(self):
        spec = LatticeSumSpec(10_000, 1e-6)
        for x in GRID[::10]:
            val = beta_series(x, spec)
            assert val > 1.0 / x**2
            assert beta_closed(x) > 0.0

    @given(st.floats(min_value=0.01, max_value=TWO_PI - 0.01))
    @settings(max_examples=40, deadline=None)
    def test_symmetry(self, x):
        # relabeling k -> -(k+1) maps x to 2*pi - x; equality holds to float
        # precision, which near the poles means relative precision
        spec = LatticeSumSpec(5_000, 1e-5)
        assert beta_series(x, spec) == pytest.approx(
            beta_series(TWO_PI - x, spec), rel=1e-11, abs=1e-12)

    def test_is_negative_derivative_of_alpha(self):
        h = 1e-4
        for x in (1.0, 2.5, 4.0):
            fd = -(alpha_closed(x + h) - alpha_closed(x - h)) / (2 * h)
            assert fd == pytest.approx(beta_closed(x), abs=1e-6)


class TestBetaWeighted:
    def test_constant_weight_factors_out(self):
        m = densities.uniform(1e7)
        spec = LatticeSumSpec(max_terms=5_000, tail_tol=1e-6)
        for x in (0.7, np.pi, 5.0):
            expect = m.sup * beta_series(x, spec)
            assert beta_weighted(x, m, spec) == pytest.approx(expect, rel=1e-10)

    def test_cauchy_matches_closed_form(self):
        spec = LatticeSumSpec(max_terms=10_000, tail_tol=1e-9)
        got = beta_weighted(1.0, densities.cauchy(), spec)
        assert got == pytest.approx(CAUCHY_CLOSED_SCALE * beta_cauchy_closed(1.0), abs=1e-8)

    def test_gaussian_reduces_to_two_terms(self):
        m = densities.gaussian()
        spec = LatticeSumSpec(max_terms=10_000, tail_tol=1e-9)
        for x in (0.5, 2.0, np.pi, 5.5):
            two = float(m.pdf(x) / x**2 + m.pdf(x - TWO_PI) / (x - TWO_PI) ** 2)
            assert beta_weighted(x, m, spec) == pytest.approx(two, abs=1e-10)

    def test_vectorized_matches_scalar(self):
        m = densities.cauchy()
        spec = LatticeSumSpec(2_000, 1e-6)
        xs = np.array([0.5, 1.5, 3.0])
        vec = beta_weighted(xs, m, spec)
        assert vec == pytest.approx([beta_weighted(float(x), m, spec) for x in xs], rel=1e-14)

    def test_tail_certification_failure(self):
        with pytest.raises(ToleranceError):
            beta_weighted(1.0, densities.cauchy(), LatticeSumSpec(max_terms=3, tail_tol=1e-12))


class TestBetaCauchyClosed:
    def test_value_at_pi(self):
        # closed form reduces to 1/4 - tanh(1/2)/2 at the symmetry point
        expect = 0.25 - np.tanh(0.5) / 2
        assert beta_cauchy_closed(np.pi) == pytest.approx(expect, abs=1e-14)
        assert expect == pytest.approx(0.0189414213699951, abs=1e-13)
        # confirmed against the weighted series with the Cauchy density
        spec = LatticeSumSpec(10_000, 1e-9)
        weighted = beta_weighted(np.pi, densities.cauchy(), spec)
        assert CAUCHY_CLOSED_SCALE * beta_cauchy_closed(np.pi) == pytest.approx(weighted, abs=1e-10)

    def test_pole_coefficient_at_origin(self):
        x = 1e-3
        assert beta_cauchy_closed(x) * x**2 == pytest.approx(1.0, abs=1e-3)

    def test_symmetry(self):
        for x in GRID[::20]:
            assert beta_cauchy_closed(x) == pytest.approx(
                beta_cauchy_closed(TWO_PI - x), rel=1e-12, abs=1e-12)

    def test_global_constant_is_recorded_value(self):
        # one multiplicative constant across the whole grid, equal to 1/pi
        spec = LatticeSumSpec(10_000, 1e-9)
        ratios = np.array([
            beta_weighted(float(x), densities.cauchy(), spec) / beta_cauchy_closed(float(x))
            for x in GRID[::5]
        ])
        assert np.max(np.abs(ratios / ratios[0] - 1.0)) < 1e-6
        assert ratios[0] == pytest.approx(CAUCHY_CLOSED_SCALE, rel=1e-9)
        assert CAUCHY_CLOSED_SCALE == pytest.approx(1.0 / np.pi, rel=0, abs=0)

    def test_strictly_positive(self):
        assert all(beta_cauchy_closed(float(x)) > 0 for x in GRID)


class TestSpecValidation:
    def test_lattice_spec_invariants(self):
        with pytest.raises(ValueError):
            LatticeSumSpec(max_terms=0)
        with pytest.raises(ValueError):
            LatticeSumSpec(max_terms=10, tail_tol=0.0)

    def test_weighted_requires_univariate(self):
        from cyckde.experiments import banana_density
        with pytest.raises(ValueError):
            beta_weighted(1.0, banana_density())


class TestDensities:
    @pytest.mark.parametrize("make", [densities.cauchy, densities.gaussian, densities.laplace,
                                      lambda: densities.scale_mixture(4.0)])
    def test_normalization(self, make):
        m = make()
        val, _ = quad(lambda x: float(m.pdf(np.asarray(x))), -np.inf, np.inf, limit=400)
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_banana_normalization(self):
        from scipy.integrate import dblquad
        from cyckde.experiments import banana_density
        m = banana_density(2.0, 0.5)
        val, _ = dblquad(lambda x2, x1: float(m.pdf(np.array([x1, x2]))),
                         -14.0, 14.0,
                         lambda x1: 0.5 * (x1**2 - 4.0) - 9.0,
                         lambda x1: 0.5 * (x1**2 - 4.0) + 9.0,
                         epsabs=1e-9)
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_nonnegative(self):
        xs = np.linspace(-30, 30, 301)
        for make in (densities.cauchy, densities.gaussian, densities.laplace):
            assert np.all(make().pdf(xs) >= 0)

    def test_tail_sup_is_a_bound(self):
        for make in (densities.cauchy, densities.gaussian, densities.laplace):
            m = make()
            for T in (1.0, 3.0, 10.0):
                xs = np.linspace(T, T + 50, 400)
                assert np.max(m.pdf(xs)) <= m.tail_sup(T) * (1 + 1e-12)

    def test_scale_mixture_value_at_zero(self):
        m = densities.scale_mixture(4.0)
        assert float(m.pdf(np.asarray(0.0))) == pytest.approx(4.0 / np.sqrt(TWO_PI), rel=1e-10)
