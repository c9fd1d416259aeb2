"""Variational solver tests: constant-weight reduction to sin, Cauchy
multipliers, constraint satisfaction, and local optimality."""

import json

import numpy as np
import pytest

from cyckde import densities
from cyckde.kernels import CyclicKernel, check_constraints, weighted_square_norm, builtin_kernel
from cyckde.lattice import LatticeSumSpec
from cyckde.solver import (
    PoleError, SingularSystemError, export_solution, objective_gap, solve_multipliers,
    solve_optimal_kernel,
)
from test_kernels import perturbation

TWO_PI = 2 * np.pi
FAST_SPEC = LatticeSumSpec(max_terms=4_000, tail_tol=1e-8)


@pytest.fixture(scope="module")
def flat_solution():
    return solve_optimal_kernel(densities.flat_weight())


@pytest.fixture(scope="module")
def cauchy_solution():
    return solve_optimal_kernel(densities.cauchy(), FAST_SPEC)


@pytest.fixture(scope="module")
def gaussian_solution():
    return solve_optimal_kernel(densities.gaussian(), FAST_SPEC)


class TestConstantWeight:
    def test_recovers_sin_kernel(self, flat_solution):
        sol = flat_solution
        assert abs(sol.lambda1) < 1e-6
        target = np.sin(sol.grid) / np.pi
        assert np.max(np.abs(sol.kernel.phi(sol.grid) - target)) < 1e-6

    def test_lambda2_is_line_normalization(self, flat_solution):
        # with the plain lattice weight, alpha/beta reduces to sin, and the
        # unit line integral forces the 1/pi amplitude
        assert flat_solution.lambda2 == pytest.approx(1 / np.pi, rel=1e-10)

    def test_objective_matches_sin_square_norm(self, flat_solution):
        assert flat_solution.objective_value == pytest.approx(1 / np.pi, rel=1e-9)

    def test_fourier_gap_vanishes(self, flat_solution):
        gap = objective_gap(densities.flat_weight(), builtin_kernel("fourier"), flat_solution)
        assert abs(gap) < 1e-9


class TestCauchyWeight:
    def test_multipliers(self, cauchy_solution):
        assert abs(cauchy_solution.lambda1) < 1e-6
        assert 0.113 <= cauchy_solution.lambda2 <= 0.123

    def test_kernel_passes_constraints(self, cauchy_solution):
        rep = check_constraints(cauchy_solution.kernel)
        assert rep.passed
        assert rep.zero_mean_residual < 1e-6
        assert rep.line_integral_residual < 1e-6

    def test_matches_closed_form_builtin(self, cauchy_solution):
        # the builtin uses the closed-form weighted sum; the solver used the
        # truncated series, so agreement validates both paths
        k_closed = builtin_kernel("cauchy_optimal")
        xs = cauchy_solution.grid[::37]
        assert np.max(np.abs(cauchy_solution.kernel.phi(xs) - k_closed.phi(xs))) < 1e-6

    def test_beats_sin_baseline(self, cauchy_solution):
        w_four = weighted_square_norm(builtin_kernel("fourier"), densities.cauchy(), FAST_SPEC)
        assert cauchy_solution.objective_value <= w_four + 1e-12
        gap = objective_gap(densities.cauchy(), builtin_kernel("fourier"), cauchy_solution,
                            FAST_SPEC)
        assert gap > 0.019  # recorded: about 0.0575 - 0.0375

    def test_self_gap_is_zero(self, cauchy_solution):
        gap = objective_gap(densities.cauchy(), cauchy_solution.kernel, cauchy_solution, FAST_SPEC)
        assert abs(gap) < 1e-9

    @pytest.mark.parametrize("seed", range(20))
    def test_local_optimality_under_perturbations(self, cauchy_solution, seed):
        # quadratic fit of the objective along a constraint-preserving
        # direction must put the vertex at t = 0
        eta, slope = perturbation(seed)
        base = cauchy_solution.kernel
        m = densities.cauchy()

        def objective(t):
            pert = CyclicKernel(name="pert", psi0=base.psi0 + t * slope,
                                fundamental=lambda x: base.fundamental(x) + t * eta(x))
            return weighted_square_norm(pert, m, LatticeSumSpec(2_000, 1e-7))

        h = 0.05
        w_minus, w0, w_plus = objective(-h), cauchy_solution.objective_value, objective(h)
        curvature = (w_plus + w_minus - 2 * w0) / h**2
        vertex = -h * (w_plus - w_minus) / (2 * (w_plus + w_minus - 2 * w0))
        assert curvature > 0
        assert abs(vertex) < 1e-6


class TestGaussianWeight:
    def test_solves_with_constraints(self, gaussian_solution):
        rep = check_constraints(gaussian_solution.kernel)
        assert rep.passed

    def test_even_weight_kills_lambda1(self, gaussian_solution):
        assert abs(gaussian_solution.lambda1) < 1e-6

    def test_optimal_against_baselines(self, gaussian_solution):
        m = densities.gaussian()
        for name in ("fourier", "cauchy_optimal"):
            gap = objective_gap(m, builtin_kernel(name), gaussian_solution, FAST_SPEC)
            assert gap > -1e-9


class TestErrorsAndExport:
    def test_pole_error_for_weight_vanishing_at_origin(self):
        notch = densities.Density(
            name="notch",
            pdf=lambda x: np.where(np.abs(x) < 1.0, 0.0, 0.25 / np.maximum(x**2, 1.0)),
            sup=0.25, tail_sup=lambda T: 0.25 / max(T, 1.0) ** 2,
            tail_kind="power", tail_params=(0.25, 2.0, 1.0))
        with pytest.raises(PoleError):
            solve_optimal_kernel(notch, FAST_SPEC)

    def test_singular_system_detection(self):
        with pytest.raises(SingularSystemError):
            solve_multipliers(lambda x: np.full_like(np.asarray(x), 1e30))

    def test_export_files(self, tmp_path, cauchy_solution):
        prefix = str(tmp_path / "cauchy_opt")
        csv_path, json_path = export_solution(cauchy_solution, prefix)
        rows = open(csv_path).read().splitlines()
        assert rows[0] == "x,phi,beta_m"
        assert len(rows) == 4097
        sidecar = json.loads(open(json_path).read())
        assert set(sidecar) == {"lambda1", "lambda2", "objective_value", "m_name"}
        assert sidecar["m_name"] == "cauchy"
        assert sidecar["lambda2"] == pytest.approx(cauchy_solution.lambda2)
        # round-trip precision of the tabulated values
        x0, phi0, bm0 = map(float, rows[1].split(","))
        assert x0 == cauchy_solution.grid[0]
        assert phi0 == cauchy_solution.kernel.phi(cauchy_solution.grid[0])
        assert bm0 == cauchy_solution.beta_m_grid[0]
