"""Constrained variational solver for weight-optimal cyclic kernels.

For a weight density m the minimizer of the weighted squared ratio functional
subject to the two kernel constraints has the form

    phi(x) = (lambda1 + lambda2 * alpha(x)) / beta_m(x),

so both constraints are linear in the multipliers and reduce to a 2x2 system
with entries integral(1/beta_m), integral(alpha/beta_m), integral(alpha^2/beta_m)
against the right-hand side (0, 1).

``beta_m`` here is the weighted lattice sum divided by m(0).  That scaling is
absorbed by the multipliers and fixes the convention so that lambda2 equals
the coincidence slope psi0 of the solved kernel (for the Cauchy weight this
reproduces lambda2 = 0.118).  Objective values are always reported in the
unscaled functional, i.e. via ``weighted_square_norm`` with the density itself.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from . import kernels, lattice
from .densities import Density
from .quadrature import DEFAULT_QUAD, QuadSpec, integrate_fundamental

TWO_PI = 2.0 * np.pi

GRID_DELTA = 1e-3
GRID_POINTS = 4096


class SingularSystemError(ArithmeticError):
    """The 2x2 constraint system is numerically singular (degenerate weight)."""


class PoleError(ArithmeticError):
    """The weight vanishes where the lattice sum needs it strictly positive."""


@dataclass(frozen=True)
class OptimalKernelSolution:
    lambda1: float
    lambda2: float
    grid: np.ndarray
    beta_m_grid: np.ndarray
    kernel: kernels.CyclicKernel
    objective_value: float
    density_name: str


def solve_multipliers(beta_fn, quad_spec: QuadSpec = DEFAULT_QUAD) -> tuple[float, float]:
    """Solve the 2x2 linear system for a vectorized positive weight beta_fn."""
    alpha = lattice.alpha_closed
    m11 = integrate_fundamental(lambda x: 1.0 / beta_fn(x), quad_spec)
    m12 = integrate_fundamental(lambda x: alpha(x) / beta_fn(x), quad_spec)
    m22 = integrate_fundamental(lambda x: alpha(x) ** 2 / beta_fn(x), quad_spec)
    det = m11 * m22 - m12 * m12
    if abs(det) < 1e-12:
        raise SingularSystemError(f"constraint system determinant {det:.3e} below 1e-12")
    # [[m11, m12], [m12, m22]] @ (a, b) = (0, 1)
    a = -m12 / det
    b = m11 / det
    return a, b


def _solver_weight(m: Density, spec: lattice.LatticeSumSpec):
    """The m(0)-normalized weight callable used in the variational problem."""
    if m.is_flat:
        return lattice.beta_closed
    m0 = float(m.pdf(np.asarray(0.0)))
    if not m0 > 1e-12:
        raise PoleError(f"density {m.name} vanishes at 0; multiplier convention undefined")

    def beta_fn(x):
        return lattice.beta_weighted(x, m, spec) / m0

    return beta_fn


def solve_optimal_kernel(m: Density,
                         spec: lattice.LatticeSumSpec = lattice.DEFAULT_WEIGHTED_SPEC,
                         quad_spec: QuadSpec = DEFAULT_QUAD) -> OptimalKernelSolution:
    """Find the weight-optimal kernel for density m and tabulate it.

    The returned kernel satisfies both constraints (checked downstream via
    ``check_constraints``) and minimizes the m-weighted squared ratio
    functional; ``objective_value`` records that functional's value.
    """
    beta_fn = _solver_weight(m, spec)
    grid = np.linspace(GRID_DELTA, TWO_PI - GRID_DELTA, GRID_POINTS)
    beta_grid = beta_fn(grid)
    if np.any(~np.isfinite(beta_grid)) or np.min(beta_grid) <= 1e-12:
        raise PoleError(f"weighted lattice sum for {m.name} vanishes on the grid")

    lam1, lam2 = solve_multipliers(beta_fn, quad_spec)

    xs = np.linspace(0.0, TWO_PI, GRID_POINTS + 1)
    phis = np.zeros_like(xs)
    inner = slice(1, -1)
    phis[inner] = (lam1 + lam2 * lattice.alpha_closed(xs[inner])) / beta_fn(xs[inner])
    kernel = kernels.tabulated_kernel(
        xs[:-1], phis[:-1],
        name=f"optimal_{m.name}",
        psi0=lam2,
        meta={"lambda1": lam1, "lambda2": lam2, "weight": m.name},
    )
    objective = kernels.weighted_square_norm(kernel, m, spec, quad_spec)
    return OptimalKernelSolution(
        lambda1=lam1,
        lambda2=lam2,
        grid=grid,
        beta_m_grid=beta_grid,
        kernel=kernel,
        objective_value=objective,
        density_name=m.name,
    )


def objective_gap(m: Density, candidate: kernels.CyclicKernel,
                  solution: OptimalKernelSolution,
                  spec: lattice.LatticeSumSpec = lattice.DEFAULT_WEIGHTED_SPEC,
                  quad_spec: QuadSpec = DEFAULT_QUAD) -> float:
    """Excess of a candidate kernel's weighted functional over the optimum."""
    return kernels.weighted_square_norm(candidate, m, spec, quad_spec) - solution.objective_value


def export_solution(solution: OptimalKernelSolution, prefix: str) -> tuple[str, str]:
    """Write <prefix>.csv (x,phi,beta_m) and <prefix>.json sidecar; atomic."""
    csv_path, json_path = f"{prefix}.csv", f"{prefix}.json"
    phis = solution.kernel.phi(solution.grid)
    tmp = f"{csv_path}.tmp-{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write("x,phi,beta_m\n")
        for x, p, bm in zip(solution.grid, phis, solution.beta_m_grid):
            fh.write(f"{x:.17g},{p:.17g},{bm:.17g}\n")
    os.replace(tmp, csv_path)
    sidecar = {
        "lambda1": solution.lambda1,
        "lambda2": solution.lambda2,
        "objective_value": solution.objective_value,
        "m_name": solution.density_name,
    }
    tmp = f"{json_path}.tmp-{os.getpid()}"
    with open(tmp, "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, json_path)
    return csv_path, json_path
