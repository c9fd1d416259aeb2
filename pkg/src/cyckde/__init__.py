"""Cyclic-kernel density estimation toolkit.

Lattice-sum special functions, cyclic kernels with constraint checks, a
variational solver for weight-optimal kernels, the product-kernel Monte Carlo
density estimator, and seeded replication experiments.
"""

from .densities import Density, by_name as density_by_name, cauchy, flat_weight, gaussian, \
    laplace, scale_mixture, uniform
from .estimator import EstimatorConfig, SampleMatrix, bias_decay_curve, estimate_at, \
    estimate_grid, estimator_variance, gaussian_kde_baseline, smoothed_density
from .experiments import BananaExperimentResult, ExperimentSpec, ReplicationResult, \
    banana_density, rep_rng, run_banana_experiment, run_convergence_experiment, \
    run_theta_experiment, run_variance_comparison, sample_banana, sample_scale_mixture
from .kernels import CyclicKernel, KernelConstraintReport, builtin_kernel, check_constraints, \
    export_kernel_csv, load_kernel_csv, square_norm, tabulated_kernel, weighted_square_norm
from .lattice import CAUCHY_CLOSED_SCALE, DomainError, LatticeSumSpec, ToleranceError, \
    alpha_closed, alpha_series, beta_cauchy_closed, beta_closed, beta_series, beta_weighted
from .quadrature import QuadSpec, QuadratureError, integrate_fundamental, integrate_interval, \
    integrate_line
from .solver import OptimalKernelSolution, PoleError, SingularSystemError, objective_gap, \
    solve_optimal_kernel

__version__ = "0.1.0"
