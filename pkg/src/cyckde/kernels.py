"""Cyclic kernels and their variance functionals.

A cyclic kernel is a period-2*pi function phi with zero mean over a period and
unit line integral of phi(x)/x; the latter is evaluated on the fundamental
domain as integral of phi * alpha by the period-folding identity.  All built-in
kernels vanish at 0 so that psi(u) = phi(u)/u stays bounded, with coincidence
limit psi0 = lim phi(u)/u.

Built-ins:
  fourier          sin(x)/pi
  haar             triangle wave (piecewise linear), normalized by C1
  spline           alternating parabolic arches (piecewise quadratic), by C2
  cauchy_optimal   (lambda1 + lambda2*alpha)/beta_cauchy, multipliers solved
                   from the two constraints; tabulated with a periodic cubic
                   spline

C1 has a convergent series of per-period line integrals; for the spline shape
the analogous printed series diverges (its terms tend to -4), so the constant
falls back to the constraint quadrature and the kernel records a numeric
normalization.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from . import lattice
from .densities import Density
from .quadrature import DEFAULT_QUAD, QuadSpec, integrate_fundamental

TWO_PI = 2.0 * np.pi

COINCIDENCE_EPS = 1e-10
ZERO_MEAN_TOL = 1e-8
LINE_INTEGRAL_TOL = 1e-6

# Integral of the squared classic parabolic (Epanechnikov) kernel,
# int (3(1-x^2)/4)^2 dx over (-1,1) = 3/5; reference value for variance tables.
EPANECHNIKOV_SQUARE_NORM = 3.0 / 5.0


def epanechnikov(u):
    """Classic parabolic comparison kernel 3(1-u^2)/4 on (-1, 1)."""
    u = np.asarray(u, dtype=float)
    out = np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CyclicKernel:
    """Immutable period-2*pi kernel defined by its fundamental-domain values."""

    name: str
    fundamental: Callable[[np.ndarray], np.ndarray]
    psi0: float
    breakpoints: tuple = ()
    normalization: str = "analytic"      # "analytic" | "numeric"
    line_constant: Optional[float] = None  # normalizing constant in use
    series_constant: Optional[float] = None  # truncated-series value, if meaningful
    meta: dict = field(default_factory=dict, compare=False)

    def phi(self, x):
        """Periodic extension: reduce mod 2*pi, evaluate the fundamental branch."""
        x = np.asarray(x, dtype=float)
        val = self.fundamental(np.mod(x, TWO_PI))
        return float(val) if val.ndim == 0 else val

    def psi(self, u, eps: float = COINCIDENCE_EPS):
        """phi(u)/u with the coincidence limit psi0 for |u| < eps."""
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 0
        u = np.atleast_1d(u)
        out = np.full(u.shape, self.psi0, dtype=float)
        far = np.abs(u) >= eps
        if np.any(far):
            out[far] = self.fundamental(np.mod(u[far], TWO_PI)) / u[far]
        return float(out[0]) if scalar else out

    @property
    def scale(self) -> float:
        """Numeric correction factor relative to the series normalization (1.0 if analytic)."""
        if self.normalization == "analytic" or not self.series_constant or not self.line_constant:
            return 1.0
        return self.series_constant / self.line_constant


@dataclass(frozen=True)
class KernelConstraintReport:
    zero_mean_residual: float
    line_integral_residual: float
    square_norm: float
    passed: bool


# ---------------------------------------------------------------------------
# normalizing constants
# ---------------------------------------------------------------------------

def haar_series_constant(max_k: int = 10_000) -> float:
    """Line-integral constant of the unnormalized triangle wave.

    Series of per-period contributions
      2(2k+1) log((4k+3)/(4k+1)) - 4k log((4k+1)/(4k-1)),
    absolutely convergent (terms are O(k^-3)); truncation at |k| <= max_k leaves
    a tail below 1e-8 for max_k >= 1e4.
    """
    total = 2.0 * math.log(3.0)  # k = 0 contribution
    k = np.arange(1, max_k + 1, dtype=float)
    for kk in (k, -k):
        t = 2.0 * (2.0 * kk + 1.0) * np.log1p(2.0 / (4.0 * kk + 1.0)) \
            - 4.0 * kk * np.log1p(2.0 / (4.0 * kk - 1.0))
        total += float(np.sum(t[::-1]))
    return total


def spline_series_constant(max_k: int = 10_000) -> tuple[float, bool]:
    """Per-period series for the parabolic-arch shape, exactly as printed.

    Returns (partial sum, converged).  The terms tend to -4 instead of 0, so
    the partial sums diverge linearly and ``converged`` is False; the caller
    must fall back to the constraint quadrature.
    """
    total = 0.0
    k = np.arange(1, max_k + 1, dtype=float)
    last = 0.0
    for kk in (k, -k):
        t = 8.0 * kk * (2.0 * kk - 1.0) * np.log(2.0 * kk / (2.0 * kk - 1.0)) \
            - 8.0 * kk * (2.0 * kk + 1.0) * np.log((2.0 * kk + 1.0) / (2.0 * kk))
        total += float(np.sum(t[::-1]))
        last = float(t[-1])
    converged = abs(last) < 1e-6
    return total, converged


def _haar_shape(x):
    # triangle: 0 at 0, 1 at pi/2, 0 at pi, -1 at 3*pi/2, 0 at 2*pi
    return np.where(x < 0.5 * np.pi, 2.0 * x / np.pi,
           np.where(x < 1.5 * np.pi, 2.0 * (np.pi - x) / np.pi,
                    2.0 * (x - TWO_PI) / np.pi))


def _spline_shape(x):
    # parabolic arches: +4x(pi-x)/pi^2 on (0,pi), mirrored negative on (pi,2*pi)
    return np.where(x < np.pi, 4.0 * x * (np.pi - x) / np.pi**2,
                    4.0 * (x - TWO_PI) * (x - np.pi) / np.pi**2)


def line_integral(fundamental, breakpoints=(), quad_spec: QuadSpec = DEFAULT_QUAD) -> float:
    """integral over (0, 2*pi) of f(x) * alpha(x), the folded line integral of f(x)/x."""
    return integrate_fundamental(
        lambda x: fundamental(x) * lattice.alpha_closed(x), quad_spec, breakpoints)


# ---------------------------------------------------------------------------
# built-ins
# ---------------------------------------------------------------------------

_ALIASES = {"cauchy_opt": "cauchy_optimal", "cauchy": "cauchy_optimal", "sin": "fourier"}
BUILTIN_KERNEL_NAMES = ("fourier", "haar", "spline", "cauchy_optimal")


def _canonical(name: str) -> str:
    key = name.strip().lower().replace("-", "_")
    key = _ALIASES.get(key, key)
    if key not in BUILTIN_KERNEL_NAMES:
        raise ValueError(f"unknown kernel {name!r}; choose from {BUILTIN_KERNEL_NAMES}")
    return key


def _normalized_shape(shape, breakpoints, series_value, series_converged):
    """Divide a raw shape by its line constant; prefer the series value but fall
    back to the constraint quadrature when the series is unusable or disagrees."""
    numeric = line_integral(shape, breakpoints)
    use_series = series_converged and abs(series_value / numeric - 1.0) <= LINE_INTEGRAL_TOL
    constant = series_value if use_series else numeric
    fundamental = lambda x: shape(x) / constant
    return fundamental, constant, ("analytic" if use_series else "numeric")


def builtin_kernel(name: str) -> CyclicKernel:
    """Construct one of the built-in kernels (cached; kernels are immutable)."""
    return _builtin_kernel(_canonical(name))


@lru_cache(maxsize=None)
def _builtin_kernel(key: str) -> CyclicKernel:
    if key == "fourier":
        return CyclicKernel(
            name="fourier",
            fundamental=lambda x: np.sin(x) / np.pi,
            psi0=1.0 / np.pi,
            line_constant=np.pi,
            series_constant=np.pi,
        )
    if key == "haar":
        c_series = haar_series_constant()
        fundamental, constant, mode = _normalized_shape(
            _haar_shape, (0.5 * np.pi, 1.5 * np.pi), c_series, True)
        return CyclicKernel(
            name="haar",
            fundamental=fundamental,
            psi0=2.0 / (constant * np.pi),
            breakpoints=(0.5 * np.pi, np.pi, 1.5 * np.pi),
            normalization=mode,
            line_constant=constant,
            series_constant=c_series,
        )
    if key == "spline":
        c_series, converged = spline_series_constant()
        fundamental, constant, mode = _normalized_shape(
            _spline_shape, (np.pi,), c_series, converged)
        return CyclicKernel(
            name="spline",
            fundamental=fundamental,
            psi0=4.0 / (constant * np.pi),
            breakpoints=(np.pi,),
            normalization=mode,
            line_constant=constant,
            series_constant=c_series,
        )
    # cauchy_optimal: multipliers from the constrained variational problem with
    # the closed-form Cauchy-weighted lattice sum
    from .solver import solve_multipliers

    lam1, lam2 = solve_multipliers(lattice.beta_cauchy_closed)
    xs = np.linspace(0.0, TWO_PI, 4097)
    phis = np.zeros_like(xs)
    inner = slice(1, -1)
    phis[inner] = (lam1 + lam2 * lattice.alpha_closed(xs[inner])) \
        / lattice.beta_cauchy_closed(xs[inner])
    return tabulated_kernel(
        xs[:-1], phis[:-1], name="cauchy_optimal", psi0=lam2,
        meta={"lambda1": lam1, "lambda2": lam2},
    )


def tabulated_kernel(x, phi, name: str, psi0: Optional[float] = None,
                     meta: Optional[dict] = None,
                     normalization: str = "analytic") -> CyclicKernel:
    """Kernel from fundamental-domain samples via a periodic cubic spline.

    ``x`` must be sorted in [0, 2*pi) and start at 0 with phi(0) = 0 (bounded
    psi requires a root at the origin).
    """
    x = np.asarray(x, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if x.ndim != 1 or x.shape != phi.shape or x.size < 8:
        raise ValueError("need matching 1-d arrays with at least 8 nodes")
    if x[0] != 0.0 or np.any(np.diff(x) <= 0) or x[-1] >= TWO_PI:
        raise ValueError("nodes must be sorted in [0, 2*pi) starting at 0")
    if abs(phi[0]) > 1e-9:
        raise ValueError("phi(0) must vanish for the kernel ratio to stay bounded")
    xs = np.append(x, TWO_PI)
    ps = np.append(phi, phi[0])
    spline = CubicSpline(xs, ps, bc_type="periodic")
    return CyclicKernel(
        name=name,
        fundamental=lambda t: spline(t),
        psi0=float(spline(0.0, 1)) if psi0 is None else float(psi0),
        normalization=normalization,
        meta=meta or {},
    )


# ---------------------------------------------------------------------------
# constraint checks and variance functionals
# ---------------------------------------------------------------------------

def check_constraints(kernel: CyclicKernel, quad_spec: QuadSpec = DEFAULT_QUAD) -> KernelConstraintReport:
    """Residuals of the zero-mean and unit-line-integral constraints."""
    zm = abs(integrate_fundamental(kernel.fundamental, quad_spec, kernel.breakpoints))
    li = abs(line_integral(kernel.fundamental, kernel.breakpoints, quad_spec) - 1.0)
    sn = square_norm(kernel, quad_spec)
    return KernelConstraintReport(
        zero_mean_residual=zm,
        line_integral_residual=li,
        square_norm=sn,
        passed=bool(zm < ZERO_MEAN_TOL and li < LINE_INTEGRAL_TOL),
    )


def square_norm(kernel: CyclicKernel, quad_spec: QuadSpec = DEFAULT_QUAD) -> float:
    """integral over R of (phi(x)/x)^2, folded to phi^2 * beta on (0, 2*pi)."""
    f = lambda x: kernel.fundamental(x) ** 2 * lattice.beta_closed(x)
    return integrate_fundamental(f, quad_spec, kernel.breakpoints)


def weighted_square_norm(kernel: CyclicKernel, m: Density,
                         spec: lattice.LatticeSumSpec = lattice.DEFAULT_WEIGHTED_SPEC,
                         quad_spec: QuadSpec = DEFAULT_QUAD) -> float:
    """integral over R of (phi(x)/x)^2 m(x), folded to phi^2 * beta_m on (0, 2*pi)."""
    if m.is_flat:
        return square_norm(kernel, quad_spec)
    f = lambda x: kernel.fundamental(x) ** 2 * lattice.beta_weighted(x, m, spec)
    return integrate_fundamental(f, quad_spec, kernel.breakpoints)


# ---------------------------------------------------------------------------
# tabulation files: CSV with header "x,phi", abscissae in [0, 2*pi)
# ---------------------------------------------------------------------------

def export_kernel_csv(kernel: CyclicKernel, path: str, points: int = 4096) -> None:
    if points < 2:
        raise ValueError("points must be >= 2")
    xs = np.arange(points) * (TWO_PI / points)
    phis = kernel.phi(xs)
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "phi"])
        for xv, pv in zip(xs, phis):
            w.writerow([format(xv, ".17g"), format(pv, ".17g")])
    os.replace(tmp, path)


def load_kernel_csv(path: str, name: Optional[str] = None) -> CyclicKernel:
    """Load a tabulated kernel; rescale to the unit line integral if needed.

    The zero-mean defect cannot be repaired by scaling, so it is an error; a
    line-integral defect is fixed by dividing by the measured value and the
    kernel records the numeric normalization.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip().lower() for c in rows[0]] != ["x", "phi"]:
        raise ValueError(f"{path}: expected header 'x,phi'")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=float)
    kernel = tabulated_kernel(data[:, 0], data[:, 1],
                              name=name or os.path.basename(path))
    zm = abs(integrate_fundamental(kernel.fundamental, DEFAULT_QUAD))
    if zm >= ZERO_MEAN_TOL:
        raise ValueError(f"{path}: zero-mean residual {zm:.3e} cannot be normalized away")
    li = line_integral(kernel.fundamental)
    if abs(li - 1.0) < LINE_INTEGRAL_TOL:
        return kernel
    if abs(li) < 1e-12:
        raise ValueError(f"{path}: vanishing line integral, not a usable kernel")
    scaled = data[:, 1] / li
    return tabulated_kernel(data[:, 0], scaled, name=kernel.name,
                            normalization="numeric",
                            meta={"applied_scale": 1.0 / li})
