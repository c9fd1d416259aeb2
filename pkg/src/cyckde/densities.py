"""Weight densities used by the lattice sums, the variational solver and the
estimator experiments.

Every density carries enough tail information to certify truncation of the
period-folded infinite sums: ``sup`` bounds the density globally, ``tail_sup(T)``
bounds it on ``{|t| >= T}``, and ``tail_kind``/``tail_params`` select a closed-form
bound for sums of the form ``sum_k tail_sup(c*k)/k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

SQRT_TWO_PI = float(np.sqrt(2.0 * np.pi))


@dataclass(frozen=True)
class Density:
    """A (possibly improper) nonnegative weight function on R^dim.

    ``tail_kind`` is one of:
      - "gaussian":    tail_sup decays like exp(-T^2/2) (ratio bound usable)
      - "exponential": tail_sup(T) <= c*exp(-a*T), params (c, a)
      - "power":       tail_sup(T) <= c/T^p for T >= t0, params (c, p, t0)
      - "compact":     zero outside [-L, L], params (L,)
      - "flat":        improper constant weight (lattice sums reduce to the
                       unweighted ones analytically)
    """

    name: str
    pdf: Callable[[np.ndarray], np.ndarray]
    sup: float
    tail_sup: Callable[[float], float]
    tail_kind: str
    tail_params: tuple = ()
    dim: int = 1
    is_flat: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, x):
        return self.pdf(np.asarray(x, dtype=float))


def cauchy() -> Density:
    """Standard Cauchy density 1/(pi*(1+x^2))."""
    pdf = lambda x: (1.0 / np.pi) / (1.0 + x * x)
    return Density(
        name="cauchy",
        pdf=pdf,
        sup=1.0 / np.pi,
        tail_sup=lambda T: (1.0 / np.pi) / (1.0 + T * T),
        tail_kind="power",
        tail_params=(1.0 / np.pi, 2.0, 0.0),
    )


def gaussian() -> Density:
    """Standard normal density."""
    pdf = lambda x: np.exp(-0.5 * x * x) / SQRT_TWO_PI
    return Density(
        name="gaussian",
        pdf=pdf,
        sup=1.0 / SQRT_TWO_PI,
        tail_sup=lambda T: float(np.exp(-0.5 * T * T) / SQRT_TWO_PI),
        tail_kind="gaussian",
    )


def laplace() -> Density:
    """Standard Laplace density exp(-|x|)/2; has a kink at the origin."""
    pdf = lambda x: 0.5 * np.exp(-np.abs(x))
    return Density(
        name="laplace",
        pdf=pdf,
        sup=0.5,
        tail_sup=lambda T: float(0.5 * np.exp(-T)),
        tail_kind="exponential",
        tail_params=(0.5, 1.0),
    )


def uniform(half_width: float) -> Density:
    """Uniform density on [-L, L]."""
    if half_width <= 0:
        raise ValueError("half_width must be positive")
    L = float(half_width)
    h = 0.5 / L

    def pdf(x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= L, h, 0.0)

    return Density(
        name=f"uniform[{L:g}]",
        pdf=pdf,
        sup=h,
        tail_sup=lambda T: h if T <= L else 0.0,
        tail_kind="compact",
        tail_params=(L,),
    )


def flat_weight() -> Density:
    """Improper constant weight 1.

    Used for the unweighted variational problem: the weighted lattice sum with
    this weight is exactly the plain one, and the constant scale is absorbed by
    the solved multipliers.
    """
    pdf = lambda x: np.ones_like(np.asarray(x, dtype=float))
    return Density(
        name="uniform",
        pdf=pdf,
        sup=1.0,
        tail_sup=lambda T: 1.0,
        tail_kind="flat",
        is_flat=True,
    )


def scale_mixture(theta: float) -> Density:
    """Normal scale mixture: y | v ~ N(0, v^2), v ~ Gamma(shape 2, rate theta).

    Evaluated by quadrature in v; the value at 0 is theta/sqrt(2*pi).
    The tail bound uses exp(-z) <= 1/(e*z), giving pdf(y) <= 4/(theta*sqrt(2*pi)*e*y^2).
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    th = float(theta)
    from scipy.integrate import quad

    def pdf_scalar(y):
        y = abs(float(y))
        if y == 0.0:
            return th / SQRT_TWO_PI
        f = lambda v: (np.exp(-0.5 * (y / v) ** 2) / (SQRT_TWO_PI * v)) * th * th * v * np.exp(-th * v)
        val, _ = quad(f, 0.0, np.inf, epsabs=1e-12, epsrel=1e-10, limit=200)
        return val

    pdf = np.vectorize(pdf_scalar, otypes=[float])
    c = 4.0 / (th * SQRT_TWO_PI * np.e)
    return Density(
        name=f"scale_mixture[{th:g}]",
        pdf=pdf,
        sup=th / SQRT_TWO_PI,
        tail_sup=lambda T: c / (T * T) if T > 0 else th / SQRT_TWO_PI,
        tail_kind="power",
        tail_params=(c, 2.0, 0.0),
        meta={"theta": th},
    )


BUILTIN_DENSITIES = {
    "cauchy": cauchy,
    "gaussian": gaussian,
    "laplace": laplace,
    "uniform": flat_weight,
}


def by_name(name: str) -> Density:
    key = name.strip().lower().replace("-", "_")
    if key not in BUILTIN_DENSITIES:
        raise ValueError(f"unknown density {name!r}; choose from {sorted(BUILTIN_DENSITIES)}")
    return BUILTIN_DENSITIES[key]()
