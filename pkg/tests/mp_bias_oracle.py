"""High-precision oracle for the smoothed-density bias.

For the standard normal density the true bias of the folded smoothing operator
decays like exp(-R^2/2), which underflows float64 past R ~ 12, so the decay-
order acceptance check is evaluated in arbitrary precision.  The computation
is an independent re-implementation of the fold: tanh-sinh quadrature over the
fundamental domain (split at kernel kinks), with the lattice sum carried far
enough that the discarded Gaussian tail is below the working precision.

The sin-kernel case has the closed form erfc(R/sqrt(2))/sqrt(2*pi), which the
acceptance test uses to validate this pipeline before trusting it for the
piecewise kernels.
"""

from mpmath import mp, cos, erfc, exp, mpf, pi, quad, sin, sqrt


def shape_sin(t):
    return sin(t)


def shape_triangle(t):
    if t < pi / 2:
        return 2 * t / pi
    if t < 3 * pi / 2:
        return 2 * (pi - t) / pi
    return 2 * (t - 2 * pi) / pi


def shape_arches(t):
    if t < pi:
        return 4 * t * (pi - t) / pi**2
    return 4 * (t - 2 * pi) * (t - pi) / pi**2


SHAPES = {
    "fourier": (shape_sin, ()),
    "haar": (shape_triangle, (pi / 2,)),
    "spline": (shape_arches, ()),   # kink at pi is an endpoint of the half domain
}


def line_constant(shape, kinks):
    """integral over (0, 2*pi) of shape(t) * cot(t/2)/2, to working precision."""
    pieces = [mpf(0)] + [k for k in kinks if k < pi] + [pi]
    pieces += [2 * pi - p for p in reversed(pieces[:-1])]
    f = lambda t: shape(t) * cos(t / 2) / (2 * sin(t / 2))
    return quad(f, pieces)


def gaussian_bias(kernel_name, R, dps=110):
    """|m_{R,phi}(0) - m(0)| for the standard normal density, high precision."""
    shape, kinks = SHAPES[kernel_name]
    with mp.workdps(dps):
        Rm = mpf(R)
        C = line_constant(shape, kinks)
        # lattice reach: normal tail below the working precision
        K = int(3.9 * R * (dps / 110) ** 0.5) + int(0.06 * dps) + 8
        norm = 1 / sqrt(2 * pi)

        def integrand(t):
            ph = shape(t) / C
            s = mpf(0)
            for k in range(-K, K + 1):
                u = t + 2 * pi * k
                s += ph / u * exp(-(u / Rm) ** 2 / 2)
            return s * norm

        pieces = [mpf(0)] + [k for k in kinks if k < pi] + [pi]
        value = 2 * quad(integrand, pieces)  # odd kernel, even density, y = 0
        return abs(value - norm)


def sin_kernel_bias_closed_form(R, dps=110):
    with mp.workdps(dps):
        return erfc(mpf(R) / sqrt(2)) / sqrt(2 * pi)
