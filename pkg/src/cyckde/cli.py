"""Command-line interface.

Subcommands are thin shells over the library: estimate (density estimates at
query points), kernel (tabulate/inspect a kernel), solve (weight-optimal
kernel), experiment (seeded replication studies).  Exit codes: 0 success,
2 I/O failure, 3 validation failure, 4 numeric failure.  Outputs are written
to temporary files and renamed, so a nonzero exit never leaves partial files.

Flag values may come from a JSON config file (--config); explicit flags beat
the config file, which beats built-in defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import estimator as est
from . import kernels as kern
from . import solver as solv
from .densities import by_name as density_by_name
from .experiments import EXPERIMENT_DEFAULTS, RUNNERS, ExperimentSpec, write_experiment_outputs
from .lattice import ToleranceError
from .quadrature import QuadratureError


class CliError(Exception):
    """Validation failure; maps to exit code 3."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="cyckde", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file with default flag values")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    e = sub.add_parser("estimate", help="evaluate the density estimator on query points")
    e.add_argument("--samples", help="CSV of observations, one row per point")
    e.add_argument("--kernel", help="builtin kernel name or tabulation CSV path")
    e.add_argument("--R", type=float, help="smoothing parameter (> 0)")
    e.add_argument("--query", help="CSV of query points")
    e.add_argument("--point", help="single query point 'v1,v2,...'")
    e.add_argument("--clip", action="store_const", const=True, help="floor estimates at 0")
    e.add_argument("--header", action="store_const", const=True,
                   help="skip the first row of sample/query CSVs")
    e.add_argument("--threads", type=int, help="worker hint (0 = auto)")
    e.add_argument("--out", help="output CSV path")

    k = sub.add_parser("kernel", help="tabulate a kernel and report its constraints")
    k.add_argument("--name", help="builtin kernel name")
    k.add_argument("--points", type=int, help="tabulation length (default 4096)")
    k.add_argument("--out", help="output CSV path")
    k.add_argument("--report", action="store_const", const=True,
                   help="print constraint residuals and the square norm")
    k.add_argument("--plot", help="also render the kernel shape to this PNG")

    s = sub.add_parser("solve", help="solve for the weight-optimal kernel")
    s.add_argument("--density", help="weight density: cauchy, gaussian or uniform")
    s.add_argument("--out", help="output prefix for CSV + JSON sidecar")
    s.add_argument("--plot", action="store_const", const=True,
                   help="also render the solved kernel to <prefix>.png")

    x = sub.add_parser("experiment", help="run a seeded replication experiment")
    x.add_argument("--name", help="theta, banana, variance or convergence")
    x.add_argument("--seed", type=int)
    x.add_argument("--n", type=int)
    x.add_argument("--R", type=float)
    x.add_argument("--reps", type=int)
    x.add_argument("--kernel")
    x.add_argument("--theta0", type=float)
    x.add_argument("--sigma1", type=float)
    x.add_argument("--b", type=float)
    x.add_argument("--density")
    x.add_argument("--threads", type=int)
    x.add_argument("--no-figures", dest="no_figures", action="store_const", const=True)
    x.add_argument("--out", help="output directory")
    return p


def _load_config(path):
    if not path:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise CliError("--config must contain a JSON object of flag values")
    return cfg


def _pick(args, config, name, default=None, required=False):
    val = getattr(args, name, None)
    if val is None:
        val = config.get(name, default)
    if required and val is None:
        raise CliError(f"missing required option --{name.replace('_', '-')}")
    return val


def _parse_point(text):
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError as exc:
        raise CliError(f"bad --point value {text!r}: {exc}") from None


def _resolve_kernel(spec: str) -> kern.CyclicKernel:
    if os.path.exists(spec):
        return kern.load_kernel_csv(spec)
    return kern.builtin_kernel(spec)


def _cmd_estimate(args, config) -> int:
    samples_path = _pick(args, config, "samples", required=True)
    kernel_spec = _pick(args, config, "kernel", "fourier")
    R = _pick(args, config, "R", required=True)
    out = _pick(args, config, "out", required=True)
    header = bool(_pick(args, config, "header", False))
    threads = int(_pick(args, config, "threads", 0))
    if R is None or float(R) <= 0:
        raise CliError("--R must be positive")

    samples = est.load_samples_csv(samples_path, skip_header=header)
    query, point = _pick(args, config, "query"), _pick(args, config, "point")
    if (query is None) == (point is None):
        raise CliError("exactly one of --query or --point is required")
    pts = est.load_points_csv(query, skip_header=header) if query else _parse_point(point)[None, :]
    if pts.shape[1] != samples.d:
        raise CliError(f"query dimension {pts.shape[1]} does not match samples (d={samples.d})")

    cfg = est.EstimatorConfig(kernel=_resolve_kernel(kernel_spec), R=float(R), threads=threads)
    values = est.estimate_grid(samples, cfg, pts)
    if bool(_pick(args, config, "clip", False)):
        values = np.maximum(values, 0.0)
    est.write_estimates_csv(out, pts, values)
    return 0


def _cmd_kernel(args, config) -> int:
    name = _pick(args, config, "name", required=True)
    points = int(_pick(args, config, "points", 4096))
    out = _pick(args, config, "out", required=True)
    if points < 2:
        raise CliError("--points must be >= 2")
    kernel = kern.builtin_kernel(name)
    kern.export_kernel_csv(kernel, out, points)
    if bool(_pick(args, config, "report", False)):
        report = kern.check_constraints(kernel)
        print(f"kernel {kernel.name}")
        print(f"  psi0                    {kernel.psi0:.10g}")
        print(f"  normalization           {kernel.normalization}")
        if kernel.line_constant is not None:
            print(f"  line_constant           {kernel.line_constant:.12g}")
        if kernel.series_constant is not None:
            print(f"  series_constant         {kernel.series_constant:.12g}")
        print(f"  zero_mean_residual      {report.zero_mean_residual:.3e}")
        print(f"  line_integral_residual  {report.line_integral_residual:.3e}")
        print(f"  square_norm             {report.square_norm:.10g}")
        print(f"  passed                  {report.passed}")
    plot = _pick(args, config, "plot")
    if plot:
        from .figures import render_kernel
        xs = np.linspace(0.0, 2.0 * np.pi, 1025)
        render_kernel(xs, kernel.phi(xs), plot, title=kernel.name)
    return 0


def _cmd_solve(args, config) -> int:
    density = _pick(args, config, "density", required=True)
    prefix = _pick(args, config, "out", required=True)
    if density not in ("cauchy", "gaussian", "uniform"):
        raise CliError("--density must be one of cauchy, gaussian, uniform")
    solution = solv.solve_optimal_kernel(density_by_name(density))
    csv_path, json_path = solv.export_solution(solution, prefix)
    print(f"lambda1={solution.lambda1:.6g} lambda2={solution.lambda2:.6g} "
          f"objective={solution.objective_value:.10g}")
    print(f"wrote {csv_path} and {json_path}")
    if bool(_pick(args, config, "plot", False)):
        from .figures import render_kernel
        render_kernel(solution.grid, solution.kernel.phi(solution.grid),
                      f"{prefix}.png", title=solution.kernel.name)
    return 0


def _cmd_experiment(args, config) -> int:
    name = _pick(args, config, "name", required=True)
    if name not in EXPERIMENT_DEFAULTS:
        raise CliError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENT_DEFAULTS)}")
    base = EXPERIMENT_DEFAULTS[name]
    extra = dict(base.extra)
    for key in ("theta0", "sigma1", "b", "density"):
        val = _pick(args, config, key)
        if val is not None:
            extra[key] = val
    spec = ExperimentSpec(
        name=name,
        n=int(_pick(args, config, "n", base.n)),
        R=float(_pick(args, config, "R", base.R)),
        reps=int(_pick(args, config, "reps", base.reps)),
        seed=int(_pick(args, config, "seed", base.seed)),
        kernel=_pick(args, config, "kernel", base.kernel),
        extra=extra,
    )
    out_dir = _pick(args, config, "out", required=True)
    threads = int(_pick(args, config, "threads", 1)) or 1
    payload = RUNNERS[name](spec, threads=threads)
    figures = not bool(_pick(args, config, "no_figures", False))
    paths = write_experiment_outputs(out_dir, spec, payload, figures=figures)
    for p in paths:
        print(f"wrote {p}")
    return 0


_COMMANDS = {
    "estimate": _cmd_estimate,
    "kernel": _cmd_kernel,
    "solve": _cmd_solve,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise CliError("a subcommand is required (estimate, kernel, solve, experiment)")
        config = _load_config(args.config)
        return _COMMANDS[args.command](args, config)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(parser.format_usage().rstrip(), file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except (QuadratureError, ToleranceError, solv.SingularSystemError, solv.PoleError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
