"""Matplotlib rendering of experiment reports and kernel shapes.

Figures are written next to the delimited outputs; PNG metadata is pinned so
reruns with the same inputs produce byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_PNG_META = {"Software": "cyckde"}


def _save(fig, path):
    fig.savefig(path, dpi=110, metadata=_PNG_META)
    plt.close(fig)


def render_histogram(result, path, title="", truth=None):
    fig, ax = plt.subplots(figsize=(7.0, 3.6))
    widths = np.diff(result.hist_edges)
    ax.bar(result.hist_edges[:-1], result.hist_counts, width=widths, align="edge",
           color="#4878cf", edgecolor="white", linewidth=0.4)
    if truth is not None:
        ax.axvline(truth, color="#d1495b", lw=1.4, label=f"truth = {truth:g}")
        ax.legend(frameon=False, fontsize=8)
    ax.axvline(result.mean, color="#333333", lw=1.0, ls="--")
    ax.set_title(title, fontsize=10)
    ax.set_ylabel("count")
    fig.tight_layout()
    _save(fig, path)


def render_paired_histograms(top, bottom, path, labels=("estimator", "baseline"), truth=None):
    fig, axes = plt.subplots(2, 1, figsize=(7.0, 5.4), sharex=True)
    for ax, res, label, color in zip(axes, (top, bottom), labels, ("#4878cf", "#6acc65")):
        widths = np.diff(res.hist_edges)
        ax.bar(res.hist_edges[:-1], res.hist_counts, width=widths, align="edge",
               color=color, edgecolor="white", linewidth=0.4)
        if truth is not None:
            ax.axvline(truth, color="#d1495b", lw=1.4)
        ax.axvline(res.mean, color="#333333", lw=1.0, ls="--")
        ax.set_ylabel("count")
        ax.set_title(label, fontsize=9)
    fig.tight_layout()
    _save(fig, path)


def render_variance_bars(rows, path):
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    idx = np.arange(len(rows))
    emp = [r["empirical_variance"] for r in rows]
    pred = [r["predicted_variance"] for r in rows]
    ax.bar(idx - 0.18, emp, width=0.36, label="empirical", color="#4878cf")
    ax.bar(idx + 0.18, pred, width=0.36, label="predicted", color="#d1495b")
    ax.set_xticks(idx, [r["kernel"] for r in rows], fontsize=9)
    ax.set_ylabel("Var of the estimate")
    ax.set_title(f"density={rows[0]['density']}, R={rows[0]['R']:g}, n={rows[0]['n']}", fontsize=9)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def render_bias_curves(rows, path):
    fig, ax = plt.subplots(figsize=(6.4, 3.8))
    kernels = sorted({r["kernel"] for r in rows})
    for name in kernels:
        pts = sorted((r["R"], r["bias"]) for r in rows if r["kernel"] == name)
        ax.loglog([p[0] for p in pts], [max(p[1], 1e-17) for p in pts], "o-", label=name)
    ax.set_xlabel("R")
    ax.set_ylabel("|bias| at 0")
    ax.set_title(f"smoothed-density bias, density={rows[0]['density']}", fontsize=9)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def render_kernel(xs, phis, path, title=""):
    fig, ax = plt.subplots(figsize=(6.4, 3.4))
    ax.plot(xs, phis, lw=1.4, color="#4878cf")
    ax.axhline(0.0, color="#999999", lw=0.6)
    ax.set_xlabel("x")
    ax.set_ylabel("phi(x)")
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    _save(fig, path)
