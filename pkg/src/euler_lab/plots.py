"""Static SVG plots of a trace: norm histories, fitted bound curves
overlaid on the Sobolev norm, and the length-scale history."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .monitor import (
    BoundLedger,
    RegularityTrace,
    double_exp_curve,
    single_exp_curve,
)


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_norm_histories(trace: RegularityTrace, path) -> None:
    ts = trace.times
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    (a0, a1), (a2, a3) = axes
    a0.plot(ts, trace.column("energy"), label="energy")
    a0.set_ylabel("energy")
    a1.plot(ts, trace.column("omega_linf"), label="sup vorticity")
    a1.plot(ts, trace.column("omega_l2"), label="L2 vorticity")
    a1.set_yscale("log")
    a1.legend(fontsize=8)
    a2.plot(ts, trace.column("hs"), label="Hs")
    a2.plot(ts, trace.column("besov"), label="Besov", ls="--")
    a2.set_yscale("log")
    a2.set_xlabel("t")
    a2.legend(fontsize=8)
    a3.plot(ts, trace.column("du_linf"), label="|Du|")
    a3.plot(ts, trace.column("dup_linf"), label="|Du+|", ls="--")
    a3.plot(ts, trace.column("dum_linf"), label="|Du-|", ls=":")
    a3.set_yscale("log")
    a3.set_xlabel("t")
    a3.legend(fontsize=8)
    fig.suptitle("norm histories")
    _finish(fig, path)


def plot_bound_curves(trace: RegularityTrace, ledger: BoundLedger, path) -> None:
    ts = trace.times
    hs = trace.column("hs")
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.plot(ts, hs, "k", lw=2, label="Hs norm")
    try:
        rec = ledger.record("single_exp")
        if np.isfinite(rec.fitted_constant):
            ax.plot(ts, single_exp_curve(trace, rec), "C0--",
                    label=f"single-exp fit C={rec.fitted_constant:.3g}")
    except Exception:
        pass
    try:
        rec = ledger.record("double_exp")
        if np.isfinite(rec.fitted_constant):
            ax.plot(ts, double_exp_curve(trace, rec), "C1:",
                    label=f"double-exp fit C={rec.fitted_constant:.3g}")
    except Exception:
        pass
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("Hs norm and fitted bounds")
    ax.legend(fontsize=8)
    _finish(fig, path)


def plot_length_scale(trace: RegularityTrace, path) -> None:
    ts = trace.times
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(ts, trace.column("ell"), "C2", label="length scale")
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("length scale")
    ax2 = ax.twinx()
    ax2.plot(ts, trace.column("const_int"), "C3--", label="integral of ell^(-5/2)")
    ax2.set_ylabel("accumulated integral")
    h1, l1 = ax.get_legend_handles_labels()
    h2, l2 = ax2.get_legend_handles_labels()
    ax.legend(h1 + h2, l1 + l2, fontsize=8, loc="upper left")
    _finish(fig, path)


def render_all(trace: RegularityTrace, ledger: BoundLedger, out_dir) -> list:
    import os

    paths = []
    for name, fn in (
        ("norms.svg", lambda p: plot_norm_histories(trace, p)),
        ("bounds.svg", lambda p: plot_bound_curves(trace, ledger, p)),
        ("length_scale.svg", lambda p: plot_length_scale(trace, p)),
    ):
        p = os.path.join(out_dir, name)
        fn(p)
        paths.append(p)
    return paths
