"""Figure rendering for the report paths (headless Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .detection import CoincidenceHistogram
from .fitting import FitResult, decay_model, g2_dip_model


def save_lifetime_plot(h: CoincidenceHistogram, fit: FitResult, path: str):
    """Delay histogram with the fitted decay curve, log-y."""
    populated = h.counts > 0
    t_us = h.centers[populated] * 1e-3
    y = h.counts[populated]
    yerr = np.sqrt(y)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.errorbar(t_us, y, yerr=yerr, fmt="o", ms=4, capsize=2, label="simulated counts")
    t_curve = np.linspace(h.bin_edges[0], h.bin_edges[-1], 400)
    curve = decay_model(
        t_curve,
        fit.params["i0"],
        fit.params["tau_life_ns"],
        fit.params.get("baseline", 0.0),
    )
    tau_us = fit.params["tau_life_ns"] * 1e-3
    ax.plot(t_curve * 1e-3, curve, "r-", label=f"fit: tau = {tau_us:.0f} us")
    ax.set_yscale("log")
    ax.set_xlabel("delay (us)")
    ax.set_ylabel("counts per bin")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120, format="png")
    plt.close(fig)


def save_g2_plot(h: CoincidenceHistogram, fit: FitResult, path: str):
    """Normalized two-sided coincidence histogram with the fitted dip."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.errorbar(
        h.centers, h.g2, yerr=h.g2_err, fmt="o", ms=3, capsize=2, label="simulated g2"
    )
    tau_curve = np.linspace(h.bin_edges[0], h.bin_edges[-1], 800)
    life_ns = fit.diagnostics.get("tau_life_ns", float("inf"))
    life_ns = float("inf") if life_ns == "inf" else float(life_ns)
    curve = g2_dip_model(tau_curve, fit.params["g2_zero"], fit.params["tau_abs_ns"], life_ns)
    label = "fit: g2(0) = {:.2f}, 2 tau_abs = {:.1f} ns".format(
        fit.params["g2_zero"], fit.params["correlation_time_ns"]
    )
    ax.plot(tau_curve, curve, "r-", label=label)
    ax.axhline(0.5, color="gray", ls="--", lw=1, label="single-photon threshold")
    ax.set_ylim(bottom=0)
    ax.set_xlabel("delay (ns)")
    ax.set_ylabel("g2")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=120, format="png")
    plt.close(fig)
