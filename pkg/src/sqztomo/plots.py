"""Deterministic SVG rendering of the analysis figures."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {"svg.hashsalt": "sqztomo", "svg.fonttype": "none", "path.simplify": False}


def _save(fig, path):
    with matplotlib.rc_context(_RC):
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def plot_spectrum(path, freq_mhz, v_min, v_max, model_freq=None, model_min=None, model_max=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(freq_mhz, 10 * np.log10(v_max), "o", color="tab:red", label="max")
    ax.plot(freq_mhz, 10 * np.log10(v_min), "o", color="tab:blue", label="min")
    if model_freq is not None:
        ax.plot(model_freq, 10 * np.log10(model_max), "-", color="tab:red", lw=1)
        ax.plot(model_freq, 10 * np.log10(model_min), "-", color="tab:blue", lw=1)
    ax.axhline(0, color="0.5", lw=0.8)
    ax.set_xlabel("frequency (MHz)")
    ax.set_ylabel("noise power rel. vacuum (dB)")
    ax.legend()
    return _save(fig, path)


def plot_total_variance(path, theta, variance, model=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(theta, variance, ".", label="binned")
    if model is not None:
        ax.plot(theta, model, "-", lw=1, label="fit")
    ax.axhline(1, color="0.5", lw=0.8)
    ax.set_xlabel("LO phase (rad)")
    ax.set_ylabel("variance rel. vacuum")
    ax.legend()
    return _save(fig, path)


def plot_photon_statistics(path, probabilities):
    fig, ax = plt.subplots(figsize=(6, 4))
    n = np.arange(len(probabilities))
    ax.bar(n, probabilities, width=0.8)
    ax.set_xlabel("photon number")
    ax.set_ylabel("probability")
    return _save(fig, path)


def plot_g1(path, tau_ns, measured, theory):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(tau_ns, measured, "o", label="estimate")
    ax.plot(tau_ns, theory, "-", lw=1, label="model")
    ax.set_xlabel("delay (ns)")
    ax.set_ylabel("g1")
    ax.legend()
    return _save(fig, path)


def plot_wigner_panels(path, grids: dict):
    """Heat maps of several Wigner functions keyed by band index."""
    keys = sorted(grids)
    if not keys:
        raise ValueError("no Wigner functions to plot")
    cols = min(5, len(keys))
    rows = math.ceil(len(keys) / cols)
    fig, axes = plt.subplots(rows, cols, figsize=(2.4 * cols, 2.4 * rows), squeeze=False)
    for ax in axes.ravel():
        ax.set_axis_off()
    for ax, key in zip(axes.ravel(), keys):
        g = grids[key]
        lim = float(np.abs(g.values).max())
        ax.imshow(g.values, origin="lower", extent=(g.x[0], g.x[-1], g.p[0], g.p[-1]),
                  cmap="RdBu_r", vmin=-lim, vmax=lim, interpolation="nearest")
        ax.set_title(f"band {key}", fontsize=8)
        ax.set_axis_on()
        ax.tick_params(labelsize=6)
    fig.tight_layout()
    return _save(fig, path)
