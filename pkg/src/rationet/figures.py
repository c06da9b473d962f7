"""Figure rendering for experiment reports.

This is the only module that touches matplotlib; the numerical library
never imports it.  Every function writes a PNG next to the delimited
output it illustrates and returns the path.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def _finish(fig, ax, path, title, xlabel, ylabel):
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_roc_figure(path, curves, title="ROC"):
    """Overlay RocCurve objects, keyed by method name."""
    fig, ax = plt.subplots(figsize=(5, 4))
    for name, curve in curves.items():
        ax.plot(curve.false_alarm, curve.detection, label=name, lw=1.2)
    ax.plot([0, 1], [0, 1], ls=":", color="gray", lw=0.8, label="chance")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    return _finish(fig, ax, path, title, "false alarm probability",
                   "detection probability")


def save_delay_figure(path, curves, title="CUSUM performance"):
    """Overlay DelayCurve objects on log-log axes."""
    fig, ax = plt.subplots(figsize=(5, 4))
    for name, curve in curves.items():
        ax.loglog(curve.false_alarm_period, curve.detection_delay,
                  marker="o", ms=3, lw=1.2, label=name)
    return _finish(fig, ax, path, title, "average false alarm period",
                   "average detection delay")


def save_trace_figure(path, traces, ylabel, title="training"):
    """Plot (iterations, values) traces keyed by method name."""
    fig, ax = plt.subplots(figsize=(5, 4))
    for name, (iters, vals) in traces.items():
        ax.plot(iters, vals, lw=1.0, label=name)
    return _finish(fig, ax, path, title, "iteration", ylabel)


def save_estimates_figure(path, estimates, reference=None,
                          ylabel="estimate", title="estimates"):
    """Scatter per-seed estimates keyed by label, with a reference line."""
    fig, ax = plt.subplots(figsize=(5, 4))
    for i, (name, values) in enumerate(estimates.items()):
        ax.plot([i] * len(values), values, "o", ms=4, alpha=0.7, label=name)
    if reference is not None:
        ax.axhline(reference, ls="--", color="black", lw=1.0,
                   label="closed form")
    ax.set_xticks(range(len(estimates)))
    ax.set_xticklabels(list(estimates), rotation=20, ha="right", fontsize=8)
    return _finish(fig, ax, path, title, "", ylabel)


def save_fit_figure(path, x, fitted, truth=None, title="fit",
                    ylabel="statistic"):
    """Overlay fitted 1-d curves (dict name -> values) on the true one."""
    fig, ax = plt.subplots(figsize=(5, 4))
    for name, values in fitted.items():
        ax.plot(x, values, lw=1.2, label=name)
    if truth is not None:
        ax.plot(x, truth, ls="--", color="black", lw=1.0, label="closed form")
    return _finish(fig, ax, path, title, "x", ylabel)
