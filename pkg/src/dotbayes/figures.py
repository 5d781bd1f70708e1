"""Matplotlib renderings of runs, saved next to the CSV outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import (
    CurrentHistogram,
    EnsembleSummary,
    cumulative_average,
    running_window_average,
)
from .model import DetectorModel, MeasurementRecord, StatePath

_DPI = 150


def _record_panel(ax, record: MeasurementRecord, det: DetectorModel) -> None:
    t = record.times + 0.5 * record.window
    ax.plot(t, record.samples, lw=0.6, alpha=0.45, color="0.5", label="window avg")
    # smoothing window ~ the localization scale when it fits the record
    smooth = det.tau_loc
    if np.isfinite(smooth) and smooth >= 2 * record.window:
        m = max(int(round(smooth / record.window)), 1)
        run = running_window_average(record, m * record.window)
        ax.plot(t, run.samples, lw=1.4, color="C0", label=f"running avg ({m * record.window:g})")
    cum = cumulative_average(record)
    ax.plot(t, cum.samples, lw=1.2, color="C3", label="cumulative avg")
    for level, name in ((det.i1, "i1"), (det.i2, "i2")):
        ax.axhline(level, color="k", lw=0.7, ls=":")
        ax.annotate(name, (t[-1], level), xytext=(3, 0), textcoords="offset points",
                    va="center", fontsize=8)
    ax.set_ylabel("detector current")
    ax.legend(loc="best", fontsize=8)


def trajectory_figure(path: StatePath, record: MeasurementRecord,
                      det: DetectorModel, out_png) -> None:
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7.0, 5.6), sharex=True)
    ax1.plot(path.times, path.s11, lw=1.0, color="C0", label="s11")
    ax1.plot(path.times, path.purity_series, lw=0.9, ls="--", color="C2", label="purity")
    ax1.set_ylabel("occupation / purity")
    ax1.set_ylim(-0.04, 1.04)
    ax1.legend(loc="best", fontsize=8)
    ax1.grid(alpha=0.3)
    _record_panel(ax2, record, det)
    ax2.set_xlabel("t")
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_png, dpi=_DPI)
    plt.close(fig)


def master_figure(path: StatePath, out_png) -> None:
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.plot(path.times, path.s11, lw=1.2, label="s11")
    ax.plot(path.times, path.s12_re, lw=1.0, label="Re s12")
    ax.plot(path.times, path.s12_im, lw=1.0, label="Im s12")
    ax.plot(path.times, path.purity_series, lw=0.9, ls="--", label="purity")
    ax.set_xlabel("t")
    ax.set_ylabel("ensemble-averaged state")
    ax.grid(alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_png, dpi=_DPI)
    plt.close(fig)


def ensemble_figure(summary: EnsembleSummary, out_png,
                    master_path: StatePath | None = None) -> None:
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    t = summary.times
    std = np.sqrt(summary.var_s11)
    ax.fill_between(t, summary.mean_s11 - std, summary.mean_s11 + std,
                    alpha=0.2, color="C0", lw=0)
    ax.plot(t, summary.mean_s11, "o-", ms=3.5, lw=1.1, color="C0", label="mean s11")
    ax.plot(t, summary.mean_s12_re, "s-", ms=3, lw=1.0, color="C1", label="mean Re s12")
    ax.plot(t, summary.mean_purity, "^-", ms=3, lw=1.0, color="C2", label="mean purity")
    if master_path is not None:
        ax.plot(master_path.times, master_path.s11, "k--", lw=1.0, label="master eq s11")
        ax.plot(master_path.times, master_path.s12_re, "k:", lw=1.0, label="master eq Re s12")
    ax.set_xlabel("t")
    ax.set_ylabel("ensemble statistics")
    ax.grid(alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_png, dpi=_DPI)
    plt.close(fig)


def histogram_figure(hist: CurrentHistogram, det: DetectorModel, out_png) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    widths = np.diff(hist.bin_edges)
    ax.bar(hist.bin_edges[:-1], hist.counts, width=widths, align="edge",
           color="C0", alpha=0.8, edgecolor="none")
    for level, name in ((det.i1, "i1"), (det.i2, "i2")):
        ax.axvline(level, color="k", lw=0.8, ls=":")
        ax.annotate(name, (level, ax.get_ylim()[1]), xytext=(2, -10),
                    textcoords="offset points", fontsize=8)
    ax.set_xlabel(f"current averaged over window {hist.window:g}")
    ax.set_ylabel("count")
    fig.tight_layout()
    fig.savefig(out_png, dpi=_DPI)
    plt.close(fig)


def steer_figure(measure: StatePath, recheck: StatePath, pulse_summary: str,
                 det: DetectorModel, record: MeasurementRecord,
                 recheck_record: MeasurementRecord, out_png) -> None:
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7.0, 5.6), sharex=True)
    gap = 0.04 * (measure.times[-1] + recheck.times[-1])
    t2 = measure.times[-1] + gap + recheck.times
    ax1.plot(measure.times, measure.s11, lw=1.0, color="C0")
    ax1.plot(t2, recheck.s11, lw=1.0, color="C0")
    ax1.axvspan(measure.times[-1], measure.times[-1] + gap, color="C3", alpha=0.15)
    ax1.annotate(pulse_summary, (measure.times[-1] + 0.5 * gap, 0.5),
                 ha="center", fontsize=8, rotation=90)
    ax1.set_ylabel("s11")
    ax1.set_ylim(-0.04, 1.04)
    ax1.grid(alpha=0.3)
    for rec, t0 in ((record, 0.0), (recheck_record, measure.times[-1] + gap)):
        t = t0 + rec.times + 0.5 * rec.window
        ax2.plot(t, rec.samples, lw=0.6, alpha=0.5, color="0.5")
        cum = cumulative_average(rec)
        ax2.plot(t, cum.samples, lw=1.2, color="C3")
    for level in (det.i1, det.i2):
        ax2.axhline(level, color="k", lw=0.7, ls=":")
    ax2.set_xlabel("t (pulse between the shaded band)")
    ax2.set_ylabel("detector current")
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_png, dpi=_DPI)
    plt.close(fig)
