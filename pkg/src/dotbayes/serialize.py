"""CSV serialization with fixed schemas and reproducible bytes.

Floats are written with ``repr``, which round-trips exactly, so a run
with the same configuration and seed produces byte-identical files.
Metadata that is not per-row (window sizes, seeds, fractions) is kept
in ``# key=value`` comment lines before the header.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .analysis import CurrentHistogram, EnsembleSummary
from .model import MeasurementRecord, StatePath

STATE_PATH_HEADER = "t,s11,s12_re,s12_im,purity"
RECORD_HEADER = "t_window_start,i_avg"
SUMMARY_HEADER = (
    "t,mean_s11,var_s11,mean_s12_re,var_s12_re,mean_s12_im,var_s12_im,"
    "mean_purity,mean_s11s22"
)
HISTOGRAM_HEADER = "bin_left,bin_right,count"


def _f(x) -> str:
    return repr(float(x))


def _write(path, lines) -> None:
    Path(path).write_text("\n".join(lines) + "\n")


def _read_lines(path):
    meta = {}
    rows = []
    header = None
    for line in Path(path).read_text().splitlines():
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
        elif header is None:
            header = line
        else:
            rows.append(line.split(","))
    if header is None:
        raise ValueError(f"{path}: no header line found")
    return meta, header, rows


def write_state_path(path_obj: StatePath, file) -> None:
    lines = [STATE_PATH_HEADER]
    pur = path_obj.purity_series
    for k in range(len(path_obj)):
        lines.append(
            ",".join(
                (
                    _f(path_obj.times[k]),
                    _f(path_obj.s11[k]),
                    _f(path_obj.s12_re[k]),
                    _f(path_obj.s12_im[k]),
                    _f(pur[k]),
                )
            )
        )
    _write(file, lines)


def read_state_path(file) -> StatePath:
    _, header, rows = _read_lines(file)
    if header != STATE_PATH_HEADER:
        raise ValueError(f"unexpected state-path header: {header!r}")
    data = np.array([[float(c) for c in row] for row in rows])
    if data.ndim != 2 or data.shape[1] != 5:
        raise ValueError("state-path rows must have five columns")
    return StatePath(data[:, 0], data[:, 1], data[:, 2], data[:, 3])


def write_record(record: MeasurementRecord, file) -> None:
    lines = [
        f"# t0={_f(record.t0)}",
        f"# window={_f(record.window)}",
        RECORD_HEADER,
    ]
    times = record.times
    for k in range(len(record)):
        lines.append(f"{_f(times[k])},{_f(record.samples[k])}")
    _write(file, lines)


def read_record(file) -> MeasurementRecord:
    meta, header, rows = _read_lines(file)
    if header != RECORD_HEADER:
        raise ValueError(f"unexpected record header: {header!r}")
    samples = np.array([float(row[1]) for row in rows])
    if "t0" in meta and "window" in meta:
        t0 = float(meta["t0"])
        window = float(meta["window"])
    else:
        if len(rows) < 2:
            raise ValueError("record needs t0/window metadata or at least two rows")
        t0 = float(rows[0][0])
        window = float(rows[1][0]) - t0
    return MeasurementRecord(t0=t0, window=window, samples=samples)


def write_summary(summary: EnsembleSummary, file) -> None:
    lines = [
        f"# n_traj={summary.n_traj}",
        f"# master_seed={summary.master_seed}",
        f"# loc_threshold={_f(summary.loc_threshold)}",
        f"# frac_dot1={_f(summary.frac_dot1)}",
        f"# frac_dot2={_f(summary.frac_dot2)}",
        f"# frac_unresolved={_f(summary.frac_unresolved)}",
        SUMMARY_HEADER,
    ]
    cols = (
        summary.times,
        summary.mean_s11,
        summary.var_s11,
        summary.mean_s12_re,
        summary.var_s12_re,
        summary.mean_s12_im,
        summary.var_s12_im,
        summary.mean_purity,
        summary.mean_s11s22,
    )
    for k in range(len(summary.times)):
        lines.append(",".join(_f(col[k]) for col in cols))
    _write(file, lines)


def read_summary(file) -> EnsembleSummary:
    meta, header, rows = _read_lines(file)
    if header != SUMMARY_HEADER:
        raise ValueError(f"unexpected summary header: {header!r}")
    data = np.array([[float(c) for c in row] for row in rows])
    if data.ndim != 2 or data.shape[1] != 9:
        raise ValueError("summary rows must have nine columns")
    return EnsembleSummary(
        n_traj=int(meta["n_traj"]),
        master_seed=int(meta["master_seed"]),
        loc_threshold=float(meta["loc_threshold"]),
        times=data[:, 0],
        mean_s11=data[:, 1],
        var_s11=data[:, 2],
        mean_s12_re=data[:, 3],
        var_s12_re=data[:, 4],
        mean_s12_im=data[:, 5],
        var_s12_im=data[:, 6],
        mean_purity=data[:, 7],
        mean_s11s22=data[:, 8],
        frac_dot1=float(meta["frac_dot1"]),
        frac_dot2=float(meta["frac_dot2"]),
        frac_unresolved=float(meta["frac_unresolved"]),
    )


def write_histogram(hist: CurrentHistogram, file) -> None:
    lines = [
        f"# window={_f(hist.window)}",
        f"# n_samples={hist.n_samples}",
        HISTOGRAM_HEADER,
    ]
    for k in range(len(hist.counts)):
        lines.append(
            f"{_f(hist.bin_edges[k])},{_f(hist.bin_edges[k + 1])},{int(hist.counts[k])}"
        )
    _write(file, lines)


def read_histogram(file) -> CurrentHistogram:
    meta, header, rows = _read_lines(file)
    if header != HISTOGRAM_HEADER:
        raise ValueError(f"unexpected histogram header: {header!r}")
    lefts = [float(r[0]) for r in rows]
    rights = [float(r[1]) for r in rows]
    counts = np.array([int(r[2]) for r in rows])
    edges = np.array(lefts + [rights[-1]])
    return CurrentHistogram(
        bin_edges=edges,
        counts=counts,
        window=float(meta["window"]),
        n_samples=int(meta["n_samples"]),
    )
