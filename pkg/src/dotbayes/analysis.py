"""Ensemble statistics, record post-processing, and unitary steering.

The ensemble runner fans independent trajectories out across worker
processes when requested; per-trajectory seeds are derived from one
master seed, so the result is bit-identical for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import (
    ConditionedState,
    DetectorModel,
    MeasurementRecord,
    QubitHamiltonian,
    SimulationGrid,
    StatePath,
    purity,
)
from .trajectory import BatchResult, TrajectoryResult, derive_seeds, run_many

WORKERS_ENV = "DOTBAYES_WORKERS"

# a trajectory counts as localized once max(s11, s22) reaches this
DEFAULT_LOC_THRESHOLD = 0.95

# hysteresis thresholds for jump counting in the Zeno regime
ZENO_LOW = 0.25
ZENO_HIGH = 0.75

_PURE_ATOL = 1e-6


@dataclass(frozen=True, eq=False)
class EnsembleSummary:
    """Checkpoint statistics over an ensemble of conditioned trajectories.

    Variances are population variances (ddof = 0).  Localization
    fractions are evaluated on the final state: dot 1 when
    s11 >= loc_threshold, dot 2 when s22 >= loc_threshold, the rest
    unresolved.
    """

    n_traj: int
    master_seed: int
    loc_threshold: float
    times: np.ndarray = field(repr=False)
    mean_s11: np.ndarray = field(repr=False)
    var_s11: np.ndarray = field(repr=False)
    mean_s12_re: np.ndarray = field(repr=False)
    var_s12_re: np.ndarray = field(repr=False)
    mean_s12_im: np.ndarray = field(repr=False)
    var_s12_im: np.ndarray = field(repr=False)
    mean_purity: np.ndarray = field(repr=False)
    mean_s11s22: np.ndarray = field(repr=False)
    frac_dot1: float
    frac_dot2: float
    frac_unresolved: float


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        raw = os.environ.get(WORKERS_ENV, "1")
        try:
            workers = int(raw)
        except ValueError as exc:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return workers


def _run_block(args) -> BatchResult:
    initial, ham, det, grid, seeds, checkpoint_steps = args
    return run_many(initial, ham, det, grid, seeds, checkpoint_steps=checkpoint_steps)


def _checkpoint_steps(grid: SimulationGrid, checkpoint_times) -> np.ndarray:
    if checkpoint_times is None:
        checkpoint_times = np.linspace(0.0, grid.t_final, 11)
    steps = sorted({int(round(t / grid.dt)) for t in np.asarray(checkpoint_times, float)})
    if steps[0] < 0 or steps[-1] > grid.n_steps:
        raise ValueError("checkpoint times must lie within the grid")
    return np.asarray(steps, dtype=int)


def ensemble(
    initial: ConditionedState,
    ham: QubitHamiltonian,
    det: DetectorModel,
    grid: SimulationGrid,
    n_traj: int,
    master_seed: int,
    *,
    checkpoint_times=None,
    loc_threshold: float = DEFAULT_LOC_THRESHOLD,
    workers: int | None = None,
) -> EnsembleSummary:
    """Run ``n_traj`` independent trajectories and summarize checkpoints.

    Parameters
    ----------
    checkpoint_times : sequence of float, optional
        Times (snapped to the grid) at which statistics are collected;
        default 11 evenly spaced times including 0 and t_final.
    workers : int, optional
        Process count for the fan-out; default from the
        ``DOTBAYES_WORKERS`` environment variable, else 1.  The summary
        does not depend on the worker count.

    Notes
    -----
    Trajectory k uses the seed ``derive_seeds(master_seed, n_traj)[k]``;
    with ``n_traj = 1`` the summary statistics equal the state of that
    single trajectory.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    workers = _resolve_workers(workers)
    steps = _checkpoint_steps(grid, checkpoint_times)
    seeds = derive_seeds(master_seed, n_traj)

    if workers == 1 or n_traj < 2 * workers:
        batch = run_many(initial, ham, det, grid, seeds, checkpoint_steps=steps)
        parts = [batch]
    else:
        bounds = np.linspace(0, n_traj, workers + 1).astype(int)
        jobs = [
            (initial, ham, det, grid, seeds[lo:hi], steps)
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, jobs))

    cp_s11 = np.concatenate([p.cp_s11 for p in parts], axis=1)
    cp_u = np.concatenate([p.cp_s12_re for p in parts], axis=1)
    cp_v = np.concatenate([p.cp_s12_im for p in parts], axis=1)
    fin_s11 = np.concatenate([p.final_s11 for p in parts])

    pur = cp_s11**2 + (1.0 - cp_s11) ** 2 + 2.0 * (cp_u**2 + cp_v**2)
    frac1 = float(np.mean(fin_s11 >= loc_threshold))
    frac2 = float(np.mean(1.0 - fin_s11 >= loc_threshold))
    return EnsembleSummary(
        n_traj=n_traj,
        master_seed=int(master_seed),
        loc_threshold=float(loc_threshold),
        times=steps * grid.dt,
        mean_s11=cp_s11.mean(axis=1),
        var_s11=cp_s11.var(axis=1),
        mean_s12_re=cp_u.mean(axis=1),
        var_s12_re=cp_u.var(axis=1),
        mean_s12_im=cp_v.mean(axis=1),
        var_s12_im=cp_v.var(axis=1),
        mean_purity=pur.mean(axis=1),
        mean_s11s22=(cp_s11 * (1.0 - cp_s11)).mean(axis=1),
        frac_dot1=frac1,
        frac_dot2=frac2,
        frac_unresolved=1.0 - frac1 - frac2,
    )


def running_window_average(record: MeasurementRecord, window_out: float) -> MeasurementRecord:
    """Trailing moving average of the record over ``window_out``.

    ``window_out`` must be an integer multiple of the record window.
    Sample k of the output averages the most recent samples covering
    ``window_out`` (fewer near the start, where the history is shorter).
    Constants are preserved; white-noise variance shrinks by
    window / window_out in the fully covered region.
    """
    m = window_out / record.window
    if abs(m - round(m)) > 1e-9 * max(1.0, m) or window_out < record.window:
        raise ValueError("window_out must be a positive integer multiple of the record window")
    m = int(round(m))
    csum = np.concatenate([[0.0], np.cumsum(record.samples)])
    n = len(record.samples)
    idx = np.arange(1, n + 1)
    lo = np.maximum(idx - m, 0)
    out = (csum[idx] - csum[lo]) / (idx - lo)
    return MeasurementRecord(record.t0, record.window, out)


def cumulative_average(record: MeasurementRecord) -> MeasurementRecord:
    """Average of the record from t0 up to each window (prefix means)."""
    n = len(record.samples)
    out = np.cumsum(record.samples) / np.arange(1, n + 1)
    return MeasurementRecord(record.t0, record.window, out)


def localization_time_estimate(summary: EnsembleSummary, t_max: float | None = None) -> float:
    """Exponential decay time fitted to the ensemble mean of s11*s22.

    Least-squares line through log(mean_s11s22) over checkpoints with
    t <= t_max.  The decay rate is exact only at early times (the
    instantaneous rate at s11 = 1/2 is 1/tau_loc and slows as the
    ensemble spreads), so fit over roughly the first 0.3 tau_loc.
    """
    t = summary.times
    q = summary.mean_s11s22
    keep = q > 0.0
    if t_max is not None:
        keep &= t <= t_max
    if np.sum(keep) < 2:
        raise ValueError("need at least two checkpoints with positive mean_s11s22")
    slope = np.polyfit(t[keep], np.log(q[keep]), 1)[0]
    if slope >= 0:
        raise ValueError("mean_s11s22 does not decay over the fitted window")
    return -1.0 / slope


def zeno_transition_count(
    trajectory, low: float = ZENO_LOW, high: float = ZENO_HIGH
) -> int:
    """Count dot-to-dot jumps of s11 with hysteresis thresholds.

    A transition is registered each time s11 crosses from beyond one
    threshold to beyond the other; excursions that do not reach the far
    threshold are not counted.  Accepts a TrajectoryResult, StatePath,
    or a bare s11 series.
    """
    if not 0.0 <= low < high <= 1.0:
        raise ValueError("thresholds must satisfy 0 <= low < high <= 1")
    if isinstance(trajectory, TrajectoryResult):
        s11 = trajectory.path.s11
    elif isinstance(trajectory, StatePath):
        s11 = trajectory.s11
    else:
        s11 = np.asarray(trajectory, dtype=float)
    count = 0
    side = 0
    for s in s11:
        if s >= high:
            if side == -1:
                count += 1
            side = 1
        elif s <= low:
            if side == 1:
                count += 1
            side = -1
    return count


@dataclass(frozen=True)
class SteeringPulse:
    """Detector-off tunneling pulse (epsilon, h_tunnel) held for ``duration``."""

    epsilon: float
    h_tunnel: float
    duration: float
    hbar: float = 1.0

    @property
    def rotation_angle(self) -> float:
        return (
            math.sqrt(4.0 * self.h_tunnel**2 + self.epsilon**2)
            * self.duration
            / self.hbar
        )


def _bloch_of(state: ConditionedState) -> np.ndarray:
    return np.array([2.0 * state.s12_re, 2.0 * state.s12_im, 2.0 * state.s11 - 1.0])


def _axis_angle_between(r: np.ndarray, g: np.ndarray):
    """Rotation axis in the x-z plane and angle carrying unit r onto unit g.

    The axis is chosen equidistant from r and g (their difference is
    orthogonal to it), which always exists in the x-z plane when g has
    no y component.
    """
    d = r - g
    if float(np.linalg.norm(d)) < 1e-9:
        return np.array([1.0, 0.0, 0.0]), 0.0
    axis = np.array([-d[2], 0.0, d[0]])
    norm = float(np.linalg.norm(axis))
    if norm < 1e-12:
        # d along y alone cannot occur for unit vectors with g_y = 0
        axis, norm = np.array([1.0, 0.0, 0.0]), 1.0
    axis = axis / norm
    r_perp = r - np.dot(axis, r) * axis
    g_perp = g - np.dot(axis, g) * axis
    angle = math.atan2(
        float(np.dot(axis, np.cross(r_perp, g_perp))), float(np.dot(r_perp, g_perp))
    )
    return axis, angle % (2.0 * math.pi)


def _pulse_from_axis_angle(axis: np.ndarray, angle: float, hbar: float) -> SteeringPulse:
    """Realize a Bloch rotation as (epsilon, h_tunnel, duration).

    The engine's precession generator is (-2 h, 0, eps)/hbar, so the
    pulse components follow from hbar * Omega * axis; the magnitude is
    normalized to h_tunnel = +1 (flipping axis and angle together when
    needed, which leaves the rotation unchanged).
    """
    if angle == 0.0:
        return SteeringPulse(epsilon=0.0, h_tunnel=1.0, duration=0.0, hbar=hbar)
    if abs(axis[0]) < 1e-14:
        # pure-epsilon pulse: rotation about z
        omega = 1.0 / hbar
        eps = math.copysign(1.0, axis[2])
        return SteeringPulse(
            epsilon=eps, h_tunnel=0.0, duration=angle / omega, hbar=hbar
        )
    if axis[0] > 0:
        axis = -axis
        angle = (2.0 * math.pi - angle) % (2.0 * math.pi)
    ax, az = float(axis[0]), float(axis[2])
    omega = 2.0 / (hbar * abs(ax))
    eps = 2.0 * az / abs(ax)  # realizes axis direction (ax, 0, az) exactly
    return SteeringPulse(epsilon=eps, h_tunnel=1.0, duration=angle / omega, hbar=hbar)


def _require_pure(state: ConditionedState) -> np.ndarray:
    p = purity(state)
    if p < 1.0 - _PURE_ATOL:
        raise ValueError(
            f"steering requires a pure state (purity {p!r} < 1 - {_PURE_ATOL:g})"
        )
    r = _bloch_of(state)
    n = float(np.linalg.norm(r))
    return r / n if n > 0 else r


def steering_pulse(state: ConditionedState, hbar: float = 1.0) -> SteeringPulse:
    """Detector-off pulse rotating a pure state onto dot 1 (s11 = 1).

    Verified by propagation: applying the returned pulse with the
    detector off takes the state to s11 = 1 up to roundoff.
    """
    r = _require_pure(state)
    axis, angle = _axis_angle_between(r, np.array([0.0, 0.0, 1.0]))
    return _pulse_from_axis_angle(axis, angle, hbar)


def ground_state_pulse(
    state: ConditionedState, ham_target: QubitHamiltonian
) -> SteeringPulse:
    """Pulse rotating a pure state onto the ground state of ``ham_target``.

    The target Bloch direction is -(2 h, 0, eps)/|(2 h, 0, eps)|, the
    lowest-energy eigenstate of the target Hamiltonian.
    """
    n = np.array([2.0 * ham_target.h_tunnel, 0.0, ham_target.epsilon])
    norm = float(np.linalg.norm(n))
    if norm == 0.0:
        raise ValueError("target Hamiltonian has no preferred direction")
    r = _require_pure(state)
    axis, angle = _axis_angle_between(r, -n / norm)
    return _pulse_from_axis_angle(axis, angle, ham_target.hbar)


def apply_pulse(state: ConditionedState, pulse: SteeringPulse) -> ConditionedState:
    """Exact unitary propagation of ``state`` under the pulse (detector off)."""
    omega_vec = (
        np.array([-2.0 * pulse.h_tunnel, 0.0, pulse.epsilon]) / pulse.hbar
    )
    omega = float(np.linalg.norm(omega_vec))
    r = _bloch_of(state)
    if omega == 0.0 or pulse.duration == 0.0:
        r2 = r
    else:
        axis = omega_vec / omega
        ang = omega * pulse.duration
        r2 = (
            r * math.cos(ang)
            + np.cross(axis, r) * math.sin(ang)
            + axis * float(np.dot(axis, r)) * (1.0 - math.cos(ang))
        )
    return ConditionedState(0.5 * (1.0 + r2[2]), 0.5 * r2[0], 0.5 * r2[1])


@dataclass(frozen=True)
class CurrentHistogram:
    """Histogram of window-averaged detector currents."""

    bin_edges: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)
    window: float
    n_samples: int


def current_distribution(
    records,
    window: float,
    t_min: float = 0.0,
    bins: int = 60,
    hist_range: tuple[float, float] | None = None,
) -> CurrentHistogram:
    """Histogram the records re-averaged over non-overlapping windows.

    Parameters
    ----------
    records : iterable of MeasurementRecord
    window : float
        Output averaging window; integer multiple of each record window.
    t_min : float
        Discard record windows starting before this time (e.g. the
        pre-localization transient).

    At long windows after localization under h_tunnel = 0 the
    distribution develops two modes near i1 and i2 rather than a single
    mode at the mean current.
    """
    values = []
    n_records = 0
    for rec in records:
        n_records += 1
        m = window / rec.window
        if abs(m - round(m)) > 1e-9 * max(1.0, m) or window < rec.window:
            raise ValueError("window must be an integer multiple of each record window")
        m = int(round(m))
        keep = rec.samples[rec.times >= t_min - 1e-12 * max(1.0, abs(t_min))]
        full = len(keep) // m
        if full:
            values.append(keep[: full * m].reshape(full, m).mean(axis=1))
    if n_records == 0:
        raise ValueError("no records given")
    data = np.concatenate(values) if values else np.array([])
    if len(data) == 0:
        raise ValueError("records too short for the requested window")
    counts, edges = np.histogram(data, bins=bins, range=hist_range)
    return CurrentHistogram(
        bin_edges=edges, counts=counts, window=window, n_samples=len(data)
    )
