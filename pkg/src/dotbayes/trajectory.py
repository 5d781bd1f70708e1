"""Stochastic conditioned-state trajectories driven by the detector record.

Each time step of size ``dt`` applies, in fixed order:

1. measurement: draw the current average over ``dt`` around the
   state-conditional mean ``i0 + delta_i (s22 - s11)/2`` with variance
   ``s_i / (2 dt)``, then condition the state on it exactly
   (:mod:`dotbayes.bayes`);
2. deterministic flow: the exact propagator of the tunneling precession
   together with any extra dephasing ``gamma_d_extra``, one 3x3 matrix
   exponential applied to the Bloch vector (for ``h_tunnel = 0`` this
   reduces to a complex factor on s12 and the occupation is untouched).

Both sub-steps are exact maps, so a pure state stays pure to roundoff
when the detector is ideal, and the ``delta_i = 0`` limit reproduces the
ensemble-averaged evolution exactly.  The sub-step order is fixed so a
run is bit-reproducible from (configuration, seed).

Occupations evolve internally in log-odds form: the Bayes increment is
additive there and deep localization never saturates the filter.  The
linearization of the deterministic flow reproduces

    ds11/dt = -(2 h / hbar) Im s12
    ds12/dt = (i eps / hbar) s12 + (i h / hbar)(2 s11 - 1) - gamma s12

which fixes the rotation generator to (-2 h, 0, eps)/hbar on the Bloch
vector (x, y, z) = (2 Re s12, 2 Im s12, 2 s11 - 1).
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.special import expit

from .bayes import coherence_scale
from .model import (
    ConditionedState,
    DetectorModel,
    MeasurementRecord,
    QubitHamiltonian,
    SimulationGrid,
    StatePath,
)

# tanh saturates at this value; clamping keeps arctanh finite
_ZMAX = float(np.nextafter(1.0, 0.0))

# step-size guard: dt should resolve every dynamical timescale
_DT_SAFETY = 0.05

_NOISE_CHUNK = 1024


def derive_seeds(master_seed: int, n: int) -> np.ndarray:
    """Per-trajectory 64-bit seeds derived deterministically from one master.

    Trajectory ``k`` of an ensemble always receives ``seeds[k]``
    regardless of how the ensemble is split across workers.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    return np.random.SeedSequence(master_seed).generate_state(n, np.uint64)


@functools.lru_cache(maxsize=64)
def _flow(epsilon: float, h_tunnel: float, hbar: float, gamma: float, dt: float):
    """Exact dt-propagator of precession plus dephasing on the Bloch vector.

    Returns ("h0", re, im) when h_tunnel = 0 (a complex factor on s12)
    or ("full", 9 matrix entries) otherwise.
    """
    if h_tunnel == 0.0:
        damp = math.exp(-gamma * dt)
        phase = epsilon * dt / hbar
        return ("h0", damp * math.cos(phase), damp * math.sin(phase))
    gen = np.array(
        [
            [-gamma, -epsilon / hbar, 0.0],
            [epsilon / hbar, -gamma, 2.0 * h_tunnel / hbar],
            [0.0, -2.0 * h_tunnel / hbar, 0.0],
        ]
    )
    m = expm(gen * dt)
    return ("full", *(float(m[i, j]) for i in range(3) for j in range(3)))


def _check_dt(ham: QubitHamiltonian, det: DetectorModel, dt: float) -> None:
    scales = [det.tau_loc]
    if ham.rabi_frequency > 0:
        scales.append(1.0 / ham.rabi_frequency)
    if det.gamma_d_extra > 0:
        scales.append(1.0 / det.gamma_d_extra)
    limit = _DT_SAFETY * min(scales)
    if dt > limit:
        warnings.warn(
            f"dt = {dt:g} exceeds {_DT_SAFETY:g} * fastest timescale "
            f"({limit:g}); discretization error may be significant",
            stacklevel=3,
        )


def noise_increment(det: DetectorModel, dt: float, rng: np.random.Generator) -> float:
    """One dt-averaged current-noise sample, N(0, s_i/(2 dt))."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return float(rng.normal(0.0, math.sqrt(det.s_i / (2.0 * dt))))


def detector_sample(
    state: ConditionedState, det: DetectorModel, dt: float, rng: np.random.Generator
) -> float:
    """Current average over dt around the state-conditional mean."""
    mean = det.i0 + 0.5 * det.delta_i * (state.s22 - state.s11)
    return mean + noise_increment(det, dt, rng)


def _measurement_update(x, u, v, xi, i0, delta_i, bayes_c):
    """Exact Bayes conditioning on one dt average; array in, array out.

    Returns (i_t, x', u', v') where i_t is the sampled current average.
    """
    th = np.tanh(0.5 * x)  # s11 - s22
    i_t = i0 - 0.5 * delta_i * th + xi
    x_new = x + (i0 - i_t) * bayes_c
    with np.errstate(invalid="ignore"):
        scale = coherence_scale(x, x_new)
    scale = np.where(np.isfinite(x) & np.isfinite(x_new), scale, 1.0)
    return i_t, x_new, u * scale, v * scale


def _apply_flow(x, u, v, flow):
    """Deterministic propagator in (logit, Re s12, Im s12) coordinates."""
    if flow[0] == "h0":
        _, fr, fi = flow
        return x, fr * u - fi * v, fi * u + fr * v
    _, m00, m01, m02, m10, m11, m12, m20, m21, m22 = flow
    bx = 2.0 * u
    by = 2.0 * v
    bz = np.clip(np.tanh(0.5 * x), -_ZMAX, _ZMAX)
    nbx = m00 * bx + m01 * by + m02 * bz
    nby = m10 * bx + m11 * by + m12 * bz
    nbz = m20 * bx + m21 * by + m22 * bz
    x_new = 2.0 * np.arctanh(np.clip(nbz, -_ZMAX, _ZMAX))
    return x_new, 0.5 * nbx, 0.5 * nby


def _state_to_internal(state: ConditionedState):
    if state.s11 == 0.0:
        x = -math.inf
    elif state.s11 == 1.0:
        x = math.inf
    else:
        x = math.log(state.s11) - math.log1p(-state.s11)
    return x, state.s12_re, state.s12_im


def step(
    state: ConditionedState,
    ham: QubitHamiltonian,
    det: DetectorModel,
    dt: float,
    xi: float,
) -> ConditionedState:
    """One engine step with an externally supplied noise sample ``xi``.

    ``xi`` plays the role of the dt-averaged current noise; pass a draw
    from :func:`noise_increment` for a stochastic step or 0 for the
    noise-free map.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    _check_dt(ham, det, dt)
    flow = _flow(ham.epsilon, ham.h_tunnel, ham.hbar, det.gamma_d_extra, dt)
    bayes_c = 2.0 * det.delta_i * dt / det.s_i
    x, u, v = _state_to_internal(state)
    x = np.float64(x)
    _, x, u, v = _measurement_update(
        x, np.float64(u), np.float64(v), np.float64(xi), det.i0, det.delta_i, bayes_c
    )
    x, u, v = _apply_flow(x, u, v, flow)
    return ConditionedState(float(expit(x)), float(u), float(v))


@dataclass(frozen=True)
class TrajectoryResult:
    """One conditioned trajectory: state path plus its detector record."""

    grid: SimulationGrid
    seed: int
    path: StatePath
    record: MeasurementRecord
    samples: np.ndarray | None = field(default=None, repr=False)

    @property
    def final_state(self) -> ConditionedState:
        return self.path.final_state


@dataclass(frozen=True)
class BatchResult:
    """Lockstep ensemble output; arrays are indexed by trajectory."""

    seeds: np.ndarray
    final_s11: np.ndarray
    final_s12_re: np.ndarray
    final_s12_im: np.ndarray
    checkpoint_steps: np.ndarray
    # shape (n_checkpoints, n_traj) each
    cp_s11: np.ndarray
    cp_s12_re: np.ndarray
    cp_s12_im: np.ndarray
    s11_paths: np.ndarray | None = None
    records: np.ndarray | None = None


def _evolve(
    x,
    u,
    v,
    ham: QubitHamiltonian,
    det: DetectorModel,
    grid: SimulationGrid,
    rngs,
    *,
    checkpoint_steps=(),
    full_path_out=None,
    s11_path_out=None,
    record_out=None,
    i_avg_driver=None,
    sample_out=None,
):
    """Shared inner loop for stochastic runs and record-driven replays.

    ``rngs`` supplies per-trajectory noise when ``i_avg_driver`` is None;
    otherwise the measurement consumes ``i_avg_driver[k]`` at step k and
    no randomness is used.  All output arrays are optional.
    """
    n_steps = grid.n_steps
    spw = grid.steps_per_window
    sigma = math.sqrt(det.s_i / (2.0 * grid.dt))
    bayes_c = 2.0 * det.delta_i * grid.dt / det.s_i
    flow = _flow(ham.epsilon, ham.h_tunnel, ham.hbar, det.gamma_d_extra, grid.dt)
    i0 = det.i0
    delta_i = det.delta_i

    n_traj = len(x)
    acc = np.zeros(n_traj)
    cp_positions = {int(s): j for j, s in enumerate(checkpoint_steps)}
    cp_s11 = np.empty((len(cp_positions), n_traj))
    cp_u = np.empty_like(cp_s11)
    cp_v = np.empty_like(cp_s11)

    def snapshot(k):
        j = cp_positions.get(k)
        if j is not None:
            cp_s11[j] = expit(x)
            cp_u[j] = u
            cp_v[j] = v
        if full_path_out is not None:
            full_path_out[0][:, k] = expit(x)
            full_path_out[1][:, k] = u
            full_path_out[2][:, k] = v
        if s11_path_out is not None:
            s11_path_out[:, k] = expit(x)

    snapshot(0)
    k = 0
    while k < n_steps:
        chunk = min(_NOISE_CHUNK, n_steps - k)
        if i_avg_driver is None:
            noise = np.empty((n_traj, chunk))
            for i, rng in enumerate(rngs):
                noise[i] = rng.normal(0.0, sigma, chunk)
        for j in range(chunk):
            if i_avg_driver is None:
                i_t, x, u, v = _measurement_update(
                    x, u, v, noise[:, j], i0, delta_i, bayes_c
                )
            else:
                i_t = i_avg_driver[k]
                x_new = x + (i0 - i_t) * bayes_c
                with np.errstate(invalid="ignore"):
                    scale = coherence_scale(x, x_new)
                scale = np.where(np.isfinite(x) & np.isfinite(x_new), scale, 1.0)
                x, u, v = x_new, u * scale, v * scale
            x, u, v = _apply_flow(x, u, v, flow)
            if sample_out is not None:
                sample_out[:, k] = i_t
            if record_out is not None:
                acc += i_t
                if (k + 1) % spw == 0:
                    record_out[:, (k + 1) // spw - 1] = acc / spw
                    acc[:] = 0.0
            k += 1
            snapshot(k)
    return x, u, v, cp_s11, cp_u, cp_v


def run_trajectory(
    initial: ConditionedState,
    ham: QubitHamiltonian,
    det: DetectorModel,
    grid: SimulationGrid,
    *,
    keep_samples: bool = False,
) -> TrajectoryResult:
    """Simulate one conditioned trajectory on ``grid``.

    Parameters
    ----------
    initial : ConditionedState
        State at t = 0.
    keep_samples : bool
        Retain the per-dt current averages in addition to the
        window-aggregated record.

    Returns
    -------
    TrajectoryResult
        State path sampled at every grid time plus the detector record
        (one averaged sample per window).  Bit-reproducible for a fixed
        (configuration, grid.seed) pair.
    """
    _check_dt(ham, det, grid.dt)
    rng = np.random.default_rng(int(grid.seed))
    n_steps = grid.n_steps
    x, u0, v0 = _state_to_internal(initial)
    x = np.array([x])
    u = np.array([u0])
    v = np.array([v0])
    path_s11 = np.empty((1, n_steps + 1))
    path_u = np.empty_like(path_s11)
    path_v = np.empty_like(path_s11)
    record = np.empty((1, grid.n_windows))
    samples = np.empty((1, n_steps)) if keep_samples else None
    _evolve(
        x,
        u,
        v,
        ham,
        det,
        grid,
        [rng],
        full_path_out=(path_s11, path_u, path_v),
        record_out=record,
        sample_out=samples,
    )
    path = StatePath(grid.times, path_s11[0], path_u[0], path_v[0])
    rec = MeasurementRecord(0.0, grid.window, record[0])
    return TrajectoryResult(
        grid=grid,
        seed=int(grid.seed),
        path=path,
        record=rec,
        samples=None if samples is None else samples[0],
    )


def run_many(
    initial: ConditionedState,
    ham: QubitHamiltonian,
    det: DetectorModel,
    grid: SimulationGrid,
    seeds,
    *,
    checkpoint_steps=(),
    keep_s11: bool = False,
    keep_records: bool = False,
    block_size: int = 1024,
) -> BatchResult:
    """Run independent trajectories in lockstep, one per entry of ``seeds``.

    Memory stays bounded by processing trajectories in blocks; results
    are identical to running each seed through :func:`run_trajectory`
    (the same inner loop consumes the same per-trajectory noise stream).
    """
    _check_dt(ham, det, grid.dt)
    seeds = np.asarray(seeds, dtype=np.uint64)
    n = len(seeds)
    n_steps = grid.n_steps
    checkpoint_steps = np.asarray(sorted(set(int(s) for s in checkpoint_steps)), dtype=int)
    if len(checkpoint_steps) and (
        checkpoint_steps[0] < 0 or checkpoint_steps[-1] > n_steps
    ):
        raise ValueError("checkpoint steps must lie within the grid")

    final_s11 = np.empty(n)
    final_u = np.empty(n)
    final_v = np.empty(n)
    cp_s11 = np.empty((len(checkpoint_steps), n))
    cp_u = np.empty_like(cp_s11)
    cp_v = np.empty_like(cp_s11)
    s11_paths = np.empty((n, n_steps + 1)) if keep_s11 else None
    records = np.empty((n, grid.n_windows)) if keep_records else None

    x0, u0, v0 = _state_to_internal(initial)
    for lo in range(0, n, block_size):
        hi = min(lo + block_size, n)
        m = hi - lo
        x = np.full(m, x0)
        u = np.full(m, u0)
        v = np.full(m, v0)
        rngs = [np.random.default_rng(int(s)) for s in seeds[lo:hi]]
        out = _evolve(
            x,
            u,
            v,
            ham,
            det,
            grid,
            rngs,
            checkpoint_steps=checkpoint_steps,
            s11_path_out=None if s11_paths is None else s11_paths[lo:hi],
            record_out=None if records is None else records[lo:hi],
        )
        xf, uf, vf, b_s11, b_u, b_v = out
        final_s11[lo:hi] = expit(xf)
        final_u[lo:hi] = uf
        final_v[lo:hi] = vf
        cp_s11[:, lo:hi] = b_s11
        cp_u[:, lo:hi] = b_u
        cp_v[:, lo:hi] = b_v
    return BatchResult(
        seeds=seeds,
        final_s11=final_s11,
        final_s12_re=final_u,
        final_s12_im=final_v,
        checkpoint_steps=checkpoint_steps,
        cp_s11=cp_s11,
        cp_s12_re=cp_u,
        cp_s12_im=cp_v,
        s11_paths=s11_paths,
        records=records,
    )


def reconstruct_from_record(
    initial: ConditionedState,
    ham: QubitHamiltonian,
    det: DetectorModel,
    record: MeasurementRecord,
    dt: float | None = None,
) -> StatePath:
    """Replay the conditioned evolution from a stored detector record.

    Each window's averaged current drives the measurement update for the
    engine steps inside that window.  With ``dt`` equal to the record
    window (the default) and a record retained at the engine resolution,
    the replay reproduces the generating trajectory's states exactly;
    for ``h_tunnel = 0`` the diagonal update telescopes, so coarser
    windows also reconstruct the window-boundary states exactly.

    ``dt`` must divide the record window.
    """
    if dt is None:
        dt = record.window
    spw = record.window / dt
    if abs(spw - round(spw)) > 1e-9 * max(1.0, spw):
        raise ValueError("dt must divide the record window")
    spw = int(round(spw))
    grid = SimulationGrid(
        dt=dt, t_final=record.duration, window=record.window, seed=0
    )
    driver = np.repeat(record.samples, spw)
    x, u0, v0 = _state_to_internal(initial)
    x = np.array([x])
    u = np.array([u0])
    v = np.array([v0])
    n_steps = grid.n_steps
    path_s11 = np.empty((1, n_steps + 1))
    path_u = np.empty_like(path_s11)
    path_v = np.empty_like(path_s11)
    _evolve(
        x,
        u,
        v,
        ham,
        det,
        grid,
        None,
        full_path_out=(path_s11, path_u, path_v),
        i_avg_driver=driver,
    )
    return StatePath(record.t0 + grid.times, path_s11[0], path_u[0], path_v[0])


def purify_from_mixed(
    det: DetectorModel, ham: QubitHamiltonian, grid: SimulationGrid
) -> TrajectoryResult:
    """Monitor the fully mixed state; an ideal detector purifies it.

    Starts from s11 = 1/2 with no coherence and runs one trajectory.
    Requires an ideal detector (gamma_d_extra = 0); with delta_i = 0 the
    run is valid but the purity stays at 1/2 (no information gained).
    """
    if det.gamma_d_extra != 0.0:
        raise ValueError("purification requires an ideal detector")
    return run_trajectory(ConditionedState(0.5), ham, det, grid)
