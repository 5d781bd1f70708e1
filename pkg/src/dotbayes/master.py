"""Ensemble-averaged evolution: the deterministic oracle for the engine.

Averaging the conditioned trajectories over the detector record leaves

    ds11/dt = -(2 h / hbar) Im s12
    ds12/dt = (i eps / hbar) s12 + (i h / hbar)(2 s11 - 1) - gamma s12

with gamma the total dephasing rate (detector back action plus any
extra nonideality).  Solved with a fixed-step classical Runge-Kutta
integrator; reproducibility is preferred over adaptivity, and a
step-halving error estimate is reported alongside the solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import MasterState, QubitHamiltonian, SimulationGrid, StatePath


def rhs(
    state: MasterState, ham: QubitHamiltonian, gamma_d: float
) -> tuple[float, float, float]:
    """Time derivative (ds11, d Re s12, d Im s12)."""
    hb = ham.hbar
    a = state.s12_re
    b = state.s12_im
    ds11 = -2.0 * ham.h_tunnel / hb * b
    da = -ham.epsilon / hb * b - gamma_d * a
    db = ham.epsilon / hb * a + ham.h_tunnel / hb * (2.0 * state.s11 - 1.0) - gamma_d * b
    return ds11, da, db


def _rhs_vec(y: np.ndarray, eps: float, h: float, hb: float, gamma: float) -> np.ndarray:
    s, a, b = y
    return np.array(
        [
            -2.0 * h / hb * b,
            -eps / hb * b - gamma * a,
            eps / hb * a + h / hb * (2.0 * s - 1.0) - gamma * b,
        ]
    )


def _rk4_path(y0: np.ndarray, eps, h, hb, gamma, dt: float, n_steps: int) -> np.ndarray:
    out = np.empty((n_steps + 1, 3))
    out[0] = y = y0
    for k in range(n_steps):
        k1 = _rhs_vec(y, eps, h, hb, gamma)
        k2 = _rhs_vec(y + 0.5 * dt * k1, eps, h, hb, gamma)
        k3 = _rhs_vec(y + 0.5 * dt * k2, eps, h, hb, gamma)
        k4 = _rhs_vec(y + dt * k3, eps, h, hb, gamma)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = y
    return out


@dataclass(frozen=True)
class MasterResult:
    """RK4 solution path plus a step-halving error estimate."""

    path: StatePath
    error_estimate: float


def solve(
    initial: MasterState,
    ham: QubitHamiltonian,
    gamma_d: float,
    grid: SimulationGrid,
) -> MasterResult:
    """Integrate the ensemble equations over ``grid`` with classical RK4.

    ``error_estimate`` is the largest component deviation between the
    dt solution and a dt/2 solution at the grid times (fourth-order
    behaviour means the dt solution is accurate to about this value).
    """
    if gamma_d < 0:
        raise ValueError("gamma_d must be >= 0")
    y0 = np.array([initial.s11, initial.s12_re, initial.s12_im])
    args = (ham.epsilon, ham.h_tunnel, ham.hbar, gamma_d)
    coarse = _rk4_path(y0, *args, grid.dt, grid.n_steps)
    fine = _rk4_path(y0, *args, 0.5 * grid.dt, 2 * grid.n_steps)
    err = float(np.max(np.abs(coarse - fine[::2])))
    path = StatePath(grid.times, coarse[:, 0], coarse[:, 1], coarse[:, 2])
    return MasterResult(path=path, error_estimate=err)


def closed_form_h0(
    initial: MasterState,
    epsilon: float,
    gamma_d: float,
    t: float,
    hbar: float = 1.0,
) -> MasterState:
    """Exact solution for h_tunnel = 0.

    The occupations freeze and the coherence precesses and decays:
    s12(t) = s12(0) exp(i eps t / hbar - gamma_d t).
    """
    s12 = complex(initial.s12_re, initial.s12_im) * np.exp(
        complex(-gamma_d * t, epsilon * t / hbar)
    )
    return MasterState(initial.s11, s12.real, s12.imag)
