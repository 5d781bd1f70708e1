import numpy as np
import pytest

from dotbayes import (
    ConditionedState,
    QubitHamiltonian,
    SimulationGrid,
    closed_form_h0,
    decoherence_rate,
    solve,
)
from dotbayes.master import rhs


def test_closed_form_value():
    # gamma t = 1 with no detuning: plain exponential decay of Re s12
    out = closed_form_h0(ConditionedState(0.5, 0.5, 0.0), 0.0, 0.25, 4.0)
    assert out.s12_re == pytest.approx(0.18393972058572117, rel=1e-14)
    assert out.s12_im == 0.0
    assert out.s11 == 0.5


def test_closed_form_phase():
    out = closed_form_h0(ConditionedState(0.5, 0.5, 0.0), np.pi, 0.0, 0.5)
    # quarter turn: Re -> 0, Im -> +1/2
    assert out.s12_re == pytest.approx(0.0, abs=1e-15)
    assert out.s12_im == pytest.approx(0.5, rel=1e-14)


def test_rhs_components():
    ham = QubitHamiltonian(0.9, 0.6)
    ds11, da, db = rhs(ConditionedState(0.62, 0.21, -0.17), ham, 0.35)
    assert ds11 == pytest.approx(-2.0 * 0.6 * -0.17)
    assert da == pytest.approx(-0.9 * -0.17 - 0.35 * 0.21)
    assert db == pytest.approx(0.9 * 0.21 + 0.6 * (2 * 0.62 - 1) - 0.35 * -0.17)


def test_solver_matches_closed_form_without_tunneling():
    ham = QubitHamiltonian(1.3, 0.0)
    grid = SimulationGrid(dt=0.01, t_final=4.0, window=0.1)
    res = solve(ConditionedState(0.5, 0.5, 0.0), ham, 0.25, grid)
    for k in (100, 400):
        ref = closed_form_h0(ConditionedState(0.5, 0.5, 0.0), 1.3, 0.25, grid.times[k])
        assert res.path.s12_re[k] == pytest.approx(ref.s12_re, abs=1e-8)
        assert res.path.s12_im[k] == pytest.approx(ref.s12_im, abs=1e-8)
    assert res.error_estimate < 1e-8


def test_solver_fourth_order_convergence(det):
    ham = QubitHamiltonian(1.0 / 3.0, 1.0 / 3.0)
    init = ConditionedState(1.0)
    gamma = decoherence_rate(det)
    fine = solve(init, ham, gamma, SimulationGrid(dt=0.005, t_final=8.0, window=0.04))
    coarse = solve(init, ham, gamma, SimulationGrid(dt=0.04, t_final=8.0, window=0.04))
    dev = abs(coarse.path.s11[-1] - fine.path.s11[-1])
    assert dev < 1e-7
    # the reported estimate bounds the dt->dt/2 difference by construction
    assert coarse.error_estimate < 1e-6
    assert fine.error_estimate < coarse.error_estimate


def test_mixed_state_is_stationary():
    ham = QubitHamiltonian(0.7, 0.4)
    grid = SimulationGrid(dt=0.02, t_final=2.0, window=0.1)
    res = solve(ConditionedState(0.5), ham, 0.3, grid)
    assert np.max(np.abs(res.path.s11 - 0.5)) == 0.0
    assert np.max(np.abs(res.path.s12_re)) == 0.0
    assert res.error_estimate == 0.0


def test_oscillations_damp_toward_half(det):
    """Strong-dephasing ensemble relaxes to equal occupations."""
    ham = QubitHamiltonian(1.0 / 3.0, 1.0 / 3.0)
    grid = SimulationGrid(dt=0.01, t_final=60.0, window=0.2)
    res = solve(ConditionedState(1.0), ham, decoherence_rate(det), grid)
    assert res.path.s11[-1] == pytest.approx(0.5, abs=1e-3)


def test_negative_gamma_rejected():
    with pytest.raises(ValueError):
        solve(ConditionedState(0.5), QubitHamiltonian(0.0, 1.0), -0.1,
              SimulationGrid(dt=0.1, t_final=1.0, window=0.1))
