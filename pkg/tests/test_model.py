import math

import numpy as np
import pytest

from dotbayes import (
    ConditionedState,
    DetectorModel,
    InvalidStateError,
    MeasurementRecord,
    QubitHamiltonian,
    SimulationGrid,
    StatePath,
    bloch_vector,
    coupling_strength,
    decoherence_rate,
    purity,
    schottky_s_i,
    state_from_bloch,
    validate_low_frequency,
    validate_weak_coupling,
)
from conftest import E_CHARGE


def test_schottky_value():
    assert schottky_s_i(10.5, 1.0) == pytest.approx(21.0, rel=1e-15)
    assert schottky_s_i(10.5, 1.0, transparency=0.5) == pytest.approx(10.5)
    # the reference detector is Schottky-consistent by construction
    assert schottky_s_i(10.5, E_CHARGE) == pytest.approx(1.0, rel=1e-15)


def test_schottky_rejects_bad_inputs():
    with pytest.raises(ValueError):
        schottky_s_i(0.0, 1.0)
    with pytest.raises(ValueError):
        schottky_s_i(1.0, -1.0)
    with pytest.raises(ValueError):
        schottky_s_i(1.0, 1.0, transparency=1.0)


def test_rabi_frequency():
    assert QubitHamiltonian(3.0, 2.0).rabi_frequency == pytest.approx(5.0)
    assert QubitHamiltonian(3.0, 2.0, hbar=2.0).rabi_frequency == pytest.approx(2.5)
    with pytest.raises(ValueError):
        QubitHamiltonian(0.0, 0.0, hbar=0.0)


def test_detector_derived_quantities(det):
    assert det.delta_i == pytest.approx(1.0)
    assert det.i0 == pytest.approx(10.5)
    assert det.gamma_measurement == pytest.approx(0.25)
    assert det.tau_loc == pytest.approx(2.0)
    assert det.tau_d == pytest.approx(4.0)
    assert decoherence_rate(det) == pytest.approx(0.25)


def test_detector_with_extra_dephasing():
    d = DetectorModel(i1=10.0, i2=11.0, s_i=1.0, e_charge=E_CHARGE, gamma_d_extra=0.25)
    assert decoherence_rate(d) == pytest.approx(0.5)
    assert d.tau_d == pytest.approx(2.0)


def test_detector_off_has_infinite_tau_loc():
    d = DetectorModel(i1=10.5, i2=10.5, s_i=1.0, e_charge=E_CHARGE)
    assert d.delta_i == 0.0
    assert math.isinf(d.tau_loc)
    assert d.gamma_measurement == 0.0
    assert math.isinf(d.tau_d)


def test_detector_validation():
    with pytest.raises(ValueError):
        DetectorModel(i1=-1.0, i2=1.0, s_i=1.0, e_charge=1.0)
    with pytest.raises(ValueError):
        DetectorModel(i1=1.0, i2=2.0, s_i=0.0, e_charge=1.0)
    with pytest.raises(ValueError):
        DetectorModel(i1=1.0, i2=2.0, s_i=1.0, e_charge=1.0, gamma_d_extra=-0.1)


def test_state_invariants():
    st = ConditionedState(0.3, 0.1, -0.2)
    assert st.s22 == pytest.approx(0.7)
    assert st.s12 == complex(0.1, -0.2)
    # roundoff-sized violations clamp instead of raising
    assert ConditionedState(-1e-12).s11 == 0.0
    assert ConditionedState(1.0 + 1e-12).s11 == 1.0
    with pytest.raises(InvalidStateError):
        ConditionedState(1.5)
    with pytest.raises(InvalidStateError):
        ConditionedState(float("nan"))
    with pytest.raises(InvalidStateError):
        ConditionedState(0.9, 0.4, 0.0)  # |s12|^2 > s11 s22


def test_purity_limits():
    assert purity(ConditionedState(1.0)) == pytest.approx(1.0)
    assert purity(ConditionedState(0.5, 0.5, 0.0)) == pytest.approx(1.0)
    assert purity(ConditionedState(0.5)) == pytest.approx(0.5)


def test_bloch_round_trip():
    rng = np.random.default_rng(11)
    for _ in range(50):
        r = rng.normal(size=3)
        r *= rng.uniform(0.0, 1.0) / np.linalg.norm(r)
        st = state_from_bloch(r)
        assert bloch_vector(st) == pytest.approx(r, abs=1e-12)
    with pytest.raises(InvalidStateError):
        state_from_bloch([1.1, 0.0, 0.0])
    # norms within tolerance of 1 are renormalized
    st = state_from_bloch([1.0 + 1e-10, 0.0, 0.0])
    assert np.linalg.norm(bloch_vector(st)) <= 1.0 + 1e-15


def test_grid_properties():
    g = SimulationGrid(dt=0.02, t_final=2.0, window=0.1, seed=5)
    assert g.n_steps == 100
    assert g.steps_per_window == 5
    assert g.n_windows == 20
    assert g.times[0] == 0.0
    assert g.times[-1] == pytest.approx(2.0)
    assert len(g.times) == 101


def test_grid_validation():
    with pytest.raises(ValueError):
        SimulationGrid(dt=0.0, t_final=1.0, window=0.1)
    with pytest.raises(ValueError):
        SimulationGrid(dt=0.03, t_final=1.0, window=0.1)  # window not multiple
    with pytest.raises(ValueError):
        SimulationGrid(dt=0.1, t_final=1.05, window=0.1)  # windows do not tile
    with pytest.raises(ValueError):
        SimulationGrid(dt=0.1, t_final=1.0, window=0.05)  # window < dt
    with pytest.raises(ValueError):
        SimulationGrid(dt=0.1, t_final=1.0, window=0.1, seed=-1)
    with pytest.raises(ValueError):
        SimulationGrid(dt=0.1, t_final=1.0, window=0.1, seed=2**64)


def test_record_properties():
    rec = MeasurementRecord(1.0, 0.5, [10.0, -1.0, 11.0, 10.5])
    assert rec.times == pytest.approx([1.0, 1.5, 2.0, 2.5])
    assert rec.duration == pytest.approx(2.0)
    assert rec.negative_fraction == pytest.approx(0.25)
    assert len(rec) == 4
    with pytest.raises(ValueError):
        MeasurementRecord(0.0, 0.0, [1.0])
    with pytest.raises(ValueError):
        MeasurementRecord(0.0, 1.0, [[1.0]])


def test_state_path():
    path = StatePath([0.0, 1.0], [0.5, 0.8], [0.5, 0.0], [0.0, 0.0])
    assert path.state(0) == ConditionedState(0.5, 0.5, 0.0)
    assert path.final_state.s11 == pytest.approx(0.8)
    assert path.purity_series == pytest.approx([1.0, 0.68])
    with pytest.raises(ValueError):
        StatePath([0.0, 1.0], [0.5], [0.0, 0.0], [0.0, 0.0])


def test_coupling_strength(det):
    assert coupling_strength(QubitHamiltonian(0.0, 1.0 / 3.0), det) == pytest.approx(3.0)
    assert coupling_strength(QubitHamiltonian(0.0, 1.0 / 30.0), det) == pytest.approx(30.0)
    with pytest.raises(ValueError):
        coupling_strength(QubitHamiltonian(1.0, 0.0), det)


def test_validity_checks(det):
    ok = validate_weak_coupling(det)
    assert ok.passed and "ok" in str(ok)
    strong = DetectorModel(i1=5.0, i2=15.0, s_i=1.0, e_charge=0.05)
    bad = validate_weak_coupling(strong)
    assert not bad.passed and "VIOLATED" in str(bad)

    slow = validate_low_frequency(QubitHamiltonian(0.0, 1.0), det)
    assert slow.passed
    fast = validate_low_frequency(QubitHamiltonian(0.0, 5000.0), det)
    assert not fast.passed
