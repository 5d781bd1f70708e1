import math

import numpy as np
import pytest

from dotbayes import (
    ConditionedState,
    DetectorModel,
    QubitHamiltonian,
    SimulationGrid,
    bayes_step,
    closed_form_h0,
    derive_seeds,
    detector_sample,
    noise_increment,
    purify_from_mixed,
    purity,
    reconstruct_from_record,
    run_many,
    run_trajectory,
    step,
)
from dotbayes.master import rhs
from conftest import E_CHARGE

DET_OFF = DetectorModel(i1=10.5, i2=10.5, s_i=1.0, e_charge=E_CHARGE)


def test_derive_seeds():
    seeds = derive_seeds(123, 5)
    assert seeds.dtype == np.uint64
    assert len(seeds) == 5
    assert len(set(seeds.tolist())) == 5
    assert np.array_equal(seeds, derive_seeds(123, 5))
    # a prefix of a longer family is the shorter family
    assert np.array_equal(derive_seeds(123, 8)[:5], seeds)
    with pytest.raises(ValueError):
        derive_seeds(1, -1)


def test_noise_increment_variance(det):
    rng = np.random.default_rng(2)
    dt = 0.01
    draws = np.array([noise_increment(det, dt, rng) for _ in range(200_000)])
    target = det.s_i / (2.0 * dt)
    se = target * math.sqrt(2.0 / len(draws))
    assert abs(draws.var() - target) < 4.0 * se
    assert abs(draws.mean()) < 4.0 * math.sqrt(target / len(draws))
    with pytest.raises(ValueError):
        noise_increment(det, 0.0, rng)


def test_detector_sample_mean(det):
    rng = np.random.default_rng(4)
    st = ConditionedState(0.25)
    draws = np.array([detector_sample(st, det, 1.0, rng) for _ in range(100_000)])
    # occupation-weighted mean: i0 + 0.5 delta_i (s22 - s11) = 10.75
    se = math.sqrt(0.5 / len(draws))
    assert abs(draws.mean() - 10.75) < 4.0 * se


@pytest.mark.filterwarnings("ignore:dt = 1 exceeds")
def test_step_matches_bayes_update(det, ham0):
    # s11 = 0.25 gives conditional mean 10.75; xi = 0.3 yields i_avg = 11.05
    st = ConditionedState(0.25)
    out = step(st, ham0, det, 1.0, 0.3)
    ref = bayes_step(st, 11.05, det, 1.0)
    assert out.s11 == pytest.approx(ref.s11, rel=1e-14)
    with pytest.raises(ValueError):
        step(st, ham0, det, 0.0, 0.0)


def test_step_derivative_matches_component_equations():
    """Finite-difference check of the no-measurement flow direction."""
    ham = QubitHamiltonian(0.9, 0.6)
    det = DetectorModel(i1=10.5, i2=10.5, s_i=1.0, e_charge=E_CHARGE, gamma_d_extra=0.35)
    st = ConditionedState(0.62, 0.21, -0.17)
    dt = 1e-6
    out = step(st, ham, det, dt, 0.0)
    deriv = (
        np.array([out.s11, out.s12_re, out.s12_im])
        - np.array([st.s11, st.s12_re, st.s12_im])
    ) / dt
    expect = rhs(st, ham, det.gamma_d_extra)
    assert deriv == pytest.approx(expect, rel=1e-4, abs=1e-6)


def test_detector_off_rabi_oscillation():
    """delta_i = 0, no dephasing: s11(t) = cos^2(h t / hbar) from dot 1."""
    ham = QubitHamiltonian(0.0, 0.7)
    grid = SimulationGrid(dt=0.001, t_final=3.0, window=0.01, seed=0)
    res = run_trajectory(ConditionedState(1.0), ham, DET_OFF, grid)
    expect = np.cos(0.7 * grid.times) ** 2
    assert np.max(np.abs(res.path.s11 - expect)) < 1e-9


def test_detector_off_dephasing_is_exact():
    """h = 0 flow is the closed-form phase/damping factor per step."""
    ham = QubitHamiltonian(1.1, 0.0)
    det = DetectorModel(i1=10.5, i2=10.5, s_i=1.0, e_charge=E_CHARGE, gamma_d_extra=0.3)
    grid = SimulationGrid(dt=0.01, t_final=5.0, window=0.1, seed=1)
    res = run_trajectory(ConditionedState(0.5, 0.5, 0.0), ham, det, grid)
    for k in (50, 200, 500):
        t = grid.times[k]
        ref = closed_form_h0(ConditionedState(0.5, 0.5, 0.0), 1.1, 0.3, t)
        assert res.path.s12_re[k] == pytest.approx(ref.s12_re, abs=1e-12)
        assert res.path.s12_im[k] == pytest.approx(ref.s12_im, abs=1e-12)
        assert res.path.s11[k] == 0.5


def test_localized_state_is_fixed_point(det, ham0):
    grid = SimulationGrid(dt=0.01, t_final=1.0, window=0.1, seed=6)
    res = run_trajectory(ConditionedState(1.0), ham0, det, grid)
    assert np.all(res.path.s11 == 1.0)
    assert np.all(res.path.s12_re == 0.0)
    # record samples sit around the dot-1 current
    assert abs(res.record.samples.mean() - det.i1) < 1.0


def test_ideal_trajectories_stay_pure(det):
    for ham, init in (
        (QubitHamiltonian(0.0, 0.0), ConditionedState(0.5, 0.5, 0.0)),
        (QubitHamiltonian(1.0 / 3.0, 1.0 / 3.0), ConditionedState(1.0)),
    ):
        grid = SimulationGrid(dt=0.005, t_final=4.0, window=0.05, seed=12)
        res = run_trajectory(init, ham, det, grid)
        assert np.max(1.0 - res.path.purity_series) < 1e-12


def test_record_round_trip_exact(det):
    """Replaying a record kept at engine resolution reproduces the path."""
    for ham in (QubitHamiltonian(0.0, 0.0), QubitHamiltonian(1.0 / 3.0, 1.0 / 3.0)):
        grid = SimulationGrid(dt=0.01, t_final=1.0, window=0.01, seed=33)
        res = run_trajectory(ConditionedState(0.5, 0.5, 0.0), ham, det, grid)
        rep = reconstruct_from_record(ConditionedState(0.5, 0.5, 0.0), ham, det, res.record)
        assert np.max(np.abs(rep.s11 - res.path.s11)) < 1e-10
        assert np.max(np.abs(rep.s12_re - res.path.s12_re)) < 1e-10
        assert np.max(np.abs(rep.s12_im - res.path.s12_im)) < 1e-10


def test_coarse_window_replay_hits_boundaries_without_tunneling(det, ham0):
    """For h = 0 the update telescopes: window averages alone recover the
    window-boundary states."""
    grid = SimulationGrid(dt=0.02, t_final=2.0, window=0.1, seed=14)
    init = ConditionedState(0.5, 0.3, -0.2)
    res = run_trajectory(init, ham0, det, grid)
    rep = reconstruct_from_record(init, ham0, det, res.record)  # dt = window
    spw = grid.steps_per_window
    assert np.max(np.abs(rep.s11 - res.path.s11[::spw])) < 1e-12
    assert np.max(np.abs(rep.s12_re - res.path.s12_re[::spw])) < 1e-12


def test_replay_dt_must_divide_window(det, ham0):
    rec_grid = SimulationGrid(dt=0.1, t_final=1.0, window=0.1, seed=0)
    res = run_trajectory(ConditionedState(0.5), ham0, det, rec_grid)
    with pytest.raises(ValueError):
        reconstruct_from_record(ConditionedState(0.5), ham0, det, res.record, dt=0.03)


def test_replay_converges_first_order_in_dt(det):
    """Halving the replay step at fixed record roughly halves the error."""
    ham = QubitHamiltonian(1.0 / 3.0, 1.0 / 3.0)
    init = ConditionedState(1.0)
    grid = SimulationGrid(dt=0.05, t_final=4.0, window=0.1, seed=9)
    rec = run_trajectory(init, ham, det, grid).record

    def boundary_s11(dt):
        path = reconstruct_from_record(init, ham, det, rec, dt=dt)
        k = int(round(grid.window / dt))
        return path.s11[::k]

    ref = boundary_s11(grid.window / 64.0)
    err = np.max(np.abs(boundary_s11(0.1) - ref))
    err_half = np.max(np.abs(boundary_s11(0.05) - ref))
    assert err_half <= 0.7 * err


def test_run_many_matches_single_runs(det):
    ham = QubitHamiltonian(1.0 / 3.0, 1.0 / 3.0)
    grid = SimulationGrid(dt=0.01, t_final=2.0, window=0.1)
    seeds = derive_seeds(7, 4)
    batch = run_many(
        ConditionedState(1.0), ham, det, grid, seeds,
        checkpoint_steps=[0, 100, 200], keep_s11=True, keep_records=True,
    )
    for k, seed in enumerate(seeds):
        single = run_trajectory(
            ConditionedState(1.0), ham, det,
            SimulationGrid(dt=0.01, t_final=2.0, window=0.1, seed=int(seed)),
        )
        assert batch.final_s11[k] == single.final_state.s11
        assert batch.final_s12_re[k] == single.final_state.s12_re
        assert batch.final_s12_im[k] == single.final_state.s12_im
        assert np.array_equal(batch.s11_paths[k], single.path.s11)
        assert np.array_equal(batch.records[k], single.record.samples)
        assert batch.cp_s11[1, k] == single.path.s11[100]
        assert batch.cp_s11[2, k] == single.path.s11[200]


def test_block_size_does_not_change_results(det, ham0):
    grid = SimulationGrid(dt=0.02, t_final=1.0, window=0.1)
    seeds = derive_seeds(19, 7)
    a = run_many(ConditionedState(0.5), ham0, det, grid, seeds, block_size=3)
    b = run_many(ConditionedState(0.5), ham0, det, grid, seeds, block_size=1024)
    assert np.array_equal(a.final_s11, b.final_s11)
    assert np.array_equal(a.final_s12_re, b.final_s12_re)


def test_noise_stream_is_length_invariant(det, ham0):
    """A shorter run is a prefix of a longer run with the same seed, even
    across the internal chunk boundary."""
    long_grid = SimulationGrid(dt=0.001, t_final=1.2, window=0.01, seed=77)
    short_grid = SimulationGrid(dt=0.001, t_final=0.6, window=0.01, seed=77)
    long_res = run_trajectory(ConditionedState(0.5), ham0, det, long_grid)
    short_res = run_trajectory(ConditionedState(0.5), ham0, det, short_grid)
    n = short_grid.n_steps + 1
    assert np.array_equal(long_res.path.s11[:n], short_res.path.s11)
    assert np.array_equal(
        long_res.record.samples[: short_grid.n_windows], short_res.record.samples
    )


def test_checkpoint_steps_validated(det, ham0):
    grid = SimulationGrid(dt=0.1, t_final=1.0, window=0.1)
    with pytest.raises(ValueError):
        run_many(ConditionedState(0.5), ham0, det, grid, derive_seeds(0, 2),
                 checkpoint_steps=[11])


def test_dt_guard_warns():
    ham = QubitHamiltonian(0.0, 50.0)  # fast oscillation vs dt = 0.1
    det = DetectorModel(i1=10.0, i2=11.0, s_i=1.0, e_charge=E_CHARGE)
    grid = SimulationGrid(dt=0.1, t_final=1.0, window=0.1, seed=0)
    with pytest.warns(UserWarning, match="fastest timescale"):
        run_trajectory(ConditionedState(1.0), ham, det, grid)


def test_purify_from_mixed(det, ham0):
    grid = SimulationGrid(dt=0.01, t_final=20.0, window=0.1, seed=3)
    res = purify_from_mixed(det, ham0, grid)
    assert purity(res.final_state) > 0.99
    bad = DetectorModel(i1=10.0, i2=11.0, s_i=1.0, e_charge=E_CHARGE, gamma_d_extra=0.1)
    with pytest.raises(ValueError):
        purify_from_mixed(bad, ham0, grid)


def test_keep_samples_consistent_with_record(det, ham0):
    grid = SimulationGrid(dt=0.02, t_final=1.0, window=0.1, seed=8)
    res = run_trajectory(ConditionedState(0.5), ham0, det, grid, keep_samples=True)
    spw = grid.steps_per_window
    rebuilt = res.samples.reshape(-1, spw).mean(axis=1)
    assert rebuilt == pytest.approx(res.record.samples, rel=1e-12)
