"""Command-line entry point.

Subcommands
-----------
run <config>                 execute the run described by an INI file
scenario <name> [--seed N] [--out DIR]
                             write a preset config and execute it
validate <config>            parse a config and report validity checks
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis, figures, master, serialize
from .config import ConfigError, RunConfig, parse_config, scenario, scenario_names, write_config
from .model import (
    ConditionedState,
    coupling_strength,
    decoherence_rate,
    purity,
    validate_low_frequency,
    validate_weak_coupling,
)
from .trajectory import (
    _check_dt,
    derive_seeds,
    reconstruct_from_record,
    run_trajectory,
)


def _f(x) -> str:
    return repr(float(x))


def _print_checks(cfg: RunConfig) -> None:
    ham = cfg.hamiltonian()
    det = cfg.detector()
    for check in (validate_weak_coupling(det), validate_low_frequency(ham, det)):
        print(check)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        _check_dt(ham, det, cfg.dt)
    if caught:
        for w in caught:
            print(f"dt_guard: VIOLATED ({w.message})")
    else:
        print("dt_guard: ok")


def _print_derived(cfg: RunConfig) -> None:
    ham = cfg.hamiltonian()
    det = cfg.detector()
    print(f"mode: {cfg.mode}")
    print(f"delta_i = {det.delta_i:g}, i0 = {det.i0:g}, s_i = {det.s_i:g}")
    print(
        f"gamma_measurement = {det.gamma_measurement:g}, "
        f"gamma_d_extra = {det.gamma_d_extra:g}, tau_loc = {det.tau_loc:g}"
    )
    if ham.h_tunnel != 0.0:
        print(f"coupling_strength = {coupling_strength(ham, det):g}")


def _run_trajectory(cfg: RunConfig, out: Path) -> None:
    res = run_trajectory(cfg.initial_state(), cfg.hamiltonian(), cfg.detector(), cfg.grid())
    serialize.write_state_path(res.path, out / "states.csv")
    serialize.write_record(res.record, out / "record.csv")
    figures.trajectory_figure(res.path, res.record, cfg.detector(), out / "trajectory.png")
    fin = res.final_state
    print(f"final state: s11 = {fin.s11:.6g}, purity = {purity(fin):.6g}")
    print(f"negative current windows: {res.record.negative_fraction:.4g}")
    print(f"wrote {out / 'states.csv'}, {out / 'record.csv'}, {out / 'trajectory.png'}")


def _run_ensemble(cfg: RunConfig, out: Path, n_traj: int) -> None:
    ham, det, grid = cfg.hamiltonian(), cfg.detector(), cfg.grid()
    checkpoints = np.linspace(0.0, grid.t_final, 41)
    summary = analysis.ensemble(
        cfg.initial_state(), ham, det, grid, n_traj, grid.seed,
        checkpoint_times=checkpoints,
    )
    ens_eq = master.solve(cfg.initial_state(), ham, decoherence_rate(det), grid)
    serialize.write_summary(summary, out / "summary.csv")
    serialize.write_state_path(ens_eq.path, out / "master_states.csv")
    figures.ensemble_figure(summary, out / "ensemble.png", ens_eq.path)
    print(
        f"localized fractions: dot1 = {summary.frac_dot1:.4g}, "
        f"dot2 = {summary.frac_dot2:.4g}, unresolved = {summary.frac_unresolved:.4g}"
    )
    print(f"wrote {out / 'summary.csv'}, {out / 'master_states.csv'}, {out / 'ensemble.png'}")


def _run_master(cfg: RunConfig, out: Path) -> None:
    det = cfg.detector()
    res = master.solve(cfg.initial_state(), cfg.hamiltonian(), decoherence_rate(det), cfg.grid())
    serialize.write_state_path(res.path, out / "master_states.csv")
    figures.master_figure(res.path, out / "master.png")
    print(f"step-halving error estimate: {res.error_estimate:.3g}")
    print(f"wrote {out / 'master_states.csv'}, {out / 'master.png'}")


def _run_reconstruct(cfg: RunConfig, out: Path, record_arg: str, config_dir: Path) -> None:
    rec_path = Path(record_arg)
    if not rec_path.is_absolute():
        rec_path = config_dir / rec_path
    if not rec_path.exists():
        raise ConfigError(f"record file not found: {rec_path}")
    record = serialize.read_record(rec_path)
    path = reconstruct_from_record(
        cfg.initial_state(), cfg.hamiltonian(), cfg.detector(), record, dt=cfg.dt
    )
    serialize.write_state_path(path, out / "reconstructed_states.csv")
    figures.trajectory_figure(path, record, cfg.detector(), out / "reconstruct.png")
    fin = path.final_state
    print(f"reconstructed final state: s11 = {fin.s11:.6g}, purity = {purity(fin):.6g}")
    print(f"wrote {out / 'reconstructed_states.csv'}, {out / 'reconstruct.png'}")


def _run_steer(cfg: RunConfig, out: Path) -> None:
    ham, det, grid = cfg.hamiltonian(), cfg.detector(), cfg.grid()
    measured = run_trajectory(cfg.initial_state(), ham, det, grid)
    before = measured.final_state
    pulse = analysis.steering_pulse(before, hbar=ham.hbar)
    after = analysis.apply_pulse(before, pulse)
    recheck_seed = int(derive_seeds(grid.seed, 2)[1])
    recheck = run_trajectory(after, ham, det, replace(grid, seed=recheck_seed))

    serialize.write_state_path(measured.path, out / "measure_states.csv")
    serialize.write_record(measured.record, out / "measure_record.csv")
    serialize.write_state_path(recheck.path, out / "recheck_states.csv")
    serialize.write_record(recheck.record, out / "recheck_record.csv")
    rows = [
        ("pulse_epsilon", pulse.epsilon),
        ("pulse_h_tunnel", pulse.h_tunnel),
        ("pulse_duration", pulse.duration),
        ("pulse_rotation_angle", pulse.rotation_angle),
        ("s11_before_pulse", before.s11),
        ("purity_before_pulse", purity(before)),
        ("s11_after_pulse", after.s11),
        ("s11_recheck_final", recheck.final_state.s11),
        ("recheck_seed", recheck_seed),
    ]
    lines = ["key,value"] + [
        f"{k},{v if isinstance(v, int) else _f(v)}" for k, v in rows
    ]
    (out / "steer_summary.csv").write_text("\n".join(lines) + "\n")
    label = (
        f"pulse eps={pulse.epsilon:.3g} h={pulse.h_tunnel:.3g} "
        f"dur={pulse.duration:.3g}"
    )
    figures.steer_figure(
        measured.path, recheck.path, label, det,
        measured.record, recheck.record, out / "steer.png",
    )
    print(f"state before pulse: s11 = {before.s11:.6g}, purity = {purity(before):.6g}")
    print(label)
    print(f"s11 after pulse = {after.s11!r}; recheck final s11 = {recheck.final_state.s11:.6g}")
    print(f"wrote steer outputs to {out}")


def _execute(cfg: RunConfig, config_dir: Path) -> None:
    if cfg.out_dir is None:
        out = config_dir
    else:
        out = Path(cfg.out_dir)
        if not out.is_absolute():
            out = config_dir / out
    out.mkdir(parents=True, exist_ok=True)
    _print_checks(cfg)
    kind, arg = cfg.parse_mode()
    if kind == "trajectory":
        _run_trajectory(cfg, out)
    elif kind == "ensemble":
        _run_ensemble(cfg, out, int(arg))
    elif kind == "master":
        _run_master(cfg, out)
    elif kind == "reconstruct":
        _run_reconstruct(cfg, out, arg, config_dir)
    else:
        _run_steer(cfg, out)


def _cmd_run(args) -> int:
    cfg = parse_config(args.config)
    _execute(cfg, Path(args.config).resolve().parent)
    return 0


def _cmd_scenario(args) -> int:
    cfg = scenario(args.name, seed=args.seed)
    out = Path(args.out) if args.out is not None else Path.cwd() / args.name
    out.mkdir(parents=True, exist_ok=True)
    write_config(cfg, out / "config.ini")
    print(f"wrote {out / 'config.ini'}")
    _execute(cfg, out.resolve())
    return 0


def _cmd_validate(args) -> int:
    cfg = parse_config(args.config)
    _print_derived(cfg)
    _print_checks(cfg)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dotbayes",
        description="Conditioned-state tracking of a monitored double quantum dot",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a run from a config file")
    p_run.add_argument("config", help="path to an INI config file")
    p_run.set_defaults(func=_cmd_run)

    p_sc = sub.add_parser("scenario", help="run a named preset")
    p_sc.add_argument("name", choices=scenario_names())
    p_sc.add_argument("--seed", type=int, default=None)
    p_sc.add_argument("--out", default=None, help="output directory (default ./<name>)")
    p_sc.set_defaults(func=_cmd_scenario)

    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("config", help="path to an INI config file")
    p_val.set_defaults(func=_cmd_validate)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
