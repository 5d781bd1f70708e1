"""Bayesian conditioned-state tracking of a monitored double quantum dot.

A point-contact detector continuously distinguishes which dot an
electron occupies.  This package simulates the conditioned density
matrix along individual measurement records, reconstructs it from
stored records, compares ensembles against the unconditioned evolution,
and builds detector-off pulses that steer a purified state.
"""

from .analysis import (
    CurrentHistogram,
    EnsembleSummary,
    SteeringPulse,
    apply_pulse,
    cumulative_average,
    current_distribution,
    ensemble,
    ground_state_pulse,
    localization_time_estimate,
    running_window_average,
    steering_pulse,
    zeno_transition_count,
)
from .bayes import (
    bayes_diagonal,
    bayes_step,
    coherence_scale,
    diffusion_variance,
    gaussian_likelihood,
    outcome_distribution,
    sample_outcome,
    update_offdiagonal,
)
from .config import (
    ConfigError,
    RunConfig,
    parse_config,
    parse_config_text,
    scenario,
    scenario_names,
    write_config,
)
from .master import MasterResult, closed_form_h0, solve
from .model import (
    ConditionedState,
    DetectorModel,
    InvalidStateError,
    MasterState,
    MeasurementRecord,
    QubitHamiltonian,
    SimulationGrid,
    StatePath,
    ValidityCheck,
    bloch_vector,
    coupling_strength,
    decoherence_rate,
    purity,
    schottky_s_i,
    state_from_bloch,
    validate_low_frequency,
    validate_weak_coupling,
)
from .serialize import (
    read_histogram,
    read_record,
    read_state_path,
    read_summary,
    write_histogram,
    write_record,
    write_state_path,
    write_summary,
)
from .trajectory import (
    BatchResult,
    TrajectoryResult,
    derive_seeds,
    detector_sample,
    noise_increment,
    purify_from_mixed,
    reconstruct_from_record,
    run_many,
    run_trajectory,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "BatchResult",
    "ConditionedState",
    "ConfigError",
    "CurrentHistogram",
    "DetectorModel",
    "EnsembleSummary",
    "InvalidStateError",
    "MasterResult",
    "MasterState",
    "MeasurementRecord",
    "QubitHamiltonian",
    "RunConfig",
    "SimulationGrid",
    "StatePath",
    "SteeringPulse",
    "TrajectoryResult",
    "ValidityCheck",
    "apply_pulse",
    "bayes_diagonal",
    "bayes_step",
    "bloch_vector",
    "closed_form_h0",
    "coherence_scale",
    "coupling_strength",
    "cumulative_average",
    "current_distribution",
    "decoherence_rate",
    "derive_seeds",
    "detector_sample",
    "diffusion_variance",
    "ensemble",
    "gaussian_likelihood",
    "ground_state_pulse",
    "localization_time_estimate",
    "noise_increment",
    "outcome_distribution",
    "parse_config",
    "parse_config_text",
    "purify_from_mixed",
    "purity",
    "read_histogram",
    "read_record",
    "read_state_path",
    "read_summary",
    "reconstruct_from_record",
    "run_many",
    "run_trajectory",
    "running_window_average",
    "sample_outcome",
    "scenario",
    "scenario_names",
    "schottky_s_i",
    "solve",
    "state_from_bloch",
    "steering_pulse",
    "step",
    "update_offdiagonal",
    "validate_low_frequency",
    "validate_weak_coupling",
    "write_config",
    "write_histogram",
    "write_record",
    "write_state_path",
    "write_summary",
    "zeno_transition_count",
]
