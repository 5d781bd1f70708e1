"""Exact Bayesian update of the conditioned state from one current average.

Averaging the detector current over a window of duration ``tau`` yields
a Gaussian outcome around ``i1`` or ``i2`` with variance
``D = s_i / (2 tau)``.  Conditioning on the observed average updates the
occupations by Bayes' rule,

    s11'  =  s11 P1 / (s11 P1 + s22 P2),

which in log-odds form is a single additive increment,

    logit(s11') = logit(s11) + (i0 - i_avg) * delta_i * 2 tau / s_i,

and rescales the coherence so the purity fraction is conserved,

    s12'  =  s12 * sqrt(s11' s22') / sqrt(s11 s22).

The diagonal update telescopes exactly over subdivisions of the window,
so conditioning on one long average or on its consistent sub-averages
gives the same state.  States with s11 in {0, 1} are fixed points.
"""

from __future__ import annotations

import math

import numpy as np

from .model import ConditionedState, DetectorModel, InvalidStateError

_LN2 = math.log(2.0)


def _log_cosh_half(x):
    """log(cosh(x/2)), stable for any finite x."""
    a = np.abs(x) * 0.5
    return a + np.log1p(np.exp(-2.0 * a)) - _LN2


def coherence_scale(logit_before, logit_after):
    """sqrt(s11' s22' / (s11 s22)) expressed through logits.

    Equal to cosh(logit_before/2) / cosh(logit_after/2); evaluated in
    log space so extreme odds do not overflow.
    """
    return np.exp(_log_cosh_half(logit_before) - _log_cosh_half(logit_after))


def _logit(p: float) -> float:
    return math.log(p) - math.log1p(-p)


def diffusion_variance(det: DetectorModel, tau: float) -> float:
    """Variance s_i / (2 tau) of a tau-averaged white-noise current."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    return det.s_i / (2.0 * tau)


def gaussian_likelihood(i_avg, dot: int, det: DetectorModel, tau: float):
    """Density of the window-averaged current given occupation of ``dot``.

    Parameters
    ----------
    i_avg : float or ndarray
        Observed average current over the window.
    dot : int
        1 or 2; selects the conditional mean ``i1`` or ``i2``.
    det : DetectorModel
    tau : float
        Window duration.
    """
    if dot not in (1, 2):
        raise ValueError("dot must be 1 or 2")
    mean = det.i1 if dot == 1 else det.i2
    var = diffusion_variance(det, tau)
    i_avg = np.asarray(i_avg, dtype=float)
    out = np.exp(-((i_avg - mean) ** 2) / (2.0 * var)) / math.sqrt(
        2.0 * math.pi * var
    )
    return out if out.ndim else float(out)


def outcome_distribution(state: ConditionedState, i_avg, det: DetectorModel, tau: float):
    """Predictive density s11 P1(i_avg) + s22 P2(i_avg) of the average."""
    p1 = gaussian_likelihood(i_avg, 1, det, tau)
    p2 = gaussian_likelihood(i_avg, 2, det, tau)
    return state.s11 * p1 + state.s22 * p2


def sample_outcome(
    state: ConditionedState, det: DetectorModel, tau: float, rng: np.random.Generator
) -> float:
    """Draw one window average from the predictive mixture.

    Picks dot 1 with probability s11, else dot 2, then draws a Gaussian
    around the corresponding current.  Negative samples are possible at
    short tau and are kept (see MeasurementRecord.negative_fraction).
    """
    mean = det.i1 if rng.random() < state.s11 else det.i2
    return float(rng.normal(mean, math.sqrt(diffusion_variance(det, tau))))


def bayes_diagonal(
    state: ConditionedState, i_avg: float, det: DetectorModel, tau: float
) -> float:
    """Posterior occupation s11' after observing ``i_avg`` over ``tau``."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    s11 = state.s11
    if s11 in (0.0, 1.0):
        return s11  # degenerate priors are fixed points
    x = _logit(s11) + (det.i0 - i_avg) * det.delta_i * 2.0 * tau / det.s_i
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def update_offdiagonal(state: ConditionedState, s11_after: float) -> complex:
    """Coherence rescaled by sqrt(s11' s22') / sqrt(s11 s22).

    Conserves the purity fraction |s12| / sqrt(s11 s22); in particular a
    pure state stays pure through the measurement update.
    """
    before = state.s11 * state.s22
    if before == 0.0:
        if state.s12_re == 0.0 and state.s12_im == 0.0:
            return 0j
        raise InvalidStateError(
            "coherence must vanish when an occupation is 0 or 1"
        )
    scale = math.sqrt(s11_after * (1.0 - s11_after)) / math.sqrt(before)
    return state.s12 * scale


def bayes_step(
    state: ConditionedState, i_avg: float, det: DetectorModel, tau: float
) -> ConditionedState:
    """Full conditioning on one window: diagonal update plus rescaling."""
    s11_after = bayes_diagonal(state, i_avg, det, tau)
    s12_after = update_offdiagonal(state, s11_after)
    return ConditionedState(s11_after, s12_after.real, s12_after.imag)
