"""Core types and closed-form rates for a continuously monitored double dot.

A single electron occupies one of two coupled quantum dots.  A nearby
point contact carries average current ``i1`` when dot 1 is occupied and
``i2`` when dot 2 is occupied, with white shot noise of spectral density
``s_i`` on top.  The conditioned density matrix is parameterized by the
dot-1 occupation ``s11`` and the coherence ``s12``; ``s22`` is always
``1 - s11`` and is never stored.

Internal units set hbar = 1 by default; the ``hbar`` field exists so a
caller can work in laboratory units if desired.

Key closed forms:

* detector back-action dephasing rate  ``gamma = (i2-i1)^2 / (4 s_i)``
* localization time                    ``tau_loc = 2 s_i / (i2-i1)^2``
* shot noise (Schottky)                ``s_i = 2 e i0 (1 - transparency)``
* dimensionless coupling               ``hbar (i2-i1)^2 / (s_i h_tunnel)``
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# tolerance for state invariants (positivity, purity overshoot)
STATE_ATOL = 1e-9


class InvalidStateError(ValueError):
    """Raised when state components do not form a valid density matrix."""


@dataclass(frozen=True)
class QubitHamiltonian:
    """Two-level Hamiltonian: energy asymmetry and tunnel coupling.

    Parameters
    ----------
    epsilon : float
        Energy difference between the dot levels.
    h_tunnel : float
        Tunneling amplitude between the dots.
    hbar : float
        Planck constant over 2 pi; 1.0 in internal units.
    """

    epsilon: float
    h_tunnel: float
    hbar: float = 1.0

    def __post_init__(self) -> None:
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")

    @property
    def rabi_frequency(self) -> float:
        """Free precession frequency sqrt(4 h_tunnel^2 + epsilon^2)/hbar."""
        return math.sqrt(4.0 * self.h_tunnel**2 + self.epsilon**2) / self.hbar


@dataclass(frozen=True)
class DetectorModel:
    """Point-contact detector coupled to the dot occupation.

    ``gamma_d_extra`` models detector nonideality as an additional pure
    dephasing rate on top of the measurement back action; zero means an
    ideal (quantum-limited) detector.
    """

    i1: float
    i2: float
    s_i: float
    e_charge: float
    gamma_d_extra: float = 0.0

    def __post_init__(self) -> None:
        if self.i1 <= 0 or self.i2 <= 0:
            raise ValueError("detector currents must be positive")
        if self.s_i <= 0:
            raise ValueError("noise spectral density s_i must be positive")
        if self.e_charge <= 0:
            raise ValueError("e_charge must be positive")
        if self.gamma_d_extra < 0:
            raise ValueError("gamma_d_extra must be >= 0")

    @property
    def delta_i(self) -> float:
        """Current contrast i2 - i1 between the two dot positions."""
        return self.i2 - self.i1

    @property
    def i0(self) -> float:
        """Mean current (i1 + i2) / 2."""
        return 0.5 * (self.i1 + self.i2)

    @property
    def gamma_measurement(self) -> float:
        """Back-action dephasing rate delta_i^2 / (4 s_i)."""
        return self.delta_i**2 / (4.0 * self.s_i)

    @property
    def tau_loc(self) -> float:
        """Localization time 2 s_i / delta_i^2 (inf when delta_i = 0)."""
        if self.delta_i == 0.0:
            return math.inf
        return 2.0 * self.s_i / self.delta_i**2

    @property
    def tau_d(self) -> float:
        """Total dephasing time 1 / decoherence_rate (inf if rate is 0)."""
        rate = decoherence_rate(self)
        return math.inf if rate == 0.0 else 1.0 / rate


@dataclass(frozen=True)
class ConditionedState:
    """Qubit density matrix in (s11, s12) form; s22 is derived.

    Invariants enforced on construction: 0 <= s11 <= 1 and
    |s12|^2 <= s11 s22 within a small tolerance.  Tiny violations from
    floating-point roundoff are clamped rather than rejected.
    """

    s11: float
    s12_re: float = 0.0
    s12_im: float = 0.0

    def __post_init__(self) -> None:
        s11 = float(self.s11)
        if math.isnan(s11) or s11 < -STATE_ATOL or s11 > 1.0 + STATE_ATOL:
            raise InvalidStateError(f"s11 = {s11!r} outside [0, 1]")
        s11 = min(max(s11, 0.0), 1.0)
        off2 = self.s12_re**2 + self.s12_im**2
        if off2 > s11 * (1.0 - s11) + STATE_ATOL:
            raise InvalidStateError(
                f"|s12|^2 = {off2!r} exceeds s11*s22 = {s11 * (1.0 - s11)!r}"
            )
        object.__setattr__(self, "s11", s11)
        object.__setattr__(self, "s12_re", float(self.s12_re))
        object.__setattr__(self, "s12_im", float(self.s12_im))

    @property
    def s22(self) -> float:
        return 1.0 - self.s11

    @property
    def s12(self) -> complex:
        return complex(self.s12_re, self.s12_im)


# the master-equation path evolves the same representation
MasterState = ConditionedState


@dataclass(frozen=True)
class SimulationGrid:
    """Uniform time grid with record aggregation windows.

    ``window`` must be an integer multiple of ``dt`` and must tile
    ``[0, t_final]`` exactly; the detector record stores one averaged
    sample per window.
    """

    dt: float
    t_final: float
    window: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_final < self.dt:
            raise ValueError("t_final must be at least one dt")
        if self.window < self.dt:
            raise ValueError("window must be >= dt")
        if self.seed < 0 or self.seed > 2**64 - 1:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        m = self.window / self.dt
        if abs(m - round(m)) > 1e-9 * max(1.0, m):
            raise ValueError("window must be an integer multiple of dt")
        n = self.t_final / self.window
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ValueError("windows must tile [0, t_final] exactly")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    @property
    def steps_per_window(self) -> int:
        return int(round(self.window / self.dt))

    @property
    def n_windows(self) -> int:
        return int(round(self.t_final / self.window))

    @property
    def times(self) -> np.ndarray:
        """Grid times 0, dt, ..., t_final (n_steps + 1 points)."""
        return np.arange(self.n_steps + 1) * self.dt


@dataclass(frozen=True)
class MeasurementRecord:
    """Window-averaged detector current samples.

    ``samples[k]`` is the average current over
    ``[t0 + k*window, t0 + (k+1)*window)``.
    """

    t0: float
    window: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.window <= 0:
            raise ValueError("window must be positive")
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def times(self) -> np.ndarray:
        """Window start times."""
        return self.t0 + np.arange(len(self.samples)) * self.window

    @property
    def duration(self) -> float:
        return len(self.samples) * self.window

    @property
    def negative_fraction(self) -> float:
        """Fraction of window averages below zero.

        The Gaussian outcome model assigns small probability to negative
        currents at short windows; samples are not truncated, they are
        counted here as a diagnostic.
        """
        if len(self.samples) == 0:
            return 0.0
        return float(np.mean(self.samples < 0.0))


@dataclass(frozen=True)
class StatePath:
    """Time series of conditioned states on a uniform grid."""

    times: np.ndarray = field(repr=False)
    s11: np.ndarray = field(repr=False)
    s12_re: np.ndarray = field(repr=False)
    s12_im: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arrays = {}
        n = None
        for name in ("times", "s11", "s12_re", "s12_im"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be one-dimensional")
            if n is None:
                n = len(arr)
            elif len(arr) != n:
                raise ValueError("state path arrays must share one length")
            arrays[name] = arr
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.times)

    def state(self, k: int) -> ConditionedState:
        return ConditionedState(self.s11[k], self.s12_re[k], self.s12_im[k])

    @property
    def final_state(self) -> ConditionedState:
        return self.state(len(self) - 1)

    @property
    def purity_series(self) -> np.ndarray:
        s11 = self.s11
        return s11**2 + (1.0 - s11) ** 2 + 2.0 * (self.s12_re**2 + self.s12_im**2)


@dataclass(frozen=True)
class ValidityCheck:
    """Outcome of a regime-of-validity check; failures warn, never stop."""

    name: str
    passed: bool
    value: float
    limit: float
    detail: str

    def __str__(self) -> str:
        status = "ok" if self.passed else "VIOLATED"
        return f"{self.name}: {status} ({self.detail})"


def purity(state: ConditionedState) -> float:
    """Tr rho^2 = s11^2 + s22^2 + 2 |s12|^2; 1 for pure, 1/2 at the center."""
    return (
        state.s11**2
        + state.s22**2
        + 2.0 * (state.s12_re**2 + state.s12_im**2)
    )


def bloch_vector(state: ConditionedState) -> np.ndarray:
    """Map to (x, y, z) = (2 Re s12, 2 Im s12, 2 s11 - 1)."""
    return np.array(
        [2.0 * state.s12_re, 2.0 * state.s12_im, 2.0 * state.s11 - 1.0]
    )


def state_from_bloch(r) -> ConditionedState:
    """Inverse of :func:`bloch_vector`; requires |r| <= 1 within tolerance."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise ValueError("Bloch vector must have three components")
    norm = float(np.linalg.norm(r))
    if norm > 1.0 + STATE_ATOL:
        raise InvalidStateError(f"Bloch vector norm {norm!r} exceeds 1")
    if norm > 1.0:
        r = r / norm
    return ConditionedState(0.5 * (1.0 + r[2]), 0.5 * r[0], 0.5 * r[1])


def schottky_s_i(i0: float, e_charge: float, transparency: float = 0.0) -> float:
    """Shot-noise spectral density 2 e i0 (1 - transparency).

    ``transparency`` is the transmission probability of the point
    contact; 0 recovers the classical Schottky value.
    """
    if i0 <= 0:
        raise ValueError("i0 must be positive")
    if e_charge <= 0:
        raise ValueError("e_charge must be positive")
    if not 0.0 <= transparency < 1.0:
        raise ValueError("transparency must lie in [0, 1)")
    return 2.0 * e_charge * i0 * (1.0 - transparency)


def decoherence_rate(det: DetectorModel) -> float:
    """Total ensemble dephasing rate delta_i^2/(4 s_i) + gamma_d_extra."""
    return det.gamma_measurement + det.gamma_d_extra


def coupling_strength(ham: QubitHamiltonian, det: DetectorModel) -> float:
    """Dimensionless measurement-to-tunneling ratio hbar delta_i^2 / (s_i h).

    Small values mean tunneling dominates (weakly perturbed coherent
    oscillations); large values mean the detector dominates (Zeno-like
    jumps between the dots).
    """
    if ham.h_tunnel == 0.0:
        raise ValueError("coupling strength undefined for h_tunnel = 0")
    return ham.hbar * det.delta_i**2 / (det.s_i * ham.h_tunnel)


def validate_weak_coupling(det: DetectorModel, threshold: float = 0.1) -> ValidityCheck:
    """Check |delta_i| << i0, reported as |delta_i|/i0 <= threshold."""
    ratio = abs(det.delta_i) / det.i0
    return ValidityCheck(
        name="weak_coupling",
        passed=ratio <= threshold,
        value=ratio,
        limit=threshold,
        detail=f"|delta_i|/i0 = {ratio:.4g}, threshold {threshold:g}",
    )


def validate_low_frequency(
    ham: QubitHamiltonian, det: DetectorModel, threshold: float = 0.1
) -> ValidityCheck:
    """Check Omega << s_i / e^2 for the white-noise treatment of the detector.

    Reported as Omega <= threshold * s_i / e_charge^2.
    """
    limit = threshold * det.s_i / det.e_charge**2
    omega = ham.rabi_frequency
    return ValidityCheck(
        name="low_frequency",
        passed=omega <= limit,
        value=omega,
        limit=limit,
        detail=(
            f"Omega = {omega:.4g}, threshold*s_i/e^2 = {limit:.4g} "
            f"(threshold {threshold:g})"
        ),
    )
