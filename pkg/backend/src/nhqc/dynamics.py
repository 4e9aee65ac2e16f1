"""Post-selected (null-jump) evolution of two-particle states and particle bunching.

The state is renormalized at every output time, |psi(t)> = exp(-iHt)|psi(0)> / norm.
Two propagators are offered: an eigen-expansion of H2 (fast for many output
times, needs a well-conditioned eigenvector matrix) and an adaptive RK45
integration of the amplitude equations through the matrix-free operator.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg as la
from scipy.integrate import solve_ivp

from config import settings

from .errors import NumericalError, ParameterError
from .hamiltonian import apply_h2, build_h2
from .model import ModelParams
from .spectral import SpectrumResult, eigendecompose

logger = logging.getLogger(__name__)

COEFFICIENT_MODES = ("solve", "adjoint")


@dataclass(frozen=True)
class TwoParticleState:
    """Amplitude grid psi[n, m] (spin-up site n, spin-down site m) at time t."""

    amplitudes: np.ndarray
    time: float = 0.0

    @classmethod
    def pair(cls, L: int, n1: int, n2: int) -> "TwoParticleState":
        """Symmetrized pair at sites n1, n2; a single doublon when n1 == n2."""
        if not (0 <= n1 < L and 0 <= n2 < L):
            raise ParameterError(f"sites ({n1}, {n2}) outside [0, {L})")
        amps = np.zeros((L, L), dtype=complex)
        if n1 == n2:
            amps[n1, n1] = 1.0
        else:
            amps[n1, n2] = amps[n2, n1] = 1.0 / np.sqrt(2.0)
        return cls(amps)

    @classmethod
    def doublon(cls, L: int, site: int) -> "TwoParticleState":
        return cls.pair(L, site, site)

    @property
    def L(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "TwoParticleState":
        norm = self.norm
        if norm == 0.0:
            raise NumericalError("cannot normalize the zero state")
        return TwoParticleState(self.amplitudes / norm, self.time)

    def flat(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)


class PropagationMethod(str, Enum):
    SPECTRAL = "spectral"
    DIRECT = "direct"


@dataclass(frozen=True)
class Trajectory:
    states: List[TwoParticleState]
    method: PropagationMethod
    # spectral was requested but the eigenbasis was too ill-conditioned
    fallback: bool = False

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])

    def bunching(self) -> np.ndarray:
        return np.array([bunching_probability(s) for s in self.states])


@dataclass(frozen=True)
class BunchingTime:
    tau0: Optional[float]
    target: float
    t_max: float
    # P_bun stayed at or above target on every later sample
    sustained: bool = False

    @property
    def reached(self) -> bool:
        return self.tau0 is not None


def prepare_pair_state(params: ModelParams, n1: int, n2: int) -> TwoParticleState:
    return TwoParticleState.pair(params.L, n1, n2)


def bunching_probability(state: TwoParticleState) -> float:
    """sum_n |psi[n, n]|^2 of the normalized state."""
    prob = np.abs(state.amplitudes) ** 2
    total = prob.sum()
    if total == 0.0:
        raise NumericalError("bunching probability of the zero state")
    return float(np.trace(prob) / total)


def pair_probability(state: TwoParticleState) -> np.ndarray:
    """Normalized |psi[n, m]|^2 grid."""
    prob = np.abs(state.amplitudes) ** 2
    total = prob.sum()
    if total == 0.0:
        raise NumericalError("probability grid of the zero state")
    return prob / total


def site_density(state: TwoParticleState) -> np.ndarray:
    """Single-particle density, averaged over the two particles."""
    prob = pair_probability(state)
    return 0.5 * (prob.sum(axis=1) + prob.sum(axis=0))


class Propagator:
    """Evolution engine bound to one set of parameters; immutable once built.

    Spectral coefficients C (psi(0) = sum_j C_j v_j) come either from a linear
    solve against the right-eigenvector matrix (``"solve"``, default) or from
    projection on the left eigenvectors, i.e. the eigenvectors of the adjoint
    Hamiltonian (``"adjoint"``).
    """

    def __init__(
        self,
        params: ModelParams,
        method: PropagationMethod,
        spectrum: Optional[SpectrumResult] = None,
        fallback: bool = False,
        coefficient_mode: str = "solve",
        rtol: Optional[float] = None,
        atol: Optional[float] = None,
    ):
        if coefficient_mode not in COEFFICIENT_MODES:
            raise ParameterError(
                f"unknown coefficient mode {coefficient_mode!r}, expected one of {COEFFICIENT_MODES}"
            )
        self.params = params
        self.method = method
        self.spectrum = spectrum
        self.fallback = fallback
        self.coefficient_mode = coefficient_mode
        self.rtol = settings.EVOLVE_RTOL if rtol is None else rtol
        self.atol = settings.EVOLVE_ATOL if atol is None else atol
        self._lu = None
        self._left_norms = None
        if method is PropagationMethod.SPECTRAL:
            if spectrum is None or spectrum.right_eigenvectors is None:
                raise ParameterError("spectral propagation needs eigenvectors")
            if spectrum.near_defective:
                raise NumericalError(
                    f"eigenvector condition {spectrum.eigenvector_condition:.3e} exceeds "
                    f"{settings.MAX_EIGVEC_CONDITION:.1e}"
                )
            if coefficient_mode == "solve":
                self._lu = la.lu_factor(spectrum.right_eigenvectors, check_finite=False)
            else:
                if spectrum.left_eigenvectors is None:
                    raise ParameterError("adjoint coefficients need left eigenvectors")
                self._left_norms = np.einsum(
                    "ij,ij->j", spectrum.left_eigenvectors.conj(), spectrum.right_eigenvectors
                )

    @classmethod
    def spectral(
        cls,
        params: ModelParams,
        spectrum: Optional[SpectrumResult] = None,
        coefficient_mode: str = "solve",
    ) -> "Propagator":
        if spectrum is None:
            spectrum = eigendecompose(build_h2(params).matrix, want_left=coefficient_mode == "adjoint")
        return cls(params, PropagationMethod.SPECTRAL, spectrum, coefficient_mode=coefficient_mode)

    @classmethod
    def direct(cls, params: ModelParams, rtol: Optional[float] = None, atol: Optional[float] = None) -> "Propagator":
        return cls(params, PropagationMethod.DIRECT, rtol=rtol, atol=atol)

    @classmethod
    def build(
        cls,
        params: ModelParams,
        method: str = "spectral",
        spectrum: Optional[SpectrumResult] = None,
    ) -> "Propagator":
        """Spectral when possible, otherwise the direct integrator (flagged)."""
        if PropagationMethod(method) is PropagationMethod.DIRECT:
            return cls.direct(params)
        if spectrum is None:
            spectrum = eigendecompose(build_h2(params).matrix)
        if spectrum.near_defective:
            logger.warning(
                "eigenvector condition %.3e too large; falling back to the direct integrator",
                spectrum.eigenvector_condition,
            )
            return cls(params, PropagationMethod.DIRECT, spectrum=spectrum, fallback=True)
        return cls(params, PropagationMethod.SPECTRAL, spectrum)

    def coefficients(self, state: TwoParticleState) -> np.ndarray:
        """Expansion coefficients C of a state on the right eigenvectors."""
        if self.method is not PropagationMethod.SPECTRAL:
            raise ParameterError("coefficients are defined for the spectral propagator only")
        self._check_shape(state)
        return self._coefficients(state.flat())

    def _coefficients(self, psi: np.ndarray) -> np.ndarray:
        if self._lu is not None:
            return la.lu_solve(self._lu, psi, check_finite=False)
        return (self.spectrum.left_eigenvectors.conj().T @ psi) / self._left_norms

    def propagate(self, state: TwoParticleState, t: float, normalize: bool = True) -> TwoParticleState:
        """State after an additional time t (unnormalized when normalize=False)."""
        self._check_shape(state)
        if t == 0:
            return TwoParticleState(state.amplitudes.copy(), state.time)
        if self.method is PropagationMethod.SPECTRAL:
            flat = self._spectral_step(state.flat(), t, normalize)
        else:
            flat = self._direct_step(state.flat(), t)
            if normalize:
                flat = flat / np.linalg.norm(flat)
        return TwoParticleState(flat.reshape(self.params.L, self.params.L), state.time + t)

    def _spectral_step(self, psi: np.ndarray, t: float, normalize: bool) -> np.ndarray:
        evals = self.spectrum.eigenvalues
        coeffs = self._coefficients(psi)
        # exp(max Im E * t) is factored out so the sum never overflows
        shift = float(np.max(evals.imag))
        factor = np.exp(-1j * evals.real * t + (evals.imag - shift) * t)
        out = self.spectrum.right_eigenvectors @ (coeffs * factor)
        if normalize:
            return out / np.linalg.norm(out)
        return out * np.exp(shift * t)

    def _direct_step(self, psi: np.ndarray, t: float) -> np.ndarray:
        params = self.params

        def rhs(_, y):
            return -1j * apply_h2(params, y)

        sol = solve_ivp(rhs, (0.0, t), psi, method="RK45", rtol=self.rtol, atol=self.atol)
        if not sol.success:
            raise NumericalError(f"direct integration failed: {sol.message}")
        return sol.y[:, -1]

    def evolve(self, state0: TwoParticleState, times: Sequence[float]) -> Trajectory:
        """Normalized states at each output time (ascending, non-negative)."""
        times = np.asarray(times, dtype=float)
        if times.size == 0:
            raise ParameterError("no output times")
        if np.any(times < 0) or np.any(np.diff(times) < 0):
            raise ParameterError("output times must be non-negative and ascending")
        self._check_shape(state0)
        psi0 = TwoParticleState(state0.amplitudes, 0.0)
        states: List[TwoParticleState] = []
        if self.method is PropagationMethod.SPECTRAL:
            for t in times:
                states.append(psi0 if t == 0 else self.propagate(psi0, float(t)))
        else:
            current = psi0
            for t in times:
                if t > current.time:
                    current = self.propagate(current, float(t) - current.time)
                states.append(current)
        return Trajectory(states=states, method=self.method, fallback=self.fallback)

    def attractor_overlap(self, state: TwoParticleState) -> float:
        """|<v_max|psi>| with v_max the eigenstate of largest Im E."""
        if self.spectrum is None or self.spectrum.right_eigenvectors is None:
            raise ParameterError("attractor overlap needs the eigenbasis")
        j = int(np.argmax(self.spectrum.eigenvalues.imag))
        v = self.spectrum.right_eigenvectors[:, j]
        psi = state.flat()
        return float(abs(np.vdot(v, psi)) / (np.linalg.norm(v) * np.linalg.norm(psi)))

    def _check_shape(self, state: TwoParticleState) -> None:
        L = self.params.L
        if state.amplitudes.shape != (L, L):
            raise ParameterError(f"state shape {state.amplitudes.shape} does not match L={L}")


def evolve(
    params: ModelParams,
    state0: TwoParticleState,
    times: Sequence[float],
    method: str = "spectral",
) -> Trajectory:
    return Propagator.build(params, method).evolve(state0, times)


def sample_times(t_max: float, dt: Optional[float] = None) -> np.ndarray:
    dt = settings.EVOLVE_DT if dt is None else dt
    if dt <= 0 or t_max < 0:
        raise ParameterError("need dt > 0 and t_max >= 0")
    n = int(np.floor(t_max / dt + 1e-9))
    times = dt * np.arange(n + 1)
    if times[-1] < t_max:
        times = np.append(times, t_max)
    return times


def bunching_time(
    params: ModelParams,
    n1: int,
    n2: int,
    target: Optional[float] = None,
    t_max: float = 200.0,
    dt: Optional[float] = None,
    propagator: Optional[Propagator] = None,
    resolution: Optional[float] = None,
) -> BunchingTime:
    """First time P_bun reaches target, refined by bisection between samples."""
    target = settings.BUNCHING_TARGET if target is None else target
    resolution = settings.BUNCHING_RESOLUTION if resolution is None else resolution
    if not 0 < target < 1:
        raise ParameterError("target must lie in (0, 1)")
    start = prepare_pair_state(params, n1, n2)
    propagator = propagator or Propagator.build(params)
    trajectory = propagator.evolve(start, sample_times(t_max, dt))
    p_bun = trajectory.bunching()
    hits = np.flatnonzero(p_bun >= target)
    if hits.size == 0:
        return BunchingTime(tau0=None, target=target, t_max=t_max)
    k = int(hits[0])
    sustained = bool(np.all(p_bun[k:] >= target))
    if k == 0:
        return BunchingTime(tau0=0.0, target=target, t_max=t_max, sustained=sustained)

    left = trajectory.states[k - 1]
    lo, hi = 0.0, trajectory.states[k].time - left.time
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if bunching_probability(propagator.propagate(left, mid)) >= target:
            hi = mid
        else:
            lo = mid
    return BunchingTime(tau0=left.time + hi, target=target, t_max=t_max, sustained=sustained)


def pair_distance_series(
    params: ModelParams,
    n1: int,
    d_values: Sequence[int],
    target: Optional[float] = None,
    t_max: float = 200.0,
    dt: Optional[float] = None,
    method: str = "spectral",
) -> List[BunchingTime]:
    """tau0 for particles started at n1 and n1 + d, sharing one propagator."""
    propagator = Propagator.build(params, method)
    return [
        bunching_time(params, n1, (n1 + d) % params.L, target, t_max, dt, propagator)
        for d in d_values
    ]
