"""Point-gap winding numbers from the phase of det(H(theta / L, h) - E_B).

The determinant is evaluated through an LU factorization, accumulating
log-magnitudes and phases of the pivots so that L^2 x L^2 determinants never
overflow. The phase is unwrapped along a uniform theta grid under the
assumption that it moves by less than pi between neighbouring samples.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg as la
from joblib import Parallel, delayed
from pydantic import BaseModel

from config import settings

from .errors import NumericalError, ParameterError, SpectrumProximityError, WindingResolutionError
from .hamiltonian import build_h1, build_h2
from .model import ModelParams

logger = logging.getLogger(__name__)

THETA_SCALES = ("literal", "full")
MIN_SAMPLES = 64


class WindingMethod(str, Enum):
    PHASE_UNWRAP = "phase_unwrap"
    SLOPE_APPROX = "slope_approx"


@dataclass(frozen=True)
class WindingResult:
    base_energy: complex
    winding: int
    method: WindingMethod
    theta_samples: int
    # smallest |E - E_B| over the gap-check angles only: every sample in the
    # single sector, WINDING_GAP_ANGLES evenly spaced angles in the two-particle one
    min_gap: float
    theta: np.ndarray
    log_abs_det: np.ndarray
    omega: np.ndarray

    def summary(self) -> "WindingSummary":
        return WindingSummary(
            base_energy_re=self.base_energy.real,
            base_energy_im=self.base_energy.imag,
            winding=self.winding,
            method=self.method.value,
            theta_samples=self.theta_samples,
            min_gap=self.min_gap,
        )

    def trace_rows(self) -> List[dict]:
        return [
            {"theta": float(t), "log_abs_det": float(a), "omega": float(w)}
            for t, a, w in zip(self.theta, self.log_abs_det, self.omega)
        ]


class WindingSummary(BaseModel):
    base_energy_re: float
    base_energy_im: float
    winding: int
    method: str
    theta_samples: int
    min_gap: float  # see WindingResult.min_gap


def wrap_phase(x):
    """Map angles onto (-pi, pi]."""
    return np.angle(np.exp(1j * np.asarray(x)))


def log_det(matrix: np.ndarray) -> Tuple[float, float]:
    """(log|det A|, arg det A) from a partially pivoted LU factorization."""
    lu, piv = la.lu_factor(matrix, check_finite=False)
    pivots = np.diag(lu)
    if np.any(pivots == 0):
        raise NumericalError("matrix is exactly singular; base energy is an eigenvalue")
    swaps = np.count_nonzero(piv != np.arange(piv.size))
    log_abs = float(np.sum(np.log(np.abs(pivots))))
    phase = float(wrap_phase(np.sum(np.angle(pivots)) + np.pi * swaps))
    return log_abs, phase


def _sector_matrix(params: ModelParams, sector: str, theta_shift: float) -> np.ndarray:
    if sector == "single":
        return build_h1(params, theta_shift).matrix
    if sector == "two":
        return build_h2(params, theta_shift).matrix
    raise ParameterError(f"unknown sector {sector!r}")


def _phase_shift(theta: float, L: int, theta_scale: str) -> float:
    if theta_scale == "literal":
        return theta / L
    if theta_scale == "full":
        return theta
    raise ParameterError(f"unknown theta scale {theta_scale!r}, expected one of {THETA_SCALES}")


def _det_sample(params, base_energy, sector, theta, theta_scale) -> Tuple[float, float]:
    matrix = _sector_matrix(params, sector, _phase_shift(theta, params.L, theta_scale))
    matrix[np.diag_indices_from(matrix)] -= base_energy
    return log_det(matrix)


def _det_trace(params, base_energy, sector, thetas, theta_scale, n_jobs) -> Tuple[np.ndarray, np.ndarray]:
    values = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_det_sample)(params, base_energy, sector, float(t), theta_scale) for t in thetas
    )
    log_abs, phase = zip(*values)
    return np.asarray(log_abs), np.asarray(phase)


def spectral_gap(
    params: ModelParams,
    base_energy: complex,
    sector: str,
    thetas: np.ndarray,
    theta_scale: str = "literal",
) -> float:
    """Smallest |E - E_B| over the spectra at the given theta values."""
    gap = math.inf
    for t in thetas:
        matrix = _sector_matrix(params, sector, _phase_shift(float(t), params.L, theta_scale))
        evals = la.eigvals(matrix, check_finite=False)
        gap = min(gap, float(np.min(np.abs(evals - base_energy))))
    return gap


def _check_gap(params, base_energy, sector, theta_scale, angles, tol) -> float:
    thetas = 2.0 * np.pi * np.arange(angles) / angles
    gap = spectral_gap(params, base_energy, sector, thetas, theta_scale)
    if gap < tol:
        raise SpectrumProximityError(base_energy, gap, tol)
    return gap


def winding_number(
    params: ModelParams,
    base_energy: complex,
    sector: str = "two",
    n_samples: Optional[int] = None,
    max_samples: Optional[int] = None,
    min_gap_tol: Optional[float] = None,
    gap_angles: Optional[int] = None,
    theta_scale: str = "literal",
    adaptive: bool = True,
    workers: Optional[int] = None,
) -> WindingResult:
    """Winding of det(H - E_B) as the potential phase advances over one period."""
    n = n_samples or settings.WINDING_SAMPLES
    max_n = max(max_samples or settings.WINDING_MAX_SAMPLES, n)
    tol = settings.WINDING_MIN_GAP if min_gap_tol is None else min_gap_tol
    guard = settings.WINDING_PHASE_GUARD
    n_jobs = workers or settings.NHQC_WORKERS
    if n < MIN_SAMPLES:
        raise ParameterError(f"n_samples must be >= {MIN_SAMPLES}, got {n}")
    base_energy = complex(base_energy)

    if gap_angles is None:
        # single-particle spectra are cheap enough to check at every sample
        gap_angles = n if sector == "single" else settings.WINDING_GAP_ANGLES
    min_gap = _check_gap(params, base_energy, sector, theta_scale, max(gap_angles, 1), tol)

    thetas = 2.0 * np.pi * np.arange(n + 1) / n
    log_abs, phase = _det_trace(params, base_energy, sector, thetas, theta_scale, n_jobs)
    jumps = wrap_phase(np.diff(phase))

    while adaptive and np.max(np.abs(jumps)) >= guard and n < max_n:
        mids = 0.5 * (thetas[:-1] + thetas[1:])
        mid_abs, mid_phase = _det_trace(params, base_energy, sector, mids, theta_scale, n_jobs)
        thetas = _interleave(thetas, mids)
        log_abs = _interleave(log_abs, mid_abs)
        phase = _interleave(phase, mid_phase)
        n *= 2
        jumps = wrap_phase(np.diff(phase))
        logger.info("winding at E_B=%s: refined theta grid to %d samples", base_energy, n)

    max_jump = float(np.max(np.abs(jumps)))
    if max_jump >= guard:
        raise WindingResolutionError(n, max_jump)

    omega = phase[0] + np.concatenate([[0.0], np.cumsum(jumps)])
    turns = (omega[-1] - omega[0]) / (2.0 * np.pi)
    winding = int(round(turns))
    if abs(turns - winding) > 1e-3:
        raise NumericalError(f"total phase {turns:.6f} turns is not an integer")
    return WindingResult(
        base_energy=base_energy,
        winding=winding,
        method=WindingMethod.PHASE_UNWRAP,
        theta_samples=n,
        min_gap=min_gap,
        theta=thetas,
        log_abs_det=log_abs,
        omega=omega,
    )


def _interleave(coarse: np.ndarray, fine: np.ndarray) -> np.ndarray:
    out = np.empty(coarse.size + fine.size, dtype=np.result_type(coarse, fine))
    out[0::2] = coarse
    out[1::2] = fine
    return out


def winding_slope(
    params: ModelParams,
    base_energy: complex,
    theta_0: float = 0.0,
    sector: str = "two",
    n_samples: Optional[int] = None,
    min_gap_tol: Optional[float] = None,
    theta_scale: str = "literal",
) -> float:
    """d omega / d theta at theta_0 by a central difference with step 2 pi / n."""
    n = n_samples or settings.WINDING_SAMPLES
    if n < MIN_SAMPLES:
        raise ParameterError(f"n_samples must be >= {MIN_SAMPLES}, got {n}")
    tol = settings.WINDING_MIN_GAP if min_gap_tol is None else min_gap_tol
    base_energy = complex(base_energy)
    gap = spectral_gap(params, base_energy, sector, np.array([theta_0]), theta_scale)
    if gap < tol:
        raise SpectrumProximityError(base_energy, gap, tol)

    step = 2.0 * np.pi / n
    phases = [
        _det_sample(params, base_energy, sector, theta_0 + k * step, theta_scale)[1]
        for k in (-1, 0, 1)
    ]
    jumps = wrap_phase(np.diff(phases))
    if np.max(np.abs(jumps)) >= settings.WINDING_PHASE_GUARD:
        raise WindingResolutionError(n, float(np.max(np.abs(jumps))))
    return float(np.sum(jumps) / (2.0 * step))
