"""Dense eigendecomposition and the spectral / localization diagnostics.

epsilon = max |Im E| measures how far the spectrum has left the real axis; the
inverse participation ratio (IPR) separates extended states (IPR ~ 1/dim) from
localized ones (IPR = O(1)).
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence

import numpy as np
import scipy.linalg as la
from joblib import Parallel, delayed
from pydantic import BaseModel

from config import settings

from .errors import EigensolverError, NhqcError, NumericalError, ParameterError
from .hamiltonian import build_h1, build_h2
from .model import ModelParams

logger = logging.getLogger(__name__)

SECTORS = ("single", "two")


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    right_eigenvectors: Optional[np.ndarray] = None
    left_eigenvectors: Optional[np.ndarray] = None
    ipr: Optional[np.ndarray] = None
    epsilon: float = 0.0
    eigenvector_condition: float = math.nan

    @property
    def near_defective(self) -> bool:
        return not self.eigenvector_condition <= settings.MAX_EIGVEC_CONDITION

    @property
    def ipr_max(self) -> float:
        self._require_ipr()
        return float(np.max(self.ipr))

    @property
    def ipr_min(self) -> float:
        self._require_ipr()
        return float(np.min(self.ipr))

    def is_real(self, rtol: Optional[float] = None) -> bool:
        rtol = settings.REAL_SPECTRUM_RTOL if rtol is None else rtol
        scale = float(np.max(np.abs(self.eigenvalues))) if self.eigenvalues.size else 0.0
        return self.epsilon <= rtol * scale

    def _require_ipr(self) -> None:
        if self.ipr is None:
            raise ParameterError("spectrum was computed without eigenvectors")


class Localization(str, Enum):
    EXTENDED = "extended"
    LOCALIZED = "localized"


@dataclass(frozen=True)
class StateClass:
    kind: Localization
    threshold: float


class ScanRow(BaseModel):
    h: float
    epsilon: float
    ipr_max: float
    ipr_min: float


def epsilon(eigenvalues: np.ndarray) -> float:
    return float(np.max(np.abs(np.imag(eigenvalues)))) if len(eigenvalues) else 0.0


def ipr(state: np.ndarray) -> float:
    """sum |psi|^4 / (sum |psi|^2)^2 for any array shape."""
    prob = np.abs(np.ravel(state)) ** 2
    total = prob.sum()
    if total == 0.0:
        raise ParameterError("IPR of the zero vector is undefined")
    return float(np.sum(prob**2) / total**2)


def ipr_columns(vectors: np.ndarray) -> np.ndarray:
    prob = np.abs(vectors) ** 2
    return np.sum(prob**2, axis=0) / np.sum(prob, axis=0) ** 2


def eigendecompose(
    matrix: np.ndarray, want_vectors: bool = True, want_left: bool = False
) -> SpectrumResult:
    """Full complex eigendecomposition with residual and conditioning checks.

    With ``want_left`` the left eigenvectors (eigenvectors of the adjoint) come
    from the same solver call, so they pair index by index with the right ones.
    """
    H = np.asarray(matrix)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ParameterError("matrix has non-finite entries")
    n = H.shape[0]

    try:
        vl = None
        if want_left:
            evals, vl, vr = la.eig(H, left=True, right=True, check_finite=False)
        elif want_vectors:
            evals, vr = la.eig(H, right=True, check_finite=False)
        else:
            evals, vr = la.eigvals(H, check_finite=False), None
    except la.LinAlgError as exc:
        # LAPACK reports the first converged index
        match = re.search(r">=\s*(\d+)", str(exc))
        failed = range(int(match.group(1))) if match else range(n)
        raise EigensolverError(f"eigensolver did not converge: {exc}", failed) from exc

    bad = np.flatnonzero(~np.isfinite(evals))
    if bad.size:
        raise EigensolverError("eigensolver returned non-finite eigenvalues", bad)

    if vr is None:
        return SpectrumResult(eigenvalues=evals, epsilon=epsilon(evals))

    vr = vr / np.linalg.norm(vr, axis=0)
    residual = np.linalg.norm(H @ vr - vr * evals, axis=0)
    bound = settings.RESIDUAL_RTOL * max(np.linalg.norm(H, 1), np.finfo(float).tiny)
    bad = np.flatnonzero(residual > bound)
    if bad.size:
        raise EigensolverError(
            f"{bad.size} eigenpairs exceed the residual bound {bound:.2e}", bad
        )

    condition = float(np.linalg.cond(vr))
    if not condition <= settings.MAX_EIGVEC_CONDITION:
        logger.warning("eigenvector matrix is near defective (condition %.3e)", condition)
    return SpectrumResult(
        eigenvalues=evals,
        right_eigenvectors=vr,
        left_eigenvectors=vl,
        ipr=ipr_columns(vr),
        epsilon=epsilon(evals),
        eigenvector_condition=condition,
    )


def single_particle_spectrum(params: ModelParams, want_vectors: bool = True) -> SpectrumResult:
    return eigendecompose(build_h1(params).matrix, want_vectors)


def two_particle_spectrum(params: ModelParams, want_vectors: bool = True) -> SpectrumResult:
    return eigendecompose(build_h2(params).matrix, want_vectors)


def sector_spectrum(params: ModelParams, sector: str, want_vectors: bool = True) -> SpectrumResult:
    if sector == "single":
        return single_particle_spectrum(params, want_vectors)
    if sector == "two":
        return two_particle_spectrum(params, want_vectors)
    raise ParameterError(f"unknown sector {sector!r}, expected one of {SECTORS}")


def _scan_point(params: ModelParams, h: float, sector: str) -> ScanRow:
    try:
        result = sector_spectrum(params.replace(h=h), sector)
    except NhqcError as exc:
        raise NumericalError(f"scan failed at h={h}: {exc}") from exc
    return ScanRow(h=h, epsilon=result.epsilon, ipr_max=result.ipr_max, ipr_min=result.ipr_min)


def epsilon_scan(
    params: ModelParams,
    h_grid: Sequence[float],
    sector: str = "two",
    workers: Optional[int] = None,
) -> List[ScanRow]:
    """epsilon and IPR extrema for each h, in grid order."""
    if len(h_grid) == 0:
        raise ParameterError("h grid is empty")
    if any(h < 0 for h in h_grid):
        raise ParameterError("h grid must be non-negative")
    n_jobs = workers or settings.NHQC_WORKERS
    logger.info("epsilon scan: %d points, sector=%s, workers=%d", len(h_grid), sector, n_jobs)
    return Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_scan_point)(params, float(h), sector) for h in h_grid
    )


def classify_ipr(value: float, L: int, factor: Optional[float] = None) -> StateClass:
    factor = settings.LOCALIZATION_FACTOR if factor is None else factor
    threshold = factor / L
    kind = Localization.LOCALIZED if value > threshold else Localization.EXTENDED
    return StateClass(kind=kind, threshold=threshold)


def classify_states(
    spectrum: SpectrumResult,
    params: ModelParams,
    factor: Optional[float] = None,
) -> List[StateClass]:
    if spectrum.ipr is None:
        raise ParameterError("classification needs eigenvectors")
    return [classify_ipr(float(v), params.L, factor) for v in spectrum.ipr]


def locate_transition(
    epsilon_fn: Callable[[float], float],
    h_lo: float,
    h_hi: float,
    tol: float = 1e-3,
    scale_fn: Optional[Callable[[float], float]] = None,
    fraction: Optional[float] = None,
) -> float:
    """Bisect the real-to-complex transition between a real h_lo and a complex h_hi.

    h counts as complex when ``epsilon_fn(h) > fraction * scale_fn(h)``. The
    scale is the hopping of the lattice being scanned (J, or J_e for doublons),
    default 1. On the real side a lattice of L sites still carries an imaginary
    floor of order (V e^h / 2J)^L.
    """
    fraction = settings.TRANSITION_EPSILON_FRACTION if fraction is None else fraction
    if h_lo >= h_hi:
        raise ParameterError("need h_lo < h_hi")

    def is_complex(h: float) -> bool:
        scale = 1.0 if scale_fn is None else scale_fn(h)
        return epsilon_fn(h) > fraction * scale

    if is_complex(h_lo):
        raise ParameterError(f"spectrum is already complex at h_lo={h_lo}")
    if not is_complex(h_hi):
        raise ParameterError(f"spectrum is still real at h_hi={h_hi}")
    while h_hi - h_lo > tol:
        mid = 0.5 * (h_lo + h_hi)
        if is_complex(mid):
            h_hi = mid
        else:
            h_lo = mid
    return 0.5 * (h_lo + h_hi)


def sector_transition(
    params: ModelParams,
    sector: str = "single",
    h_lo: float = 0.0,
    h_hi: float = 5.0,
    tol: float = 1e-3,
) -> float:
    """Measured real-to-complex threshold of the single- or two-particle spectrum."""

    def epsilon_at(h: float) -> float:
        return sector_spectrum(params.replace(h=h), sector, want_vectors=False).epsilon

    return locate_transition(epsilon_at, h_lo, h_hi, tol, scale_fn=lambda h: abs(params.J))
