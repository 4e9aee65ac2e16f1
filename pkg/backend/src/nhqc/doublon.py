"""Strong-interaction doublon model and analytic thresholds.

For U >> J, V exp(h) the diagonal amplitudes Phi[n, n] = A_n exp(-iUt) obey

    i dA_n/dt = J_e (A_{n+1} + A_{n-1} + 2 A_n) + 2 V_n A_n,   J_e = 2 J^2 / U,

i.e. a single-particle quasicrystal with hopping +J_e and potential 2 V_n.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field
from scipy.optimize import linear_sum_assignment

from .dynamics import Propagator, TwoParticleState
from .errors import ParameterError
from .hamiltonian import build_h2
from .model import ModelParams, potential_profile
from .spectral import SpectrumResult, eigendecompose, epsilon, locate_transition

logger = logging.getLogger(__name__)

# J/U above this is outside the asymptotic regime
ASYMPTOTIC_RATIO_LIMIT = 0.05
# dynamical comparison horizon in units of 1/J_e
DYNAMICS_HORIZON = 5.0


class Thresholds(BaseModel):
    h_c: float
    h_c_prime: float
    U_c: float


@dataclass(frozen=True)
class DoublonModel:
    J_e: float
    matrix: np.ndarray
    params: ModelParams


@dataclass(frozen=True)
class DoublonBranch:
    indices: np.ndarray
    eigenvalues: np.ndarray
    # True when the diagonal-weight selector found exactly L states
    selector_exact: bool


class AsymptoticsReport(BaseModel):
    J_e: float
    # none in the free limit V = 0
    h_c: Optional[float] = None
    h_c_prime: Optional[float] = None
    U_c: Optional[float] = None
    asymptotic_ratio: float
    spectral_mismatch: float
    dynamical_mismatch: float
    branch_size: int
    warnings: List[str] = Field(default_factory=list)


def thresholds(params: ModelParams) -> Thresholds:
    J, V, U = params.J, params.V, params.U
    if J <= 0 or V <= 0 or U <= 0:
        raise ParameterError("thresholds need J > 0, V > 0 and U > 0")
    h_c = math.log(2.0 * J / V)
    return Thresholds(
        h_c=h_c,
        h_c_prime=max(0.0, h_c - math.log(U / J)),
        U_c=2.0 * J * J / V,
    )


def effective_hopping(params: ModelParams) -> float:
    if params.U == 0:
        raise ParameterError("the doublon model needs U != 0")
    return 2.0 * params.J**2 / params.U


def build_doublon_model(params: ModelParams) -> DoublonModel:
    J_e = effective_hopping(params)
    L = params.L
    matrix = np.zeros((L, L), dtype=complex)
    sites = np.arange(L)
    # += so the two bonds of the L=2 ring add up
    np.add.at(matrix, (sites, (sites + 1) % L), J_e)
    np.add.at(matrix, (sites, (sites - 1) % L), J_e)
    matrix[sites, sites] += 2.0 * J_e + 2.0 * potential_profile(params)
    return DoublonModel(J_e=J_e, matrix=matrix, params=params)


def doublon_branch(params: ModelParams, spectrum: Optional[SpectrumResult] = None) -> DoublonBranch:
    """Eigenstates of H2 forming the detached loop near E = U."""
    if spectrum is None:
        spectrum = eigendecompose(build_h2(params).matrix)
    if spectrum.right_eigenvectors is None:
        raise ParameterError("doublon branch selection needs eigenvectors")
    L, U = params.L, params.U
    evals = spectrum.eigenvalues
    vecs = spectrum.right_eigenvectors
    diag = np.arange(L) * (L + 1)
    weight = np.sum(np.abs(vecs[diag, :]) ** 2, axis=0)
    distance = np.abs(evals - U)
    selected = np.flatnonzero((distance < abs(U) / 2) & (weight > 0.5))
    exact = selected.size == L
    if not exact:
        logger.warning(
            "doublon selector found %d states instead of L=%d; using the L nearest to U",
            selected.size, L,
        )
        selected = np.argsort(distance, kind="stable")[:L]
    return DoublonBranch(indices=selected, eigenvalues=evals[selected], selector_exact=exact)


def matched_deviation(a: np.ndarray, b: np.ndarray) -> float:
    """Largest |a_i - b_j| over an optimal one-to-one matching."""
    cost = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(np.max(cost[rows, cols])) if rows.size else 0.0


def _effective_trajectory(model: DoublonModel, site: int, times: np.ndarray) -> np.ndarray:
    """|A_n(t)|^2 (normalized) from the eigenbasis of H_eff."""
    evals, vecs = np.linalg.eig(model.matrix)
    a0 = np.zeros(model.params.L, dtype=complex)
    a0[site] = 1.0
    coeffs = np.linalg.solve(vecs, a0)
    shift = np.max(evals.imag)
    probs = []
    for t in times:
        amp = vecs @ (coeffs * np.exp(-1j * evals.real * t + (evals.imag - shift) * t))
        p = np.abs(amp) ** 2
        probs.append(p / p.sum())
    return np.asarray(probs)


def validate_asymptotics(params: ModelParams, n_times: int = 51) -> AsymptoticsReport:
    """Compare the full two-particle model with U + H_eff, spectrally and dynamically."""
    th = thresholds(params) if params.V > 0 else None
    model = build_doublon_model(params)
    ratio = params.J / params.U
    warnings: List[str] = []
    if ratio > ASYMPTOTIC_RATIO_LIMIT:
        warnings.append(f"J/U = {ratio:.3g} exceeds {ASYMPTOTIC_RATIO_LIMIT}")
    if params.V * math.exp(params.h) / params.U > ASYMPTOTIC_RATIO_LIMIT:
        warnings.append("V exp(h) is not small compared to U")
    for w in warnings:
        logger.warning("asymptotic check outside its regime: %s", w)

    spectrum = eigendecompose(build_h2(params).matrix)
    branch = doublon_branch(params, spectrum)
    propagator = Propagator.build(params, spectrum=spectrum)
    eff = np.linalg.eigvals(model.matrix)
    spectral_mismatch = matched_deviation(branch.eigenvalues, params.U + eff)

    site = params.L // 2
    times = np.linspace(0.0, DYNAMICS_HORIZON / model.J_e, n_times)
    start = TwoParticleState.doublon(params.L, site)
    full = propagator.evolve(start, times)
    eff_probs = _effective_trajectory(model, site, times)
    full_probs = np.asarray([np.abs(np.diag(s.amplitudes)) ** 2 for s in full.states])
    dynamical_mismatch = float(np.max(np.abs(full_probs - eff_probs)))

    return AsymptoticsReport(
        J_e=model.J_e,
        h_c=th.h_c if th else None,
        h_c_prime=th.h_c_prime if th else None,
        U_c=th.U_c if th else None,
        asymptotic_ratio=ratio,
        spectral_mismatch=spectral_mismatch,
        dynamical_mismatch=dynamical_mismatch,
        branch_size=int(branch.indices.size),
        warnings=warnings,
    )


def effective_transition(
    params: ModelParams, h_lo: float = 0.0, h_hi: float = 5.0, tol: float = 1e-3
) -> float:
    """Measured real-to-complex threshold of H_eff; theory: log(J_e / V)."""
    J_e = effective_hopping(params)

    def epsilon_at(h: float) -> float:
        return epsilon(np.linalg.eigvals(build_doublon_model(params.replace(h=h)).matrix))

    return locate_transition(epsilon_at, h_lo, h_hi, tol, scale_fn=lambda h: abs(J_e))


def branch_epsilon(params: ModelParams) -> float:
    """max |Im E| over the doublon branch of the full model."""
    return epsilon(doublon_branch(params).eigenvalues)


def branch_transition(
    params: ModelParams, h_lo: float = 0.0, h_hi: float = 3.0, tol: float = 0.02
) -> float:
    """Measured real-to-complex threshold of the full-model doublon branch."""
    J_e = effective_hopping(params)
    return locate_transition(
        lambda h: branch_epsilon(params.replace(h=h)), h_lo, h_hi, tol, scale_fn=lambda h: abs(J_e)
    )
