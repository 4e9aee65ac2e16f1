"""Brute-force verifiers.

Everything here assembles its matrices from the lattice definition with plain
loops and numpy, independently of :mod:`hamiltonian`, and is only meant for the
small lattices used by ``nhqc verify`` and the test-suite.
"""
from __future__ import annotations

import cmath
import logging
import math
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel
from scipy.optimize import linear_sum_assignment

from .dynamics import Propagator, TwoParticleState
from .errors import ParameterError
from .hamiltonian import apply_h2, build_h2, h1_sparse
from .model import ModelParams, fibonacci_approximant

logger = logging.getLogger(__name__)

ORACLE_TOLERANCE = 1e-8
EVOLUTION_TOLERANCE = 1e-6
# Fibonacci orders giving L = 13 and L = 21
ORACLE_FIB_ORDERS = (6, 7)


class OracleReport(BaseModel):
    name: str
    L: int
    max_deviation: float
    tolerance: float
    passed: bool

    @classmethod
    def measure(cls, name: str, L: int, deviation: float, tolerance: float) -> "OracleReport":
        return cls(
            name=name,
            L=L,
            max_deviation=deviation,
            tolerance=tolerance,
            passed=bool(deviation <= tolerance),
        )


def _site_energies(params: ModelParams) -> List[complex]:
    energies = []
    for l in range(params.L):
        phase = 2.0 * math.pi * ((params.p * l) % params.q) / params.q + params.theta + 1j * params.h
        energies.append(params.V * cmath.cos(phase) - 1j * params.gamma)
    return energies


def naive_h1(params: ModelParams) -> np.ndarray:
    L = params.L
    H = np.zeros((L, L), dtype=complex)
    for l, v in enumerate(_site_energies(params)):
        H[l, l] += v
        H[l, (l + 1) % L] += -params.J
        H[(l + 1) % L, l] += -params.J
    return H


def naive_h2(params: ModelParams) -> np.ndarray:
    """Two-particle matrix on basis index n * L + m, entry by entry."""
    L = params.L
    v = _site_energies(params)
    H = np.zeros((L * L, L * L), dtype=complex)
    for n in range(L):
        for m in range(L):
            row = n * L + m
            H[row, row] += v[n] + v[m] + (params.U if n == m else 0.0)
            for step in (1, -1):
                H[row, ((n + step) % L) * L + m] += -params.J
                H[row, n * L + (m + step) % L] += -params.J
    return H


def _matched_deviation(a: np.ndarray, b: np.ndarray) -> float:
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(np.max(cost[rows, cols]))


def factorization_check(params: ModelParams, tolerance: float = ORACLE_TOLERANCE) -> OracleReport:
    """Non-interacting two-particle eigenvalues against all sums E_a + E_b."""
    if params.U != 0:
        raise ParameterError(f"factorization holds only at U = 0, got U={params.U}")
    single = np.linalg.eigvals(naive_h1(params))
    pair_sums = (single[:, None] + single[None, :]).ravel()
    pair = np.linalg.eigvals(naive_h2(params))
    deviation = _matched_deviation(pair, pair_sums)
    return OracleReport.measure("factorization", params.L, deviation, tolerance)


def kronecker_check(params: ModelParams, tolerance: float = ORACLE_TOLERANCE) -> OracleReport:
    """Library H1 and H2 against the loop-built matrices."""
    deviation = max(
        float(np.max(np.abs(h1_sparse(params).toarray() - naive_h1(params)))),
        float(np.max(np.abs(build_h2(params).matrix - naive_h2(params)))),
    )
    return OracleReport.measure("kronecker", params.L, deviation, tolerance)


def apply_check(params: ModelParams, seed: int = 0, tolerance: float = ORACLE_TOLERANCE) -> OracleReport:
    """Matrix-free product against the dense product for a random state."""
    rng = np.random.default_rng(seed)
    L = params.L
    phi = rng.standard_normal((L, L)) + 1j * rng.standard_normal((L, L))
    dense = naive_h2(params) @ phi.reshape(-1)
    deviation = float(np.max(np.abs(apply_h2(params, phi).reshape(-1) - dense)))
    return OracleReport.measure("apply", L, deviation, tolerance)


def _scale(params: ModelParams) -> float:
    return max(params.J, abs(params.U), params.V * math.exp(params.h))


def naive_evolution(
    params: ModelParams,
    state0: TwoParticleState,
    t: float,
    dt: float,
) -> TwoParticleState:
    """Fixed-step RK4 on i dpsi/dt = H psi, renormalized once at the end."""
    if t < 0:
        raise ParameterError("t must be non-negative")
    limit = 0.01 / _scale(params)
    if not 0 < dt <= limit:
        raise ParameterError(f"dt={dt} violates 0 < dt <= {limit:.3e}")
    if t == 0:
        return TwoParticleState(state0.amplitudes.copy(), state0.time)

    H = naive_h2(params)
    psi = state0.amplitudes.reshape(-1).astype(complex)
    steps = int(math.ceil(t / dt))
    h = t / steps
    for _ in range(steps):
        k1 = -1j * (H @ psi)
        k2 = -1j * (H @ (psi + 0.5 * h * k1))
        k3 = -1j * (H @ (psi + 0.5 * h * k2))
        k4 = -1j * (H @ (psi + h * k3))
        psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    psi = psi / np.linalg.norm(psi)
    return TwoParticleState(psi.reshape(params.L, params.L), state0.time + t)


def evolution_check(
    params: ModelParams,
    t: float = 2.0,
    tolerance: float = EVOLUTION_TOLERANCE,
    method: str = "spectral",
) -> OracleReport:
    """Library propagator against the RK4 reference for an adjacent pair mid-lattice."""
    start = TwoParticleState.pair(params.L, params.L // 2, params.L // 2 + 1)
    reference = naive_evolution(params, start, t, 0.01 / _scale(params))
    state = Propagator.build(params, method).propagate(start, t)
    deviation = float(np.max(np.abs(state.amplitudes - reference.amplitudes)))
    return OracleReport.measure(f"evolution_{method}", params.L, deviation, tolerance)


def run_all(fib_orders: Sequence[int] = ORACLE_FIB_ORDERS, h: float = 1.0) -> List[OracleReport]:
    reports: List[OracleReport] = []
    for order in fib_orders:
        base = ModelParams(alpha=fibonacci_approximant(order), h=h)
        interacting = base.replace(U=2.0)
        reports.append(factorization_check(base))
        reports.append(kronecker_check(interacting))
        reports.append(apply_check(interacting))
        reports.append(evolution_check(interacting, method="spectral"))
        reports.append(evolution_check(interacting, method="direct"))
    for report in reports:
        log = logger.info if report.passed else logger.error
        log("oracle %s at L=%d: deviation %.3e (tol %.1e)", report.name, report.L,
            report.max_deviation, report.tolerance)
    return reports
