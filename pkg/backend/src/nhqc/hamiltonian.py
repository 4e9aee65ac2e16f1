"""Single- and two-particle Hamiltonians on the periodic ring.

The two-particle operator acts on the L x L amplitude grid Phi[n, m]
(n: spin-up site, m: spin-down site) as a single particle hopping on a square
lattice with a line defect U on the diagonal n = m.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from config import settings

from .errors import DenseSizeError, ParameterError
from .model import ModelParams, potential_profile

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SingleParticleHamiltonian:
    matrix: np.ndarray
    params: ModelParams


@dataclass(frozen=True)
class TwoParticleHamiltonian:
    matrix: np.ndarray
    params: ModelParams


def _ring_hopping(L: int, amplitude: float) -> sp.csr_matrix:
    """Nearest-neighbour hopping on a ring; for L=2 both bonds land on one entry."""
    rows = np.concatenate([np.arange(L), np.arange(L)])
    cols = np.concatenate([(np.arange(L) + 1) % L, (np.arange(L) - 1) % L])
    data = np.full(2 * L, amplitude, dtype=complex)
    # duplicate (row, col) pairs are summed on conversion
    return sp.coo_matrix((data, (rows, cols)), shape=(L, L)).tocsr()


def h1_sparse(params: ModelParams, theta_shift: float = 0.0) -> sp.csr_matrix:
    hop = _ring_hopping(params.L, -params.J)
    return (hop + sp.diags(potential_profile(params, theta_shift))).tocsr()


def build_h1(params: ModelParams, theta_shift: float = 0.0) -> SingleParticleHamiltonian:
    return SingleParticleHamiltonian(h1_sparse(params, theta_shift).toarray(), params)


def check_dense_size(L: int) -> None:
    if L > settings.DENSE_MAX_SITES:
        raise DenseSizeError(L, settings.DENSE_MAX_SITES)


def h2_sparse(params: ModelParams, theta_shift: float = 0.0) -> sp.csr_matrix:
    """Kronecker sum H1 (+) H1 plus U on the diagonal pairs (n, n)."""
    h1 = h1_sparse(params, theta_shift)
    L = params.L
    interaction = np.zeros(L * L, dtype=complex)
    interaction[np.arange(L) * (L + 1)] = params.U
    return (sp.kronsum(h1, h1, format="csr") + sp.diags(interaction)).tocsr()


def build_h2(params: ModelParams, theta_shift: float = 0.0) -> TwoParticleHamiltonian:
    check_dense_size(params.L)
    return TwoParticleHamiltonian(h2_sparse(params, theta_shift).toarray(), params)


def adjoint(params: ModelParams) -> TwoParticleHamiltonian:
    """H2 with h -> -h, the adjoint of H2 when gamma = 0."""
    check_dense_size(params.L)
    # ModelParams refuses h < 0, so the flip goes through the matrix
    matrix = build_h2(params).matrix.conj().T
    if params.gamma:
        # conj flips -i gamma of both particles: restore -2i gamma, not +2i gamma
        matrix = matrix - 4j * params.gamma * np.eye(params.dim)
    return TwoParticleHamiltonian(np.ascontiguousarray(matrix), params)


def apply_h2(params: ModelParams, state: np.ndarray) -> np.ndarray:
    """Matrix-free H2 . Phi on an (L, L) grid or a flat vector of length L^2."""
    L = params.L
    arr = np.asarray(state)
    if arr.size != L * L:
        raise ParameterError(f"state has {arr.size} amplitudes, expected L^2 = {L * L}")
    phi = arr.reshape(L, L)
    v = potential_profile(params)
    out = -params.J * (
        np.roll(phi, 1, axis=0)
        + np.roll(phi, -1, axis=0)
        + np.roll(phi, 1, axis=1)
        + np.roll(phi, -1, axis=1)
    )
    out = out + (v[:, None] + v[None, :]) * phi
    diag = np.arange(L)
    out[diag, diag] += params.U * phi[diag, diag]
    return out.reshape(arr.shape)


def two_particle_operator(params: ModelParams) -> LinearOperator:
    dim = params.dim
    return LinearOperator(
        (dim, dim),
        matvec=lambda x: apply_h2(params, np.ravel(x)),
        dtype=complex,
    )


def exchange_operator(L: int) -> sp.csr_matrix:
    """Permutation S: Phi[n, m] -> Phi[m, n] on the flat row-major vector."""
    k = np.arange(L * L)
    n, m = np.divmod(k, L)
    return sp.csr_matrix((np.ones(L * L), (m * L + n, k)), shape=(L * L, L * L))


def write_triplets(matrix: Union[np.ndarray, sp.spmatrix], out_path: Union[str, Path]) -> Path:
    """Dump nonzero entries as ``row col real imag`` lines."""
    coo = sp.coo_matrix(matrix)
    out_p = Path(out_path)
    out_p.parent.mkdir(parents=True, exist_ok=True)
    with out_p.open("w", encoding="utf-8") as f:
        f.write(f"# shape {coo.shape[0]} {coo.shape[1]} nnz {coo.nnz}\n")
        for r, c, val in zip(coo.row, coo.col, coo.data):
            f.write(f"{r} {c} {val.real:.17g} {val.imag:.17g}\n")
    logger.info("wrote %d triplets to %s", coo.nnz, out_p)
    return out_p
