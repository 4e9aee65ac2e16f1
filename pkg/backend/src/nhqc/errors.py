"""Exception hierarchy shared by the library, the CLI and the HTTP surface."""
from __future__ import annotations

from typing import Sequence


class NhqcError(Exception):
    """Base class for all library errors."""


class ParameterError(NhqcError, ValueError):
    """Invalid input or violated precondition."""


class DenseSizeError(ParameterError):
    def __init__(self, sites: int, cap: int):
        self.sites = sites
        self.cap = cap
        super().__init__(
            f"L={sites} exceeds the dense cap L<={cap}; use two_particle_operator() "
            "and the direct integrator for matrix-free work"
        )


class NumericalError(NhqcError, RuntimeError):
    """A numerical procedure failed or cannot be trusted."""


class EigensolverError(NumericalError):
    def __init__(self, message: str, failed_indices: Sequence[int] = ()):
        self.failed_indices = list(failed_indices)
        super().__init__(message)


class SpectrumProximityError(NumericalError):
    def __init__(self, base_energy: complex, min_gap: float, tolerance: float):
        self.base_energy = base_energy
        self.min_gap = min_gap
        super().__init__(
            f"base energy {base_energy} lies within {min_gap:.3e} of the spectrum "
            f"(tolerance {tolerance:.1e})"
        )


class WindingResolutionError(NumericalError):
    def __init__(self, n_samples: int, max_jump: float):
        self.n_samples = n_samples
        self.max_jump = max_jump
        super().__init__(
            f"determinant phase jumps by {max_jump:.3f} rad between adjacent samples "
            f"at n_samples={n_samples}; increase the sample count"
        )
