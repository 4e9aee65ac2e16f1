"""Two interacting particles in a non-Hermitian quasicrystal.

Exact diagonalization, point-gap winding numbers, the strong-coupling doublon
model and post-selected two-particle dynamics.
"""

__version__ = "0.1.0"
