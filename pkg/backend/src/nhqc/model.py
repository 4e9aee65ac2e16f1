"""Model parameters, the incommensurate complex-phase potential and lattice indexing.

Sites are 0-based. The two-particle Fock lattice is flattened row-major,
``k = n * L + m`` with the spin-up index ``n`` outer.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Annotated, Any, Tuple

import numpy as np
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    WithJsonSchema,
    model_validator,
)

from .errors import ParameterError

INT64_MAX = np.iinfo(np.int64).max

SiteIndex = int
PairIndex = Tuple[int, int]


def fibonacci_approximant(n: int) -> Fraction:
    """Return q_n / q_{n+1} with q_0 = 0, q_1 = 1."""
    if n < 1:
        raise ParameterError(f"Fibonacci order must be >= 1, got {n}")
    prev, cur = 0, 1
    for _ in range(n):
        prev, cur = cur, prev + cur
        if cur > INT64_MAX:
            raise ParameterError(f"Fibonacci order {n} overflows 64-bit lattice sizes")
    return Fraction(prev, cur)


def parse_alpha(value: Any) -> Fraction:
    """Accept ``"p/q"``, ``"fib:n"``, an int or a Fraction; floats are refused."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool) or isinstance(value, float):
        raise ParameterError("alpha must be an exact rational, e.g. '34/55'")
    if isinstance(value, int):
        return Fraction(value, 1)
    if isinstance(value, str):
        text = value.strip()
        if text.startswith("fib:"):
            return fibonacci_approximant(int(text[4:]))
        num, sep, den = text.partition("/")
        try:
            p, q = int(num), int(den) if sep else 1
        except ValueError:
            raise ParameterError(f"cannot parse alpha from {value!r}") from None
        if p <= 0 or q <= 0:
            raise ParameterError("alpha = p/q needs positive integers")
        if gcd(p, q) != 1:
            raise ParameterError(f"alpha = {p}/{q} is not in lowest terms")
        return Fraction(p, q)
    raise ParameterError(f"unsupported alpha value {value!r}")


Alpha = Annotated[
    Fraction,
    BeforeValidator(parse_alpha),
    PlainSerializer(lambda a: f"{a.numerator}/{a.denominator}", return_type=str),
    WithJsonSchema({"type": "string", "pattern": r"^\d+/\d+$", "examples": ["34/55"]}),
]

DEFAULT_ALPHA = Fraction(34, 55)


class ModelParams(BaseModel):
    """Physical and lattice parameters of the two-particle Hubbard quasicrystal."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    J: float = 1.0
    U: float = 0.0
    V: float = Field(0.15, ge=0)
    alpha: Alpha = DEFAULT_ALPHA
    theta: float = 0.0
    h: float = Field(0.0, ge=0)
    gamma: float = 0.0
    L: int = Field(55, ge=2)

    @model_validator(mode="before")
    @classmethod
    def _lattice_from_alpha(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("L") is None:
            data = dict(data)
            data["L"] = parse_alpha(data.get("alpha", DEFAULT_ALPHA)).denominator
        return data

    @model_validator(mode="after")
    def _check_commensurate(self) -> "ModelParams":
        if self.L != self.alpha.denominator:
            raise ParameterError(
                f"L={self.L} must equal the denominator of alpha={self.alpha} "
                "(periodic boundaries)"
            )
        return self

    @property
    def p(self) -> int:
        return self.alpha.numerator

    @property
    def q(self) -> int:
        return self.alpha.denominator

    @property
    def dim(self) -> int:
        """Two-particle Hilbert space dimension L^2."""
        return self.L * self.L

    def replace(self, **changes: Any) -> "ModelParams":
        """Validated copy; changing alpha without L re-derives L."""
        data = self.model_dump()
        if "alpha" in changes and "L" not in changes:
            data.pop("L")
        data.update(changes)
        return type(self).model_validate(data)


def site_potential(
    V: float,
    alpha: Fraction,
    phase: float,
    h: float,
    gamma: float,
    sites: Any,
) -> np.ndarray:
    """V cos(2 pi alpha l + phase + i h) - i gamma, without parameter validation.

    ``2 pi alpha l`` is reduced modulo 2 pi in exact integer arithmetic so the
    profile is exactly periodic with period q.
    """
    p, q = alpha.numerator, alpha.denominator
    x = 2.0 * np.pi * np.mod(p * np.asarray(sites, dtype=np.int64), q) / q + phase
    return V * (np.cos(x) * np.cosh(h) - 1j * np.sin(x) * np.sinh(h)) - 1j * gamma


def potential(params: ModelParams, l: SiteIndex) -> complex:
    if not 0 <= l < params.L:
        raise ParameterError(f"site {l} outside [0, {params.L})")
    return complex(site_potential(params.V, params.alpha, params.theta, params.h, params.gamma, l))


def potential_profile(params: ModelParams, theta_shift: float = 0.0) -> np.ndarray:
    """All L site energies, with the real phase advanced by ``theta_shift``."""
    return site_potential(
        params.V,
        params.alpha,
        params.theta + theta_shift,
        params.h,
        params.gamma,
        np.arange(params.L),
    )


def flat_index(n: SiteIndex, m: SiteIndex, L: int) -> int:
    if not (0 <= n < L and 0 <= m < L):
        raise ParameterError(f"pair ({n}, {m}) outside [0, {L})^2")
    return n * L + m


def unflat_index(k: int, L: int) -> PairIndex:
    if not 0 <= k < L * L:
        raise ParameterError(f"flat index {k} outside [0, {L * L})")
    n, m = divmod(k, L)
    return n, m
