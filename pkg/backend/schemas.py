from __future__ import annotations
from pydantic import BaseModel, Field
from typing import List, Literal, Optional

from .src.nhqc.model import ModelParams


Sector = Literal["single", "two"]


class ComplexValue(BaseModel):
    re: float
    im: float

    @classmethod
    def of(cls, z: complex) -> "ComplexValue":
        return cls(re=float(z.real), im=float(z.imag))


class SpectrumIn(BaseModel):
    params: ModelParams = Field(default_factory=ModelParams)
    sector: Sector = "two"


class SpectrumOut(BaseModel):
    sector: Sector
    eigenvalues: List[ComplexValue]  # sorted by real, then imaginary part
    ipr: List[float]  # same order as eigenvalues
    epsilon: float
    real: bool
    ipr_max: float
    ipr_min: float
    near_defective: bool


class ScanIn(BaseModel):
    params: ModelParams = Field(default_factory=ModelParams)
    h_values: List[float] = Field(min_length=1)
    sector: Sector = "two"


class ScanPoint(BaseModel):
    h: float
    epsilon: float
    ipr_max: float
    ipr_min: float


class ScanOut(BaseModel):
    sector: Sector
    points: List[ScanPoint]


class WindingIn(BaseModel):
    params: ModelParams = Field(default_factory=ModelParams)
    base_energy: ComplexValue = Field(default_factory=lambda: ComplexValue(re=0.0, im=0.0))
    sector: Sector = "two"
    n_samples: Optional[int] = Field(None, ge=64)
    theta_scale: Literal["literal", "full"] = "literal"


class WindingOut(BaseModel):
    winding: int
    theta_samples: int
    min_gap: float


class DoublonIn(BaseModel):
    params: ModelParams = Field(default_factory=lambda: ModelParams(U=10.0))


class ThresholdsOut(BaseModel):
    J_e: float
    h_c: float
    h_c_prime: float
    U_c: float


class DoublonModelOut(BaseModel):
    J_e: float
    eigenvalues: List[ComplexValue]  # U + eig(H_eff), sorted by real part
    epsilon: float


class BunchingIn(BaseModel):
    params: ModelParams = Field(default_factory=lambda: ModelParams(U=10.0, h=1.0))
    n1: int = Field(ge=1)  # 1-based sites
    n2: int = Field(ge=1)
    t_max: float = Field(200.0, ge=0)
    dt: Optional[float] = Field(None, gt=0)
    target: Optional[float] = Field(None, gt=0, lt=1)
    method: Literal["spectral", "direct"] = "spectral"


class BunchingOut(BaseModel):
    times: List[float]
    bunching: List[float]
    tau0: Optional[float] = None  # None when the target is never reached
    sustained: bool
    method: str
    fallback: bool
