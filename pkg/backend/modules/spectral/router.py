from __future__ import annotations
from fastapi import APIRouter
import numpy as np

from ...schemas import ComplexValue, ScanIn, ScanOut, ScanPoint, SpectrumIn, SpectrumOut
from ...src.nhqc.spectral import epsilon_scan, sector_spectrum
from .. import http_errors

router = APIRouter()


@router.post("/spectrum", response_model=SpectrumOut)
def spectrum(payload: SpectrumIn):
    with http_errors():
        result = sector_spectrum(payload.params, payload.sector)
    order = np.lexsort((result.eigenvalues.imag, result.eigenvalues.real))
    return SpectrumOut(
        sector=payload.sector,
        eigenvalues=[ComplexValue.of(result.eigenvalues[i]) for i in order],
        ipr=[float(result.ipr[i]) for i in order],
        epsilon=result.epsilon,
        real=result.is_real(),
        ipr_max=result.ipr_max,
        ipr_min=result.ipr_min,
        near_defective=result.near_defective,
    )


@router.post("/scan", response_model=ScanOut)
def scan(payload: ScanIn):
    with http_errors():
        rows = epsilon_scan(payload.params, payload.h_values, payload.sector)
    return ScanOut(
        sector=payload.sector,
        points=[ScanPoint(**row.model_dump()) for row in rows],
    )
