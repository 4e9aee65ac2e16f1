from __future__ import annotations
from fastapi import APIRouter

from ...schemas import WindingIn, WindingOut
from ...src.nhqc.topology import winding_number
from .. import http_errors

router = APIRouter()


@router.post("/winding", response_model=WindingOut)
def winding(payload: WindingIn):
    base_energy = complex(payload.base_energy.re, payload.base_energy.im)
    with http_errors():
        result = winding_number(
            payload.params,
            base_energy,
            sector=payload.sector,
            n_samples=payload.n_samples,
            theta_scale=payload.theta_scale,
        )
    return WindingOut(
        winding=result.winding,
        theta_samples=result.theta_samples,
        min_gap=result.min_gap,
    )
