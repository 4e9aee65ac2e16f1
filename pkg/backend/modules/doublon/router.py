from __future__ import annotations
from fastapi import APIRouter
import numpy as np

from ...schemas import ComplexValue, DoublonIn, DoublonModelOut, ThresholdsOut
from ...src.nhqc.doublon import build_doublon_model, effective_hopping, thresholds
from ...src.nhqc.spectral import epsilon
from .. import http_errors

router = APIRouter()


@router.post("/thresholds", response_model=ThresholdsOut)
def doublon_thresholds(payload: DoublonIn):
    params = payload.params
    with http_errors():
        th = thresholds(params)
    return ThresholdsOut(J_e=effective_hopping(params), **th.model_dump())


@router.post("/model", response_model=DoublonModelOut)
def doublon_model(payload: DoublonIn):
    params = payload.params
    with http_errors():
        model = build_doublon_model(params)
        evals = np.linalg.eigvals(model.matrix) + params.U
    order = np.lexsort((evals.imag, evals.real))
    return DoublonModelOut(
        J_e=model.J_e,
        eigenvalues=[ComplexValue.of(evals[i]) for i in order],
        epsilon=epsilon(evals),
    )
