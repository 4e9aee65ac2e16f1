from __future__ import annotations
from fastapi import APIRouter

from ...schemas import BunchingIn, BunchingOut
from ...src.nhqc.dynamics import Propagator, bunching_time, prepare_pair_state, sample_times
from .. import http_errors

router = APIRouter()


@router.post("/bunching", response_model=BunchingOut)
def bunching(payload: BunchingIn):
    params = payload.params
    n1, n2 = payload.n1 - 1, payload.n2 - 1
    with http_errors():
        propagator = Propagator.build(params, payload.method)
        trajectory = propagator.evolve(
            prepare_pair_state(params, n1, n2), sample_times(payload.t_max, payload.dt)
        )
        tau = bunching_time(
            params, n1, n2, payload.target, payload.t_max, payload.dt, propagator
        )
    return BunchingOut(
        times=trajectory.times.tolist(),
        bunching=trajectory.bunching().tolist(),
        tau0=tau.tau0,
        sustained=tau.sustained,
        method=propagator.method.value,
        fallback=propagator.fallback,
    )
