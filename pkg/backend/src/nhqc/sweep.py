"""Parameter-grid sweeps producing long-format observable tables.

A sweep evaluates the configured observables at every point of an (at most
two-dimensional) grid over ModelParams fields. Each grid point is one task;
rows are emitted in grid order whatever the worker count, and a failure at one
point is recorded in that point's rows instead of aborting the sweep.
"""
from __future__ import annotations

import itertools
import logging
import tomllib
from datetime import datetime, timezone
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, BeforeValidator, Field, ValidationError, model_validator

from config import settings

from backend.src.utils import header_lines, write_table

from . import __version__
from .dynamics import Propagator, bunching_time, prepare_pair_state, sample_times
from .errors import NhqcError, ParameterError
from .model import ModelParams
from .spectral import SpectrumResult, sector_spectrum
from .topology import winding_number

logger = logging.getLogger(__name__)

VALUE_COLUMNS = ["observable", "key", "real", "imag", "error"]


def _to_complex(value: Any) -> Any:
    """Accept numbers, ``"a+bj"`` strings and ``[re, im]`` pairs."""
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace(" ", ""))
    if isinstance(value, (int, float)):
        return complex(value)
    return value


BaseEnergy = Annotated[complex, BeforeValidator(_to_complex)]


class Axis(BaseModel):
    name: Literal["J", "U", "V", "theta", "h", "gamma"]
    min: Optional[float] = None
    max: Optional[float] = None
    steps: Optional[int] = Field(None, ge=1)
    values: Optional[List[float]] = None

    @model_validator(mode="after")
    def _check_grid(self) -> "Axis":
        ranged = self.min is not None and self.max is not None and self.steps is not None
        if (self.values is None) == (not ranged):
            raise ParameterError(f"axis {self.name!r} needs either values or min/max/steps")
        if self.values is not None and len(self.values) == 0:
            raise ParameterError(f"axis {self.name!r} has no values")
        return self

    def grid(self) -> List[float]:
        if self.values is not None:
            return [float(v) for v in self.values]
        if self.steps == 1:
            return [float(self.min)]
        return [float(v) for v in np.linspace(self.min, self.max, self.steps)]


class WindingObservable(BaseModel):
    energies: List[BaseEnergy] = Field(min_length=1)
    sector: Literal["single", "two"] = "two"
    theta_scale: Literal["literal", "full"] = "literal"
    n_samples: Optional[int] = None


class BunchingObservable(BaseModel):
    """P_bun(t) for particles starting at 1-based sites n1, n2."""

    n1: int = Field(ge=1)
    n2: int = Field(ge=1)
    t_max: float = Field(200.0, ge=0)
    dt: Optional[float] = Field(None, gt=0)


class Tau0Observable(BaseModel):
    """tau0 for a particle at 1-based site n1 and its partner d sites away."""

    n1: int = Field(ge=1)
    d: List[int] = Field(min_length=1)
    target: Optional[float] = None
    t_max: float = Field(200.0, ge=0)
    dt: Optional[float] = Field(None, gt=0)


class Observables(BaseModel):
    epsilon: bool = False
    ipr_extrema: bool = False
    spectrum: bool = False
    sector: Literal["single", "two"] = "two"
    winding: Optional[WindingObservable] = None
    bunching: Optional[BunchingObservable] = None
    tau0: Optional[Tau0Observable] = None

    @model_validator(mode="after")
    def _check_not_empty(self) -> "Observables":
        if not self.names():
            raise ParameterError("a sweep needs at least one observable")
        return self

    def names(self) -> List[str]:
        flags = [
            ("epsilon", self.epsilon),
            ("ipr_extrema", self.ipr_extrema),
            ("spectrum", self.spectrum),
            ("winding", self.winding is not None),
            ("bunching", self.bunching is not None),
            ("tau0", self.tau0 is not None),
        ]
        return [name for name, on in flags if on]


class OutputSpec(BaseModel):
    path: Optional[Path] = None
    format: Literal["csv", "json"] = "csv"
    name: str = "sweep"


class SweepConfig(BaseModel):
    base: ModelParams = Field(default_factory=ModelParams)
    axes: List[Axis] = Field(default_factory=list, max_length=2)
    observables: Observables
    output: OutputSpec = Field(default_factory=OutputSpec)
    workers: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _check_axes(self) -> "SweepConfig":
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ParameterError(f"duplicate sweep axes {names}")
        return self

    @classmethod
    def from_toml(cls, path: Union[str, Path]) -> "SweepConfig":
        with Path(path).open("rb") as f:
            data = tomllib.load(f)
        return cls.model_validate(data)

    @property
    def axis_names(self) -> List[str]:
        return [a.name for a in self.axes]

    def points(self) -> List[Tuple[float, ...]]:
        """Grid points in row-major order (last axis fastest)."""
        return list(itertools.product(*(a.grid() for a in self.axes)))


class SweepResult(BaseModel):
    columns: List[str]
    rows: List[Dict[str, Any]]
    metadata: Dict[str, Any]

    @property
    def failed_rows(self) -> List[Dict[str, Any]]:
        return [r for r in self.rows if r.get("error")]

    def write(self, out_path: Union[str, Path], fmt: str = "csv", filename: str = "sweep") -> Path:
        header = header_lines(self.metadata) if fmt == "csv" else None
        return write_table(
            self.rows, self.columns, out_path, fmt,
            header=header, metadata=self.metadata, filename=filename,
        )


def _row(point: Dict[str, float], observable: str, key: Any = "", real=None, imag=None, error=None) -> dict:
    row = dict(point)
    row.update(
        observable=observable,
        key=key,
        real=None if real is None else float(real),
        imag=None if imag is None else float(imag),
        error=error,
    )
    return row


def _spectrum_rows(point, spectrum: SpectrumResult, observables: Observables) -> List[dict]:
    rows: List[dict] = []
    if observables.epsilon:
        rows.append(_row(point, "epsilon", real=spectrum.epsilon))
    if observables.ipr_extrema:
        rows.append(_row(point, "ipr_extrema", "max", real=spectrum.ipr_max))
        rows.append(_row(point, "ipr_extrema", "min", real=spectrum.ipr_min))
    if observables.spectrum:
        order = np.lexsort((spectrum.eigenvalues.imag, spectrum.eigenvalues.real))
        for j, idx in enumerate(order):
            e = spectrum.eigenvalues[idx]
            rows.append(_row(point, "spectrum", j, real=e.real, imag=e.imag))
            rows.append(_row(point, "spectrum_ipr", j, real=spectrum.ipr[idx]))
    return rows


def _guarded(point, observable: str, func) -> List[dict]:
    try:
        return func()
    except (NhqcError, ValidationError, np.linalg.LinAlgError) as exc:
        logger.warning("sweep point %s: %s failed: %s", point, observable, exc)
        return [_row(point, observable, error=f"{type(exc).__name__}: {exc}")]


def evaluate_point(config: SweepConfig, values: Sequence[float]) -> List[dict]:
    """All observable rows for one grid point."""
    point = dict(zip(config.axis_names, values))
    obs = config.observables
    try:
        params = config.base.replace(**point)
    except (NhqcError, ValidationError) as exc:
        return [_row(point, name, error=f"{type(exc).__name__}: {exc}") for name in obs.names()]

    rows: List[dict] = []
    spectrum: Optional[SpectrumResult] = None
    if obs.epsilon or obs.ipr_extrema or obs.spectrum:
        def spectral_rows():
            nonlocal spectrum
            spectrum = sector_spectrum(params, obs.sector)
            return _spectrum_rows(point, spectrum, obs)

        rows += _guarded(point, "spectral", spectral_rows)

    if obs.winding is not None:
        w = obs.winding
        for energy in w.energies:
            def winding_rows(energy=energy):
                result = winding_number(
                    params, energy, sector=w.sector, n_samples=w.n_samples,
                    theta_scale=w.theta_scale, workers=1,
                )
                return [_row(point, "winding", _energy_key(energy), real=result.winding)]

            rows += _guarded(point, "winding", winding_rows)

    if obs.bunching is not None or obs.tau0 is not None:
        shared = spectrum if spectrum is not None and obs.sector == "two" else None
        propagator: List[Propagator] = []

        def get_propagator() -> Propagator:
            if not propagator:
                propagator.append(Propagator.build(params, spectrum=shared))
            return propagator[0]

        if obs.bunching is not None:
            b = obs.bunching

            def bunching_rows():
                start = prepare_pair_state(params, b.n1 - 1, b.n2 - 1)
                trajectory = get_propagator().evolve(start, sample_times(b.t_max, b.dt))
                return [
                    _row(point, "bunching", _time_key(t), real=p)
                    for t, p in zip(trajectory.times, trajectory.bunching())
                ]

            rows += _guarded(point, "bunching", bunching_rows)

        if obs.tau0 is not None:
            tau = obs.tau0
            for d in tau.d:
                def tau_rows(d=d):
                    result = bunching_time(
                        params, tau.n1 - 1, (tau.n1 - 1 + d) % params.L, tau.target,
                        tau.t_max, tau.dt, get_propagator(),
                    )
                    return [_row(point, "tau0", d, real=result.tau0)]

                rows += _guarded(point, "tau0", tau_rows)
    return rows


def _energy_key(energy: complex) -> str:
    return f"{energy.real:g}{energy.imag:+g}j"


def _time_key(t: float) -> str:
    return f"{t:.6g}"


def run_sweep(config: SweepConfig, workers: Optional[int] = None) -> SweepResult:
    points = config.points()
    cap = settings.SWEEP_MAX_JOBS
    if len(points) > cap:
        raise ParameterError(f"sweep has {len(points)} grid points, above the cap of {cap}")
    n_jobs = workers or config.workers or settings.NHQC_WORKERS
    logger.info(
        "sweep: %d points over %s, observables %s, workers=%d",
        len(points), config.axis_names or "no axes", config.observables.names(), n_jobs,
    )
    # threads keep BLAS settings identical for any worker count
    chunks = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(evaluate_point)(config, values) for values in points
    )
    rows = [row for chunk in chunks for row in chunk]
    result = SweepResult(
        columns=config.axis_names + VALUE_COLUMNS,
        rows=rows,
        metadata=sweep_metadata(config),
    )
    failed = len(result.failed_rows)
    if failed:
        logger.warning("sweep finished with %d failed rows", failed)
    else:
        logger.info("sweep finished: %d rows", len(rows))
    return result


def sweep_metadata(config: SweepConfig) -> Dict[str, Any]:
    metadata: Dict[str, Any] = {
        "version": __version__,
        "config": config.model_dump(mode="json", exclude={"workers"}),
    }
    if settings.SWEEP_STAMP_TIME:
        metadata["created"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return metadata
