"""``nhqc`` command line.

Exit codes: 0 success, 1 invalid input or usage, 2 numerical failure.
Results go to stdout (or ``--out``); diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import tomllib
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from config import settings

from backend.src.utils import header_lines, render_table, write_table

from . import __version__
from .doublon import build_doublon_model, effective_hopping, thresholds, validate_asymptotics
from .dynamics import (
    Propagator,
    bunching_time,
    pair_distance_series,
    pair_probability,
    prepare_pair_state,
    sample_times,
    site_density,
)
from .errors import NumericalError, ParameterError
from .hamiltonian import build_h1, build_h2, write_triplets
from .model import ModelParams
from .oracle import run_all
from .spectral import epsilon_scan, sector_spectrum, sector_transition
from .sweep import SweepConfig, run_sweep
from .topology import winding_number, winding_slope

logger = logging.getLogger("nhqc")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2

PARAM_FLAGS = ("J", "U", "V", "theta", "h", "gamma", "L")


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """argparse that reports usage errors as exit code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _site(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("sites are 1-based")
    return value


def _params_parser() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("model parameters (defaults: J=1 U=0 V=0.15 theta=0 h=0 gamma=0 alpha=34/55)")
    group.add_argument("--config", type=Path, help="TOML file with a [params] table")
    group.add_argument("--J", type=float)
    group.add_argument("--U", type=float)
    group.add_argument("--V", type=float)
    group.add_argument("--theta", type=float)
    group.add_argument("--h", type=float)
    group.add_argument("--gamma", type=float)
    alpha = group.add_mutually_exclusive_group()
    alpha.add_argument("--alpha", help="exact rational p/q")
    alpha.add_argument("--fib", type=int, help="Fibonacci approximant order (9 gives 34/55)")
    group.add_argument("--L", type=int, help="lattice size; must equal the denominator of alpha")

    out = parent.add_argument_group("output")
    out.add_argument("--format", choices=("csv", "json"))
    out.add_argument("--out", type=Path, help="output file or directory (default stdout)")
    return parent


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="nhqc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"nhqc {__version__}")
    parent = _params_parser()
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    p = sub.add_parser("spectrum", parents=[parent], help="eigenvalues, epsilon and IPR")
    p.add_argument("--sector", choices=("single", "two"), default="two")
    p.add_argument("--dump-matrix", type=Path, help="write the Hamiltonian as row/col/re/im triplets")

    p = sub.add_parser("scan", parents=[parent], help="epsilon and IPR extrema over an h grid")
    p.add_argument("--h-min", type=float, default=0.0)
    p.add_argument("--h-max", type=float, default=3.5)
    p.add_argument("--steps", type=int, default=36)
    p.add_argument("--sector", choices=("single", "two"), default="two")
    p.add_argument("--locate", action="store_true", help="also bisect the real-to-complex transition")

    p = sub.add_parser("winding", parents=[parent], help="point-gap winding number")
    p.add_argument("--sector", choices=("single", "two"), default="two")
    p.add_argument("--eb", type=_complex, default=0j, help="base energy, e.g. 1.5 or 0.2+0.1j")
    p.add_argument("--samples", type=int)
    p.add_argument("--theta-scale", choices=("literal", "full"), default="literal")
    p.add_argument("--method", choices=("integral", "slope"), default="integral")
    p.add_argument("--theta0", type=float, default=0.0, help="slope method evaluation point")
    p.add_argument("--trace", type=Path, help="write theta, log|det|, unwrapped phase as CSV")

    p = sub.add_parser("doublon", parents=[parent], help="doublon thresholds and effective model")
    p.add_argument("--validate", action="store_true", help="compare with the full two-particle model")
    p.add_argument("--spectrum", action="store_true", help="print the effective-model spectrum")

    p = sub.add_parser("evolve", parents=[parent], help="post-selected two-particle evolution")
    p.add_argument("--n1", type=_site, required=True)
    p.add_argument("--n2", type=_site, required=True)
    p.add_argument("--t-max", type=float, default=200.0)
    p.add_argument("--dt", type=float)
    p.add_argument("--method", choices=("spectral", "direct"), default="spectral")
    p.add_argument("--snapshots", type=Path, help="write |psi(n, m)|^2 per time as t,n,m,prob rows")
    p.add_argument("--marginals", type=Path, help="write single-particle densities per time as t,site,density rows")

    p = sub.add_parser("bunching", parents=[parent], help="bunching time tau0")
    p.add_argument("--n1", type=_site, required=True)
    p.add_argument("--n2", type=_site)
    p.add_argument("--d", type=int, nargs="+", help="separations n2 - n1 (replaces --n2)")
    p.add_argument("--target", type=float)
    p.add_argument("--t-max", type=float, default=200.0)
    p.add_argument("--dt", type=float)
    p.add_argument("--method", choices=("spectral", "direct"), default="spectral")

    p = sub.add_parser("verify", help="run the brute-force oracle checks")
    p.add_argument("--fib", type=int, nargs="+", default=[6, 7], help="Fibonacci orders to check")

    p = sub.add_parser("sweep", help="run a sweep configuration")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out", type=Path)

    p = sub.add_parser("serve", help="start the HTTP API")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    return parser


def load_params(args: argparse.Namespace) -> ModelParams:
    """Schema defaults, then the TOML [params] table, then explicit flags."""
    data: Dict[str, Any] = {}
    if getattr(args, "config", None) is not None:
        with args.config.open("rb") as f:
            data.update(tomllib.load(f).get("params", {}))
        if "fib" in data:
            data["alpha"] = f"fib:{data.pop('fib')}"
    for name in PARAM_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    alpha = getattr(args, "alpha", None)
    if getattr(args, "fib", None) is not None:
        alpha = f"fib:{args.fib}"
    if alpha is not None:
        data["alpha"] = alpha
        if args.L is None:
            # a new alpha re-derives L unless it was given on the command line
            data.pop("L", None)
    return ModelParams.model_validate(data)


def _emit_text(args, values: Mapping[str, Any]) -> None:
    lines = [f"{k}={_text(v)}" for k, v in values.items()]
    _write(args, "\n".join(lines) + "\n")


def _text(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    if isinstance(value, complex):
        return f"{value.real:.10g}{value.imag:+.10g}j"
    if value is None:
        return "none"
    return str(value)


def _emit_table(args, rows: List[dict], columns: Sequence[str], metadata: Optional[dict] = None) -> None:
    fmt = args.format or "csv"
    if args.out is not None:
        target = write_table(rows, columns, args.out, fmt, metadata=metadata, filename=args.command)
        logger.info("wrote %s", target)
        return
    sys.stdout.write(render_table(rows, columns, fmt, metadata=metadata))


def _emit_scalars(args, values: Dict[str, Any]) -> None:
    if args.format is None:
        _emit_text(args, values)
    elif args.format == "json":
        _write(args, json.dumps(values, default=_text, indent=2) + "\n")
    else:
        _emit_table(args, [values], list(values))


def _write(args, text: str) -> None:
    if getattr(args, "out", None) is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_spectrum(args) -> int:
    params = load_params(args)
    result = sector_spectrum(params, args.sector)
    if args.dump_matrix is not None:
        matrix = build_h1(params).matrix if args.sector == "single" else build_h2(params).matrix
        write_triplets(matrix, args.dump_matrix)
    if args.format is None:
        _emit_text(args, {
            "sector": args.sector,
            "states": result.eigenvalues.size,
            "epsilon": result.epsilon,
            "real": result.is_real(),
            "ipr_max": result.ipr_max,
            "ipr_min": result.ipr_min,
            "eigenvector_condition": result.eigenvector_condition,
        })
        return EXIT_OK
    order = np.lexsort((result.eigenvalues.imag, result.eigenvalues.real))
    rows = [
        {"index": j, "real": float(result.eigenvalues[i].real),
         "imag": float(result.eigenvalues[i].imag), "ipr": float(result.ipr[i])}
        for j, i in enumerate(order)
    ]
    _emit_table(args, rows, ["index", "real", "imag", "ipr"])
    return EXIT_OK


def cmd_scan(args) -> int:
    params = load_params(args)
    if args.steps < 1:
        raise ParameterError("--steps must be >= 1")
    grid = np.linspace(args.h_min, args.h_max, args.steps) if args.steps > 1 else np.array([args.h_min])
    rows = [row.model_dump() for row in epsilon_scan(params, grid, args.sector)]
    if args.locate:
        h_t = sector_transition(params, args.sector, args.h_min, args.h_max)
        logger.info("real-to-complex transition at h=%.6f", h_t)
        rows.append({"h": h_t, "epsilon": None, "ipr_max": None, "ipr_min": None})
    _emit_table(args, rows, ["h", "epsilon", "ipr_max", "ipr_min"])
    return EXIT_OK


def cmd_winding(args) -> int:
    params = load_params(args)
    if args.method == "slope":
        slope = winding_slope(
            params, args.eb, args.theta0, sector=args.sector,
            n_samples=args.samples, theta_scale=args.theta_scale,
        )
        _emit_scalars(args, {"base_energy": args.eb, "theta0": args.theta0, "slope": slope})
        return EXIT_OK
    result = winding_number(
        params, args.eb, sector=args.sector, n_samples=args.samples, theta_scale=args.theta_scale,
    )
    if args.trace is not None:
        write_table(result.trace_rows(), ["theta", "log_abs_det", "omega"], args.trace, "csv",
                    filename="winding_trace")
    if args.format is None:
        _write(args, f"{result.winding}\n")
    else:
        _emit_scalars(args, result.summary().model_dump())
    return EXIT_OK


def cmd_doublon(args) -> int:
    params = load_params(args)
    if args.validate:
        report = validate_asymptotics(params)
        _emit_scalars(args, report.model_dump(exclude={"warnings"}))
        for w in report.warnings:
            print(f"warning: {w}", file=sys.stderr)
        return EXIT_OK
    if args.spectrum:
        evals = np.linalg.eigvals(build_doublon_model(params).matrix) + params.U
        order = np.lexsort((evals.imag, evals.real))
        rows = [{"index": j, "real": float(evals[i].real), "imag": float(evals[i].imag)}
                for j, i in enumerate(order)]
        _emit_table(args, rows, ["index", "real", "imag"])
        return EXIT_OK
    th = thresholds(params)
    _emit_scalars(args, {"J_e": effective_hopping(params), **th.model_dump()})
    return EXIT_OK


def cmd_evolve(args) -> int:
    params = load_params(args)
    propagator = Propagator.build(params, args.method)
    start = prepare_pair_state(params, args.n1 - 1, args.n2 - 1)
    trajectory = propagator.evolve(start, sample_times(args.t_max, args.dt))
    if trajectory.fallback:
        logger.warning("spectral propagation unavailable; used the direct integrator")
    rows = [{"t": s.time, "bunching": p} for s, p in zip(trajectory.states, trajectory.bunching())]
    _emit_table(args, rows, ["t", "bunching"])
    fmt = args.format or "csv"
    if args.snapshots is not None:
        grid = [
            {"t": s.time, "n": n + 1, "m": m + 1, "prob": float(p)}
            for s in trajectory.states
            for (n, m), p in np.ndenumerate(pair_probability(s))
        ]
        target = write_table(grid, ["t", "n", "m", "prob"], args.snapshots, fmt, filename="snapshots")
        logger.info("wrote %s", target)
    if args.marginals is not None:
        marginal = [
            {"t": s.time, "site": n + 1, "density": float(rho)}
            for s in trajectory.states
            for n, rho in enumerate(site_density(s))
        ]
        target = write_table(marginal, ["t", "site", "density"], args.marginals, fmt, filename="marginals")
        logger.info("wrote %s", target)
    return EXIT_OK


def cmd_bunching(args) -> int:
    params = load_params(args)
    n1 = args.n1 - 1
    if args.d:
        results = pair_distance_series(
            params, n1, args.d, args.target, args.t_max, args.dt, args.method
        )
        rows = [{"d": d, "tau0": r.tau0, "sustained": r.sustained} for d, r in zip(args.d, results)]
        _emit_table(args, rows, ["d", "tau0", "sustained"])
        return EXIT_OK
    if args.n2 is None:
        raise UsageError("bunching needs --n2 or --d")
    propagator = Propagator.build(params, args.method)
    result = bunching_time(
        params, n1, args.n2 - 1, args.target, args.t_max, args.dt, propagator
    )
    _emit_scalars(args, {
        "tau0": result.tau0, "target": result.target,
        "sustained": result.sustained, "method": propagator.method.value,
    })
    return EXIT_OK


def cmd_verify(args) -> int:
    reports = run_all(args.fib)
    for report in reports:
        print(report.model_dump_json())
    return EXIT_OK if all(r.passed for r in reports) else EXIT_NUMERICAL


def cmd_sweep(args) -> int:
    config = SweepConfig.from_toml(args.config)
    fmt = args.format or config.output.format
    out = args.out or config.output.path
    result = run_sweep(config, workers=args.workers)
    if out is None:
        header = header_lines(result.metadata) if fmt == "csv" else None
        sys.stdout.write(render_table(result.rows, result.columns, fmt, header, result.metadata))
    else:
        target = result.write(out, fmt, filename=config.output.name)
        logger.info("wrote %s", target)
    return EXIT_OK


def cmd_serve(args) -> int:
    from backend.app import run

    run(host=args.host, port=args.port)
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "scan": cmd_scan,
    "winding": cmd_winding,
    "doublon": cmd_doublon,
    "evolve": cmd_evolve,
    "bunching": cmd_bunching,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "serve": cmd_serve,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        level=settings.LOG_LEVEL,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (ParameterError, ValidationError, UsageError, FileNotFoundError, tomllib.TOMLDecodeError) as exc:
        print(f"nhqc {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"nhqc {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
