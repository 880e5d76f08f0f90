"""
Surface Volumes command line
Volumes, metrics and entropies of the purifications of a density operator,
plus the coarse-graining, scaling and validation experiments built on them.

Run:  python app.py volume --group so3 --spectrum 0.5,0.3,0.2
"""
import argparse
import os
from pathlib import Path
from typing import Callable, Dict, List, Optional

try:
    # Optional convenience: load SURFACE_OUTPUT_DIR / SURFACE_THREADS from .env
    from dotenv import load_dotenv  # type: ignore

    load_dotenv()
except Exception:  # pragma: no cover
    pass

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from coarse_grain import HEADLINE_COVERAGE, HEADLINE_ENTROPY, Measure, build_grid, run_experiment, write_bins, write_cells
from common import (
    DimensionMismatch,
    InvalidArgument,
    OutputFormat,
    SurfaceError,
    UnsupportedDimension,
    log,
    log_error,
    progress,
    warn,
    write_table,
)
from entropy import entropy_report
from hermitian import DensityOperator, as_complex_matrix
from metric import (
    ClosedForm,
    Method,
    VolumeResult,
    closed_form_volume,
    gram_metric,
    integrate_volume,
    normalized_closed_form_volume,
)
from purification import Fiber
from scaling import FIGURE_DIMENSIONS, TAIL_POINTS, sweep, write_curves, write_points
from unitaries import UnitaryParameterization
from validation import Suite, run_suites


DEFAULT_OUTPUT_DIR = "output"
MAX_SEED = 2 ** 64


# ==================== Models ====================

class Command:
    VOLUME = "volume"
    METRIC = "metric"
    ENTROPY = "entropy"
    COARSE_GRAIN = "coarse-grain"
    SCALING = "scaling"
    VALIDATE = "validate"


class GroupName:
    SO3 = "so3"
    SU2 = "su2"
    SON = "son"
    U = "u"

    ALL = (SO3, SU2, SON, U)


CLOSED_FORMS = {GroupName.SO3: ClosedForm.SO3, GroupName.SU2: ClosedForm.SU2, GroupName.SON: ClosedForm.SON}


class RunConfig(BaseModel):
    command: str
    group: Optional[str] = None
    spectrum: Optional[List[float]] = None
    matrix_file: Optional[str] = None
    xi: Optional[List[float]] = None
    method: Optional[str] = None
    budget: Optional[int] = Field(default=None, ge=1)
    seed: int = Field(default=0, ge=0, lt=MAX_SEED)
    ell: int = Field(default=300, ge=2, le=4000)
    k: int = Field(default=10, ge=1, le=10_000)
    measures: List[str] = Field(default_factory=lambda: list(Measure.ALL))
    weyl_only: bool = True
    n_list: List[int] = Field(default_factory=lambda: list(FIGURE_DIMENSIONS))
    curve_samples: int = Field(default=200, ge=2, le=100_000)
    tail_points: int = Field(default=TAIL_POINTS, ge=2, le=10_000_000)
    suites: List[str] = Field(default_factory=lambda: list(Suite.ALL))
    samples: Optional[int] = Field(default=None, ge=1)
    output: str = DEFAULT_OUTPUT_DIR
    format: str = OutputFormat.CSV
    threads: int = Field(default=1, ge=1, le=256)


# ==================== Helper Functions ====================

def default_threads() -> int:
    raw = os.environ.get("SURFACE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        warn(f"Ignoring SURFACE_THREADS={raw!r}; using 1 thread")
        return 1


def float_list(text: str) -> List[float]:
    try:
        return [float(token) for token in text.replace(" ", "").split(",") if token]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected comma-separated numbers, got {text!r}")


def int_list(text: str) -> List[int]:
    try:
        return [int(token) for token in text.replace(" ", "").split(",") if token]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected comma-separated integers, got {text!r}")


def load_matrix_file(path: str) -> np.ndarray:
    """First line d, then d rows of d complex tokens such as 0.25+0.1j; '#' starts a comment"""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidArgument(f"Cannot read matrix file {path}: {exc}")
    lines = [line.split("#", 1)[0].strip() for line in text.splitlines()]
    lines = [line for line in lines if line]
    if not lines:
        raise InvalidArgument(f"Matrix file {path} is empty")
    try:
        d = int(lines[0])
        rows = [[complex(token) for token in line.replace(",", " ").split()] for line in lines[1:]]
    except ValueError as exc:
        raise InvalidArgument(f"Cannot parse matrix file {path}: {exc}")
    if d < 1 or len(rows) != d or any(len(row) != d for row in rows):
        raise DimensionMismatch(f"Matrix file {path} declares d={d} but holds {len(rows)} rows "
                                f"of lengths {[len(row) for row in rows]}")
    return as_complex_matrix(rows)


def load_state(config: RunConfig) -> DensityOperator:
    if (config.spectrum is None) == (config.matrix_file is None):
        raise InvalidArgument("Give exactly one of --spectrum or --matrix-file")
    if config.matrix_file is not None:
        rho = DensityOperator(load_matrix_file(config.matrix_file))
        log(f"✓ Loaded {rho!r} from {config.matrix_file}")
        return rho
    return DensityOperator.from_spectrum(config.spectrum)


def parameterization_for(group: str, dim: int) -> UnitaryParameterization:
    if group == GroupName.SO3:
        if dim != 3:
            raise DimensionMismatch(f"so3 needs a 3-dimensional state, got dimension {dim}")
        return UnitaryParameterization.so(3)
    if group == GroupName.SU2:
        if dim != 2:
            raise DimensionMismatch(f"su2 needs a 2-dimensional state, got dimension {dim}")
        return UnitaryParameterization.su2()
    if group == GroupName.SON:
        if dim < 2:
            raise DimensionMismatch(f"son needs dimension >= 2, got {dim}")
        return UnitaryParameterization.so(dim)
    if group == GroupName.U:
        if dim < 2:
            raise DimensionMismatch(f"u needs dimension >= 2, got {dim}")
        return UnitaryParameterization.u(dim)
    raise InvalidArgument(f"Unknown group: {group}")


def output_file(config: RunConfig, stem: str) -> Path:
    """--output naming a .csv/.json file is used as-is; anything else is a directory"""
    target = Path(config.output)
    if target.suffix.lower() in (".csv", ".json"):
        return target
    return target / f"{stem}.{config.format}"


# ==================== Commands ====================

VOLUME_HEADER = ["group", "dim", "method", "raw", "normalized", "estimator_error", "normalized_error",
                 "evaluations", "closed_form", "proportionality"]


def closed_form_result(group: str, p: UnitaryParameterization, rho: DensityOperator) -> VolumeResult:
    form = CLOSED_FORMS[group]
    lam = rho.eigenvalues
    raw = closed_form_volume(form, lam)
    return VolumeResult(
        method=Method.CLOSED_FORM,
        raw=raw,
        normalized=normalized_closed_form_volume(form, lam),
        estimator_error=0.0,
        group=p.label,
        dim=rho.dim,
        spectrum=[float(x) for x in lam],
        closed_form=raw,
        proportionality=1.0 if raw > 0.0 else None,
    )


def run_volume(config: RunConfig) -> int:
    group = config.group or GroupName.SO3
    rho = load_state(config)
    p = parameterization_for(group, rho.dim)
    method = config.method or (Method.CLOSED_FORM if group in CLOSED_FORMS else None)

    if method == Method.CLOSED_FORM:
        if group not in CLOSED_FORMS:
            raise UnsupportedDimension(f"No closed-form volume for {p.label}; use quadrature or monte-carlo")
        result = closed_form_result(group, p, rho)
    else:
        progress(f"integrating {p.label} volume ({method or 'default method'})")
        result = integrate_volume(Fiber(rho, p), method, config.budget, config.seed, config.threads)

    print(f"raw={result.raw!r}")
    print(f"normalized={result.normalized!r}")
    print(f"estimator_error={result.estimator_error!r}")
    print(f"method={result.method}")
    if result.closed_form is not None:
        print(f"closed_form={result.closed_form!r} proportionality={result.proportionality!r}")

    header = VOLUME_HEADER + [f"lambda{i + 1}" for i in range(result.dim)]
    row = [result.group, result.dim, result.method, result.raw, result.normalized, result.estimator_error,
           result.normalized_error, result.evaluations, result.closed_form, result.proportionality]
    path = write_table(output_file(config, "volume"), header, [row + result.spectrum], config.format)
    log(f"✓ Wrote {path}")
    return 0


def run_metric(config: RunConfig) -> int:
    rho = load_state(config)
    p = parameterization_for(config.group or GroupName.SO3, rho.dim)
    xi = config.xi if config.xi is not None else [0.0] * p.n_params
    if len(xi) != p.n_params:
        raise DimensionMismatch(f"{p.label} takes {p.n_params} angles ({', '.join(p.names)}), got {len(xi)}")

    metric = gram_metric(Fiber(rho, p), xi)
    det = metric.det()
    density = float(np.sqrt(det))
    names = p.names
    for i in range(metric.n):
        print("  ".join(f"{metric.g[i, j].real:+.6f}{metric.g[i, j].imag:+.6f}j" for j in range(metric.n)))
    print(f"det={det!r}")
    print(f"density={density!r}")

    rows = [[names[i], names[j], float(metric.g[i, j].real), float(metric.g[i, j].imag)]
            for i in range(metric.n) for j in range(metric.n)]
    rows += [["det", "", det, 0.0], ["density", "", density, 0.0]]
    path = write_table(output_file(config, "metric"), ["row", "col", "re", "im"], rows, config.format)
    log(f"✓ Wrote {path}")
    return 0


def run_entropy(config: RunConfig) -> int:
    rho = load_state(config)
    volume_group = None
    if config.group is not None:
        parameterization_for(config.group, rho.dim)
        volume_group = CLOSED_FORMS.get(config.group)
    report = entropy_report(rho.eigenvalues, volume_group)

    data = report.model_dump()
    for key, value in data.items():
        print(f"{key}={value!r}")
    path = write_table(output_file(config, "entropy"), list(data), [list(data.values())], config.format)
    log(f"✓ Wrote {path}")
    return 0


def run_coarse_grain(config: RunConfig) -> int:
    grid = build_grid(config.ell)
    directory = Path(config.output)
    for measure in config.measures:
        if measure not in Measure.ALL:
            raise InvalidArgument(f"Unknown measure: {measure}")
        progress(f"coarse-graining by {measure} (ell={config.ell}, k={config.k})")
        report = run_experiment(grid, measure, config.k, config.weyl_only)
        write_bins(report, directory / f"coarse_{measure}_bins.{config.format}", config.format)
        write_cells(report, grid, directory / f"coarse_{measure}_cells.{config.format}", config.format)

        top = report.top_coverage(HEADLINE_COVERAGE)
        print(f"{measure}: top bins {top.bins} hold {top.coverage:.4f} of the cells "
              f"with mean S_vN/log2(3) = {top.mean_svn_norm:.4f}; "
              f"{report.fraction_above(HEADLINE_ENTROPY):.4f} of the cells sit in bins above {HEADLINE_ENTROPY}")
    log(f"✓ Wrote coarse-grain tables to {directory}")
    return 0


def run_scaling(config: RunConfig) -> int:
    progress(f"scaling sweep over N = {config.n_list}")
    points = sweep(config.n_list, config.threads, tail_points=config.tail_points)
    directory = Path(config.output)
    write_points(points, directory / f"scaling_points.{config.format}", config.format)
    write_curves(config.n_list, directory / f"v_norm_curves.{config.format}", config.curve_samples, config.format)
    for point in points:
        print(f"N={point.N} lambda1_star={point.lambda1_star!r} integral_ratio={point.integral_ratio!r} "
              f"mean_svn_norm={point.mean_svn_norm_tail!r}")
    log(f"✓ Wrote scaling tables to {directory}")
    return 0


def run_validate(config: RunConfig) -> int:
    results = run_suites(config.suites, config.seed, config.samples, config.budget)
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        print(f"{status} {result.name}: max_error={result.max_error!r} tolerance={result.tolerance!r}")
    rows = [[r.name, r.passed, r.max_error, r.tolerance, r.samples, r.budget] for r in results]
    path = write_table(output_file(config, "validation"),
                       ["suite", "passed", "max_error", "tolerance", "samples", "budget"], rows, config.format)
    log(f"✓ Wrote {path}")
    return 0 if all(r.passed for r in results) else 1


COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    Command.VOLUME: run_volume,
    Command.METRIC: run_metric,
    Command.ENTROPY: run_entropy,
    Command.COARSE_GRAIN: run_coarse_grain,
    Command.SCALING: run_scaling,
    Command.VALIDATE: run_validate,
}


# ==================== Entry point ====================

def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=0, help="Monte Carlo and validation seed (0 <= seed < 2^64)")
    shared.add_argument("--output", default=os.environ.get("SURFACE_OUTPUT_DIR", DEFAULT_OUTPUT_DIR),
                        help="Output directory, or a .csv/.json file for single-table commands")
    shared.add_argument("--format", choices=OutputFormat.ALL, default=OutputFormat.CSV)
    shared.add_argument("--threads", type=int, default=default_threads(), help="Worker threads")

    state = argparse.ArgumentParser(add_help=False)
    state.add_argument("--spectrum", type=float_list, help="Eigenvalues, e.g. 0.5,0.3,0.2")
    state.add_argument("--matrix-file", help="Density matrix file: d, then d rows of complex entries")

    parser = argparse.ArgumentParser(description="Surface-of-ignorance volumes and experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    volume = sub.add_parser(Command.VOLUME, parents=[shared, state], help="Volume of the purification fiber")
    volume.add_argument("--group", choices=GroupName.ALL, default=GroupName.SO3)
    volume.add_argument("--method", choices=(Method.QUADRATURE, Method.MONTE_CARLO, Method.CLOSED_FORM))
    volume.add_argument("--budget", type=int, help="Integrand evaluations (at least 1000)")

    metric = sub.add_parser(Command.METRIC, parents=[shared, state], help="Induced metric at one point")
    metric.add_argument("--group", choices=GroupName.ALL, default=GroupName.SO3)
    metric.add_argument("--xi", type=float_list, help="Angles in parameter order (default all zero)")

    entropy = sub.add_parser(Command.ENTROPY, parents=[shared, state], help="Entropies of a spectrum")
    entropy.add_argument("--group", choices=(GroupName.SO3, GroupName.SU2, GroupName.SON),
                         help="Also report the normalized closed-form volume")

    coarse = sub.add_parser(Command.COARSE_GRAIN, parents=[shared], help="Coarse-grain the qutrit simplex")
    coarse.add_argument("--ell", type=int, default=300, help="Grid resolution per eta axis")
    coarse.add_argument("--k", type=int, default=10, help="Number of bins")
    coarse.add_argument("--measure", action="append", choices=Measure.ALL,
                        help="Measure to bin by (repeatable, default all)")
    coarse.add_argument("--all-cells", action="store_true", help="Count cells outside the Weyl chamber too")

    scaling = sub.add_parser(Command.SCALING, parents=[shared], help="SO(N) scaling sweep")
    scaling.add_argument("--n-list", type=int_list, default=list(FIGURE_DIMENSIONS))
    scaling.add_argument("--curve-samples", type=int, default=200)
    scaling.add_argument("--tail-points", type=int, default=TAIL_POINTS)

    validate = sub.add_parser(Command.VALIDATE, parents=[shared], help="Run self-check suites")
    validate.add_argument("--suite", action="append", choices=Suite.ALL, help="Suite to run (repeatable, default all)")
    validate.add_argument("--samples", type=int, help="Samples per suite (default per suite)")
    validate.add_argument("--budget", type=int,
                          help="Evaluations per integration in the volume and so4-proportionality suites")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {
        "command": args.command,
        "seed": args.seed,
        "output": args.output,
        "format": args.format,
        "threads": args.threads,
    }
    for name in ("group", "spectrum", "matrix_file", "xi", "method", "budget", "ell", "k",
                 "n_list", "curve_samples", "tail_points", "samples"):
        if getattr(args, name, None) is not None:
            values[name] = getattr(args, name)
    if getattr(args, "measure", None):
        values["measures"] = args.measure
    if getattr(args, "suite", None):
        values["suites"] = args.suite
    if getattr(args, "all_cells", False):
        values["weyl_only"] = False
    return RunConfig(**values)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        return COMMANDS[config.command](config)
    except ValidationError as exc:
        first = exc.errors()[0]
        log_error(f"Invalid option {'.'.join(str(x) for x in first['loc'])}: {first['msg']}")
        return 2
    except SurfaceError as exc:
        log_error(exc.detail)
        return exc.exit_code
    except Exception as exc:  # pragma: no cover
        log_error(f"{type(exc).__name__}: {exc}")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
