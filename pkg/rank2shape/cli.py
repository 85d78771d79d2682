"""Command line interface: rank2shape {sample, estimate, test, are-table, simulate}."""

# internal imports
from .base_estimators import gaussian_shape, hr_median, sphericity_stat, tyler_shape
from .efficiency import are_table
from .errors import Rank2ShapeError, UsageError
from .logging import getLogger, set_level
from .onestep import OneStepConfig, r_estimate, search_diagnostics
from .r2s_enums import LocationMode, Preliminary
from .radial_scores import ScoreFamily
from .sampler import parse_family, sample
from .simulation import compare_to_reference, preset, read_config, run_sim, write_report
from .utils import parse_vector, read_matrix_csv, write_matrix_csv
from .version import __version__

logger = getLogger(__name__)

# external imports
from beartype.typing import List, Optional
import argparse
import numpy
import sys


def _emit(text: str, out: Optional[str] = None):
    if out:
        with open(out, "w") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _key_values(pairs) -> str:
    return "".join(f"{key},{value!r}\n" if isinstance(value, float) else f"{key},{value}\n" for key, value in pairs)


def _resolve_theta(text: Optional[str], data: numpy.ndarray) -> numpy.ndarray:
    k = data.shape[1]
    if text is None:
        return numpy.zeros(k)
    if text.strip().lower() == "auto":
        return hr_median(data).theta
    return parse_vector(text, k)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rank2shape",
        description="Rank-based one-step estimation of elliptical shape matrices",
    )
    parser.add_argument("-v", "--version", action="version", version=f"rank2shape {__version__}")
    parser.add_argument(
        "--log-level", choices=["debug", "info", "warning", "error"], default="warning", help="Logging level"
    )
    subparsers = parser.add_subparsers(dest="command", metavar="command", required=True)

    parser_s = subparsers.add_parser("sample", help="Draw an elliptical sample as CSV")
    parser_s.add_argument("--family", required=True, help="normal, t:NU or e:ETA")
    parser_s.add_argument("--k", type=int, default=2, help="Dimension (Default = 2)")
    parser_s.add_argument("--n", type=int, required=True, help="Number of observations")
    parser_s.add_argument("--seed", type=int, required=True, help="64-bit seed")
    parser_s.add_argument("--scale", type=float, default=1.0, help="Scale sigma (Default = 1)")
    parser_s.add_argument("--theta", default=None, help="Location v1,v2,... (Default = origin)")
    parser_s.add_argument("--shape", default=None, help="CSV file holding the shape matrix (Default = identity)")
    parser_s.add_argument("--out", default=None, help="Output file (Default = stdout)")

    parser_e = subparsers.add_parser("estimate", help="Estimate the shape matrix of a CSV sample")
    parser_e.add_argument("data", help="CSV file of observations, '-' for stdin")
    parser_e.add_argument("--method", choices=["tyler", "gaussian", "hr", "ronestep"], default="tyler")
    parser_e.add_argument("--theta", default=None, help="Location v1,v2,... or 'auto' (Default = origin)")
    parser_e.add_argument("--tol", type=float, default=1e-9, help="Fixed point tolerance (Default = 1e-9)")
    parser_e.add_argument("--max-iter", type=int, default=None, help="Iteration limit (Default = 500, hr 2000)")
    parser_e.add_argument("--scores", default="vdw", help="vdw, t:NU, e:ETA or const (Default = vdw)")
    parser_e.add_argument("--preliminary", choices=["tyler", "gaussian"], default="tyler")
    parser_e.add_argument("--location", default=None, help="'auto' or 'known:v1,v2,...' for ronestep")

    parser_t = subparsers.add_parser("test", help="Rank-based test of a hypothesised shape matrix")
    parser_t.add_argument("data", help="CSV file of observations, '-' for stdin")
    parser_t.add_argument("--shape", default=None, help="CSV file holding V0 (Default = identity)")
    parser_t.add_argument("--theta", default=None, help="Location v1,v2,... or 'auto' (Default = origin)")
    parser_t.add_argument("--scores", default="vdw", help="vdw, t:NU, e:ETA or const (Default = vdw)")

    parser_a = subparsers.add_parser("are-table", help="Asymptotic relative efficiencies as CSV")
    parser_a.add_argument("--k", default="2,3,4,6,10", help="Dimensions (Default = 2,3,4,6,10)")
    parser_a.add_argument("--scores", default="t:0.5,t:3,t:10,vdw", help="Score families")
    parser_a.add_argument("--under", default="t:0.5,t:3,t:10,normal", help="Radial laws")
    parser_a.add_argument("--limits", action="store_true", help="Add the nu -> 0 limit column")
    parser_a.add_argument("--out", default=None, help="Output file (Default = stdout)")

    parser_m = subparsers.add_parser("simulate", help="Monte Carlo bias and MSE of shape estimators")
    source = parser_m.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", help="JSON simulation configuration")
    source.add_argument("--preset", help="Shipped configuration (table2)")
    parser_m.add_argument("--out", default=None, help="Output CSV (Default = config output or stdout)")
    parser_m.add_argument("--threads", type=int, default=None, help="Worker processes, -1 for all cores")
    parser_m.add_argument("--compare", default=None, help="Write a comparison with the reference cells here")
    return parser


def _split(text: str) -> List[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _run_sample(args):
    theta = parse_vector(args.theta, args.k) if args.theta else None
    V = read_matrix_csv(args.shape) if args.shape else None
    model = parse_family(args.family, args.k, theta=theta, sigma=args.scale, V=V)
    data = sample(model, args.n, args.seed)
    _emit(write_matrix_csv(data), args.out)


def _run_estimate(args):
    data = read_matrix_csv(args.data)
    if args.method == "gaussian":
        report = gaussian_shape(data)
        _emit(write_matrix_csv(report.V) + _key_values([("iterations", 0), ("residual", 0.0)]))
        return
    if args.method == "hr":
        report = hr_median(data, args.tol, args.max_iter or 2000)
        pairs = [("theta", ";".join(repr(float(v)) for v in report.theta))]
        pairs += [("iterations", report.iterations), ("residual", report.residual)]
        _emit(write_matrix_csv(report.V) + _key_values(pairs))
        return
    if args.method == "tyler":
        report = tyler_shape(data, _resolve_theta(args.theta, data), args.tol, args.max_iter or 500)
        _emit(write_matrix_csv(report.V) + _key_values([("iterations", report.iterations), ("residual", report.residual)]))
        return

    location, theta = LocationMode.KNOWN, None
    spec = args.location if args.location is not None else args.theta
    if spec is not None:
        if spec.strip().lower() == "auto":
            location = LocationMode.HR
        else:
            theta = parse_vector(spec.split(":", 1)[1] if spec.startswith("known:") else spec, data.shape[1])
    cfg = OneStepConfig(
        f1=ScoreFamily.parse(args.scores),
        preliminary=Preliminary[args.preliminary.upper()],
        location=location,
        theta=theta,
    )
    result = r_estimate(data, cfg)
    _emit(write_matrix_csv(result.V) + _key_values(search_diagnostics(result)))


def _run_test(args):
    data = read_matrix_csv(args.data)
    k = data.shape[1]
    V0 = read_matrix_csv(args.shape) if args.shape else numpy.eye(k)
    result = sphericity_stat(data, _resolve_theta(args.theta, data), V0, ScoreFamily.parse(args.scores))
    _emit(_key_values([("Q", result.Q), ("df", result.df), ("p", result.p)]))


def _run_are_table(args):
    try:
        ks = [int(k) for k in _split(args.k)]
    except ValueError as e:
        raise UsageError(f"Cannot parse dimensions '{args.k}'") from e
    scores = [ScoreFamily.parse(text) for text in _split(args.scores)]
    unders = [parse_family(text).scores() for text in _split(args.under)]
    table = are_table(ks, scores, unders, limits=args.limits)
    _emit(table.to_csv(index=False, lineterminator="\n", float_format="%.6f"), args.out)


def _run_simulate(args):
    cfg = read_config(args.config) if args.config else preset(args.preset)
    report = run_sim(cfg, args.threads)
    out = args.out or cfg.output
    text = write_report(report, out)
    if text is not None:
        sys.stdout.write(text)
    if args.compare:
        compare_to_reference(report).to_csv(args.compare, index=False, lineterminator="\n")


COMMANDS = {
    "sample": _run_sample,
    "estimate": _run_estimate,
    "test": _run_test,
    "are-table": _run_are_table,
    "simulate": _run_simulate,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Entry point of the rank2shape command

    Args:
        argv (List[str], optional): arguments. Defaults to sys.argv[1:].

    Returns:
        int: 0 on success, 2 for usage errors, 1 for any other failure
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    set_level(args.log_level)
    try:
        COMMANDS[args.command](args)
    except UsageError as e:
        sys.stderr.write(f"rank2shape {args.command}: error: {e}\n")
        return 2
    except (Rank2ShapeError, OSError, ValueError) as e:
        sys.stderr.write(f"rank2shape {args.command}: error: {e}\n")
        return 1
    return 0
