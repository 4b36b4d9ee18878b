"""Command-line front end.

Exit codes
----------
0  success
1  usage error (bad flags or unparsable values)
2  enumeration failed (budget exhausted or undecidable sign)
3  integration failed (step-size underflow or overflow)
4  malformed trajectory CSV
5  residual threshold violated
6  at least one sweep job failed
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from .closure import DEFAULT_BUDGET, enumerate_sigma
from .conic import Conic
from .errors import AmbiguousSign, ClosureBudgetExceeded, IntegrationOverflow, NonConvergence
from .numeric import MAX_PRECISION, as_rational
from .quantization import cartan, fully_bubbling_energy, gamma_vector, margin_check, pohozaev_residual
from .radial import (
    RadialProblem,
    classify_decay,
    detect_plateaus,
    integrate,
    radial_residuals,
    read_trajectory_csv,
)
from .radial.analysis import DEFAULT_MIN_LENGTH, DEFAULT_SLOPE_TOL, DEFAULT_THRESHOLD

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ENUMERATE = 2
EXIT_INTEGRATE = 3
EXIT_MALFORMED = 4
EXIT_RESIDUAL = 5
EXIT_SWEEP = 6

PRECISION_ENV = "TODA_SIGMA_PRECISION"
MIN_PRECISION = 64
RESIDUAL_THRESHOLD = 1e-6
MATCH_TOL = 0.05

PRESETS = {
    "scalar": {"gamma": ["0"], "eta": [0.0], "t_range": (-7.0, 7.0)},
    "symmetric": {"gamma": ["0", "0"], "eta": [0.0, 0.0], "t_range": (-7.0, 12.0)},
    "tower": {"gamma": ["0", "0"], "eta": [0.0, -30.0], "t_range": (-7.0, 40.0)},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for enumeration failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _rational(text: str) -> Fraction:
    try:
        return as_rational(text)
    except (TypeError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _rational_list(text: str) -> list[Fraction]:
    return [_rational(x) for x in text.split(",") if x.strip()]


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"non-finite entry in {text!r}")
    return vals


def _precision(text: str) -> int:
    try:
        bits = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"precision must be an integer, got {text!r}") from None
    if bits < MIN_PRECISION:
        raise argparse.ArgumentTypeError(f"precision must be >= {MIN_PRECISION} bits")
    return bits


def default_precision() -> int:
    raw = os.environ.get(PRECISION_ENV)
    if not raw:
        return MAX_PRECISION
    try:
        return _precision(raw)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"{PRECISION_ENV}: {exc}") from None


def _emit(text: str, output: str | None) -> None:
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# ---------------------------------------------------------------- enumerate

def sigma_csv(sigma) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s1", "s2", "provenance"])
    for p in sigma:
        w.writerow([p.s1.to_decimal(30), p.s2.to_decimal(30),
                    "" if p.provenance is None else str(p.provenance)])
    return buf.getvalue()


def cmd_enumerate(args) -> int:
    try:
        conic = Conic(args.mu1, args.mu2)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        sigma = enumerate_sigma(conic, args.budget, max_precision=args.precision)
    except (ClosureBudgetExceeded, AmbiguousSign) as exc:
        print(f"enumerate failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ENUMERATE
    text = sigma.dumps(indent=2) + "\n" if args.format == "json" else sigma_csv(sigma)
    _emit(text, args.output)
    return EXIT_OK


# ---------------------------------------------------------------- simulate

def problem_from_args(args) -> RadialProblem:
    base = dict(PRESETS[args.preset]) if args.preset else {}
    gamma = args.gamma if args.gamma is not None else base.get("gamma")
    if gamma is None:
        raise UsageError("simulate needs --preset or --gamma")
    n = len(gamma)
    eta = args.eta if args.eta is not None else base.get("eta", [0.0] * n)
    h = args.h if args.h is not None else [1.0] * n
    t0, t1 = base.get("t_range", (-7.0, 7.0))
    t0 = args.t_start if args.t_start is not None else t0
    t1 = args.t_end if args.t_end is not None else t1
    try:
        return RadialProblem.build(gamma, eta, h, t_range=(t0, t1), rtol=args.rtol,
                                   atol=args.atol, max_step=args.max_step)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def plateau_report(traj, plateaus, precision: int = MAX_PRECISION, match_tol: float = MATCH_TOL) -> dict:
    """Plateau vectors, each flagged against Σ(μ1, μ2) when the system has two components.

    ``sigma_set_match`` is ``None`` for other sizes.
    """
    p = traj.problem
    members = None
    if p.n == 2:
        mu = [1 + g for g in p.gamma]
        members = np.array(enumerate_sigma(Conic(*mu), max_precision=precision).as_floats())
    details = []
    for pl in plateaus:
        entry = {
            "t_start": pl.t_start,
            "t_end": pl.t_end,
            "sigma": list(pl.sigma),
            "decay": [d.value for d in pl.decay],
        }
        if members is not None:
            dist = np.max(np.abs(members - np.array(pl.sigma)), axis=1)
            k = int(np.argmin(dist))
            entry["nearest"] = list(members[k])
            entry["distance"] = float(dist[k])
            entry["member"] = bool(dist[k] <= match_tol)
        details.append(entry)
    final = traj.problem.t_range[1]
    return {
        "plateaus": [d["sigma"] for d in details],
        "sigma_set_match": None if members is None else [d["member"] for d in details],
        "details": details,
        "gamma": [str(g) for g in p.gamma],
        "eta": list(p.eta),
        "h": list(p.h),
        "t_range": list(p.t_range),
        "final_sigma": traj.final_sigma.tolist(),
        "final_decay": [d.value for d in classify_decay(traj, final)],
    }


def cmd_simulate(args) -> int:
    problem = problem_from_args(args)
    try:
        traj = integrate(problem)
    except (NonConvergence, IntegrationOverflow) as exc:
        where = "" if exc.t is None else f" (t = {exc.t:.17g})"
        print(f"simulate failed: {type(exc).__name__}: {exc}{where}", file=sys.stderr)
        return EXIT_INTEGRATE
    if args.trajectory:
        traj.to_csv(args.trajectory)
    plateaus = detect_plateaus(traj, args.slope_tol, args.min_length, args.threshold)
    report = plateau_report(traj, plateaus, args.precision, args.match_tol)
    _emit(_dump(report), args.output)
    return EXIT_OK


# ---------------------------------------------------------------- quantize / check

def cmd_quantize(args) -> int:
    gamma = args.gamma if args.gamma is not None else [Fraction(0)] * args.n
    if len(gamma) != args.n:
        raise UsageError(f"--gamma needs {args.n} entries, got {len(gamma)}")
    try:
        gamma = gamma_vector(gamma)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    A = cartan(args.n)
    sv = fully_bubbling_energy(args.n, gamma)
    report = {
        "n": args.n,
        "gamma": [str(g) for g in gamma],
        "sigma": [str(x) for x in sv],
        "pohozaev_residual": str(pohozaev_residual(A, sv, gamma)),
        "margins": [str(m) for m in margin_check(A, sv, gamma)],
    }
    _emit(_dump(report), args.output)
    return EXIT_OK


def cmd_check(args) -> int:
    try:
        cols = read_trajectory_csv(args.trajectory)
    except (OSError, ValueError) as exc:
        print(f"check: malformed trajectory: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    n = cols["n"]
    gamma = args.gamma if args.gamma is not None else [Fraction(0)] * n
    h = args.h if args.h is not None else [1.0] * n
    if len(gamma) != n or len(h) != n:
        raise UsageError(f"trajectory has {n} components; --gamma and --h must match")
    rep = radial_residuals(cols["t"], cols["u"], cols["du"], cols["sigma"], gamma, h)
    result = {
        "rows": int(len(cols["t"])),
        "max_neumann_rel": rep.max_neumann_rel,
        "max_pohozaev_rel": rep.max_pohozaev_rel,
        "threshold": args.threshold,
        "ok": rep.max_neumann_rel <= args.threshold and rep.max_pohozaev_rel <= args.threshold,
    }
    _emit(_dump(result), args.output)
    if not result["ok"]:
        print(f"check: residual above {args.threshold:g}", file=sys.stderr)
        return EXIT_RESIDUAL
    return EXIT_OK


# ---------------------------------------------------------------- sweep

def _run_job(argv: list[str]) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        try:
            code = main(argv)
        except SystemExit as exc:
            code = exc.code if isinstance(exc.code, int) else EXIT_USAGE
    return code, out.getvalue(), err.getvalue()


def run_sweep(path: str, out_dir: str, jobs: int | None) -> int:
    """Run each argv list in the JSON array at ``path``; outputs go to ``out_dir/job-NNN.*``."""
    try:
        argvs = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read sweep file: {exc}") from None
    if not isinstance(argvs, list) or not all(
            isinstance(j, list) and all(isinstance(a, str) for a in j) for j in argvs):
        raise UsageError("sweep file must be a JSON array of argument lists")
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(_run_job, argvs))
    summary = []
    for i, (argv, (code, out, err)) in enumerate(zip(argvs, results)):
        stem = target / f"job-{i:03d}"
        stem.with_suffix(".out").write_text(out)
        stem.with_suffix(".err").write_text(err)
        summary.append({"job": i, "argv": argv, "exit": code, "stdout": str(stem.with_suffix(".out"))})
    sys.stdout.write(_dump(summary))
    return EXIT_OK if all(s["exit"] == 0 for s in summary) else EXIT_SWEEP


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="toda-sigma", description="Blowup energy sets and radial simulations for singular SU(n+1) Toda systems.")
    parser.add_argument("--sweep", metavar="FILE", help="JSON array of argument lists to run in parallel")
    parser.add_argument("--out-dir", default="sweep-out", help="directory for per-job sweep outputs")
    parser.add_argument("--jobs", type=int, default=None, help="parallel sweep workers")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p):
        p.add_argument("-o", "--output", help="output path (default: stdout)")
        p.add_argument("--precision", type=_precision, default=None,
                       help=f"maximum working precision in bits (default: ${PRECISION_ENV} or {MAX_PRECISION})")

    p = sub.add_parser("enumerate", help="enumerate the closure set for masses mu1, mu2")
    p.add_argument("--mu1", type=_rational, required=True)
    p.add_argument("--mu2", type=_rational, required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    common(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("simulate", help="integrate a radial solution and report energy plateaus")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--gamma", type=_rational_list)
    p.add_argument("--eta", type=_float_list)
    p.add_argument("--h", type=_float_list)
    p.add_argument("--t-start", type=float)
    p.add_argument("--t-end", type=float)
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--atol", type=float, default=1e-10)
    p.add_argument("--max-step", type=float, default=0.1)
    p.add_argument("--slope-tol", type=float, default=DEFAULT_SLOPE_TOL)
    p.add_argument("--min-length", type=float, default=DEFAULT_MIN_LENGTH)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--match-tol", type=float, default=MATCH_TOL)
    p.add_argument("--trajectory", help="write the trajectory CSV here")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("quantize", help="fully bubbling energy and gap margins")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--gamma", type=_rational_list)
    common(p)
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("check", help="recompute residuals of a trajectory CSV")
    p.add_argument("trajectory")
    p.add_argument("--gamma", type=_rational_list)
    p.add_argument("--h", type=_float_list)
    p.add_argument("--threshold", type=float, default=RESIDUAL_THRESHOLD)
    common(p)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.sweep:
            if args.command:
                raise UsageError("--sweep cannot be combined with a subcommand")
            if args.jobs is not None and args.jobs < 1:
                raise UsageError("--jobs must be >= 1")
            return run_sweep(args.sweep, args.out_dir, args.jobs)
        if not args.command:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        if getattr(args, "precision", None) is None:
            args.precision = default_precision()
        if args.command == "quantize" and args.n < 1:
            raise UsageError("--n must be >= 1")
        return args.func(args)
    except UsageError as exc:
        print(f"toda-sigma: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
