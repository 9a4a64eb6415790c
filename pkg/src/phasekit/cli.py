"""Command-line interface.

::

    phasekit solve --problem legendre --param 16,64,256 --out runs.csv --json runs.json
    phasekit phase dump --problem fourth-order --param 512 --out phases.json
    phasekit reference --problem third-order --param 64 --out ref.json

``solve`` exits with 0 when every record meets its threshold, 1 otherwise,
and 2 on bad arguments or I/O failure.
"""

import argparse
import json
import sys
import warnings

import numpy as np

from .errors import PhasekitError
from .levin import LevinConfig
from .odesolve import AdaptiveConfig
from .phase import build_phase_set
from .problems import PROBLEMS, make_problem, reference_solution, sweep

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _params(text):
    text = text.strip()
    if not text:
        return []
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _window(text):
    try:
        a0, b0 = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must be 'a0,b0', got {text!r}")
    return (a0, b0)


def _single(text):
    vals = _params(text)
    if len(vals) != 1:
        raise argparse.ArgumentTypeError("expected a single parameter value")
    return vals[0]


def _add_problem_args(p, many):
    p.add_argument("--problem", required=True, choices=sorted(PROBLEMS))
    p.add_argument("--param", required=True, type=_params if many else _single,
                   help="nu or omega" + (" (comma-separated list)" if many else ""))


def _add_solver_args(p):
    p.add_argument("--eps", type=float, default=1e-12)
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--window", type=_window, default=None, help="Levin window a0,b0")
    p.add_argument("--sigma", type=float, default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="phasekit", description="Phase-function solver: named problems, phase dumps, references.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="time and check named problems")
    _add_problem_args(p, True)
    _add_solver_args(p)
    p.add_argument("--out", default="runs.csv")
    p.add_argument("--json", default="runs.json")
    p.add_argument("--repeats", type=int, default=25)

    p = sub.add_parser("phase", help="phase function utilities")
    psub = p.add_subparsers(dest="phase_command", required=True)
    d = psub.add_parser("dump", help="serialize the phase functions to JSON")
    _add_problem_args(d, False)
    _add_solver_args(d)
    d.add_argument("--out", default="phases.json")

    p = sub.add_parser("reference", help="oracle values on the evaluation grid")
    _add_problem_args(p, False)
    p.add_argument("--out", default=None, help="JSON file (default: stdout)")
    return parser


def _cmd_solve(args):
    try:
        records = sweep(args.problem, args.param, args.repeats, args.k, args.eps,
                        args.window, args.sigma, args.out, args.json)
    except OSError as exc:
        print(f"phasekit: cannot write results: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for r in records:
        status = "PASS" if r.passed else "FAIL"
        line = (f"{status} {r.problem} param={r.param:g} time={r.time_s:.4g}s "
                f"err={r.max_abs_err:.3e} ncoefs={r.ncoefs} omega={r.omega_freq:.4g}")
        if r.diagnostic:
            line += f" ({r.diagnostic})"
        print(line)
    return EXIT_OK if all(r.passed for r in records) else EXIT_FAIL


def _cmd_phase_dump(args):
    spec = make_problem(args.problem, args.param, args.window, args.sigma)
    ps = build_phase_set(spec.ode, LevinConfig(spec.window, spec.sigma, k=args.k),
                         eta=spec.eta, adaptive=AdaptiveConfig(k=args.k, eps=args.eps))
    try:
        with open(args.out, "w") as fh:
            json.dump(ps.to_json(), fh)
    except OSError as exc:
        print(f"phasekit: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"wrote {ps.order} phase functions ({ps.ncoeffs} coefficients) to {args.out}")
    return EXIT_OK


def _cmd_reference(args):
    spec = make_problem(args.problem, args.param)
    vals = reference_solution(spec)
    obj = {
        "problem": spec.name,
        "param": spec.param,
        "points": spec.eval_points.tolist(),
        "values": np.stack([vals.real, vals.imag], axis=-1).tolist(),
    }
    if args.out is None:
        json.dump(obj, sys.stdout)
        sys.stdout.write("\n")
        return EXIT_OK
    try:
        with open(args.out, "w") as fh:
            json.dump(obj, fh)
    except OSError as exc:
        print(f"phasekit: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "solve" and args.repeats < 1:
        print("phasekit: --repeats must be positive", file=sys.stderr)
        return EXIT_USAGE
    handlers = {"solve": _cmd_solve, "reference": _cmd_reference}
    handler = _cmd_phase_dump if args.command == "phase" else handlers[args.command]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            return handler(args)
        except PhasekitError as exc:
            print(f"phasekit: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
