"""Command-line front end: ``nlreg {expand,solve,roc,simulate,compare}``.

Exit codes: 0 success, 1 numerical failure (including a recursion that
stopped early or an HJB residual above ``--tol``), 2 input error, 3 resource
cap, 4 Riccati failure, 5 conditioning failure.

The quadratic part of ``Q`` in a model file is read as ``x^T Q1 x / 2``:
writing ``Q = x1^2`` means ``Q1 = 2``, not 1.
"""
import argparse
import json
import logging
import os
import sys
import warnings
from dataclasses import replace

# thread caps must be in place before numpy loads its BLAS
_THREADS = os.environ.get("NLREG_THREADS")
if _THREADS:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _THREADS)

import numpy as np  # noqa: E402

from . import __version__  # noqa: E402
from .engine import DEFAULT_ALPHA_MAX, synthesize, verify_hjb  # noqa: E402
from .errors import (ConditioningError, ConvergenceError, InputError, NlregError,  # noqa: E402
                     NotHurwitzError, ResourceCapError, StabilizabilityError)
from .model import expand_model, load_model  # noqa: E402
from .persist import (TOOL, expansion_document, load_solution, save_json,  # noqa: E402
                      solution_document)
from .roc import roc_surface  # noqa: E402
from .runtime import Controller, compare_orders, simulate  # noqa: E402

__all__ = ["main", "build_parser"]

MAX_ORDER = 60
log = logging.getLogger("nlreg")

EXIT_OK, EXIT_NUMERICAL, EXIT_INPUT, EXIT_RESOURCE, EXIT_ARE, EXIT_CONDITIONING = 0, 1, 2, 3, 4, 5


class _Failure(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _order(text):
    k = int(text)
    if not 1 <= k <= MAX_ORDER:
        raise argparse.ArgumentTypeError(f"order must lie in [1, {MAX_ORDER}]")
    return k


def _vector(text):
    try:
        return np.array([float(v) for v in text.replace(" ", "").split(",") if v != ""])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _orders(text):
    return [_order(v) for v in text.split(",") if v]


def _window(text):
    lo, _, hi = text.partition(":")
    try:
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError("window must look like LO:HI") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="model file (JSON)")
    common.add_argument("--order", type=_order, help=f"truncation order k (1..{MAX_ORDER})")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--alpha-max", type=float, default=DEFAULT_ALPHA_MAX,
                        help="conditioning threshold on 2/lambda_min(-(Fc+Fc^T)) (default 50)")
    common.add_argument("--sqrt-method", choices=("principal", "elementwise"), default="principal",
                        help="square root used for the conditioning transform")
    common.add_argument("--tol", type=float, default=1e-8, help="relative HJB residual tolerance")
    common.add_argument("--force", action="store_true", help="overwrite existing outputs")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog=TOOL, description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("expand", parents=[common], help="dump F_k, G_ik, Q_k and assumption checks")
    sub.add_parser("solve", parents=[common], help="compute P_1..P_k and verify the HJB residual")

    p = sub.add_parser("roc", parents=[common], help="estimate the radius of convergence")
    p.add_argument("--solution", help="solution file from 'solve' (else solve --model)")
    p.add_argument("--n-dirs", type=int, default=200, help="number of sampled directions")
    p.add_argument("--window", type=_window, help="tail orders LO:HI (default: last max(5, k/3))")

    p = sub.add_parser("simulate", parents=[common], help="closed-loop trajectory CSV")
    p.add_argument("--solution", help="solution file from 'solve' (else solve --model)")
    p.add_argument("--x0", type=_vector, required=True, help="initial state, e.g. --x0=-2,-1.5,0")
    p.add_argument("--horizon", type=float, default=100.0)

    p = sub.add_parser("compare", parents=[common], help="cost table over controller orders")
    p.add_argument("--solution", help="solution file from 'solve' (else solve --model)")
    p.add_argument("--x0", type=_vector, required=True)
    p.add_argument("--orders", type=_orders, required=True, help="e.g. 1,3,5,10")
    p.add_argument("--horizon", type=float, default=100.0)
    return parser


def _outfile(args, name):
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, name)
    if os.path.exists(path) and not args.force:
        raise FileExistsError(f"{path} exists; pass --force to overwrite")
    return path


def _require_model(args):
    if not args.model:
        raise InputError("--model is required")
    return load_model(args.model)


def _solve(args, spec, order):
    sol, cond = synthesize(spec, order, alpha_max=args.alpha_max, sqrt_method=args.sqrt_method)
    report = verify_hjb(replace(sol, P=sol.P_hat), cond.system, cond.cost, tol=args.tol)
    return sol, cond, report


def _options(args, order):
    return {"order": order, "alpha_max": args.alpha_max, "sqrt_method": args.sqrt_method}


def _obtain_solution(args, order):
    if getattr(args, "solution", None):
        spec, sol = load_solution(args.solution)
        if args.model:
            log.info("--model ignored: the solution file embeds its model")
        return spec, sol
    spec = _require_model(args)
    order = order or spec.order
    if order is None:
        raise InputError("--order is required when the model has no 'order' field")
    sol, _, _ = _solve(args, spec, order)
    return spec, sol


def _csv_comment(spec_hash):
    return f"{TOOL} {__version__} model_hash={spec_hash}"


def cmd_expand(args):
    spec = _require_model(args)
    order = args.order or spec.order
    if order is None:
        raise InputError("--order is required when the model has no 'order' field")
    system, cost = expand_model(spec, order)
    path = _outfile(args, "expansion.json")
    save_json(expansion_document(spec, system, cost), path, force=True)
    print(f"expansion written to {path} (n={spec.n}, m={spec.m}, order={order})")
    return EXIT_OK


def cmd_solve(args):
    spec = _require_model(args)
    order = args.order or spec.order
    if order is None:
        raise InputError("--order is required when the model has no 'order' field")
    path = _outfile(args, "solution.json")
    diag_path = _outfile(args, "diagnostics.json")
    try:
        sol, cond, report = _solve(args, spec, order)
    except (StabilizabilityError, ConvergenceError, NotHurwitzError) as exc:
        raise _Failure(f"Riccati stage failed: {exc}", EXIT_ARE) from None
    except ConditioningError as exc:
        raise _Failure(str(exc), EXIT_CONDITIONING) from None
    save_json(solution_document(spec, sol, _options(args, order), report), path, force=True)
    d = sol.diagnostics
    timing = {"tool": TOOL, "version": __version__, "model_hash": sol.model_hash,
              "total_seconds": d.get("total_seconds"), "recursion_seconds": d.get("wall_seconds"),
              "order_seconds": {str(k): v for k, v in d.get("order_seconds", {}).items()},
              "solve_residual": {str(k): v for k, v in d.get("solve_residual", {}).items()},
              "are_residual": d.get("are_residual"), "are_iterations": d.get("are_iterations")}
    save_json(timing, diag_path, force=True)
    alpha = f"alpha={sol.alpha:.4g}" + (" (transformed)" if sol.transformed else "")
    print(f"solution written to {path}: order {sol.order}/{order}, {alpha}, "
          f"max HJB residual {report.max_relative:.2e}, {d.get('total_seconds', 0.0):.3f} s")
    if not sol.complete:
        raise _Failure(f"recursion stopped early: {sol.failure}", EXIT_NUMERICAL)
    if not report.passed:
        raise _Failure(f"HJB residual {report.max_relative:.2e} at order {report.worst_order()} "
                       f"exceeds --tol {args.tol:g}", EXIT_NUMERICAL)
    return EXIT_OK


def cmd_roc(args):
    spec, sol = _obtain_solution(args, args.order)
    if args.n_dirs < 1:
        raise InputError("--n-dirs must be positive")
    est = roc_surface(sol, args.n_dirs, args.window)
    path = _outfile(args, "roc.csv")
    est.to_csv(path, comment=_csv_comment(sol.model_hash))
    lo, hi = est.window
    print(f"r* = {est.r_star:.4f} (window {lo}..{hi}, order {est.order}); "
          f"sampled radii {est.min_radius:.4f}..{np.max(est.radii):.4f} over {len(est.radii)} directions")
    return EXIT_OK


def cmd_simulate(args):
    spec, sol = _obtain_solution(args, args.order)
    if args.x0.size != spec.n:
        raise InputError(f"--x0 has {args.x0.size} entries, the model has n={spec.n}")
    ctrl = Controller(sol, spec, args.order if args.solution else None)
    traj = simulate(spec, ctrl, args.x0, horizon=args.horizon)
    path = _outfile(args, "trajectory.csv")
    traj.to_csv(path, comment=_csv_comment(sol.model_hash))
    print(f"{traj.status} at t={traj.t[-1]:.4g}; cost {traj.total_cost:.6g} "
          f"(tail {traj.tail_cost:.3g}); trajectory written to {path}")
    return EXIT_OK if traj.status != "diverged" else EXIT_NUMERICAL


def cmd_compare(args):
    order = max(args.orders)
    if args.solution:
        spec, sol = load_solution(args.solution)
        if order > sol.order:
            raise InputError(f"solution has order {sol.order}, --orders asks for {order}")
    else:
        spec, sol = _obtain_solution(args, order)
    if args.x0.size != spec.n:
        raise InputError(f"--x0 has {args.x0.size} entries, the model has n={spec.n}")
    rows = compare_orders(spec, sol, args.x0, args.orders, horizon=args.horizon)
    path = _outfile(args, "compare.csv")
    cols = ["order", "status", "final_time", "running_cost", "tail_cost", "total_cost", "max_abs_u", "value_x0"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {_csv_comment(sol.model_hash)}\n")
        fh.write(",".join(cols) + "\n")
        for r in rows:
            fh.write(",".join(r[c] if isinstance(r[c], str) else repr(r[c]) for c in cols) + "\n")
    for r in rows:
        print(f"order {r['order']:>2}: {r['status']:<9} cost {r['total_cost']:.6g}")
    return EXIT_OK


COMMANDS = {"expand": cmd_expand, "solve": cmd_solve, "roc": cmd_roc,
            "simulate": cmd_simulate, "compare": cmd_compare}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    warnings.simplefilter("default")
    try:
        return COMMANDS[args.command](args)
    except _Failure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (InputError, FileExistsError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (StabilizabilityError, ConvergenceError) as exc:
        print(f"error: Riccati stage failed: {exc}", file=sys.stderr)
        return EXIT_ARE
    except ConditioningError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONDITIONING
    except NlregError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
