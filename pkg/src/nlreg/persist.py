"""JSON coefficient dumps for expansions and solutions.

Every document records the monomial ordering tag and the exponent listing
of each order it contains, so a reader never has to reconstruct the basis.
Floats are written with ``repr`` precision; non-finite values become the
strings ``"inf"``, ``"-inf"`` and ``"nan"``.
"""
import json
import math
import os
import warnings

import numpy as np

from . import __version__
from .engine import NlrSolution
from .errors import InputError
from .model import _parse_penalty, model_hash, parse_model
from .monomial import ORDERING_TAG, ReducedTensor, basis

__all__ = ["expansion_document", "solution_document", "save_json", "load_solution",
           "SIZE_WARNING_BYTES", "TOOL"]

TOOL = "nlreg"
SIZE_WARNING_BYTES = 50 * 2**20


def _num(x):
    x = float(x)
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


def _from_num(x):
    return float(x)


def _matrix(a):
    return [[_num(v) for v in row] for row in np.atleast_2d(a)]


def _basis_listing(n, top):
    return [{"k": k, "exponents": basis(n, k).exponents.tolist()} for k in range(1, top + 1)]


def _header(kind, spec_hash, n, m, order):
    return {"format": f"{TOOL}-{kind}", "tool": TOOL, "version": __version__,
            "model_hash": spec_hash, "ordering": ORDERING_TAG, "n": n, "m": m, "order": order}


def expansion_document(spec, system, cost):
    """Coefficient dump of ``F_k``, ``G_ik``, ``Q_k`` and the penalty tensors."""
    order = system.order
    doc = _header("expansion", model_hash(spec, order=order), system.n, system.m, order)
    doc["assumptions"] = {
        "equilibrium_residual": _num(system.equilibrium_residual),
        "stabilizable": bool(system.stabilizable),
        "Q1_min_eigenvalue": _num(np.linalg.eigvalsh(cost.Q1).min()),
        "R1_min_eigenvalue": _num(np.linalg.eigvalsh(cost.R1).min()),
    }
    doc["penalty"] = cost.penalty.to_dict()
    doc["basis"] = _basis_listing(system.n, order + 1)
    doc["F"] = [{"k": k, "data": _matrix(system.f[k])} for k in range(1, order + 1)]
    doc["G"] = [[{"k": k, "data": _matrix(gi[k])} for k in range(0, order + 1)] for gi in system.g]
    doc["Q"] = [{"k": 1, "data": _matrix(cost.Q1)}]
    doc["Q"] += [{"k": k, "data": _matrix(cost.Q[k].matrix)} for k in range(2, order + 1)]
    doc["Rtilde"] = [{"k": 1, "data": _matrix(cost.Rtilde[1])}]
    doc["Rtilde"] += [{"k": k, "data": _matrix(cost.Rtilde[k].matrix)} for k in range(2, order + 1)]
    return doc


def solution_document(spec, solution, options, report=None):
    """Deterministic dump of a solution (timings are left to the caller)."""
    doc = _header("solution", solution.model_hash or model_hash(spec, **options),
                  solution.n, solution.m, solution.order)
    d = solution.diagnostics
    doc.update({
        "options": options,
        "model": spec.source,
        "requested_order": solution.requested_order,
        "complete": solution.complete,
        "failure": solution.failure,
        "penalty": solution.penalty.to_dict(),
        "transform": {
            "applied": bool(solution.transformed),
            "sqrt_method": d.get("sqrt_method"),
            "alpha": _num(solution.alpha),
            "alpha_before": _num(d.get("alpha_before", solution.alpha)),
            "T": _matrix(solution.T),
        },
        "Mk_inv_norm": {str(k): _num(v) for k, v in sorted(d.get("Mk_inv_norm", {}).items())},
        "basis": _basis_listing(solution.n, solution.order),
        "P": [{"k": p.k, "data": _matrix(p.matrix)} for p in solution.P],
        "P_hat": [{"k": p.k, "data": _matrix(p.matrix)} for p in solution.P_hat],
    })
    if report is not None:
        doc["hjb_residual"] = {
            "tol": report.tol,
            "passed": report.passed,
            "max_relative": _num(report.max_relative),
            "relative": {str(k): _num(v) for k, v in report.relative.items()},
            "absolute": {str(k): _num(v) for k, v in report.absolute.items()},
            "tail_estimate": _num(report.tail_estimate),
        }
    return doc


def save_json(doc, path, force=False):
    """Write ``doc``; refuses to overwrite unless ``force``.  Returns the byte size."""
    if os.path.exists(path) and not force:
        raise FileExistsError(f"{path} exists; pass --force to overwrite")
    text = json.dumps(doc, indent=1, sort_keys=True, allow_nan=False) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    size = len(text.encode())
    if size > SIZE_WARNING_BYTES:
        warnings.warn(f"{path} is {size / 2**20:.1f} MB", ResourceWarning, stacklevel=2)
    return size


def load_solution(path):
    """Read a solution file back as ``(spec, solution)``."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != f"{TOOL}-solution":
        raise InputError(f"{path} is not a solution file")
    if doc.get("ordering") != ORDERING_TAG:
        raise InputError(f"unsupported monomial ordering {doc.get('ordering')!r}")
    spec = parse_model(doc["model"])
    expected = model_hash(spec, **doc.get("options", {}))
    if expected != doc.get("model_hash"):
        warnings.warn(f"{path}: model hash does not match its embedded model", RuntimeWarning, stacklevel=2)
    n = int(doc["n"])

    def tensors(key):
        return tuple(ReducedTensor(n, e["k"], np.array(e["data"], dtype=float)) for e in doc[key])

    tr = doc["transform"]
    diagnostics = {"alpha_before": _from_num(tr["alpha_before"]), "sqrt_method": tr["sqrt_method"],
                   "transformed": tr["applied"],
                   "Mk_inv_norm": {int(k): _from_num(v) for k, v in doc.get("Mk_inv_norm", {}).items()}}
    sol = NlrSolution(n=n, m=int(doc["m"]), P=tensors("P"), P_hat=tensors("P_hat"),
                      T=np.array(tr["T"], dtype=float), alpha=_from_num(tr["alpha"]),
                      transformed=bool(tr["applied"]), penalty=_parse_penalty(doc["penalty"], int(doc["m"])),
                      requested_order=int(doc["requested_order"]), diagnostics=diagnostics,
                      model_hash=doc["model_hash"], failure=doc.get("failure"))
    return spec, sol
