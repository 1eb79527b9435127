"""Command-line interface.

System documents are JSON objects::

    {
      "A": [[[re, im], ...], ...],      # required unless a time-varying kind supplies it
      "B": ..., "C": ...,               # optional, identity by default
      "norm_X": "l1" | "l2" | "linf" | {"p": 3.0},   # likewise norm_U, norm_Y
      "time_varying": {"kind": "hale", "a": 1.5, "step": 0.001}
                    | {"kind": "constant"}
                    | {"kind": "tabulated", "times": [...], "matrices": [A_0, A_1, ...]}
    }

Matrix entries are ``[re, im]`` pairs; plain real numbers are accepted on input.
Every command writes one JSON report to stdout.  Exit status is 0 on
success, 2 for invalid input and 3 for numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from typing import Optional

import numpy as np

from . import __version__
from .errors import InputError, NumericalError
from .ionorm import io_norm_l1, io_norm_l2_hilbert, l1_response_integral, multiplier_lower_bound
from .nonaut import TimeVaryingSystem, constant, datko_test, hale, nonaut_freq_response, tabulated
from .numcore import NormSpec, eigenvalues
from .radius import dichotomy_radius, pointwise_radius_bounds, radius_bounds
from .syscheck import internal_external_check
from .transfer import LtiSystem, sup_transfer_real_axis

SCHEMA = "stabradius.report/1"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


# -- documents -----------------------------------------------------------------


def encode_matrix(M) -> list:
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def decode_matrix(obj, name: str) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise InputError(f"{name}: expected a non-empty list of rows")
    rows = []
    for i, row in enumerate(obj):
        if not isinstance(row, list) or not row:
            raise InputError(f"{name}[{i}]: expected a non-empty row")
        vals = []
        for j, entry in enumerate(row):
            if isinstance(entry, (int, float)) and not isinstance(entry, bool):
                vals.append(complex(entry))
            elif (isinstance(entry, list) and len(entry) == 2
                  and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)):
                vals.append(complex(entry[0], entry[1]))
            else:
                raise InputError(f"{name}[{i}][{j}]: expected [re, im] pair, got {entry!r}")
        if rows and len(vals) != len(rows[0]):
            raise InputError(f"{name}[{i}]: row has {len(vals)} entries, row 0 has {len(rows[0])}")
        rows.append(vals)
    M = np.array(rows, dtype=complex)
    if not np.all(np.isfinite(M)):
        raise InputError(f"{name}: entries must be finite")
    return M


def _family_from_block(block: dict, A: Optional[np.ndarray]):
    if not isinstance(block, dict) or "kind" not in block:
        raise InputError("time_varying: expected an object with a 'kind' field")
    kind = block["kind"]
    step = float(block.get("step", 1e-3))
    if kind == "hale":
        return hale(float(block.get("a", 1.5)), step)
    if kind == "constant":
        if A is None:
            raise InputError("time_varying.kind 'constant' needs the matrix A")
        return constant(A, step)
    if kind == "tabulated":
        times = block.get("times")
        mats = block.get("matrices")
        if not isinstance(times, list) or not isinstance(mats, list) or len(times) != len(mats):
            raise InputError("time_varying.tabulated: 'times' and 'matrices' must be lists of equal length")
        decoded = [decode_matrix(M, f"time_varying.matrices[{i}]") for i, M in enumerate(mats)]
        return tabulated([float(t) for t in times], decoded, step)
    raise InputError(f"time_varying.kind: unknown kind {kind!r} (hale, constant, tabulated)")


def parse_system(doc: dict):
    """Build an :class:`LtiSystem` or :class:`TimeVaryingSystem` from a document."""
    if not isinstance(doc, dict):
        raise InputError("system document must be a JSON object")
    known = {"A", "B", "C", "norm_X", "norm_U", "norm_Y", "time_varying"}
    extra = set(doc) - known
    if extra:
        raise InputError(f"unknown fields in system document: {sorted(extra)}")
    A = decode_matrix(doc["A"], "A") if "A" in doc else None
    norms = {k: NormSpec.parse(doc.get(k, "l2")) for k in ("norm_X", "norm_U", "norm_Y")}
    block = doc.get("time_varying")
    if block is None:
        if A is None:
            raise InputError("A: required for a time-invariant system")
        n = A.shape[0]
        B = decode_matrix(doc["B"], "B") if "B" in doc else np.eye(n)
        C = decode_matrix(doc["C"], "C") if "C" in doc else np.eye(n)
        return LtiSystem(A, B, C, **norms)
    family = _family_from_block(block, A)
    n = family.dim
    if A is not None and A.shape != (n, n):
        raise InputError(f"A: shape {A.shape} does not match the {n}x{n} time-varying generator")
    B = decode_matrix(doc["B"], "B") if "B" in doc else np.eye(n)
    C = decode_matrix(doc["C"], "C") if "C" in doc else np.eye(n)
    if B.shape[0] != n:
        raise InputError(f"B: has {B.shape[0]} rows, generator is {n}x{n}")
    if C.shape[1] != n:
        raise InputError(f"C: has {C.shape[1]} columns, generator is {n}x{n}")
    return TimeVaryingSystem(family, B, C, **norms)


def system_document(sys_) -> dict:
    """Inverse of :func:`parse_system`."""
    doc = {}
    if isinstance(sys_, LtiSystem):
        doc["A"] = encode_matrix(sys_.A)
        doc["B"], doc["C"] = encode_matrix(sys_.B), encode_matrix(sys_.C)
    else:
        fam = sys_.family
        if fam.name == "hale":
            doc["time_varying"] = {"kind": "hale", "a": fam.params["a"], "step": fam.step}
        elif fam.name == "constant":
            doc["A"] = encode_matrix(fam.params["A"])
            doc["time_varying"] = {"kind": "constant", "step": fam.step}
        elif fam.name == "tabulated":
            doc["time_varying"] = {"kind": "tabulated", "step": fam.step,
                                   "times": [float(t) for t in fam.params["times"]],
                                   "matrices": [encode_matrix(M) for M in fam.params["matrices"]]}
        else:
            raise InputError(f"family {fam.name!r} has no document form")
        doc["B"], doc["C"] = encode_matrix(sys_.B_at(0.0)), encode_matrix(sys_.C_at(0.0))
    for k in ("norm_X", "norm_U", "norm_Y"):
        doc[k] = getattr(sys_, k).to_json()
    return doc


def _as_lti(sys_) -> LtiSystem:
    if isinstance(sys_, LtiSystem):
        return sys_
    if sys_.family.name == "constant":
        return LtiSystem(sys_.family.params["A"], sys_.B_at(0.0), sys_.C_at(0.0),
                         sys_.norm_X, sys_.norm_U, sys_.norm_Y)
    raise InputError("this command needs a time-invariant system")


def _as_tv(sys_) -> TimeVaryingSystem:
    return TimeVaryingSystem.from_lti(sys_) if isinstance(sys_, LtiSystem) else sys_


# -- JSON helpers -----------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [_jsonable(float(x.real)), _jsonable(float(x.imag))]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def _write_csv(path: str, header: list, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


# -- commands -----------------------------------------------------------------------


def _cmd_supnorm(sys_, args):
    lti = _as_lti(sys_)
    res = sup_transfer_real_axis(lti, args.tol)
    if args.csv and res.grid is not None:
        _write_csv(args.csv, ["s", "norm"], zip(res.grid, res.samples))
    return ({"value": res.value, "argmax": res.argmax},
            {"value": {"operation": "sup_transfer_real_axis", "tolerance": args.tol}})


def _cmd_ionorm(sys_, args):
    lti = _as_lti(sys_)
    if args.p == 1.0:
        est, op = io_norm_l1(lti, seed=args.seed), "io_norm_l1"
    elif args.p == 2.0 and lti.norm_U.p == 2.0 and lti.norm_Y.p == 2.0:
        est, op = io_norm_l2_hilbert(lti, args.tol), "io_norm_l2_hilbert"
    else:
        est, op = multiplier_lower_bound(lti, args.p, budget=args.budget, seed=args.seed), "multiplier_lower_bound"
    witness = {k: v for k, v in est.witness.items() if k != "coeffs"}
    return ({"value": est.value, "mode": est.mode, "exact": est.exact, "witness": witness},
            {"value": {"operation": op, "tolerance": args.tol}})


def _cmd_radius(sys_, args):
    rep = radius_bounds(_as_lti(sys_), args.p, args.tol, args.seed)
    out = {"lower": rep.lower, "upper": rep.upper, "exact": rep.exact, "strict_gap": rep.strict_gap,
           "lower_exact": rep.lower_exact, "io_norm": rep.io_norm.value, "io_mode": rep.io_norm.mode,
           "frequency": rep.frequency}
    prov = {"lower": {"operation": "radius_bounds/io_norm", "tolerance": args.tol},
            "upper": {"operation": "radius_bounds/sup_transfer_real_axis", "tolerance": args.tol},
            "exact": {"operation": "radius_bounds", "tolerance": args.tol}}
    return out, prov


def _cmd_destabilize(sys_, args):
    lti = _as_lti(sys_)
    rep = radius_bounds(lti, 2.0 if args.p is None else args.p, args.tol, args.seed)
    pert = rep.destabilizer
    ev = eigenvalues(pert.perturbed_generator(lti))
    target = 1j * pert.frequency
    out = {"delta": encode_matrix(pert.delta), "norm": pert.norm, "frequency": pert.frequency,
           "exact_radius": rep.exact, "distance_to_target": float(np.abs(ev - target).min()),
           "perturbed_abscissa": float(ev.real.max())}
    return out, {"delta": {"operation": "destabilizing_perturbation", "tolerance": args.tol}}


def _cmd_pointwise(sys_, args):
    lower, upper = pointwise_radius_bounds(_as_lti(sys_), args.xi, args.p, args.seed)
    return ({"lower": lower, "upper": upper, "xi": args.xi},
            {"lower": {"operation": "periodic_multiplier_norm", "tolerance": args.tol},
             "upper": {"operation": "sup_transfer_integers", "tolerance": args.tol}})


def _cmd_dichotomy(sys_, args):
    res = dichotomy_radius(_as_lti(sys_), args.p, args.xi_grid)
    if args.csv:
        _write_csv(args.csv, ["xi", "radius"], res.trace)
    return ({"value": res.value, "xi": res.xi},
            {"value": {"operation": "dichotomy_radius", "xi_grid": args.xi_grid}})


def _cmd_datko(sys_, args):
    res = datko_test(_as_tv(sys_), args.p, args.horizon, seed=args.seed)
    if args.csv:
        _write_csv(args.csv, ["tau", "probe", "integral", "growth_exponent"],
                   [(pr["tau"], pr["probe"], pr["integral"], pr["growth_exponent"]) for pr in res.probes])
    return ({"sup_integral": res.sup_integral, "verdict": res.verdict,
             "growth_exponent": res.growth_exponent},
            {"sup_integral": {"operation": "datko_test", "horizon": args.horizon,
                              "step": _as_tv(sys_).family.step}})


def _cmd_freqresp(sys_, args):
    tv = _as_tv(sys_)
    m = tv.B_at(0.0).shape[1]
    if not 0 <= args.input_index < m:
        raise InputError(f"--input-index must lie in [0, {m}), got {args.input_index}")
    u0 = np.eye(m)[args.input_index]
    y = nonaut_freq_response(tv, args.omega, u0, args.time)
    return ({"response": [complex(v) for v in y], "omega": args.omega, "time": args.time,
             "input_index": args.input_index},
            {"response": {"operation": "nonaut_freq_response", "step": tv.family.step}})


def _cmd_check(sys_, args):
    v = internal_external_check(_as_lti(sys_), args.p)
    out = {k: getattr(v, k) for k in ("internal", "stabilizable", "detectable", "externally_bounded",
                                      "io_bounded", "consistent", "abscissa", "io_norm_bound",
                                      "minimal_order")}
    return out, {"io_norm_bound": {"operation": "impulse_l1_bound", "tolerance": 1e-8}}


FOCUS = np.array([[-1.0, 1.0], [-1.0, -1.0]])
NONNORMAL = np.array([[4.5, -2.5], [12.5, -6.5]])
GOLDEN = (
    ("sup_s ||(A-is)^-1||, l1, A=[[-1,1],[-1,-1]]", 1.087494476),
    ("||L|| on L^1, l1, A=[[-1,1],[-1,-1]]", 1.262434309),
    ("int ||e^{tA} e1||_2 dt, A=[[9/2,-5/2],[25/2,-13/2]]", 7.748310791),
    ("sup_s ||(A-is)^-1||_2, A=[[9/2,-5/2],[25/2,-13/2]]", 2.732492852),
)


def reference_values() -> list:
    s1 = LtiSystem.unstructured(FOCUS, "l1")
    s2 = LtiSystem.unstructured(NONNORMAL, "l2")
    return [
        sup_transfer_real_axis(s1, 1e-10).value,
        io_norm_l1(s1).value,
        l1_response_integral(s2, np.array([1.0, 0.0])),
        sup_transfer_real_axis(s2, 1e-10).value,
    ]


def _cmd_reproduce(sys_, args):
    computed = reference_values()
    rows = [{"quantity": q, "reference": ref, "computed": c, "abs_diff": abs(c - ref)}
            for (q, ref), c in zip(GOLDEN, computed)]
    width = max(len(r["quantity"]) for r in rows)
    lines = [f"{'quantity':<{width}}  {'reference':>12}  {'computed':>14}  {'|diff|':>10}"]
    for r in rows:
        lines.append(f"{r['quantity']:<{width}}  {r['reference']:>12.9f}  {r['computed']:>14.9f}  {r['abs_diff']:>10.3e}")
    print("\n".join(lines), file=sys.stderr)
    if args.csv:
        _write_csv(args.csv, ["quantity", "reference", "computed", "abs_diff"],
                   [(r["quantity"], r["reference"], r["computed"], r["abs_diff"]) for r in rows])
    return {"table": rows}, {"table": {"operation": "reference_values", "tolerance": 1e-10}}


COMMANDS = {
    "supnorm": (_cmd_supnorm, "supremum of the transfer function on the imaginary axis"),
    "ionorm": (_cmd_ionorm, "norm of the input-output operator on L^p"),
    "radius": (_cmd_radius, "stability radius bounds"),
    "destabilize": (_cmd_destabilize, "minimal destabilizing constant perturbation"),
    "pointwise": (_cmd_pointwise, "pointwise (period map) radius bounds"),
    "dichotomy": (_cmd_dichotomy, "dichotomy radius via a shift sweep"),
    "datko": (_cmd_datko, "finite-horizon Datko integral test"),
    "freqresp": (_cmd_freqresp, "nonautonomous frequency response"),
    "check": (_cmd_check, "internal/external stability flags"),
    "reproduce-paper": (_cmd_reproduce, "recompute the four reference values"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stabradius", description="Stability radii of linear systems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        if name != "reproduce-paper":
            p.add_argument("--system", required=True, help="system document (JSON)")
        p.add_argument("--p", type=float, default=None, help="time exponent of L^p")
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--csv", default=None, help="write sweep data to this CSV file")
        p.add_argument("--budget", type=int, default=150)
        p.add_argument("--horizon", type=float, default=40.0)
        p.add_argument("--xi-grid", type=int, default=64)
        p.add_argument("--xi", type=float, default=0.0)
        p.add_argument("--omega", type=float, default=0.0)
        p.add_argument("--time", type=float, default=1.0)
        p.add_argument("--input-index", type=int, default=0)
    return parser


DEFAULT_P = {"ionorm": 2.0, "radius": 2.0, "pointwise": 2.0, "dichotomy": 2.0, "datko": 1.0, "check": 2.0}


def run_command(argv) -> tuple:
    """Run one command; returns ``(exit_code, report)`` where ``report`` is a dict."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0), None
    if args.p is None and args.command in DEFAULT_P:
        args.p = DEFAULT_P[args.command]
    start = time.perf_counter()
    report = {"schema": SCHEMA, "command": [str(a) for a in argv], "version": __version__,
              "seed": args.seed}
    try:
        if args.tol <= 0:
            raise InputError(f"--tol must be positive, got {args.tol}")
        digest = hashlib.sha256()
        sys_ = None
        if getattr(args, "system", None):
            try:
                with open(args.system, "rb") as fh:
                    raw = fh.read()
                doc = json.loads(raw)
            except OSError as exc:
                raise InputError(f"cannot read system document: {exc}") from None
            except json.JSONDecodeError as exc:
                raise InputError(f"system document is not valid JSON: {exc}") from None
            digest.update(raw)
            sys_ = parse_system(doc)
        digest.update(json.dumps(_jsonable(vars(args)), sort_keys=True).encode())
        report["inputs"] = {"sha256": digest.hexdigest(), "arguments": _jsonable(vars(args))}
        results, provenance = COMMANDS[args.command][0](sys_, args)
        report["results"] = _jsonable(results)
        report["provenance"] = _jsonable(provenance)
        code = EXIT_OK
    except InputError as exc:
        report["error"] = {"kind": "input", "message": str(exc)}
        code = EXIT_INPUT
    except NumericalError as exc:
        report["error"] = {"kind": "numerical", "type": type(exc).__name__, "message": str(exc)}
        code = EXIT_NUMERICAL
    report["wall_clock_s"] = time.perf_counter() - start
    return code, report


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    code, report = run_command(argv)
    if report is not None:
        print(json.dumps(report, indent=2, sort_keys=True))
        if "error" in report:
            print(f"error: {report['error']['message']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
