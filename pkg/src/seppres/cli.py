"""Command-line front end.

Exit codes: 0 success, 2 violation or counterexample witnessed, 3 hypothesis
failure (for example an ill-conditioned input or a map that is not completely
positive), 4 input or format error. ``selftest`` exits 1 when a criterion
fails. Every report is one JSON document with sorted keys; party indices on
the command line and in reports count from 1.
"""

import argparse
import json
import sys

import numpy as np

from . import __version__, config
from .errors import (
    HypothesisFailure,
    InvertibilityUnknown,
    ShapeError,
    ViolationWitnessed,
)
from .io import FormatError, load_ket, load_opr, to_dict
from .superop import SuperOp

EXIT_OK, EXIT_VIOLATION, EXIT_HYPOTHESIS, EXIT_INPUT = 0, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if isinstance(obj, (set, tuple)):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _int_list(text, name):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise FormatError(f"--{name} expects comma-separated integers, got {text!r}", name) from None


def _superop(path):
    op = load_opr(path)
    rows, cols = op.row_dims, op.col_dims
    half = len(rows) // 2
    if rows != cols or len(rows) % 2 or rows[:half] != rows[half:]:
        raise FormatError(
            "a superoperator file needs row_dims == col_dims == dims + dims "
            f"(got {list(rows)} x {list(cols)})",
            "row_dims",
        )
    return SuperOp(op.entries, rows[:half])


# --- commands ------------------------------------------------------------------

def cmd_schmidt(args):
    from .schmidt import schmidt_decompose, schmidt_rank

    v = load_ket(args.input)
    cut = None if args.cut is None else [i - 1 for i in _int_list(args.cut, "cut")]
    dec = schmidt_decompose(v, cut)
    keep = dec.coeffs > config.SR_TOL * dec.coeffs[0]
    return EXIT_OK, {
        "coefficients": dec.coeffs[keep].tolist(),
        "rank": schmidt_rank(v, cut),
        "left": [to_dict(k) for k, f in zip(dec.left_kets(), keep) if f],
        "right": [to_dict(k) for k, f in zip(dec.right_kets(), keep) if f],
        "cut": [i + 1 for i in (cut or [0])],
    }


def cmd_norm(args):
    from .schmidt import S_norm, s_norm

    if args.kind == "s":
        v = load_ket(args.input)
        res = s_norm(v, args.k)
        return EXIT_OK, {"kind": "s", "k": args.k, "value": res.value,
                         "witness": to_dict(res.witness)}
    x = load_opr(args.input)
    res = S_norm(x, args.k, restarts=args.restarts, max_iters=args.max_iters, seed=args.seed)
    out = res.to_dict()
    out.update(kind="S", witness_left=to_dict(res.witness_left),
               witness_right=to_dict(res.witness_right))
    return EXIT_OK, out


def cmd_classify(args):
    from . import preservers as pv

    if args.what == "local-form":
        rep = pv.classify_local_form(load_opr(args.input), args.tol)
        return EXIT_OK, rep.to_dict()
    if args.what == "preserver":
        op = load_opr(args.input)
        pres = pv.check_schmidt_rank_preservation(op, args.k, args.samples, args.tol, args.seed)
        local = pv.classify_local_form(op)
        out = {"preservation": pres.to_dict(), "local_form": local.to_dict()}
        try:
            out["cond"] = pv.cond_gate(op)
        except InvertibilityUnknown as exc:
            out.update(status="InvertibilityUnknown", cond=exc.cond, message=str(exc))
            return EXIT_HYPOTHESIS, out
        out["consistent"] = (local.verdict != pv.NEITHER) == pres.verdict
        out["status"] = "Preserving" if pres.verdict else "ViolationWitnessed"
        return (EXIT_OK if pres.verdict else EXIT_VIOLATION), out
    if args.what == "cp":
        if args.choi is not None:
            c = load_opr(args.choi)
            half = len(c.row_dims) // 2
            phi = SuperOp.from_choi(c.entries, c.row_dims[:half])
        else:
            phi = _superop(args.superop)
        res = pv.classify_cp_sk_preserver(phi, args.k, args.tol, seed=args.seed)
        return EXIT_OK, res.to_dict()
    if args.what == "isometry":
        phi = _superop(args.superop)
        res = pv.classify_norm_isometry(phi, args.k, args.tol, witness_seed=args.seed)
        return EXIT_OK, res.to_dict()
    raise UsageError(f"unknown classify target {args.what!r}")


def cmd_gme(args):
    from .multipartite import gme

    res = gme(load_ket(args.input), args.restarts, args.max_iters, seed=args.seed)
    return EXIT_OK, res.to_dict()


def cmd_recover(args):
    from .multipartite import INVERTIBILITY_UNKNOWN, NOT_PRESERVING, recover_local_form_multipartite

    res = recover_local_form_multipartite(load_opr(args.input), args.tol, seed=args.seed)
    code = {NOT_PRESERVING: EXIT_VIOLATION, INVERTIBILITY_UNKNOWN: EXIT_HYPOTHESIS}
    return code.get(res.status, EXIT_OK), res.to_dict()


def cmd_gme_invariance(args):
    from .multipartite import gme_invariance_check

    rep = gme_invariance_check(load_opr(args.input), args.samples, args.tol, args.seed)
    return (EXIT_OK if rep.invariant else EXIT_VIOLATION), rep.to_dict()


def cmd_search(args):
    from .search import SearchConfig, counterexample_search

    cfg = SearchConfig(
        shape=tuple(_int_list(args.shape, "shape")), k=args.k, r=args.r,
        trials=args.trials, seed=args.seed,
    )
    rep = counterexample_search(args.question, cfg)
    return (EXIT_VIOLATION if rep.candidates else EXIT_OK), rep.to_dict()


def cmd_selftest(args):
    from .acceptance import CRITERIA, run_all

    numbers = sorted(CRITERIA) if args.only is None else _int_list(args.only, "only")
    unknown = [n for n in numbers if n not in CRITERIA]
    if unknown:
        raise FormatError(f"no acceptance criterion numbered {unknown}", "only")
    results = run_all(numbers)
    for r in results:
        print(r.line(), file=sys.stderr)
    ok = all(r.passed for r in results)
    report = {
        "passed": ok,
        "criteria": [{k: v for k, v in r.to_dict().items() if k != "seconds"} for r in results],
    }
    return (EXIT_OK if ok else 1), report


# --- parser ----------------------------------------------------------------------

def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write the report here instead of stdout")

    p = _Parser(prog="seppres", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"seppres {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("schmidt", parents=[common], help="Schmidt decomposition of a ket")
    s.add_argument("--input", required=True)
    s.add_argument("--cut", help="1-based parties on the left side, e.g. 1 or 1,3")
    s.set_defaults(func=cmd_schmidt)

    s = sub.add_parser("norm", parents=[common], help="s(k) or S(k) norm")
    s.add_argument("--input", required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--kind", choices=["s", "S"], default="S")
    s.add_argument("--restarts", type=int, default=None)
    s.add_argument("--max-iters", type=int, default=None)
    s.set_defaults(func=cmd_norm)

    s = sub.add_parser("classify", help="local form, preservers, CP maps, isometries")
    csub = s.add_subparsers(dest="what", required=True, parser_class=_Parser)
    c = csub.add_parser("local-form", parents=[common])
    c.add_argument("--input", required=True)
    c.add_argument("--tol", type=float, default=None)
    c = csub.add_parser("preserver", parents=[common])
    c.add_argument("--input", required=True)
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--samples", type=int, default=None)
    c.add_argument("--tol", type=float, default=None)
    c = csub.add_parser("cp", parents=[common])
    src = c.add_mutually_exclusive_group(required=True)
    src.add_argument("--choi", help="Choi matrix file")
    src.add_argument("--superop", help="superoperator matrix file")
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--tol", type=float, default=None)
    c = csub.add_parser("isometry", parents=[common])
    c.add_argument("--superop", required=True)
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--tol", type=float, default=None)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("gme", parents=[common], help="geometric measure of entanglement")
    s.add_argument("--input", required=True)
    s.add_argument("--restarts", type=int, default=None)
    s.add_argument("--max-iters", type=int, default=None)
    s.set_defaults(func=cmd_gme)

    s = sub.add_parser("recover", parents=[common], help="recover S_sigma(P_1 x ... x P_p)")
    s.add_argument("--input", required=True)
    s.add_argument("--tol", type=float, default=None)
    s.set_defaults(func=cmd_recover)

    s = sub.add_parser("gme-invariance", parents=[common], help="E(Uv) against E(v)")
    s.add_argument("--input", required=True)
    s.add_argument("--samples", type=int, default=50)
    s.add_argument("--tol", type=float, default=1e-6)
    s.set_defaults(func=cmd_gme_invariance)

    s = sub.add_parser("search", parents=[common], help="counterexample search")
    s.add_argument("--question", required=True,
                   choices=["rank-r-bipartite", "multipartite-k", "rank_r_bipartite",
                            "multipartite_k"])
    s.add_argument("--shape", required=True, help="comma-separated dimensions, e.g. 2,2,2")
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--r", type=int, default=2)
    s.add_argument("--trials", type=int, default=10_000)
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("selftest", parents=[common], help="run the acceptance suite")
    s.add_argument("--only", help="comma-separated criterion numbers")
    s.set_defaults(func=cmd_selftest)
    return p


def _finite(obj):
    """Replace NaN and infinities (not valid JSON) by null."""
    if isinstance(obj, float):
        return obj if np.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    return obj


def _emit(doc, out):
    plain = json.loads(json.dumps(doc, default=_json_default))
    text = json.dumps(_finite(plain), sort_keys=True, indent=2, allow_nan=False) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    meta = {"tool": "seppres", "version": __version__, "argv": argv}
    out = None
    try:
        args = parser.parse_args(argv)
        out = args.out
        meta.update(command=args.command, seed=args.seed, tolerances=config.snapshot())
        code, report = args.func(args)
        doc = {"meta": meta, "report": report, "exit_code": code}
    except UsageError as exc:
        code, doc = EXIT_INPUT, {"meta": meta, "error": str(exc), "field": "argv"}
    except FormatError as exc:
        code, doc = EXIT_INPUT, {"meta": meta, "error": str(exc), "field": exc.field}
    except (ShapeError, ValueError) as exc:
        field = "k" if "k out of range" in str(exc) else "input"
        code, doc = EXIT_INPUT, {"meta": meta, "error": str(exc), "field": field}
    except ViolationWitnessed as exc:
        code = EXIT_VIOLATION
        doc = {"meta": meta, "status": type(exc).__name__, "message": str(exc),
               "witness": to_dict(exc.witness) if exc.witness is not None else None,
               "details": exc.details}
    except HypothesisFailure as exc:
        code = EXIT_HYPOTHESIS
        doc = {"meta": meta, "status": type(exc).__name__, "message": str(exc)}
        for name in ("cond", "bound", "cp_defect"):
            if hasattr(exc, name):
                doc[name] = getattr(exc, name)
    if "error" in doc:
        print(f"seppres: error: {doc['error']}", file=sys.stderr)
    doc["exit_code"] = code
    _emit(doc, out)
    return code


if __name__ == "__main__":
    sys.exit(main())
