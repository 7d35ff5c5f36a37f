"""Command-line interface.

Exit codes: 0 embeddable, 1 certified not embeddable, 2 inconclusive,
64 malformed input or a request outside the supported range.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .certify import theorem1_test
from .construct import METHODS, Witness, classical_witness, extreme_witness, unitary_witness
from .errors import EmbedLabError, ResourceGuardError
from .formats import FormatError, load_matrix_file
from .lindblad import THEOREM3_GAMMA, THEOREM3_TF, max_abs_mismatch
from .optimizer import DEFAULT_DELTA, DEFAULT_RESTARTS, Kind, Parameterization, decode, embed_search
from .scan import rows_to_csv, scan_qubit
from .stochastic import (
    StochasticMatrix,
    classical_embeddable_2x2,
    classify_extreme,
    count_quantum_embeddable_extreme,
    enumerate_extreme,
    necessary_classical_condition,
    theorem2_detect,
)

EXIT_EMBEDDABLE = 0
EXIT_NOT_EMBEDDABLE = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 64

LIST_MAX_D = 6


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _matrix_rows(T: StochasticMatrix) -> list:
    return [[float(x) for x in row] for row in T.entries]


def _classical_layer(T: StochasticMatrix) -> dict:
    """Positive classical certificate, if one is available in closed form."""
    if np.array_equal(T.entries, np.eye(T.dim)):
        return {"embeddable": True, "certificate": "classical generator L=0", "generator": np.zeros((T.dim, T.dim)).tolist()}
    if T.dim == 2:
        emb = classical_embeddable_2x2(T)
        out = {"embeddable": emb.embeddable, "reason": emb.reason}
        if emb.embeddable:
            out["certificate"] = "classical generator L" + (" (rank-one limit point)" if emb.closure_point else "")
            out["generator"] = emb.generator.tolist()
            out["t"] = emb.time
        return out
    return {"embeddable": None, "reason": "no closed-form classical test for d > 2"}


def analytic_certificates(T: StochasticMatrix) -> dict:
    """Every analytic test that applies to ``T``, with its outcome.

    ``decision`` is ``embeddable``, ``not-embeddable`` or ``None`` and
    ``decisive`` names the first layer that settled it.
    """
    layers = []
    decision, decisive = None, None

    cond = necessary_classical_condition(T)
    layers.append(
        {
            "layer": "classical-necessary-condition",
            "passed": cond.passed,
            "diag_product": cond.diag_product,
            "det": cond.det,
            "reason": cond.reason,
        }
    )
    classical = _classical_layer(T)
    layers.append({"layer": "classical-embedding", **classical})
    if classical["embeddable"]:
        decision, decisive = "embeddable", "classical-embedding"

    if T.dim == 2:
        v = theorem1_test(T)
        layers.append({"layer": "theorem1", **v.to_dict()})
        if decision is None and v.in_Q2_complement:
            decision, decisive = "not-embeddable", "theorem1"

    try:
        cert = theorem2_detect(T)
    except ResourceGuardError as exc:
        layers.append({"layer": "theorem2", "skipped": str(exc)})
        cert = None
    else:
        entry = {"layer": "theorem2", "certificate": None}
        if cert is not None:
            problems = cert.verify(T)
            entry["certificate"] = cert.to_dict()
            entry["verified"] = not problems
            entry["problems"] = problems
            if decision is None and not problems:
                decision, decisive = "not-embeddable", "theorem2"
        layers.append(entry)

    if T.is_extreme():
        cls = classify_extreme(T)
        entry = {
            "layer": "extreme-classification",
            "column_map": list(T.column_map()),
            "cycles": [list(c) for c in cls.cycles],
            "verdict": cls.verdict,
        }
        if cls.obstruction is not None:
            entry["obstruction"] = {"core_state": cls.obstruction[0], "path": list(cls.obstruction[1])}
        layers.append(entry)
        if decision is None:
            if cls.embeddable:
                decision, decisive = "embeddable", "extreme-classification"
            else:
                decision, decisive = "not-embeddable", "extreme-classification"
    return {"matrix": _matrix_rows(T), "layers": layers, "decision": decision, "decisive_layer": decisive}


def _parameterization_for(T: StochasticMatrix, name: str | None) -> Parameterization:
    if name is None:
        return Parameterization.general_qubit() if T.dim == 2 else Parameterization.general_d(T.dim)
    return Parameterization.parse(name, T.dim)


def _witness_for_embeddable(T: StochasticMatrix, report: dict, delta: float) -> Witness | None:
    if report["decisive_layer"] == "classical-embedding":
        return classical_witness(T)
    if report["decisive_layer"] == "extreme-classification":
        return extreme_witness(T, delta)
    return None


def cmd_check(args) -> int:
    T = load_matrix_file(args.matrix)
    report = analytic_certificates(T)
    out = {"report": report}
    if report["decision"] == "not-embeddable":
        out["verdict"] = "not-embeddable"
        out["certificate"] = next(layer for layer in report["layers"] if layer["layer"] == report["decisive_layer"])
        _emit(out)
        return EXIT_NOT_EMBEDDABLE
    if report["decision"] == "embeddable":
        w = _witness_for_embeddable(T, report, args.delta)
        out["verdict"] = "embeddable"
        out["certificate"] = next(layer for layer in report["layers"] if layer["layer"] == report["decisive_layer"])
        out["witness"] = w.to_dict()
        _emit(out)
        return EXIT_EMBEDDABLE
    try:
        w = unitary_witness(T)
    except EmbedLabError:
        w = None
    if w is not None and w.objective <= args.delta:
        out["verdict"] = "embeddable"
        out["certificate"] = {"layer": "unitary", "note": "unistochastic target"}
        out["witness"] = w.to_dict()
        _emit(out)
        return EXIT_EMBEDDABLE
    p = _parameterization_for(T, args.parameterization)
    res = embed_search(T, p, restarts=args.restarts, delta=args.delta, seed=args.seed)
    out["search"] = res.to_dict()
    if res.verdict == "embeddable_at_delta":
        L, t = decode(res.best_params, p)
        out["verdict"] = "embeddable"
        out["witness"] = {"method": "search", "lindbladian": L.to_dict(), "t": t, "objective": max_abs_mismatch(T, L, t)}
        _emit(out)
        return EXIT_EMBEDDABLE
    out["verdict"] = "inconclusive"
    _emit(out)
    return EXIT_INCONCLUSIVE


def cmd_certify(args) -> int:
    T = load_matrix_file(args.matrix)
    report = analytic_certificates(T)
    _emit(report)
    if report["decision"] == "embeddable":
        return EXIT_EMBEDDABLE
    if report["decision"] == "not-embeddable":
        return EXIT_NOT_EMBEDDABLE
    return EXIT_INCONCLUSIVE


def cmd_classify_extreme(args) -> int:
    d = args.d
    if d < 1:
        raise FormatError("d must be at least 1")
    n = count_quantum_embeddable_extreme(d)
    total = d ** d
    out = {"d": d, "embeddable": n, "total": total, "non_embeddable_fraction": 1 - n / total}
    if args.list_non_embeddable:
        if d > LIST_MAX_D:
            raise ResourceGuardError(f"listing is limited to d <= {LIST_MAX_D}; d = {d} has {total} extreme matrices")
        listed = []
        for T in enumerate_extreme(d):
            cls = classify_extreme(T)
            if not cls.embeddable:
                listed.append({"column_map": list(T.column_map()), "matrix": [[int(x) for x in row] for row in T.entries]})
        out["non_embeddable"] = listed
    _emit(out)
    return 0


def cmd_scan_qubit(args) -> int:
    if args.grid < 2:
        raise FormatError("--grid must be at least 2")
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        raise OSError(f"cannot write {out}: directory {out.parent} does not exist")

    def progress(done, total):
        if args.progress:
            print(f"{done}/{total}", file=sys.stderr)

    rows = scan_qubit(args.grid, args.delta, args.restarts, args.seed, args.parameterization, progress=progress)
    try:
        out.write_text(rows_to_csv(rows))
    except OSError as exc:
        raise OSError(f"cannot write {out}: {exc.strerror or exc}") from exc
    embeddable = sum(r.verdict == "embeddable_at_delta" for r in rows)
    print(f"wrote {len(rows)} rows to {out} ({embeddable} embeddable at delta = {args.delta:g})", file=sys.stderr)
    return 0


def cmd_embed_construct(args) -> int:
    T = load_matrix_file(args.target)
    if args.method == "theorem3":
        w = METHODS["theorem3"](T, args.gamma, args.tf)
    else:
        w = METHODS[args.method](T)
    _emit(w.to_dict())
    return 0


def _positive(text: str) -> float:
    value = float(text)
    if not (math.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embedlab", description="Quantum embeddability of stochastic matrices.")
    sub = parser.add_subparsers(dest="command", required=True)
    kinds = [k.value for k in Kind]

    p = sub.add_parser("check", help="layered verdict: analytic certificates, then numerical search")
    p.add_argument("matrix")
    p.add_argument("--delta", type=_positive, default=DEFAULT_DELTA)
    p.add_argument("--restarts", type=_positive_int, default=DEFAULT_RESTARTS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parameterization", choices=kinds, default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("certify", help="analytic certificates only")
    p.add_argument("matrix")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("classify-extreme", help="count (and list) embeddable extreme matrices")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--list-non-embeddable", action="store_true")
    p.set_defaults(func=cmd_classify_extreme)

    p = sub.add_parser("scan-qubit", help="grid scan over the 2x2 (a, b) square")
    p.add_argument("--grid", type=int, required=True)
    p.add_argument("--delta", type=_positive, default=DEFAULT_DELTA)
    p.add_argument("--restarts", type=_positive_int, default=DEFAULT_RESTARTS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parameterization", choices=kinds[:2], default="reduced-qubit")
    p.add_argument("--out", required=True)
    p.add_argument("--progress", action="store_true")
    p.set_defaults(func=cmd_scan_qubit)

    p = sub.add_parser("embed-construct", help="closed-form Lindbladian witness for a target")
    p.add_argument("--target", required=True)
    p.add_argument("--method", choices=sorted(METHODS), required=True)
    p.add_argument("--gamma", type=_positive, default=THEOREM3_GAMMA)
    p.add_argument("--tf", type=_positive, default=THEOREM3_TF)
    p.set_defaults(func=cmd_embed_construct)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    try:
        return args.func(args)
    except (EmbedLabError, OSError) as exc:
        print(f"embedlab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
