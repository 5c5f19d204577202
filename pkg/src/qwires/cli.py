"""Command-line front end.

Exit codes: 0 success, 1 verified failure (not a wire, target not reached,
failed check), 2 usage or input error.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import os
import sys

import numpy as np

from . import bose_hubbard as bh
from . import compiler, coupler, oracle
from . import io as qio
from . import linalg as la
from .classifier import classify, cluster_tensor, equivalent
from .errors import NotNormalized, NotReached, NotUnitary, QwiresError, TooLarge
from .mps import all_amplitudes, normal_form_tensor, random_wire, single_site_entropy, single_site_rho, site_density
from .replay import replay_plan

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
REFERENCE_BOSE_ENTROPY = 1.725


class UsageError(Exception):
    pass


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, obj) -> None:
    _emit(args, qio.dumps(obj) + "\n")


def _emit_rows(args, rows: list[dict], summary: dict | None = None) -> None:
    if args.format == "csv":
        buf = _io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else [], lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        _emit(args, buf.getvalue())
    elif args.format == "jsonl":
        lines = [qio.dumps(r) for r in rows]
        if summary is not None:
            lines.append(qio.dumps({"summary": summary}))
        _emit(args, "\n".join(lines) + "\n")
    else:
        obj = {"rows": rows}
        if summary is not None:
            obj["summary"] = summary
        _emit_json(args, obj)


def _finite(x: float) -> float | None:
    return float(x) if np.isfinite(x) else None


def _cap(args) -> int:
    return args.cap if args.cap is not None else oracle.site_cap()


def _normal_form(path: str):
    report = classify(qio.wire_from_json(qio.load_json(path)))
    return report, report.normal_form


def cmd_classify(args) -> int:
    report = classify(qio.wire_from_json(qio.load_json(args.wire)), tol=args.tol)
    _emit_json(args, qio.report_to_json(report))
    return EXIT_OK if report.is_wire else EXIT_FAIL


def cmd_compile(args) -> int:
    report, nf = _normal_form(args.wire)
    if nf is None:
        _emit_json(args, {"error": "not a wire", "verdict": report.verdict.value})
        return EXIT_FAIL
    target = qio.target_from_json(qio.load_json(args.target))
    try:
        plan = compiler.compile_su2(nf, target, tol=args.tol, max_len=args.max_len, seed=args.seed)
    except NotReached as exc:
        _emit_json(args, {"error": "NotReached", "residual": exc.residual, "message": str(exc)})
        return EXIT_FAIL
    _emit_json(args, qio.plan_to_json(plan, nf))
    return EXIT_OK


def cmd_simulate(args) -> int:
    wire_report, wire_nf = _normal_form(args.wire)
    data = qio.load_json(args.plan)
    plan, nf = qio.plan_from_json(data)
    overrides = qio.plan_overrides(data)
    if wire_nf is None:
        _emit_json(args, {"error": "not a wire", "verdict": wire_report.verdict.value})
        return EXIT_FAIL
    if not equivalent(wire_nf, nf):
        raise qio.FormatError("the plan was compiled for a different wire")
    n = _cap(args) if args.sites is None else args.sites
    if n > _cap(args):
        raise TooLarge(f"{n} sites exceeds the cap of {_cap(args)}")
    rng = np.random.default_rng(args.seed)
    result = replay_plan(nf, plan, rng, n, tol=max(args.tol, 1e-9), overrides=overrides)
    lines = [qio.dumps(r) for r in result.records] + [qio.dumps({"summary": result.summary()})]
    _emit(args, "\n".join(lines) + "\n")
    ok = (result.status in ("completed", "untracked") and result.max_deviation <= 1e-10
          and result.state_fidelity >= 1 - 1e-9)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_locus(args) -> int:
    if args.samples < 2:
        raise UsageError("--samples must be at least 2")
    _, nf = _normal_form(args.wire)
    if nf is None:
        return EXIT_FAIL
    thetas = np.linspace(0, 2 * np.pi, args.samples, endpoint=False)
    rows = [
        {"theta": float(th), "arg_lambda": a, "delta": 2 * a, "prob": p}
        for th, (a, p) in zip(thetas, compiler.realizable_locus(nf, args.samples))
    ]
    _emit_rows(args, rows, {"phi": nf.phi})
    return EXIT_OK


def cmd_couple(args) -> int:
    _, nf = _normal_form(args.wire)
    if nf is None:
        return EXIT_FAIL
    rng = np.random.default_rng(args.seed)
    g = coupler.CouplingGadget.build(nf, branch=args.gamma_branch)
    gate = coupler.entangling_gate(nf, g.angles)
    table = coupler.branch_table(g)
    outcome, byproducts, fid = coupler.decouple(g, rng)
    report = {
        "phi": nf.phi,
        "angles": {"gamma": g.angles.gamma, "epsilon": g.angles.epsilon, "delta": g.angles.delta},
        "constraint_residuals": list(coupler.angle_residuals(nf.phi, g.angles)),
        "coupling_matrix": qio.encode_matrix(g.coupling),
        "V": qio.encode_matrix(gate.v),
        "V_unitarity_residual": gate.unitarity_residual,
        "V_schmidt": gate.schmidt.tolist(),
        "branches": [
            {
                "x4": r.x4, "z6": r.z6, "site2_outcome": r.outcome2, "weight": r.weight,
                "unitarity_residual": _finite(r.unitarity_residual), "schmidt": r.schmidt.tolist(),
                "distance_to_V": r.distance_to_formula,
            }
            for r in table
        ],
        "decouple": {
            "outcome": outcome,
            "byproducts": [qio.encode_matrix(b) for b in byproducts],
            "fidelity": fid,
        },
    }
    _emit_json(args, report)
    return EXIT_OK


def cmd_bose(args) -> int:
    if 2 * args.pairs > _cap(args):
        raise TooLarge(f"{2 * args.pairs} sites exceeds the cap of {_cap(args)}")
    rows = [
        {"n_sites": r.n_sites, "round": r.round, "cut": r.cut, "entropy": r.entropy}
        for r in bh.entropy_table(args.pairs, args.cutoff, args.rounds)
    ]
    best = max(rows, key=lambda r: r["entropy"]) if rows else None
    summary = {
        "max_entropy": best["entropy"] if best else 0.0,
        "at_round": best["round"] if best else 0,
        "at_cut": best["cut"] if best else 0,
        "reference": REFERENCE_BOSE_ENTROPY,
    }
    _emit_rows(args, rows, summary)
    return EXIT_OK


def cmd_props(args) -> int:
    """Quick self-check of core invariants; exits 1 if any fails."""
    rng = np.random.default_rng(args.seed)
    checks = {}
    t = random_wire(rng)
    checks["normalization"] = abs(np.sum(abs(all_amplitudes(t, 8)) ** 2) - 1) < 1e-9
    nf = classify(cluster_tensor()).normal_form
    checks["cluster_phi"] = abs(nf.phi - np.pi) < 1e-9
    checks["unital_normal_form"] = normal_form_tensor(la.haar_su2(rng), 1.3).channel.is_unital()
    t = normal_form_tensor(la.haar_su2(rng), np.pi / 2)
    s = oracle.prepare_from_mps(t, 10)
    checks["site_density"] = np.allclose(oracle.reduced_density(s, 5), site_density(t, 5), atol=1e-10)
    checks["bulk_density"] = np.allclose(site_density(t, 400), single_site_rho(np.pi / 2), atol=1e-9)
    checks["entropy_endpoint"] = abs(single_site_entropy(np.pi) - 1) < 1e-12
    checks = {k: bool(v) for k, v in checks.items()}
    _emit_json(args, {"checks": checks, "all_passed": all(checks.values())})
    return EXIT_OK if all(checks.values()) else EXIT_FAIL


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # flags may appear before or after the subcommand; the subcommand copies
    # use SUPPRESS so they never overwrite a value given earlier
    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--seed", type=int, default=default(0))
    parser.add_argument("--tol", type=float, default=default(1e-9))
    parser.add_argument("--cap", type=int, default=default(None), help="site cap (default: QWIRES_CAP or 14)")
    parser.add_argument("--out", default=default(None), help="write output here instead of stdout")
    parser.add_argument("--format", choices=("json", "jsonl", "csv"), default=default("json"))


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)

    p = _Parser(prog="qwires", description="Quantum computational wires toolkit")
    _global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("classify", parents=[common], help="classify a wire tensor")
    s.add_argument("wire")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("compile", parents=[common], help="compile a target SU(2) element")
    s.add_argument("wire")
    s.add_argument("target")
    s.add_argument("--max-len", type=int, default=12)
    s.set_defaults(func=cmd_compile)

    s = sub.add_parser("simulate", parents=[common], help="replay a plan on a simulated chain")
    s.add_argument("wire")
    s.add_argument("plan")
    s.add_argument("--sites", type=int, default=None, help="chain length (default: the cap)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("locus", parents=[common], help="realizable phase gates over the basis family")
    s.add_argument("wire")
    s.add_argument("--samples", type=int, default=64)
    s.set_defaults(func=cmd_locus)

    s = sub.add_parser("couple", parents=[common], help="entangling gadget report")
    s.add_argument("wire")
    s.add_argument("--gamma-branch", "--phi-branch", dest="gamma_branch", type=int, choices=(0, 1), default=0,
                   help="0: gamma in (0, pi/2], 1: its supplement")
    s.set_defaults(func=cmd_couple)

    s = sub.add_parser("bose", parents=[common], help="double-well boson chain entropy table")
    s.add_argument("--pairs", type=int, default=3)
    s.add_argument("--cutoff", type=int, default=bh.DEFAULT_CUTOFF)
    s.add_argument("--rounds", type=int, default=2)
    s.set_defaults(func=cmd_bose)

    s = sub.add_parser("props", parents=[common], help="self-check of core invariants")
    s.set_defaults(func=cmd_props)
    return p


def main(argv=None) -> int:
    saved_cap = os.environ.get("QWIRES_CAP")
    try:
        args = build_parser().parse_args(argv)
        if args.cap is not None:
            os.environ["QWIRES_CAP"] = str(args.cap)
        return args.func(args)
    except UsageError as exc:
        print(f"qwires: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (qio.FormatError, TooLarge, NotUnitary, NotNormalized) as exc:
        print(f"qwires: input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QwiresError as exc:
        print(f"qwires: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    finally:
        if saved_cap is None:
            os.environ.pop("QWIRES_CAP", None)
        else:
            os.environ["QWIRES_CAP"] = saved_cap


if __name__ == "__main__":
    sys.exit(main())
