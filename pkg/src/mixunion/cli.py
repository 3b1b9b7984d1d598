"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path

from . import bounds as B
from .core import BoundsError, IntersectionBand, MarginalSequence, MixingProfile
from .models import (
    BlockFamily,
    JointTableModel,
    Markov2Model,
    PastTooLargeError,
    restricted_profile,
)
from .montecarlo import McConfig, estimate_union

OUTPUT_DIR_ENV = "MIXUNION_OUTPUT_DIR"

BOUND_KINDS = ("phi", "phi-opt", "alpha", "alpha-lower-mass", "window-phi",
               "window-alpha", "second-order", "chung-erdos", "geom-phi", "poly-alpha")

# (a, b, N) -> rounded cells of the two-state Markov example table
REFERENCE_TABLE = {
    (0.20, 0.30, 50): {"exact": ("0.99999", 5), "L0": 2, "prop": ("0.964", 3),
                       "L_opt": 2, "B_opt": ("0.990", 3)},
    (0.05, 0.15, 100): {"exact": ("0.995", 3), "L0": 9, "prop": ("0.713", 3),
                        "L_opt": 11, "B_opt": ("0.779", 3)},
}


class InputError(Exception):
    """Bad flag or file; reported on one line with exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# report plumbing
# ---------------------------------------------------------------------------


def _digest(inputs) -> str:
    blob = json.dumps(inputs, sort_keys=True, separators=(",", ":"), default=str)
    return "sha256:" + hashlib.sha256(blob.encode()).hexdigest()


def make_report(command, argv, inputs, reports=(), reference=None, started=None,
                status="ok", **extra) -> dict:
    doc = {
        "command": command,
        "argv": list(argv),
        "inputs_digest": _digest(inputs),
        "status": status,
        "reports": [dict(r) for r in reports],
        "reference": reference or {},
    }
    doc.update(extra)
    doc["duration_s"] = 0.0 if started is None else round(time.perf_counter() - started, 6)
    return doc


def _emit(doc, args, text_lines):
    if getattr(args, "json", False):
        print(json.dumps(doc, indent=2))
    else:
        for line in text_lines:
            print(line)
    out = getattr(args, "out", None)
    if out:
        path = Path(out)
        if not path.is_absolute() and os.environ.get(OUTPUT_DIR_ENV):
            path = Path(os.environ[OUTPUT_DIR_ENV]) / path
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, indent=2) + "\n")


def _fmt(x):
    return "-" if x is None else f"{x:.6g}"


def _describe(name, rep):
    parts = [f"{name:<22} bound={rep['bound']:.6f}"]
    if rep.get("exponent") is not None:
        parts.append(f"exponent={rep['exponent']:.6g}")
    if rep.get("L") is not None:
        parts.append(f"L={rep['L']}")
    if rep.get("clipped"):
        parts.append("(clipped at 0)")
    return "  ".join(parts)


# ---------------------------------------------------------------------------
# input loading
# ---------------------------------------------------------------------------


def _load_marginals(args) -> MarginalSequence:
    if args.marginals:
        try:
            return MarginalSequence.load(args.marginals)
        except OSError as exc:
            raise InputError(f"--marginals: cannot read {args.marginals}: {exc.strerror}")
        except (BoundsError, ValueError, json.JSONDecodeError) as exc:
            raise InputError(f"--marginals {args.marginals}: {exc}")
    if args.p is not None and args.N is not None:
        return MarginalSequence.constant(args.p, args.N)
    raise InputError("--marginals FILE (or --p P --N N) is required")


def _load_profile(args, family) -> MixingProfile:
    if args.profile:
        try:
            prof = MixingProfile.load(args.profile)
        except OSError as exc:
            raise InputError(f"--profile: cannot read {args.profile}: {exc.strerror}")
        except (BoundsError, ValueError, json.JSONDecodeError) as exc:
            raise InputError(f"--profile {args.profile}: {exc}")
    elif args.profile_json:
        try:
            prof = MixingProfile.from_json(args.profile_json)
        except (BoundsError, ValueError) as exc:
            raise InputError(f"--profile-json: {exc}")
    else:
        raise InputError("--profile FILE (or --profile-json JSON) is required")
    if family and prof.family != family:
        raise InputError(f"--profile: expected a {family} profile, got {prof.family}")
    return prof


def _load_band(args, N) -> IntersectionBand:
    if not args.band:
        raise InputError("--band FILE is required")
    try:
        return IntersectionBand.load(args.band, N=N)
    except OSError as exc:
        raise InputError(f"--band: cannot read {args.band}: {exc.strerror}")
    except (BoundsError, ValueError, json.JSONDecodeError) as exc:
        raise InputError(f"--band {args.band}: {exc}")


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise InputError(f"--{name.replace('_', '-')} is required")


# ---------------------------------------------------------------------------
# bound
# ---------------------------------------------------------------------------


def _run_bound(args):
    kind = args.kind
    if kind == "poly-alpha":
        _need(args, "C", "gamma")
        if args.SN is not None:
            _need(args, "N")
            S_N, N = args.SN, args.N
        else:
            p = _load_marginals(args)
            S_N, N = p.total, p.N
        rep = B.poly_alpha_bound(S_N, N, args.C, args.gamma, args.theta)
        return rep, {"S_N": S_N, "N": N, "C": args.C, "gamma": args.gamma, "theta": args.theta}

    p = _load_marginals(args)
    inputs = {"probs": p.to_json()["probs"]}
    if kind == "geom-phi":
        _need(args, "C", "rho")
        inputs.update(C=args.C, rho=args.rho)
        return B.geom_phi_bound(p, args.C, args.rho), inputs
    if kind == "chung-erdos":
        band = _load_band(args, p.N)
        inputs["band"] = band.to_json()
        return B.chung_erdos_bound(p, band), inputs

    family = {"phi": "phi", "phi-opt": "phi", "alpha": "alpha",
              "alpha-lower-mass": "alpha", "window-phi": "phi",
              "window-alpha": "alpha", "second-order": "phi"}[kind]
    prof = _load_profile(args, family)
    inputs["profile"] = prof.to_json()
    if kind == "phi-opt":
        return B.phi_optimize(p, prof), inputs
    _need(args, "L")
    inputs["L"] = args.L
    if kind == "phi":
        return B.phi_bound(p, prof, args.L), inputs
    if kind == "alpha":
        return B.alpha_bound(p, prof, args.L), inputs
    if kind == "alpha-lower-mass":
        return B.alpha_lower_mass_bound(p, prof, args.L), inputs
    if kind in ("window-phi", "window-alpha"):
        _need(args, "i", "n")
        inputs.update(i=args.i, n=args.n)
        return B.window_bound(p, prof, args.i, args.n, args.L), inputs
    band = _load_band(args, p.N)
    inputs.update(band=band.to_json(), weighted=args.weighted)
    return B.second_order_bound(p, band, prof, args.L, args.weighted), inputs


def cmd_bound(args, argv):
    started = time.perf_counter()
    rep, inputs = _run_bound(args)
    body = {"name": args.kind, **rep.to_json()}
    doc = make_report(f"bound {args.kind}", argv, inputs, [body], started=started)
    lines = [_describe(args.kind, body)]
    lines += [f"  {k} = {_fmt(v)}" for k, v in sorted(rep.residuals.items())]
    lines += [f"  note: {n}" for n in rep.notes]
    _emit(doc, args, lines)
    return 0


# ---------------------------------------------------------------------------
# verify-table
# ---------------------------------------------------------------------------


def _round(x, places):
    q = Decimal(1).scaleb(-places)
    return str(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_EVEN))


def table_cells(a, b, N):
    """Recompute one row of the two-state example from first principles."""
    model = Markov2Model(a, b, N)
    p = model.marginals()
    rho = abs(model.lam)
    geom = B.geom_phi_bound(p, 1.0, rho)
    opt = B.phi_optimize(p, model.phi_profile())
    return {"exact": model.exact_union, "L0": geom.L, "prop": geom.bound,
            "L_opt": opt.L, "B_opt": opt.bound}


def cmd_verify_table(args, argv):
    started = time.perf_counter()
    rows, mismatches, lines = [], [], []
    lines.append(f"{'(a,b,N)':<18}{'exact':>10}{'L0':>5}{'Prop.':>8}{'(L_opt, B_opt)':>18}  status")
    for (a, b, N), want in REFERENCE_TABLE.items():
        got = table_cells(a, b, N)
        cells = {
            "exact": _round(got["exact"], want["exact"][1]),
            "L0": got["L0"],
            "prop": _round(got["prop"], want["prop"][1]),
            "L_opt": got["L_opt"],
            "B_opt": _round(got["B_opt"], want["B_opt"][1]),
        }
        expected = {"exact": want["exact"][0], "L0": want["L0"], "prop": want["prop"][0],
                    "L_opt": want["L_opt"], "B_opt": want["B_opt"][0]}
        bad = [k for k in cells if cells[k] != expected[k]]
        mismatches += [f"({a}, {b}, {N}) {k}: got {cells[k]}, expected {expected[k]}" for k in bad]
        rows.append({"a": a, "b": b, "N": N, "computed": got, "rounded": cells,
                     "expected": expected, "match": not bad})
        label = f"({a:.2f},{b:.2f},{N})"
        pair = f"({cells['L_opt']}, {cells['B_opt']})"
        lines.append(f"{label:<18}{cells['exact']:>10}{cells['L0']:>5}{cells['prop']:>8}"
                     f"{pair:>18}  {'ok' if not bad else 'MISMATCH'}")
    lines += mismatches
    status = "ok" if not mismatches else "fail"
    doc = make_report("verify-table", argv, {"rows": list(map(list, REFERENCE_TABLE))},
                      started=started, status=status, rows=rows)
    _emit(doc, args, lines)
    return 0 if not mismatches else 1


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def cmd_validate(args, argv):
    from .validation import run_validity_suite

    if not 2 <= args.N_max <= 10:
        raise InputError(f"--N-max must lie in 2..10, got {args.N_max}")
    if args.models < 1:
        raise InputError(f"--models must be >= 1, got {args.models}")
    started = time.perf_counter()
    res = run_validity_suite(args.models, args.N_max, args.seed, perturb=args.perturb,
                             max_past=args.max_past)
    status = "ok" if res.ok else "fail"
    doc = make_report("validate", argv,
                      {"models": args.models, "N_max": args.N_max, "seed": args.seed,
                       "perturb": args.perturb, "max_past": args.max_past},
                      started=started, status=status, validity=res.to_json())
    lines = [
        f"tables: {res.models}  checks: {res.checks}  passed: {res.passed}  "
        f"failed: {len(res.violations)}",
        f"tightest gap: {res.tightest_gap:.3e} ({res.tightest})",
    ]
    if res.alpha_from_phi_tables:
        lines.append(f"alpha replaced by phi (enumeration too large) on "
                     f"{res.alpha_from_phi_tables} tables")
    if not res.ok:
        v = res.violations[0]
        lines.append(f"VIOLATION table {v.table_index}: {v.bound} L={v.L} "
                     f"value={v.value!r} > exact={v.reference!r}")
        lines.append("counterexample: " + json.dumps(res.counterexample))
    _emit(doc, args, lines)
    return 0 if res.ok else 1


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------


def _compare_model(args):
    chosen = [x for x in (args.markov, args.block, args.table) if x]
    if len(chosen) != 1:
        raise InputError("exactly one of --markov, --block, --table is required")
    if args.markov:
        a, b, N = args.markov
        try:
            model = Markov2Model(a, b, int(N))
        except BoundsError as exc:
            raise InputError(f"--markov: {exc}")
        return (model, model.marginals(), model.band(), model.phi_profile(),
                model.alpha_profile(), model.exact_union, "envelope |1-a-b|^n")
    if args.block:
        m, p, q = args.block
        try:
            model = BlockFamily(int(m), p, int(q))
        except BoundsError as exc:
            raise InputError(f"--block: {exc}")
        return (model, model.marginals(), model.band(), model.phi_profile(),
                model.alpha_profile(), model.exact_union, "m-dependent envelope")
    try:
        table = JointTableModel.load(args.table)
    except OSError as exc:
        raise InputError(f"--table: cannot read {args.table}: {exc.strerror}")
    except (BoundsError, ValueError, KeyError) as exc:
        raise InputError(f"--table {args.table}: {exc}")
    phi_prof = restricted_profile(table, "phi")
    source = "exact restricted coefficients"
    try:
        alpha_prof = restricted_profile(table, "alpha")
    except PastTooLargeError:
        alpha_prof = MixingProfile.tabulated(phi_prof.values, "alpha", table.N)
        source += " (alpha replaced by phi)"
    return (table, table.marginals(), table.pairwise_intersections(), phi_prof,
            alpha_prof, table.union(), source)


def cmd_compare(args, argv):
    started = time.perf_counter()
    model, p, band, phi_prof, alpha_prof, exact, source = _compare_model(args)
    N = p.N
    L_min = args.L_min
    L_max = min(args.L_max if args.L_max is not None else N - 1, N - 1)
    if L_min < 0 or L_min > L_max:
        raise InputError(f"--L-min/--L-max give an empty range {L_min}..{L_max}")

    reference = {"exact_union": exact, "coefficients": source}
    if args.mc_trials:
        if args.seed is None:
            raise InputError("--seed is required with --mc-trials")
        if isinstance(model, JointTableModel):
            raise InputError("--mc-trials needs --markov or --block")
        mc = estimate_union(model, McConfig(args.mc_trials, args.seed, args.workers))
        reference["monte_carlo"] = mc.to_json()

    ce = B.chung_erdos_bound(p, band)
    rows = []
    for L in range(L_min, L_max + 1):
        row = {"L": L,
               "phi": B.phi_bound(p, phi_prof, L).bound,
               "alpha": B.alpha_bound(p, alpha_prof, L).bound,
               "second_order": B.second_order_bound(p, band, phi_prof, L).bound if L >= 2 else None,
               "chung_erdos": ce.bound}
        cols = {k: v for k, v in row.items() if k != "L" and v is not None}
        row["largest"] = max(cols, key=cols.get)
        row["all_below_exact"] = all(v <= exact + 1e-12 for v in cols.values())
        rows.append(row)
    opt = B.phi_optimize(p, phi_prof)
    status = "ok" if all(r["all_below_exact"] for r in rows) else "fail"
    doc = make_report("compare", argv,
                      {"model": repr(model), "L_min": L_min, "L_max": L_max,
                       "mc_trials": args.mc_trials, "seed": args.seed},
                      reports=[{"name": "phi-opt", **opt.to_json()},
                               {"name": "chung-erdos", **ce.to_json()}],
                      reference=reference, started=started, status=status, rows=rows)
    lines = [f"model: {model!r}   S_N = {p.total:.6g}   coefficients: {source}",
             f"exact union = {exact:.6f}"]
    if "monte_carlo" in reference:
        mc = reference["monte_carlo"]
        lines.append(f"monte carlo = {mc['estimate']:.6f} +/- {mc['stderr']:.2g} "
                     f"({mc['trials']} trials, seed {args.seed})")
    lines.append(f"{'L':>4}{'phi':>11}{'alpha':>11}{'2nd-order':>11}{'Chung-Erdos':>13}  largest")
    for r in rows:
        so = "-" if r["second_order"] is None else f"{r['second_order']:.6f}"
        lines.append(f"{r['L']:>4}{r['phi']:>11.6f}{r['alpha']:>11.6f}{so:>11}"
                     f"{r['chung_erdos']:>13.6f}  {r['largest']}")
    lines.append(f"phi optimised: L* = {opt.L}, bound = {opt.bound:.6f}")
    lines.append("all columns are valid lower bounds for the exact union"
                 if status == "ok" else "WARNING: some column exceeds the exact union")
    _emit(doc, args, lines)
    return 0 if status == "ok" else 1


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mixunion",
                     description="Lower bounds for unions of weakly dependent events.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--json", action="store_true", help="print the full JSON report")
        sp.add_argument("--out", help=f"also write the JSON report here (relative to ${OUTPUT_DIR_ENV} if set)")

    sp = sub.add_parser("bound", help="compute one bound")
    sp.add_argument("kind", choices=BOUND_KINDS)
    sp.add_argument("--marginals", help="CSV (one probability per line) or JSON {\"probs\": [...]}")
    sp.add_argument("--p", type=float, help="constant marginal (with --N) instead of --marginals")
    sp.add_argument("--N", type=int)
    sp.add_argument("--profile", help="mixing profile JSON file")
    sp.add_argument("--profile-json", help="mixing profile as an inline JSON string")
    sp.add_argument("--band", help="pairwise intersections, CSV i,j,value or JSON")
    sp.add_argument("--L", type=int)
    sp.add_argument("--i", type=int, default=0)
    sp.add_argument("--n", type=int)
    sp.add_argument("--weighted", action="store_true")
    sp.add_argument("--C", type=float)
    sp.add_argument("--rho", type=float)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--theta", type=float)
    sp.add_argument("--SN", type=float)
    common(sp)
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("verify-table", help="recompute the two-state Markov example table")
    common(sp)
    sp.set_defaults(func=cmd_verify_table)

    sp = sub.add_parser("validate", help="check all bounds against random exact tables")
    sp.add_argument("--models", type=int, default=200)
    sp.add_argument("--N-max", dest="N_max", type=int, default=8)
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--max-past", dest="max_past", type=int, default=4)
    sp.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    common(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("compare", help="tabulate bounds side by side for one model")
    sp.add_argument("--markov", nargs=3, type=float, metavar=("A", "B", "N"))
    sp.add_argument("--block", nargs=3, type=float, metavar=("M", "P", "Q"))
    sp.add_argument("--table", help="joint table file (JSON or BCJT0001 binary)")
    sp.add_argument("--L-min", dest="L_min", type=int, default=0)
    sp.add_argument("--L-max", dest="L_max", type=int)
    sp.add_argument("--mc-trials", dest="mc_trials", type=int, default=0)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workers", type=int, default=1)
    common(sp)
    sp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, argv)
    except (InputError, BoundsError) as exc:
        print(f"mixunion {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
