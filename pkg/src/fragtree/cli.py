"""Command-line interface: ``fragtree <command> [options]``.

Exit status is 0 on success, 1 when a verification fails (or a rate sequence
is rejected) and 2 for usage or parameter errors.  Data goes to stdout,
diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from fractions import Fraction
from typing import Sequence

from . import closed_forms
from .enumeration import (
    ALL_CAP,
    BINARY_CAP,
    count_fragmentations,
    enum_all,
    enum_binary,
    find_collisions,
    signature_table,
    verify_w_expansion,
)
from .io import dumps, shape_to_dot, to_dot, to_newick
from .measures import BetaMeasure, DiscreteMeasure, PointMass, factorization_check, paintbox_moment
from .models import (
    BetaSplitting,
    Comb,
    CouponCollector,
    GibbsModel,
    RawGibbs,
    SingletonSplit,
    SplittingRule,
    affine_ratio_check,
    check_consistency,
    check_normalization,
    ewens_pitman,
)
from .numeric import CheckReport, InadmissibleModel, UnsupportedOperation, fmt, is_exact, jsonable, parse_param
from .rates import (
    InvalidRateSequence,
    check_complete_monotonicity,
    check_thinning,
    invert_rates,
    rate_lambda,
    sample_timed,
)
from .rng import RngState, default_seed
from .samplers import (
    BranchingSampler,
    GrowthChain,
    branching_law,
    empirical_law,
    growth_law,
    restriction_law,
    tv_distance,
)
from .trees import full_mask, labels_of

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _warn(msg: str) -> None:
    print(f"fragtree: {msg}", file=sys.stderr)


def _param(text: str, name: str):
    try:
        value = parse_param(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"cannot parse --{name} {text!r}: {exc}") from None
    if isinstance(value, float) and value == value and abs(value) != float("inf"):
        _warn(f"--{name} {text} is a decimal; using float mode (exact checks unavailable)")
    return value


def _number_list(text: str, name: str) -> list:
    out = []
    for item in text.split(","):
        item = item.strip()
        if item.endswith("…") or item.endswith("..."):
            out.append(float(item.rstrip(".…")))
        else:
            out.append(_param(item, name))
    return out


def build_model(args) -> SplittingRule:
    chosen = [
        name
        for name, present in [
            ("beta", args.beta is not None),
            ("alpha/theta", args.alpha is not None or args.theta is not None),
            ("comb", args.comb),
            ("coupon", args.coupon is not None),
            ("singleton", args.singleton),
            ("raw-weights", args.raw_weights is not None),
        ]
        if present
    ]
    if len(chosen) != 1:
        raise UsageError("choose exactly one model: --beta, --alpha/--theta, --comb, --coupon, --singleton or --raw-weights")
    if args.beta is not None:
        return BetaSplitting(_param(args.beta, "beta"))
    if args.alpha is not None or args.theta is not None:
        if args.alpha is None or args.theta is None:
            raise UsageError("--alpha and --theta go together")
        return ewens_pitman(_param(args.alpha, "alpha"), _param(args.theta, "theta"))
    if args.comb:
        return Comb()
    if args.coupon is not None:
        return CouponCollector(args.coupon)
    if args.singleton:
        return SingletonSplit()
    w = _number_list(args.raw_weights, "raw-weights")
    a = _number_list(args.raw_a, "raw-a") if args.raw_a else None
    return RawGibbs(w, a)


def _model_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--beta", help="beta-splitting parameter (e.g. -3/2, 0, inf)")
    g.add_argument("--alpha", help="Ewens-Pitman alpha (e.g. 1/2, -inf)")
    g.add_argument("--theta", help="Ewens-Pitman theta")
    g.add_argument("--comb", action="store_true", help="comb rule (beta = -2 boundary)")
    g.add_argument("--coupon", type=int, metavar="M", help="recursive coupon collector with M coupons")
    g.add_argument("--singleton", action="store_true", help="split into singletons (alpha = 1)")
    g.add_argument("--raw-weights", metavar="W1,W2,...", help="Gibbs weights w(1), w(2), ...")
    g.add_argument("--raw-a", metavar="A1,A2,...", help="arity weights a(1), a(2), ... (binary if omitted)")


def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _report(reports: Sequence[CheckReport]) -> int:
    ok = all(reports)
    doc = reports[0].to_dict() if len(reports) == 1 else {"passed": ok, "checks": [r.to_dict() for r in reports]}
    _emit(json.dumps(doc, indent=2))
    return EXIT_OK if ok else EXIT_FAIL


# -- tables -------------------------------------------------------------------


def cmd_tables(args) -> int:
    model = build_model(args)
    lam2 = _param(args.lam2, "lam2")
    gibbs = isinstance(model, GibbsModel)
    if args.verify:
        if not isinstance(model, BetaSplitting) or model.beta not in closed_forms.REFERENCE_BETAS:
            raise UsageError("--verify needs --beta in {-3/2, -1, 0, inf}")
        if not model.exact or not is_exact(lam2):
            raise UsageError("--verify compares exact rationals; use p/q parameters")
    cols = ["n"]
    if gibbs:
        cols += ["w", "Z" if model.binary else "c"]
        if model.binary:
            cols.append("psi")
    cols.append("lambda")
    lines = ["\t".join(cols)]
    mismatches = []
    for n in range(1, args.n_max + 1):
        row = {"n": n}
        if gibbs:
            row["w"] = model.w(n)
            row["Z" if model.binary else "c"] = model.norm(n) if n >= 2 else None
            if model.binary:
                row["psi"] = model.psi(n) if n >= 2 else None
        row["lambda"] = rate_lambda(model, n, lam2) if n >= 2 else model.zero
        lines.append("\t".join("-" if row[c] is None else fmt(row[c]) for c in cols))
        if args.verify:
            ref = closed_forms.reference_row(model.beta, n)
            pairs = [("w", ref["w"]), ("Z", ref["Z"]), ("psi", ref["psi"])]
            if n >= 2:
                pairs.append(("lambda", ref["lam"] * lam2))
            for key, expected in pairs:
                if expected is not None and row[key] != expected:
                    mismatches.append(f"n={n} {key}: got {fmt(row[key])}, closed form {fmt(expected)}")
    _emit("\n".join(lines))
    if args.verify:
        for m in mismatches:
            _warn(m)
        _warn("verify: " + ("FAIL" if mismatches else f"pass ({args.n_max} rows match the closed forms)"))
        return EXIT_FAIL if mismatches else EXIT_OK
    return EXIT_OK


# -- sample -------------------------------------------------------------------


def _seed(args) -> int:
    return args.seed if args.seed is not None else default_seed()


def cmd_sample(args) -> int:
    model = build_model(args)
    if not 1 <= args.n <= 64:
        raise UsageError("--n must be in 1..64")
    if args.count < 1:
        raise UsageError("--count must be positive")
    method = args.method
    if method == "branching" and not model.binary:
        raise UsageError(f"--method branching needs a binary rule; {model!r} is multifurcating (use growth)")
    if args.timed and method == "branching":
        raise UsageError("--timed samples by growth; drop --method branching")
    rng = RngState(_seed(args))
    lam2 = _param(args.lam2, "lam2")
    sampler = BranchingSampler(model) if method == "branching" else GrowthChain(model)
    timed_trees = sample_timed(model, args.n, lam2, rng, size=args.count) if args.timed else None
    out = []
    for idx in range(args.count):
        lengths = None
        if timed_trees is not None:
            tree, lengths = timed_trees[idx].tree, timed_trees[idx].lengths
        else:
            tree = sampler.sample(args.n, rng)
        if args.format == "json":
            if lengths is None:
                out.append(dumps(tree))
            else:
                doc = {"tree": json.loads(dumps(tree)), "lengths": {str(list(labels_of(m))): x for m, x in lengths.items()}}
                out.append(json.dumps(doc, separators=(",", ":")))
        elif args.format == "newick":
            out.append(to_newick(tree, lengths))
        else:
            out.append(to_dot(tree, name=f"tree{idx}"))
    _emit("\n".join(out))
    return EXIT_OK


# -- check --------------------------------------------------------------------


def _check_samplers(model: SplittingRule, n: int, samples: int, seed: int) -> list[CheckReport]:
    reports = []
    for m in range(2, n + 1):
        g = growth_law(model, m)
        b = branching_law(model, m)
        if g != b:
            diff = next(t for t in set(g) | set(b) if g.get(t, 0) != b.get(t, 0))
            reports.append(
                CheckReport("sampler-law", False, m, {"n": m, "tree": diff.nested(), "growth": g.get(diff, 0), "tree_prob": b.get(diff, 0)})
            )
            return reports
        if m >= 3:
            pushed = restriction_law(b, full_mask(m - 1))
            if pushed != branching_law(model, m - 1):
                reports.append(CheckReport("projective", False, m, {"n": m}))
                return reports
    reports.append(CheckReport("sampler-law", True, n - 1, details={"n_max": n}))
    reports.append(CheckReport("projective", True, n - 2, details={"n_max": n}))
    if samples:
        exact = {t: float(p) for t, p in branching_law(model, n).items()}
        rng_a, rng_b = RngState(seed).spawn(2)
        growth = GrowthChain(model)
        emp_g = empirical_law(growth.sample(n, rng_a) for _ in range(samples))
        details = {"samples": samples, "tv_growth_exact": tv_distance(emp_g, exact)}
        if model.binary:
            branch = BranchingSampler(model)
            emp_b = empirical_law(branch.sample(n, rng_b) for _ in range(samples))
            details["tv_branching_exact"] = tv_distance(emp_b, exact)
            details["tv_between_samplers"] = tv_distance(emp_g, emp_b)
        reports.append(CheckReport("sampler-tv", True, samples, details=details))
    return reports


def _measure(args):
    kind = args.measure
    if kind == "beta":
        if args.beta is None:
            raise UsageError("--measure beta needs --beta")
        return BetaMeasure(_param(args.beta, "beta"))
    if kind == "point":
        return PointMass()
    if kind == "two-point":
        return DiscreteMeasure([Fraction(1, 4), Fraction(3, 4)])
    if not args.atoms:
        raise UsageError("--measure discrete needs --atoms")
    atoms = _number_list(args.atoms, "atoms")
    masses = _number_list(args.masses, "masses") if args.masses else None
    return DiscreteMeasure(atoms, masses)


def cmd_check(args) -> int:
    suite = args.suite
    if suite == "factorization":
        meas = _measure(args)
        return _report([factorization_check(meas, args.i_max, args.tol, args.form)])
    model = build_model(args)
    n_max = args.n_max
    if suite == "consistency":
        return _report([check_consistency(model, n_max)])
    if suite == "normalization":
        return _report([check_normalization(model, n_max)])
    if suite == "affine":
        return _report([affine_ratio_check(model, args.j_max)])
    if suite == "thinning":
        return _report([check_thinning(model, n_max)])
    if suite == "monotonicity":
        lam = {n: rate_lambda(model, n) for n in range(2, n_max + args.order + 1)}
        return _report([check_complete_monotonicity(lam, args.order, n_max)])
    if suite == "expansion":
        reports = []
        for n in range(1, min(n_max, 10) + 1):
            ok = verify_w_expansion(model, n)
            reports.append(CheckReport(f"w-expansion n={n}", ok, 1, None if ok else {"n": n}))
        return _report(reports)
    if suite == "samplers":
        model._require_exact("check samplers")
        if n_max > 7:
            raise UsageError("exact sampler laws are capped at --n-max 7")
        return _report(_check_samplers(model, n_max, args.samples, _seed(args)))
    if suite == "paintbox":
        comp = [int(x) for x in args.composition.split(",")]
        est = paintbox_moment(model, comp, args.samples or 100_000, RngState(_seed(args)))
        ok = est.within(3.0)
        details = {"estimate": est.estimate, "stderr": est.stderr, "exact": est.exact, "z": est.z, "method": est.method}
        return _report([CheckReport("paintbox", ok, est.samples, None if ok else details, details)])
    raise UsageError(f"unknown suite {suite!r}")


# -- enumerate ----------------------------------------------------------------


def cmd_enumerate(args) -> int:
    n = args.n
    if args.collisions is not None and args.collisions is not True:
        n = args.collisions
    if n is None:
        raise UsageError("give --n")
    if args.collisions is not None:
        found = find_collisions(n)
        _warn(f"{len(found)} signature(s) shared by two or more shapes at n={n}")
        blocks = []
        for sig, shapes in found:
            blocks.append(f"// signature {sig}: {len(shapes)} shapes")
            for i, s in enumerate(shapes):
                blocks.append(shape_to_dot(s, name=f"shape_{'_'.join(map(str, sig))}_{i}"))
        if blocks:
            _emit("\n".join(blocks))
        return EXIT_OK
    if args.signatures:
        table = signature_table(n)
        lines = ["signature\tshapes\tQ"]
        for sig, entry in sorted(table.entries.items(), reverse=True):
            lines.append(f"{','.join(map(str, sig))}\t{len(entry.shapes)}\t{entry.Q}")
        _emit("\n".join(lines))
        return EXIT_OK
    if n > (ALL_CAP if args.all else BINARY_CAP):
        raise UsageError(f"n = {n} exceeds the enumeration cap")
    if args.all:
        literal = n <= 7
        value = sum(1 for _ in enum_all(n, ALL_CAP)) if literal else count_fragmentations(n, binary=False)
        kind = "all"
    else:
        literal = n <= 8
        value = sum(1 for _ in enum_binary(n, BINARY_CAP)) if literal else count_fragmentations(n)
        kind = "binary"
    _emit(f"{kind}\t{n}\t{value}\t{'enumerated' if literal else 'recursion'}")
    return EXIT_OK


# -- rates --------------------------------------------------------------------


def cmd_rates(args) -> int:
    if args.from_lambda:
        values = _number_list(args.from_lambda, "from-lambda")
        lam = {n: v for n, v in enumerate(values, start=2)}
    else:
        model = build_model(args)
        lam2 = _param(args.lam2, "lam2")
        lam = {n: rate_lambda(model, n, lam2) for n in range(2, args.n_max + 1)}
    if not args.invert:
        _emit("n\tlambda\n" + "\n".join(f"{n}\t{fmt(v)}" for n, v in lam.items()))
        return EXIT_OK
    try:
        table = invert_rates(lam, max(lam), args.tol)
    except InvalidRateSequence as exc:
        _warn(str(exc))
        _emit(json.dumps({"valid": False, "reason": str(exc), "witness": jsonable(exc.witness)}))
        return EXIT_FAIL
    lines = ["n\tk\tp(k,n-k)"]
    for n, row in table.items():
        for k in range(1, n // 2 + 1):
            lines.append(f"{n}\t{k}\t{fmt(row[k])}")
    _emit("\n".join(lines))
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fragtree", description="Fragmentation trees under Gibbs-type splitting rules: tables, sampling, enumeration, checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tables", help="w, Z (or c), psi and lambda per n")
    _model_options(p)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--lam2", default="1")
    p.add_argument("--verify", action="store_true", help="compare with stored closed forms (exact)")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("sample", help="sample random trees")
    _model_options(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--method", choices=["growth", "branching"], default="growth")
    p.add_argument("--format", choices=["json", "newick", "dot"], default="json")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, help="default: $FRAGTREE_SEED or 0")
    p.add_argument("--timed", action="store_true", help="attach exponential edge lengths")
    p.add_argument("--lam2", default="1")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("check", help="run a verification suite")
    p.add_argument(
        "suite",
        choices=["consistency", "normalization", "affine", "thinning", "monotonicity", "expansion", "samplers", "paintbox", "factorization"],
    )
    _model_options(p)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--j-max", type=int, default=3)
    p.add_argument("--order", type=int, default=6)
    p.add_argument("--samples", type=int, default=0)
    p.add_argument("--seed", type=int)
    p.add_argument("--composition", default="1,2")
    p.add_argument("--measure", choices=["beta", "point", "two-point", "discrete"], default="beta")
    p.add_argument("--atoms")
    p.add_argument("--masses")
    p.add_argument("--i-max", type=int, default=10)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--form", choices=["gibbs", "cross", "product"], default="gibbs")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("enumerate", help="counts, signature tables and shape collisions")
    p.add_argument("--n", type=int)
    p.add_argument("--count", action="store_true", help="number of fragmentations (default action)")
    p.add_argument("--all", action="store_true", help="all arities instead of binary")
    p.add_argument("--signatures", action="store_true")
    p.add_argument("--collisions", nargs="?", type=int, const=True, metavar="N", help="shapes sharing a signature, as DOT")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("rates", help="rate sequence lambda_n and its inversion")
    _model_options(p)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--lam2", default="1")
    p.add_argument("--from-lambda", metavar="L2,L3,...", help="rates lambda_2, lambda_3, ...")
    p.add_argument("--invert", action="store_true", help="reconstruct the splitting rule")
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_rates)
    return parser


_VALUE_OPTIONS = {"--beta", "--alpha", "--theta", "--lam2", "--raw-weights", "--raw-a", "--from-lambda", "--atoms", "--masses"}
_NEGATIVE = re.compile(r"^-(\d|\.\d|inf|∞)", re.IGNORECASE)


def _join_negative_values(argv: Sequence[str]) -> list[str]:
    """Rewrite ``--beta -3/2`` as ``--beta=-3/2`` so argparse does not read it as an option."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_OPTIONS and i + 1 < len(argv) and _NEGATIVE.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_join_negative_values(argv))
    try:
        return args.func(args)
    except (UsageError, InadmissibleModel, UnsupportedOperation, ValueError) as exc:
        _warn(f"error: {exc}")
        return EXIT_USAGE
    except ArithmeticError as exc:
        _warn(f"verification failed: {exc}")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
