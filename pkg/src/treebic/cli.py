"""Command line interface: ``treebic score|rlct|polytope|validate|transform``.

Exit codes: 0 success, 1 input error, 2 unsupported regime.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from .em import check_A2
from .errors import CapacityError, ConstraintError, DataError, TreeError, UnsupportedRegimeError
from .laplace import (
    Prior, TreeModel, UnderflowError, ValidationConfig, make_fiber_data, mc_laplace,
    parse_grid, slope_regression,
)
from .moments import (
    ThetaPoint, lambda_to_central, mask_to_pattern, model_probs, probs_to_lambda,
    cumulants_from_moments, theta_to_omega, theta_from_mapping,
)
from .newton import ExponentSet, monomial_rlct
from .patterns import load_counts
from .qdelta import gamma_Q_structure_check, pair_edge_polytope
from .score import SCHEMA_VERSION, ScoreConfig, frac_str, full_score
from .tree import load_tree

EXIT_OK, EXIT_INPUT, EXIT_REGIME = 0, 1, 2


class InputError(Exception):
    pass


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _flat_csv(doc: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in doc.items():
        w.writerow([k, json.dumps(v) if isinstance(v, (list, dict)) else v])
    return buf.getvalue()


def _exact(x) -> str:
    return frac_str(Fraction(x)) if isinstance(x, (int, Fraction)) else repr(float(x))


def load_theta(path: str, tree) -> ThetaPoint:
    """Theta JSON: ``{"root": p, "edges": {child: [p1_given_0, p1_given_1]}}``; values may be ``"a/b"`` strings."""
    with open(path) as fh:
        doc = json.load(fh)
    try:
        root = Fraction(str(doc["root"]))
        edges = {k: tuple(Fraction(str(x)) for x in v) for k, v in doc["edges"].items()}
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad theta file: {exc}") from None
    theta = theta_from_mapping(tree, root, edges)
    vals = theta.as_vector(tree)
    if any(not 0 <= v <= 1 for v in vals) or any(len(e) != 2 for e in theta.edges.values()):
        raise InputError("theta entries must be probabilities, two per edge")
    return theta


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_score(args) -> int:
    tree = load_tree(args.tree)
    counts = load_counts(args.data, tree.n)
    tol = None if args.tol is None else Fraction(args.tol)
    report = full_score(tree, counts, ScoreConfig(tol=tol, seed=args.seed))
    doc = report.to_dict()
    _emit(_json(doc) if args.format == "json" else _flat_csv(doc), args.out)
    return EXIT_OK


def read_exponents(path: str) -> list[tuple[int, ...]]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(x.strip() for x in r)]
    if not rows:
        raise InputError("exponent file is empty")
    try:
        pts = [tuple(int(x) for x in r) for r in rows]
    except ValueError:
        raise InputError("exponents must be integers") from None
    if len({len(p) for p in pts}) != 1:
        raise InputError("ragged exponent rows")
    if any(v < 0 for p in pts for v in p):
        raise InputError("exponents must be nonnegative")
    return pts


def cmd_rlct(args) -> int:
    pts = read_exponents(args.exponents)
    prior = None
    if args.prior:
        try:
            prior = tuple(int(x) for x in args.prior.split(","))
        except ValueError:
            raise InputError("--prior expects comma separated integers") from None
    res = monomial_rlct(ExponentSet(pts, prior))
    doc = {"schema_version": SCHEMA_VERSION, "threshold": frac_str(res.threshold),
           "multiplicity": res.multiplicity}
    _emit(_json(doc) if args.format == "json" else _flat_csv(doc), args.out)
    return EXIT_OK


def cmd_polytope(args) -> int:
    tree = load_tree(args.tree)
    if not tree.is_trivalent() or tree.n < 4:
        raise UnsupportedRegimeError("polytope checks need a trivalent tree with at least four leaves")
    delta = [v for v in args.delta.split(",") if v] if args.delta else []
    report = pair_edge_polytope(tree)
    gamma = gamma_Q_structure_check(tree, delta)
    doc = {"schema_version": SCHEMA_VERSION, **report.to_dict(),
           "facets": report.brute_force_facets if report.brute_force_facets is not None
           else report.claimed_facets,
           "gamma_check": gamma.ok, "delta": delta, "pass": report.ok and gamma.ok}
    _emit(_json(doc) if args.format == "json" else _flat_csv(doc), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    tree = load_tree(args.tree)
    theta = load_theta(args.theta, tree)
    grid = parse_grid(args.grid)
    prior = Prior.parse(args.prior)
    config = ValidationConfig(grid=grid, samples=args.samples, seed=args.seed, prior=prior,
                              method=args.method, drop=args.drop)
    warnings = []
    if config.below_minimum:
        warnings.append("samples below minimum")
        print("warning: samples below minimum", file=sys.stderr)
    data = make_fiber_data(tree, theta, 1)
    report = full_score(tree, data, ScoreConfig(check_model=False))
    expected = report.coefficient
    model = TreeModel(tree, [float(x) for x in data.proportions()])
    estimates = mc_laplace(model, grid, config)
    reg = slope_regression(estimates, drop=min(config.drop, max(len(grid) - 4, 0)))
    verdict = "pass" if abs(reg.slope + float(expected)) <= args.slope_tol else "fail"
    summary = {"schema_version": SCHEMA_VERSION, "slope": reg.slope, "slope_se": reg.slope_se,
               "expected_lambda": frac_str(expected), "regime": report.regime,
               "method": config.method, "verdict": verdict, "warnings": warnings}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "logI", "stderr"])
    for e in estimates:
        w.writerow([repr(e.N), repr(e.log_I), repr(e.stderr)])
    if args.format == "csv":
        _emit(buf.getvalue(), args.out)
        sys.stderr.write(_json(summary))
    else:
        summary["estimates"] = [{"N": e.N, "logI": e.log_I, "stderr": e.stderr} for e in estimates]
        _emit(_json(summary), args.out)
    return EXIT_OK


def cmd_transform(args) -> int:
    tree = load_tree(args.tree)
    if bool(args.data) == bool(args.theta):
        raise InputError("give exactly one of --data or --theta")
    doc: dict = {"schema_version": SCHEMA_VERSION, "leaves": list(tree.leaves)}
    if args.data:
        p = load_counts(args.data, tree.n).proportions()
    else:
        theta = load_theta(args.theta, tree)
        p = model_probs(theta, tree)
        omega = theta_to_omega(theta, tree)
        doc["omega"] = {"s": {v: _exact(x) for v, x in omega.s.items()},
                        "eta": {f"{u}->{v}": _exact(x) for (u, v), x in omega.eta.items()}}
    lam = probs_to_lambda(p)
    means, mu = lambda_to_central(lam)
    kappa = cumulants_from_moments(lam, mu, tree).kappa
    n = tree.n
    doc["probs"] = {mask_to_pattern(a, n): _exact(x) for a, x in enumerate(p)}
    doc["lambda"] = {mask_to_pattern(a, n): _exact(x) for a, x in enumerate(lam)}
    doc["central"] = {mask_to_pattern(a, n): _exact(mu[a]) for a in kappa}
    doc["cumulants"] = {mask_to_pattern(a, n): _exact(x) for a, x in kappa.items()}
    if args.format == "json":
        _emit(_json(doc), args.out)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["pattern", "prob", "lambda", "central", "cumulant"])
        for a in range(1 << n):
            pat = mask_to_pattern(a, n)
            w.writerow([pat, doc["probs"][pat], doc["lambda"][pat],
                        doc["central"].get(pat, ""), doc["cumulants"].get(pat, "")])
        _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    tree = load_tree(args.tree)
    counts = load_counts(args.data, tree.n)
    tol = 1e-6 if args.tol is None else float(args.tol)
    rep = check_A2(counts, tree, tol, rng=args.seed)
    doc = {"schema_version": SCHEMA_VERSION, "positive": rep.positive, "in_model": rep.in_model,
           "residual": rep.residual, "messages": rep.messages}
    _emit(_json(doc), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treebic", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt=True):
        p.add_argument("--out", metavar="PATH", help="write the main output here instead of stdout")
        if fmt:
            p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("score", help="learning coefficient and asymptotic evidence for counts on a tree")
    p.add_argument("--tree", required=True, help="tree JSON file")
    p.add_argument("--data", required=True, help="counts CSV with header pattern,count")
    p.add_argument("--tol", help="zero threshold for sample covariances (decimal or a/b)")
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("rlct", help="RLCT of a sum of squared monomials via its Newton polyhedron")
    p.add_argument("exponents", help="CSV file, one exponent vector per row")
    p.add_argument("--prior", help="prior exponents h1,h2,... (default all zero)")
    common(p)
    p.set_defaults(func=cmd_rlct)

    p = sub.add_parser("polytope", help="check the pair-edge polytope and Newton polytope structure")
    p.add_argument("--tree", required=True)
    p.add_argument("--delta", help="comma separated inner nodes with s = 1 (default none)")
    common(p)
    p.set_defaults(func=cmd_polytope)

    p = sub.add_parser("validate", help="Monte Carlo slope check of the coefficient on fiber data")
    p.add_argument("--tree", required=True)
    p.add_argument("--theta", required=True, help="theta JSON generating the data")
    p.add_argument("--grid", default="128:32768:2", help="lo:hi:factor")
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--prior", default="uniform", help="uniform or beta:a,b")
    p.add_argument("--method", choices=("smc", "prior"), default="smc")
    p.add_argument("--drop", type=int, default=2, help="smallest grid points left out of the fit")
    p.add_argument("--slope-tol", type=float, default=0.2)
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("transform", help="moments and tree cumulants of data or of a parameter point")
    p.add_argument("--tree", required=True)
    p.add_argument("--data")
    p.add_argument("--theta")
    common(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("check", help="A2 diagnostic: positivity and model membership")
    p.add_argument("--tree", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--tol", help="sup-norm tolerance for the fitted distance")
    p.add_argument("--seed", type=int, default=0)
    common(p, fmt=False)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UnsupportedRegimeError as exc:
        print(f"error: unsupported regime: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except (InputError, TreeError, DataError, ConstraintError, CapacityError, UnderflowError,
            ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
