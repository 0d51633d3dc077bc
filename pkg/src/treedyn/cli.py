"""Command-line orchestrator: load specs, run analyses, write reports.

Commands: analyze, classify, entropy, envelope, verify-invariants.
Exit codes: 0 success, 2 invalid input, 3 analysis incomplete (undecided
results dominate or an invariant check failed).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import random
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .analysis import (
    classify_point,
    find_afp,
    immediate_basin,
    verify_no_periodic_cutpoints,
)
from .entropy import (
    connected_envelope_sep,
    entropy_estimate,
    envelope_entropy_bounds,
    envelope_sep_family,
)
from .errors import (
    DescentStalled,
    EpsilonTooLarge,
    FixedCutPointFound,
    FixedSegmentPresent,
    TreeDynError,
)
from .hyperspace import classify_subcontinuum, iterate_continuum
from .metric_tree import frac
from .pl_map import maps_agree
from .serialization import (
    dump_json,
    frac_from_str,
    frac_to_str,
    load_map,
    load_subtree,
    load_tree,
    point_to_json,
    subtree_to_json,
)


def _load_checked_map(args):
    """Load the map spec; a standalone --tree spec must match its tree."""
    f = load_map(args.map)
    if getattr(args, "tree", None):
        declared = load_tree(args.tree)
        same = declared.edge_keys == f.tree.edge_keys and all(
            declared.edge_length(e) == f.tree.edge_length(e)
            for e in declared.edge_keys
        )
        if not same:
            raise ValueError("--tree spec does not match the map's tree")
    return f


def _config_payload(args, keys) -> dict:
    out = {"version": __version__}
    for k in keys:
        v = getattr(args, k.replace("-", "_"), None)
        if isinstance(v, Fraction):
            v = frac_to_str(v)
        out[k] = v
    return out


def _eps_list(raw: str) -> list[Fraction]:
    return [frac_from_str(tok) for tok in raw.split(",") if tok]


def cmd_analyze(args) -> int:
    f = _load_checked_map(args)
    tree = f.tree
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = {
        "config": _config_payload(args, ["map", "max_period", "budget", "tol", "depth"]),
        "warnings": [],
    }
    try:
        fixed = f.fixed_points()
        report["fixed_points"] = [point_to_json(p) for p in fixed]
        records = f.periodic_points(args.max_period)
        report["periodic_orbits"] = [
            {
                "period": r.period,
                "points": [point_to_json(p) for p in r.points],
                "kinds": list(r.kinds),
            }
            for r in records
        ]
        ok, witness = verify_no_periodic_cutpoints(f, args.max_period)
        report["no_periodic_cutpoints"] = {
            "checked_up_to": args.max_period,
            "holds": ok,
            "witness": None if witness is None else {
                "period": witness.period,
                "points": [point_to_json(p) for p in witness.points],
            },
        }
        if ok:
            try:
                afp = find_afp(f)
                basin = immediate_basin(f, afp.afp, depth=args.depth)
                report["afp"] = {
                    "point": point_to_json(afp.afp),
                    "certificate": point_to_json(afp.certificate),
                    "descent_trace": [
                        {
                            "cutpoint": point_to_json(s.cutpoint),
                            "endpoint": point_to_json(s.endpoint),
                            "endpoint_count": s.endpoint_count,
                        }
                        for s in afp.trace
                    ],
                    "fallback_used": afp.fallback_used,
                }
                report["immediate_basin"] = {
                    "closure": subtree_to_json(basin.closure),
                    "boundary": [point_to_json(p) for p in basin.boundary],
                    "depth_used": basin.depth_used,
                    "stabilized": basin.stabilized,
                }
            except (FixedCutPointFound, DescentStalled) as err:
                report["afp"] = {"applicable": False, "reason": str(err)}
        else:
            report["afp"] = {
                "applicable": False,
                "reason": "a periodic cut-point exists",
            }
    except FixedSegmentPresent as err:
        report["warnings"].append(
            f"pointwise-fixed segments present ({len(err.segments)}); "
            "periodic structure not enumerated"
        )
        report["fixed_segments"] = [subtree_to_json(s) for s in err.segments]
        report["fixed_points"] = [point_to_json(p) for p in err.isolated]
    dump_json(out / "analysis.json", report)
    return 0


def cmd_classify(args) -> int:
    f = _load_checked_map(args)
    A = load_subtree(args.continuum, f.tree)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    verdict = classify_subcontinuum(
        f, A, budget=args.budget, tol=args.tol, max_period=args.max_period
    )
    orbit = iterate_continuum(f, A, min(verdict.iterations, args.budget))
    with open(out / "orbit.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "diameter", "step_distance"])
        for n, d in enumerate(orbit.diameters):
            step = orbit.step_distances[n] if n < len(orbit.step_distances) else ""
            w.writerow([n, frac_to_str(d), frac_to_str(step) if step != "" else ""])
    payload = {
        "config": _config_payload(args, ["map", "continuum", "budget", "tol", "max_period"]),
        "tag": verdict.tag,
        "period": verdict.period,
        "exact": verdict.exact,
        "iterations": verdict.iterations,
        "residuals": {k: frac_to_str(v) if isinstance(v, Fraction) else v
                      for k, v in verdict.residuals.items() if v is not None},
        "cycle": [subtree_to_json(s) for s in verdict.cycle],
        "witness_diameters": [frac_to_str(d) for d in verdict.witness_diameters],
    }
    dump_json(out / "verdict.json", payload)
    return 0 if verdict.decided else 3


def cmd_entropy(args) -> int:
    f = _load_checked_map(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    est = entropy_estimate(
        f, args.n_max, _eps_list(args.eps_list),
        grid_resolution=args.grid, grid_divisor=args.grid_divisor,
        workers=args.workers,
    )
    with open(out / "entropy.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "epsilon", "sep_lb", "span_ub", "rate_lb", "rate_ub"])
        for row in est.csv_rows():
            w.writerow(row)
    for eps in est.eps_list:
        tag = frac_to_str(eps).replace("/", "_")
        with open(out / f"rates_eps_{tag}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "rate_lb", "rate_ub"])
            for r in est.rows:
                if r.eps == eps:
                    w.writerow([r.n, f"{r.rate_lb:.6f}", f"{r.rate_ub:.6f}"])
    payload = {
        "config": _config_payload(
            args, ["map", "n_max", "eps_list", "grid", "grid_divisor", "seed", "workers"]
        ),
        "bracket": {"lower": est.bracket[0], "upper": est.bracket[1]},
        "span_rate_increments": {
            frac_to_str(e): v for e, v in est.span_increments.items()
        },
        "monotonicity_violations": est.check_monotonicity(),
    }
    dump_json(out / "entropy.json", payload)
    return 0


def cmd_envelope(args) -> int:
    f = _load_checked_map(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    eps_list = _eps_list(args.eps_list)
    bounds = envelope_entropy_bounds(
        f, args.n_max, eps_list, grid_resolution=args.grid,
    )
    rng = random.Random(args.seed)
    family_checks = []
    for eps in eps_list:
        try:
            fam = envelope_sep_family(f, args.n_max, eps, grid_resolution=args.grid)
        except EpsilonTooLarge as err:
            family_checks.append({"eps": frac_to_str(eps), "skipped": str(err)})
            continue
        tuples = fam.sample_tuples(args.samples, rng)
        pairs = [(a, b) for i, a in enumerate(tuples) for b in tuples[i + 1:]]
        verified = sum(
            1 for a, b in pairs if fam.verify_pair_separated(a, b)
        )
        family_checks.append({
            "eps": frac_to_str(eps),
            "grid_cells": fam.K,
            "base_count": len(fam.base_points),
            "claimed_count_digits": len(str(fam.claimed_count)),
            "pairs_checked": len(pairs),
            "pairs_separated": verified,
        })
    payload = {
        "config": _config_payload(
            args, ["map", "n_max", "eps_list", "grid", "samples", "seed"]
        ),
        "rows": [
            {
                "n": r.n, "eps": frac_to_str(r.eps), "n1": r.n1, "n2": r.n2,
                "sep_lb": r.sep_lb, "lower_log": r.lower_log,
                "envelope_span": r.envelope_span, "upper_log": r.upper_log,
            }
            for r in bounds.rows
        ],
        "upper_rate_increments": {
            frac_to_str(e): v for e, v in bounds.upper_rate_increments.items()
        },
        "family_checks": family_checks,
    }
    dump_json(out / "envelope.json", payload)
    return 0


def cmd_verify_invariants(args) -> int:
    f = _load_checked_map(args)
    tree = f.tree
    rng = random.Random(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    edges = tree.edge_keys

    def rand_point(denom=48):
        return tree.point(rng.choice(edges), Fraction(rng.randrange(denom + 1), denom))

    def rand_arc():
        return tree.arc(rand_point(), rand_point())

    checks = {}
    ok = True

    fails = 0
    for _ in range(args.samples):
        A, B, C = rand_arc(), rand_arc(), rand_arc()
        dab = tree.hausdorff(A, B)
        if dab != tree.hausdorff(B, A):
            fails += 1
        elif (dab == 0) != (A == B):
            fails += 1
        elif tree.hausdorff(A, C) > dab + tree.hausdorff(B, C):
            fails += 1
    checks["hausdorff_metric_axioms"] = {"samples": args.samples, "failures": fails}
    ok = ok and fails == 0

    fails = 0
    f2 = f.compose(f)
    for _ in range(args.samples):
        x = rand_point()
        if f2.evaluate(x) != f.evaluate(f.evaluate(x)):
            fails += 1
    checks["composition_pointwise"] = {"samples": args.samples, "failures": fails}
    ok = ok and fails == 0

    fails = 0
    for _ in range(args.samples):
        x, y = rand_point(), rand_point()
        img = f.image_subtree(tree.arc(x, y))
        if not tree.subtree_contains_subtree(
            img, tree.arc(f.evaluate(x), f.evaluate(y))
        ):
            fails += 1
    checks["image_contains_endpoint_arc"] = {"samples": args.samples, "failures": fails}
    ok = ok and fails == 0

    fails = 0
    lip = f.lipschitz_constant()
    for _ in range(args.samples):
        A, B = rand_arc(), rand_arc()
        if tree.hausdorff(f.image_subtree(A), f.image_subtree(B)) > lip * tree.hausdorff(A, B):
            fails += 1
    checks["lipschitz_transfer"] = {"samples": args.samples, "failures": fails}
    ok = ok and fails == 0

    fails = 0
    for _ in range(args.samples):
        pts = [rand_point() for _ in range(3)]
        m1 = tree.subtree_intersection(tree.arc(pts[0], pts[1]), tree.arc(pts[1], pts[2]))
        m = m1 and tree.subtree_intersection(m1, tree.arc(pts[0], pts[2]))
        if m is None or not m.is_degenerate():
            fails += 1
    checks["arc_median_property"] = {"samples": args.samples, "failures": fails}
    ok = ok and fails == 0

    payload = {
        "config": _config_payload(args, ["map", "samples", "seed"]),
        "checks": checks,
        "all_passed": ok,
    }
    dump_json(out / "invariants.json", payload)
    return 0 if ok else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treedyn",
        description="Exact dynamics of piecewise-linear maps on metric trees",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--map", required=True, help="map spec JSON path")
        p.add_argument("--tree", default=None, help="optional tree spec to cross-check")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("analyze", help="fixed/periodic points, AFP, basin")
    common(p)
    p.add_argument("--max-period", type=int, default=12)
    p.add_argument("--budget", type=int, default=10 ** 4)
    p.add_argument("--tol", type=frac_from_str, default=Fraction(1, 10 ** 6))
    p.add_argument("--depth", type=int, default=20)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("classify", help="classify a subcontinuum orbit")
    common(p)
    p.add_argument("--continuum", required=True, help="subtree literal JSON path")
    p.add_argument("--max-period", type=int, default=24)
    p.add_argument("--budget", type=int, default=10 ** 4)
    p.add_argument("--tol", type=frac_from_str, default=Fraction(1, 10 ** 6))
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("entropy", help="separated/spanning tables and bracket")
    common(p)
    p.add_argument("--n-max", type=int, default=16)
    p.add_argument("--eps-list", default="1/16,1/64,1/256")
    p.add_argument("--grid", type=frac_from_str, default=None,
                   help="fixed grid resolution (default: eps/divisor per eps)")
    p.add_argument("--grid-divisor", type=int, default=8)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("envelope", help="set-valued map family bounds")
    common(p)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--eps-list", default="1/16")
    p.add_argument("--grid", type=frac_from_str, default=None)
    p.add_argument("--samples", type=int, default=10)
    p.set_defaults(func=cmd_envelope)

    p = sub.add_parser("verify-invariants", help="randomized exact property checks")
    common(p)
    p.add_argument("--samples", type=int, default=200)
    p.set_defaults(func=cmd_verify_invariants)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (TreeDynError, ValueError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
