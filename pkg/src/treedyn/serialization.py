"""JSON wire formats: trees, maps, subtrees, points, and report payloads.

Rationals travel as exact strings ("p/q", or "p" for integers); edges are
keyed "u:v" in the orientation given at construction.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any

from .errors import PointNotOnTree
from .metric_tree import EdgeKey, MetricTree, Subtree, TreePoint, frac
from .pl_map import PLTreeMap


def frac_to_str(x: Fraction) -> str:
    x = frac(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def frac_from_str(s) -> Fraction:
    if isinstance(s, (int, Fraction)):
        return frac(s)
    if not isinstance(s, str):
        raise ValueError(f"expected a rational string, got {s!r}")
    return Fraction(s)


def edge_to_str(e: EdgeKey) -> str:
    return f"{e[0]}:{e[1]}"


def edge_from_str(s: str) -> EdgeKey:
    u, _, v = s.partition(":")
    if not u or not v:
        raise ValueError(f"bad edge id {s!r}; expected 'u:v'")
    return (u, v)


# -- trees --------------------------------------------------------------------

def tree_to_json(tree: MetricTree) -> dict:
    return {
        "vertices": list(tree.vertices),
        "edges": [[u, v, frac_to_str(tree.edge_length((u, v)))]
                  for (u, v) in tree.edge_keys],
    }


def tree_from_json(data: dict) -> MetricTree:
    if not isinstance(data, dict) or "edges" not in data:
        raise ValueError("tree spec must be an object with an 'edges' list")
    edges = [(u, v, frac_from_str(w)) for u, v, w in data["edges"]]
    tree = MetricTree(edges)
    declared = data.get("vertices")
    if declared is not None and set(map(str, declared)) != set(tree.vertices):
        raise ValueError("declared vertices do not match the edge list")
    return tree


# -- points and subtrees ---------------------------------------------------------

def point_to_json(p: TreePoint) -> dict:
    return {"edge": edge_to_str(p.edge), "t": frac_to_str(p.t)}


def point_from_json(tree: MetricTree, data: dict) -> TreePoint:
    return tree.point(edge_from_str(data["edge"]), frac_from_str(data["t"]))


def subtree_to_json(A: Subtree) -> dict:
    return {
        edge_to_str(e): [frac_to_str(lo), frac_to_str(hi)] for e, lo, hi in A.spans
    }


def subtree_from_json(tree: MetricTree, data: dict) -> Subtree:
    spans = {}
    for key, (lo, hi) in data.items():
        spans[edge_from_str(key)] = (frac_from_str(lo), frac_from_str(hi))
    return tree.subtree(spans)


# -- maps ----------------------------------------------------------------------------

def map_to_json(f: PLTreeMap) -> dict:
    breakpoints = {}
    for e, rows in f.table.items():
        breakpoints[edge_to_str(e)] = [
            [frac_to_str(t), edge_to_str(p.edge), frac_to_str(p.t)] for t, p in rows
        ]
    return {"tree": tree_to_json(f.tree), "breakpoints": breakpoints}


def map_from_json(data: dict) -> PLTreeMap:
    if not isinstance(data, dict) or "tree" not in data or "breakpoints" not in data:
        raise ValueError("map spec must be an object with 'tree' and 'breakpoints'")
    tree = tree_from_json(data["tree"])
    table = {}
    for key, rows in data["breakpoints"].items():
        e = edge_from_str(key)
        table[e] = [
            (frac_from_str(t), tree.point(edge_from_str(ie), frac_from_str(it)))
            for t, ie, it in rows
        ]
    return PLTreeMap(tree, table)


def load_map(path) -> PLTreeMap:
    with open(path) as fh:
        return map_from_json(json.load(fh))


def load_tree(path) -> MetricTree:
    with open(path) as fh:
        return tree_from_json(json.load(fh))


def load_subtree(path, tree: MetricTree) -> Subtree:
    with open(path) as fh:
        return subtree_from_json(tree, json.load(fh))


def dump_json(path, payload: Any):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
