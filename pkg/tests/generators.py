"""Seeded random trees, maps, and subcontinua for the acceptance suites."""

import random
from fractions import Fraction

from treedyn.metric_tree import MetricTree, TreePoint
from treedyn.pl_map import PLTreeMap

F = Fraction


def suite_trees() -> list[MetricTree]:
    return [
        MetricTree([("a", "b", F(1))]),
        MetricTree([("c", "a", F(1)), ("c", "b", F(1)), ("c", "d", F(1))]),
    ]


def random_point(tree: MetricTree, rng: random.Random, denom: int = 12) -> TreePoint:
    edge = rng.choice(tree.edge_keys)
    return tree.point(edge, F(rng.randrange(denom + 1), denom))


def random_pl_map(tree: MetricTree, rng: random.Random, max_interior: int = 3,
                  denom: int = 12) -> PLTreeMap:
    """Arbitrary continuous PL self-map: random breakpoints, random images.

    Interior breakpoints per edge stay at or below max_interior, so each
    edge table has at most max_interior + 2 rows.
    """
    vertex_image = {v: random_point(tree, rng, denom) for v in tree.vertices}
    table = {}
    for e in tree.edge_keys:
        k = rng.randrange(max_interior + 1)
        params = sorted(rng.sample(range(1, denom), k)) if k else []
        rows = [(F(0), vertex_image[e[0]])]
        rows += [(F(p, denom), random_point(tree, rng, denom)) for p in params]
        rows.append((F(1), vertex_image[e[1]]))
        table[e] = rows
    return PLTreeMap(tree, table)


def random_subcontinuum(tree: MetricTree, rng: random.Random, denom: int = 16):
    x = random_point(tree, rng, denom)
    y = random_point(tree, rng, denom)
    return tree.arc(x, y)


def contraction_factor(rng: random.Random) -> Fraction:
    return rng.choice([F(1, 4), F(3, 8), F(1, 2), F(5, 8)])


def random_contracting_map(tree: MetricTree, rng: random.Random,
                           swap_legs: bool = True) -> PLTreeMap:
    """Random map pulled toward one endpoint, optionally pre-composed with a
    swap of two other legs.  Orbits collapse to the target, so cut-points
    are never periodic (the caller still verifies exactly)."""
    leaves = [tree.as_vertex(p) for p in tree.endpoints()]
    target = tree.vertex_point(rng.choice(leaves))
    swap = {}
    if swap_legs and len(leaves) >= 3:
        others = [v for v in leaves if tree.vertex_point(v) != target]
        a, b = rng.sample(others, 2)
        ea = min(tree._adj[a])
        eb = min(tree._adj[b])
        if tree.edge_length(ea) == tree.edge_length(eb) and rng.random() < 0.7:
            swap = {ea: eb, eb: ea}

    def pre_image(p: TreePoint) -> TreePoint:
        if p.edge in swap:
            return tree.point(swap[p.edge], p.t)
        return p

    def contract(p: TreePoint) -> TreePoint:
        q = pre_image(p)
        lam = contraction_factor(rng)
        return tree.point_at_distance(target, q, lam * tree.distance(target, q))

    vertex_image = {v: contract(tree.vertex_point(v)) for v in tree.vertices}
    table = {}
    for e in tree.edge_keys:
        k = rng.randrange(3)
        denom = 12
        params = sorted(rng.sample(range(1, denom), k)) if k else []
        rows = [(F(0), vertex_image[e[0]])]
        rows += [(F(p, denom), contract(tree.point(e, F(p, denom)))) for p in params]
        rows.append((F(1), vertex_image[e[1]]))
        table[e] = rows
    return PLTreeMap(tree, table)
