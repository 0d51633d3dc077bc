"""Shared construction helpers for the test suite."""

from fractions import Fraction

from treedyn.metric_tree import MetricTree
from treedyn.pl_map import PLTreeMap

F = Fraction


def interval_tree(length=1) -> MetricTree:
    return MetricTree([("a", "b", F(length))])


def triod_tree(la=1, lb=1, ld=1) -> MetricTree:
    return MetricTree([("c", "a", F(la)), ("c", "b", F(lb)), ("c", "d", F(ld))])


def interval_map(tree: MetricTree, pairs) -> PLTreeMap:
    """PL self-map of a single-edge tree from (t, image_t) pairs."""
    e = tree.edge_keys[0]
    table = {e: [(F(t), tree.point(e, F(s))) for t, s in pairs]}
    return PLTreeMap(tree, table)


def tent_map(tree=None) -> PLTreeMap:
    tree = tree or interval_tree()
    return interval_map(tree, [(0, 0), (F(1, 2), 1), (1, 0)])


def halving_map(tree=None) -> PLTreeMap:
    tree = tree or interval_tree()
    return interval_map(tree, [(0, 0), (1, F(1, 2))])


def zigzag3_map(tree=None) -> PLTreeMap:
    tree = tree or interval_tree()
    return interval_map(tree, [(0, 0), (F(1, 3), 1), (F(2, 3), 0), (1, 1)])


def identity_map(tree: MetricTree) -> PLTreeMap:
    return PLTreeMap.identity(tree)


def constant_map(tree: MetricTree, p) -> PLTreeMap:
    table = {}
    for e in tree.edge_keys:
        table[e] = [(F(0), p), (F(1), p)]
    return PLTreeMap(tree, table)


def triod_swap_contract_map(tree=None) -> PLTreeMap:
    """Triod map: contract toward the 'a' endpoint by 1/4, swapping legs b and d.

    No cut-point of the triod is periodic; the a-leg endpoint attracts.
    """
    tree = tree or triod_tree()
    ea, eb, ed = ("c", "a"), ("c", "b"), ("c", "d")
    pt = tree.point
    table = {
        ea: [(F(0), pt(ea, F(1, 4))), (F(1), pt(ea, 1))],
        eb: [(F(0), pt(ea, F(1, 4))), (F(1, 3), pt(ea, 0)), (F(1), pt(ed, F(1, 2)))],
        ed: [(F(0), pt(ea, F(1, 4))), (F(1, 3), pt(ea, 0)), (F(1), pt(eb, F(1, 2)))],
    }
    return PLTreeMap(tree, table)


def triod_two_cycle_map(tree=None) -> PLTreeMap:
    """Triod map with a 2-cycle of leg endpoints b <-> d and AFP at the a end.

    Legs b and d swap on their outer halves; inner halves feed into leg a,
    which contracts toward its endpoint.
    """
    tree = tree or triod_tree()
    ea, eb, ed = ("c", "a"), ("c", "b"), ("c", "d")
    pt = tree.point
    table = {
        ea: [(F(0), pt(ea, F(1, 4))), (F(1), pt(ea, 1))],
        eb: [(F(0), pt(ea, F(1, 4))), (F(1, 2), pt(ea, 0)), (F(1), pt(ed, 1))],
        ed: [(F(0), pt(ea, F(1, 4))), (F(1, 2), pt(ea, 0)), (F(1), pt(eb, 1))],
    }
    return PLTreeMap(tree, table)
