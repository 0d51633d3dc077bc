import random
from fractions import Fraction

import pytest

from treedyn.analysis import (
    classify_point,
    find_afp,
    immediate_basin,
    is_consistent_with,
    limsup_set,
    omega_limit,
    partition_consistent,
    verify_no_periodic_cutpoints,
)
from treedyn.errors import (
    FixedCutPointFound,
    FixedSegmentPresent,
    NoFixedPointInA,
    NotConsistent,
)
from treedyn.metric_tree import MetricTree
from treedyn.pl_map import PLTreeMap

from helpers import (
    constant_map,
    halving_map,
    identity_map,
    interval_map,
    interval_tree,
    tent_map,
    triod_swap_contract_map,
    triod_tree,
    triod_two_cycle_map,
)

F = Fraction
E = ("a", "b")


def symmetric_interval_tree():
    """[-1, 1] realized as a single edge of length 2; position p maps to (1+p)/2."""
    return MetricTree([("l", "r", F(2))])


def pos_point(tree, p):
    return tree.point(("l", "r"), (1 + F(p)) / 2)


def alternating_shrinking_sequence(n_terms=40):
    # x_k = (-1)^k (k+1)/(2k), k >= 1: swings across 0 with |x_k| decreasing
    return [F((-1) ** k * (k + 1), 2 * k) for k in range(1, n_terms + 1)]


class TestConsistentSequences:
    def test_constant_sequence_not_consistent(self):
        t = interval_tree()
        x = t.point(E, F(0))
        q = t.point(E, F(1, 2))
        assert not is_consistent_with(t, x, [q, q, q])

    def test_nested_halving_consistent(self):
        t = interval_tree()
        x = t.point(E, F(0))
        seq = [t.point(E, F(1, 2 ** k)) for k in range(0, 6)]
        assert is_consistent_with(t, x, seq)

    def test_alternating_swing_consistent(self):
        t = symmetric_interval_tree()
        x = pos_point(t, 0)
        seq = [pos_point(t, p) for p in alternating_shrinking_sequence(24)]
        assert is_consistent_with(t, x, seq)

    def test_partition_of_alternating_swing(self):
        t = symmetric_interval_tree()
        x = pos_point(t, 0)
        raw = alternating_shrinking_sequence(40)
        seq = [pos_point(t, p) for p in raw]
        part = partition_consistent(t, x, seq)
        assert part.class_count() == 2
        for cls in part.classes:
            parities = {i % 2 for i in cls.indices}
            assert len(parities) == 1
            # nestedness is exact: arcs [x, x_m] within [x, x_n] for m > n
            for a, b in zip(cls.indices, cls.indices[1:]):
                outer = t.arc(x, seq[a])
                inner = t.arc(x, seq[b])
                assert t.subtree_contains_subtree(outer, inner)
        limits = sorted(2 * p.limit_estimate.t - 1 for p in part.classes)
        assert abs(limits[0] + F(1, 2)) < F(1, 50)
        assert abs(limits[1] - F(1, 2)) < F(1, 50)

    def test_monotone_single_class(self):
        t = interval_tree()
        x = t.point(E, F(0))
        seq = [t.point(E, F(1, 2 ** k)) for k in range(1, 8)]
        part = partition_consistent(t, x, seq)
        assert part.class_count() == 1

    def test_triod_rotation_three_classes(self):
        t = triod_tree()
        center = t.vertex_point("c")
        legs = [("c", "a"), ("c", "b"), ("c", "d")]
        seq = [t.point(legs[k % 3], F(1, 2 ** (k // 3 + 1))) for k in range(12)]
        assert is_consistent_with(t, center, seq)
        part = partition_consistent(t, center, seq)
        assert part.class_count() == 3

    def test_not_consistent_raises(self):
        t = interval_tree()
        x = t.point(E, F(0))
        q = t.point(E, F(1, 2))
        with pytest.raises(NotConsistent):
            partition_consistent(t, x, [q, q])


class TestLimsupSet:
    def test_constant_map(self):
        t = triod_tree()
        p = t.point(("c", "d"), F(1, 3))
        f = constant_map(t, p)
        report = limsup_set(f, t.full_subtree(), m_max=20, window=5)
        assert report.subtree == t.singleton(p)
        assert report.residual == 0

    def test_tent_invariant_interval(self):
        f = tent_map()
        t = f.tree
        report = limsup_set(f, t.full_subtree(), m_max=20, window=5)
        assert report.subtree == t.full_subtree()
        assert report.residual == 0

    def test_halving_collapses(self):
        f = halving_map()
        t = f.tree
        report = limsup_set(f, t.full_subtree(), m_max=60, window=10)
        assert t.hausdorff(report.subtree, t.singleton(t.point(E, 0))) <= F(1, 2 ** 30)
        img = f.image_subtree(report.subtree)
        assert t.hausdorff(img, report.subtree) <= report.residual + F(1, 2 ** 30)

    def test_requires_fixed_point(self):
        f = tent_map()
        t = f.tree
        A = t.subtree({E: (F(1, 8), F(1, 4))})  # no fixed point inside
        with pytest.raises(NoFixedPointInA):
            limsup_set(f, A)

    def test_approximate_strong_invariance(self):
        f = halving_map()
        t = f.tree
        report = limsup_set(f, t.subtree({E: (F(0), F(1, 2))}), m_max=60, window=10)
        img = f.image_subtree(report.subtree)
        assert t.hausdorff(img, report.subtree) <= F(1, 10 ** 4)


class TestNoPeriodicCutpoints:
    def test_tent_has_fixed_cutpoint(self):
        ok, witness = verify_no_periodic_cutpoints(tent_map(), 2)
        assert not ok
        assert witness.period == 1
        assert witness.points[0].t == F(2, 3)

    def test_halving_clean(self):
        ok, witness = verify_no_periodic_cutpoints(halving_map(), 5)
        assert ok and witness is None

    def test_identity_propagates(self):
        with pytest.raises(FixedSegmentPresent):
            verify_no_periodic_cutpoints(identity_map(interval_tree()), 2)

    def test_two_cycle_endpoints_allowed(self):
        ok, _ = verify_no_periodic_cutpoints(triod_two_cycle_map(), 6)
        assert ok


def contract_toward_d_map():
    """Triod map attracted to the d endpoint, with legs a and b swapped."""
    t = triod_tree()
    ea, eb, ed = ("c", "a"), ("c", "b"), ("c", "d")
    pt = t.point
    table = {
        ed: [(F(0), pt(ed, F(1, 4))), (F(1), pt(ed, 1))],
        ea: [(F(0), pt(ed, F(1, 4))), (F(1, 3), pt(ed, 0)), (F(1), pt(eb, F(1, 2)))],
        eb: [(F(0), pt(ed, F(1, 4))), (F(1, 3), pt(ed, 0)), (F(1), pt(ea, F(1, 2)))],
    }
    return PLTreeMap(t, table)


class TestFindAfp:
    def test_halving(self):
        f = halving_map()
        t = f.tree
        report = find_afp(f)
        assert report.afp == t.point(E, 0)
        w = report.certificate
        seg = t.arc(report.afp, w)
        img = f.image_subtree(seg)
        assert t.subtree_contains_subtree(seg, img)
        assert not t.subtree_contains(img, w)

    def test_mirror(self):
        f = interval_map(interval_tree(), [(0, F(1, 2)), (1, 1)])  # (1+x)/2
        assert find_afp(f).afp == f.tree.point(E, 1)

    def test_triod_swap_contract(self):
        f = triod_swap_contract_map()
        report = find_afp(f)
        assert report.afp == f.tree.vertex_point("a")

    def test_descent_reaches_far_endpoint(self):
        f = contract_toward_d_map()
        t = f.tree
        report = find_afp(f, initial_cutpoint=t.point(("c", "a"), F(1, 2)))
        assert report.afp == t.vertex_point("d")
        assert not report.fallback_used

    def test_unique_from_every_initial_cutpoint(self):
        for f in (triod_swap_contract_map(), contract_toward_d_map(), halving_map()):
            t = f.tree
            starts = [t.vertex_point(v) for v in t.branch_vertices()]
            starts += [t.point(e, F(1, 2)) for e in t.edge_keys]
            afps = {find_afp(f, initial_cutpoint=y).afp for y in starts}
            assert len(afps) == 1

    def test_fixed_cutpoint_rejected(self):
        with pytest.raises(FixedCutPointFound):
            find_afp(tent_map())

    def test_certificate_survives_iteration(self):
        for f in (halving_map(), triod_swap_contract_map()):
            t = f.tree
            base = find_afp(f)
            for n in range(2, 6):
                fn = f.iterate(n)
                assert find_afp(fn).afp == base.afp
                seg = t.arc(base.afp, base.certificate)
                img = fn.image_subtree(seg)
                assert t.subtree_contains_subtree(seg, img)
                assert not t.subtree_contains(img, base.certificate)

    def test_cutpoints_move_towards_afp(self):
        f = triod_swap_contract_map()
        t = f.tree
        s = find_afp(f).afp
        rng = random.Random(37)
        for _ in range(200):
            e = rng.choice(t.edge_keys)
            c = t.point(e, F(rng.randrange(1, 48), 48))
            if not t.is_cutpoint(c):
                continue
            assert t.in_open_component(c, s, f.evaluate(c))


class TestImmediateBasin:
    def test_halving_whole_interval(self):
        # f(x) = x/2: the preimage of the half-open edge is everything
        f = halving_map()
        t = f.tree
        report = immediate_basin(f, t.point(E, 0), depth=10)
        assert report.closure == t.full_subtree()
        assert report.boundary == ()
        assert report.stabilized

    def test_repelling_far_end(self):
        # x/2 below 1/2, rising to a repelling fixed point at 1
        f = interval_map(
            interval_tree(), [(0, 0), (F(1, 2), F(1, 4)), (1, 1)]
        )
        t = f.tree
        ok, _ = verify_no_periodic_cutpoints(f, 3)
        assert ok
        report = immediate_basin(f, t.point(E, 0), depth=10)
        assert report.closure == t.full_subtree()
        assert report.boundary == (t.point(E, 1),)
        assert report.stabilized
        # the boundary is invariant
        for q in report.boundary:
            assert f.evaluate(q) in report.boundary

    def test_constant_map(self):
        t = interval_tree()
        s = t.point(E, 0)
        f = constant_map(t, s)
        report = immediate_basin(f, s, depth=5)
        assert report.closure == t.full_subtree()
        assert report.boundary == ()

    def test_two_cycle_boundary_growth(self):
        f = triod_two_cycle_map()
        t = f.tree
        s = t.vertex_point("a")
        assert find_afp(f).afp == s
        report = immediate_basin(f, s, depth=5)
        expect_t = 1 - F(1, 2 ** 5)
        assert set(report.boundary) == {
            t.point(("c", "b"), expect_t),
            t.point(("c", "d"), expect_t),
        }
        assert not report.stabilized
        # image of the closed approximation stays inside it
        img = f.image_subtree(report.closure)
        assert t.subtree_contains_subtree(report.closure, img)

    def test_deeper_approximations_grow(self):
        f = triod_two_cycle_map()
        t = f.tree
        s = t.vertex_point("a")
        prev = immediate_basin(f, s, depth=2)
        for depth in (3, 4, 5):
            cur = immediate_basin(f, s, depth=depth)
            assert t.subtree_contains_subtree(cur.closure, prev.closure)
            prev = cur


class TestClassifyPoint:
    def test_afp_itself(self):
        f = halving_map()
        t = f.tree
        s = t.point(E, 0)
        out = classify_point(f, s, s)
        assert out.kind == "converges_to_afp"

    def test_halving_from_one(self):
        f = halving_map()
        t = f.tree
        out = classify_point(f, t.point(E, 1), t.point(E, 0))
        assert out.kind == "converges_to_afp"

    def test_exact_eventually_periodic_endpoints(self):
        f = triod_two_cycle_map()
        t = f.tree
        s = t.vertex_point("a")
        out = classify_point(f, t.vertex_point("b"), s)
        assert out.kind == "exact_eventually_periodic"
        assert out.period == 2

    def test_generic_point_converges(self):
        f = triod_two_cycle_map()
        t = f.tree
        s = t.vertex_point("a")
        out = classify_point(f, t.point(("c", "b"), F(9, 10)), s)
        assert out.kind == "converges_to_afp"

    def test_hits_periodic_cutpoint(self):
        # a map with a fixed cut-point: preimages of it are classified as hits
        f = tent_map()
        t = f.tree
        out = classify_point(f, t.point(E, F(1, 3)), t.point(E, 0))
        # 1/3 -> 2/3 -> 2/3 ... exact hit on the fixed cut-point
        assert out.kind == "hits_periodic_cutpoint"

    def test_subcontinuum_inside_basin_collapses_to_afp(self):
        from treedyn.hyperspace import classify_subcontinuum

        f = halving_map()
        t = f.tree
        A = t.subtree({E: (F(1, 4), F(1, 2))})
        verdict = classify_subcontinuum(f, A)
        assert verdict.degenerate
        s = t.point(E, 0)
        tail = verdict.cycle[-1] if verdict.cycle else None
        if tail is not None:
            assert t.hausdorff(tail, t.singleton(s)) < F(1, 10 ** 5)


class TestOmegaLimit:
    def test_constant(self):
        t = triod_tree()
        p = t.point(("c", "b"), F(1, 3))
        f = constant_map(t, p)
        assert omega_limit(f, t.vertex_point("a"), budget=100) == [p]

    def test_tent_two_cycle(self):
        f = tent_map()
        t = f.tree
        out = omega_limit(f, t.point(E, F(2, 5)), budget=100)
        assert set(out) == {t.point(E, F(2, 5)), t.point(E, F(4, 5))}

    def test_halving_clusters_at_zero(self):
        f = halving_map()
        t = f.tree
        out = omega_limit(f, t.point(E, 1), budget=200, tol=F(1, 1000))
        assert len(out) == 1
        assert t.distance(out[0], t.point(E, 0)) < F(1, 1000)
