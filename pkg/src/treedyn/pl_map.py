"""Exact piecewise-linear continuous self-maps of a metric tree.

A map is stored as a per-edge breakpoint table: sorted rational parameters
(always including 0 and 1) with image points.  Between consecutive
breakpoints the map traverses the arc between the two images at constant
speed, so evaluation, subtree images, composition, and fixed-point solving
are all exact rational computations.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    BreakpointBudgetExceeded,
    FixedSegmentPresent,
    NotInvariant,
    PointNotOnTree,
)
from .metric_tree import (
    EdgeKey,
    MetricTree,
    ONE,
    QuotientProjection,
    Subtree,
    TreePoint,
    ZERO,
    frac,
)

DEFAULT_BREAKPOINT_BUDGET = 10**6


@dataclass(frozen=True)
class PeriodicOrbitRecord:
    """One periodic orbit: minimal period, its points, and point kinds."""

    period: int
    points: tuple[TreePoint, ...]
    kinds: tuple[str, ...]  # "endpoint" | "cutpoint" per point

    def point_set(self) -> frozenset:
        return frozenset(self.points)


class PLTreeMap:
    """Continuous piecewise-linear self-map of a metric tree."""

    def __init__(self, tree: MetricTree, table: dict[EdgeKey, list[tuple[Fraction, TreePoint]]]):
        self.tree = tree
        norm: dict[EdgeKey, tuple[tuple[Fraction, TreePoint], ...]] = {}
        for e in tree.edge_keys:
            if e not in table:
                raise PointNotOnTree(f"no breakpoint row for edge {e}")
            rows = sorted((frac(t), p) for t, p in table[e])
            if not rows or rows[0][0] != ZERO or rows[-1][0] != ONE:
                raise PointNotOnTree(f"edge {e} table must span [0,1]")
            params = [t for t, _ in rows]
            if len(set(params)) != len(params):
                raise PointNotOnTree(f"duplicate breakpoints on {e}: {params}")
            for _, p in rows:
                if p.edge not in tree.edge_keys:
                    raise PointNotOnTree(f"image {p} not on the domain tree")
            norm[e] = tuple(rows)
        self.table = norm
        self._check_vertex_continuity()

    def _check_vertex_continuity(self):
        seen: dict[str, TreePoint] = {}
        for e, rows in self.table.items():
            for vertex, img in ((e[0], rows[0][1]), (e[1], rows[-1][1])):
                if vertex in seen:
                    if seen[vertex] != img:
                        raise PointNotOnTree(
                            f"discontinuous at vertex {vertex}: {seen[vertex]} vs {img}"
                        )
                else:
                    seen[vertex] = img

    # -- basics ---------------------------------------------------------------

    @classmethod
    def identity(cls, tree: MetricTree) -> "PLTreeMap":
        table = {
            e: [(ZERO, tree.vertex_point(e[0])), (ONE, tree.vertex_point(e[1]))]
            for e in tree.edge_keys
        }
        return cls(tree, table)

    def breakpoint_count(self) -> int:
        return sum(len(rows) for rows in self.table.values())

    def breakpoints_on(self, e: EdgeKey) -> tuple[Fraction, ...]:
        return tuple(t for t, _ in self.table[e])

    def evaluate(self, x: TreePoint) -> TreePoint:
        rows = self.table.get(x.edge)
        if rows is None:
            raise PointNotOnTree(f"{x} not on the domain tree")
        params = [t for t, _ in rows]
        i = bisect_right(params, x.t) - 1
        if i == len(rows) - 1:
            return rows[-1][1]
        t0, p0 = rows[i]
        t1, p1 = rows[i + 1]
        if x.t == t0:
            return p0
        s = (x.t - t0) / (t1 - t0)
        d = self.tree.distance(p0, p1)
        return self.tree.point_at_distance(p0, p1, s * d)

    def orbit(self, x: TreePoint, n: int) -> list[TreePoint]:
        out = [x]
        for _ in range(n):
            out.append(self.evaluate(out[-1]))
        return out

    def piece_speed(self, e: EdgeKey, i: int) -> Fraction:
        rows = self.table[e]
        t0, p0 = rows[i]
        t1, p1 = rows[i + 1]
        return self.tree.distance(p0, p1) / ((t1 - t0) * self.tree.edge_length(e))

    def lipschitz_constant(self) -> Fraction:
        best = ZERO
        for e, rows in self.table.items():
            for i in range(len(rows) - 1):
                s = self.piece_speed(e, i)
                if s > best:
                    best = s
        return best

    # -- images -----------------------------------------------------------------

    def image_subtree(self, A: Subtree) -> Subtree:
        """Exact image f(A), a subtree."""
        tree = self.tree
        parts = []
        for e, lo, hi in A.spans:
            rows = self.table[e]
            if lo == hi:
                parts.append(tree.singleton(self.evaluate(tree.point(e, lo))))
                continue
            for i in range(len(rows) - 1):
                t0, _ = rows[i]
                t1, _ = rows[i + 1]
                a, b = max(lo, t0), min(hi, t1)
                if a >= b:
                    continue
                pa = self.evaluate(tree.point(e, a))
                pb = self.evaluate(tree.point(e, b))
                parts.append(tree.arc(pa, pb))
        return tree.subtree_union(parts)

    # -- composition ----------------------------------------------------------------

    def compose(self, inner: "PLTreeMap", budget: int = DEFAULT_BREAKPOINT_BUDGET) -> "PLTreeMap":
        """The composite self(inner(x)), exact.

        Breakpoints are inner's plus inner-pullbacks of every point where the
        image arc of an inner piece crosses a breakpoint of self (vertices
        included, since every edge table carries its endpoints).
        """
        tree = self.tree
        if inner.tree is not tree:
            raise PointNotOnTree("composition requires maps on the same tree")
        table: dict[EdgeKey, list[tuple[Fraction, TreePoint]]] = {}
        total = 0
        for e in tree.edge_keys:
            rows = inner.table[e]
            params: dict[Fraction, TreePoint] = {}
            for i in range(len(rows) - 1):
                t0, p0 = rows[i]
                t1, p1 = rows[i + 1]
                params.setdefault(t0, self.evaluate(p0))
                params.setdefault(t1, self.evaluate(p1))
                arc_len = tree.distance(p0, p1)
                if arc_len == 0:
                    continue
                for ell, pt in self._crossings(p0, p1):
                    if ZERO < ell < arc_len:
                        t = t0 + (ell / arc_len) * (t1 - t0)
                        params.setdefault(t, self.evaluate(pt))
            table[e] = sorted(params.items())
            total += len(table[e])
            if total > budget:
                raise BreakpointBudgetExceeded(total, budget)
        out = PLTreeMap(tree, table)
        return out.pruned()

    def _crossings(self, p0: TreePoint, p1: TreePoint):
        """(arclength, point) pairs where the arc [p0,p1] meets breakpoints of self."""
        tree = self.tree
        acc = ZERO
        out = []
        segs = tree.path_segments(p0, p1)
        for k, seg in enumerate(segs):
            length = tree.edge_length(seg.edge)
            if k > 0:
                out.append((acc, tree.point(seg.edge, seg.a)))
            lo, hi = min(seg.a, seg.b), max(seg.a, seg.b)
            for t in self.breakpoints_on(seg.edge):
                if lo < t < hi:
                    out.append((acc + abs(t - seg.a) * length, tree.point(seg.edge, t)))
            acc += seg.length_on(tree)
        return out

    def pruned(self) -> "PLTreeMap":
        """Drop breakpoints that sit affinely on the arc of their neighbours."""
        tree = self.tree
        table = {}
        for e, rows in self.table.items():
            rows = list(rows)
            changed = True
            while changed and len(rows) > 2:
                changed = False
                keep = [rows[0]]
                i = 1
                while i < len(rows) - 1:
                    t0, p0 = keep[-1]
                    t1, p1 = rows[i]
                    t2, p2 = rows[i + 1]
                    d = tree.distance(p0, p2)
                    s = (t1 - t0) / (t2 - t0)
                    if tree.point_at_distance(p0, p2, s * d) == p1:
                        changed = True
                    else:
                        keep.append(rows[i])
                    i += 1
                keep.append(rows[-1])
                rows = keep
            table[e] = rows
        return PLTreeMap(tree, table)

    def iterate(self, n: int, budget: int = DEFAULT_BREAKPOINT_BUDGET) -> "PLTreeMap":
        if n < 0:
            raise ValueError("iteration count must be nonnegative")
        acc = PLTreeMap.identity(self.tree)
        for _ in range(n):
            acc = self.compose(acc, budget=budget)
        return acc

    def prefix_iterates(self, n: int, budget: int = DEFAULT_BREAKPOINT_BUDGET) -> list["PLTreeMap"]:
        """[id, f, f^2, ..., f^n] computed incrementally."""
        out = [PLTreeMap.identity(self.tree)]
        for _ in range(n):
            out.append(self.compose(out[-1], budget=budget))
        return out

    # -- fixed and periodic points -----------------------------------------------------

    def fixed_points(self) -> list[TreePoint]:
        """All isolated fixed points, exact and complete.

        Raises FixedSegmentPresent when a whole segment is fixed pointwise;
        the exception carries the segments and the isolated points found.
        """
        tree = self.tree
        found: set[TreePoint] = set()
        segments: list[Subtree] = []
        for v in tree.vertices:
            p = tree.vertex_point(v)
            if self.evaluate(p) == p:
                found.add(p)
        for e, rows in self.table.items():
            edge_len = tree.edge_length(e)
            for i in range(len(rows) - 1):
                t0, p0 = rows[i]
                t1, p1 = rows[i + 1]
                arc_len = tree.distance(p0, p1)
                if arc_len == 0:
                    tau = tree.param_on_edge(p0, e)
                    if tau is not None and t0 <= tau <= t1:
                        found.add(tree.point(e, tau))
                    continue
                acc = ZERO
                for seg in tree.path_segments(p0, p1):
                    seg_len = seg.length_on(tree)
                    if seg.edge == e and seg_len > 0:
                        # params of the piece mapping into this stretch
                        ta = t0 + (acc / arc_len) * (t1 - t0)
                        tb = t0 + ((acc + seg_len) / arc_len) * (t1 - t0)
                        # image parameter as an affine function of t
                        beta = (seg.b - seg.a) / (tb - ta)
                        alpha = seg.a - beta * ta
                        if beta == 1:
                            if alpha == 0:
                                segments.append(tree.subtree({e: (ta, tb)}))
                        else:
                            tstar = alpha / (1 - beta)
                            if ta <= tstar <= tb:
                                found.add(tree.point(e, tstar))
                    acc += seg_len
        if segments:
            raise FixedSegmentPresent(segments, sorted(found, key=repr))
        return sorted(found, key=repr)

    def periodic_points(self, up_to_period: int,
                        budget: int = DEFAULT_BREAKPOINT_BUDGET) -> list[PeriodicOrbitRecord]:
        """All periodic orbits of minimal period <= up_to_period, exact."""
        tree = self.tree
        records: list[PeriodicOrbitRecord] = []
        seen_orbits: set[frozenset] = set()
        power = PLTreeMap.identity(tree)
        for p in range(1, up_to_period + 1):
            power = self.compose(power, budget=budget)
            for x in power.fixed_points():
                orbit = [x]
                while True:
                    nxt = self.evaluate(orbit[-1])
                    if nxt == x:
                        break
                    orbit.append(nxt)
                    if len(orbit) > p:
                        break
                if len(orbit) != p:
                    continue  # minimal period is a proper divisor, already recorded
                key = frozenset(orbit)
                if key in seen_orbits:
                    continue
                seen_orbits.add(key)
                kinds = tuple(
                    "endpoint" if tree.is_endpoint(q) else "cutpoint" for q in orbit
                )
                records.append(PeriodicOrbitRecord(p, tuple(orbit), kinds))
        return records

    # -- quotient ------------------------------------------------------------------------

    def induced_quotient_map(self, M: Subtree) -> tuple["PLTreeMap", QuotientProjection]:
        """The factor map on the tree with M collapsed; requires f(M) inside M."""
        tree = self.tree
        image = self.image_subtree(M)
        if not tree.subtree_contains_subtree(M, image):
            raise NotInvariant(f"image of the collapsed subtree leaves it: {image}")
        qtree, proj = tree.quotient(M)
        mm = M.span_map()
        table: dict[EdgeKey, list[tuple[Fraction, TreePoint]]] = {}
        for qkey in qtree.edge_keys:
            e, lo, hi = proj.quotient_edge_source(qkey)
            params = {lo, hi}
            for t in self.breakpoints_on(e):
                if lo < t < hi:
                    params.add(t)
            # add crossings of the collapsed region inside each linear piece
            rows = self.table[e]
            for i in range(len(rows) - 1):
                t0, p0 = rows[i]
                t1, p1 = rows[i + 1]
                a, b = max(lo, t0), min(hi, t1)
                if a >= b:
                    continue
                pa = self.evaluate(tree.point(e, a))
                pb = self.evaluate(tree.point(e, b))
                arc_len = tree.distance(pa, pb)
                if arc_len == 0:
                    continue
                acc = ZERO
                for seg in tree.path_segments(pa, pb):
                    seg_len = seg.length_on(tree)
                    if seg.edge in mm and seg_len > 0:
                        slo, shi = mm[seg.edge]
                        s0, s1 = seg.a, seg.b
                        tlo, thi = (min(s0, s1), max(s0, s1))
                        cut_lo, cut_hi = max(tlo, slo), min(thi, shi)
                        if cut_lo <= cut_hi:
                            for c in (cut_lo, cut_hi):
                                ell = acc + abs(c - s0) * tree.edge_length(seg.edge)
                                ta = a + (ell / arc_len) * (b - a)
                                if lo < ta < hi:
                                    params.add(ta)
                    acc += seg_len
            rows_out = []
            for t in sorted(params):
                s = (t - lo) / (hi - lo)
                img = proj.map_point(self.evaluate(tree.point(e, t)))
                rows_out.append((s, img))
            table[qkey] = rows_out
        g = PLTreeMap(qtree, table).pruned()
        return g, proj


def maps_agree(f: PLTreeMap, g: PLTreeMap, samples: int = 100, seed: int = 0) -> bool:
    """Exact behavioural equality check on breakpoints plus random samples."""
    import random

    if f.tree is not g.tree:
        return False
    tree = f.tree
    for e in tree.edge_keys:
        for t in set(f.breakpoints_on(e)) | set(g.breakpoints_on(e)):
            p = tree.point(e, t)
            if f.evaluate(p) != g.evaluate(p):
                return False
    rng = random.Random(seed)
    for _ in range(samples):
        e = rng.choice(tree.edge_keys)
        t = Fraction(rng.randrange(0, 1009), 1008)
        p = tree.point(e, t)
        if f.evaluate(p) != g.evaluate(p):
            return False
    return True
