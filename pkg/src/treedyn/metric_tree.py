"""Finite metric trees with exact rational arithmetic.

A tree is a finite set of weighted edges forming a connected acyclic graph.
Points live on edges (edge id + rational parameter), subtrees are closed
connected unions of per-edge parameter intervals.  Everything downstream
(piecewise-linear maps, hyperspace orbits, entropy counts) is built on the
operations here: arcs, components, projections, Hausdorff distance,
quotients, diameters and covers.

All values are immutable after construction and all operations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import (
    CycleDetected,
    Disconnected,
    NonpositiveEpsilon,
    NonpositiveLength,
    PointNotOnTree,
)

EdgeKey = tuple[str, str]

ZERO = Fraction(0)
ONE = Fraction(1)


def frac(value) -> Fraction:
    """Coerce ints, strings like '3/4', and Fractions to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


@dataclass(frozen=True)
class TreePoint:
    """A location on a tree: an edge plus a rational parameter in [0, 1].

    Points at shared vertices are canonicalized (see MetricTree.point), so
    dataclass equality coincides with geometric equality.
    """

    edge: EdgeKey
    t: Fraction

    def __repr__(self):
        return f"{self.edge[0]}:{self.edge[1]}@{self.t}"


@dataclass(frozen=True)
class Subtree:
    """A nonempty closed connected subset: at most one interval per edge.

    ``spans`` is a sorted tuple of (edge, lo, hi) with 0 <= lo <= hi <= 1.
    Construct through MetricTree.subtree / arc / etc. so the canonical-form
    and connectivity invariants hold.
    """

    spans: tuple[tuple[EdgeKey, Fraction, Fraction], ...]

    def span_map(self) -> dict[EdgeKey, tuple[Fraction, Fraction]]:
        return {e: (lo, hi) for e, lo, hi in self.spans}

    @property
    def edges(self) -> tuple[EdgeKey, ...]:
        return tuple(e for e, _, _ in self.spans)

    def is_degenerate(self) -> bool:
        return all(lo == hi for _, lo, hi in self.spans)

    def __repr__(self):
        parts = ",".join(f"{u}:{v}[{lo},{hi}]" for (u, v), lo, hi in self.spans)
        return f"Subtree({parts})"


# ---------------------------------------------------------------------------
# path segments: ordered traversal pieces of an arc
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PathSeg:
    """One directed stretch of an arc: edge traversed from param a to b."""

    edge: EdgeKey
    a: Fraction
    b: Fraction

    def length_on(self, tree: "MetricTree") -> Fraction:
        return abs(self.b - self.a) * tree.edge_length(self.edge)


class MetricTree:
    """Validated finite metric tree with derived routing tables."""

    def __init__(self, edge_list: Sequence[tuple[str, str, Fraction]]):
        if not edge_list:
            raise Disconnected("a tree needs at least one edge")
        edges: dict[EdgeKey, Fraction] = {}
        adj: dict[str, list[EdgeKey]] = {}
        pair_seen: set[frozenset] = set()
        for u, v, length in edge_list:
            u, v = str(u), str(v)
            if ":" in u or ":" in v:
                raise Disconnected(f"vertex ids must not contain ':': {u!r}, {v!r}")
            length = frac(length)
            if length <= 0:
                raise NonpositiveLength(f"edge ({u},{v}) has length {length}")
            if u == v:
                raise CycleDetected(f"self-loop at {u}")
            pair = frozenset((u, v))
            if pair in pair_seen:
                raise CycleDetected(f"duplicate edge between {u} and {v}")
            pair_seen.add(pair)
            key = (u, v)
            edges[key] = length
            adj.setdefault(u, []).append(key)
            adj.setdefault(v, []).append(key)
        if len(edges) != len(adj) - 1:
            raise CycleDetected(
                f"{len(edges)} edges on {len(adj)} vertices cannot form a tree"
            )
        self._edges = edges
        self._adj = {v: tuple(ks) for v, ks in adj.items()}
        self._check_connected()
        self._build_routing()

    # -- construction helpers ------------------------------------------------

    def _check_connected(self):
        start = next(iter(self._adj))
        seen = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for u, w in self._adj[v]:
                nxt = w if v == u else u
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        if len(seen) != len(self._adj):
            missing = sorted(set(self._adj) - seen)
            raise Disconnected(f"vertices unreachable from {start}: {missing}")

    def _build_routing(self):
        # per-vertex BFS: exact distances and next-hop tables, O(V^2)
        self._vdist: dict[str, dict[str, Fraction]] = {}
        self._next: dict[str, dict[str, str]] = {}
        for root in self._adj:
            dist = {root: ZERO}
            first = {root: root}
            stack = [root]
            while stack:
                v = stack.pop()
                for u, w in self._adj[v]:
                    nxt = w if v == u else u
                    if nxt not in dist:
                        dist[nxt] = dist[v] + self._edges[(u, w)]
                        first[nxt] = nxt if v == root else first[v]
                        stack.append(nxt)
            self._vdist[root] = dist
            self._next[root] = first

    # -- basic queries ----------------------------------------------------------

    @property
    def vertices(self) -> tuple[str, ...]:
        return tuple(sorted(self._adj))

    @property
    def edge_keys(self) -> tuple[EdgeKey, ...]:
        return tuple(self._edges)

    def edge_length(self, edge: EdgeKey) -> Fraction:
        try:
            return self._edges[edge]
        except KeyError:
            raise PointNotOnTree(f"no edge {edge} on this tree") from None

    def total_length(self) -> Fraction:
        return sum(self._edges.values(), ZERO)

    def degree(self, vertex: str) -> int:
        return len(self._adj[vertex])

    def edge_between(self, u: str, v: str) -> EdgeKey:
        if (u, v) in self._edges:
            return (u, v)
        if (v, u) in self._edges:
            return (v, u)
        raise PointNotOnTree(f"no edge joining {u} and {v}")

    # -- points ----------------------------------------------------------------

    def point(self, edge: EdgeKey, t) -> TreePoint:
        """Canonical point on ``edge`` at parameter ``t``."""
        t = frac(t)
        if edge not in self._edges:
            raise PointNotOnTree(f"no edge {edge} on this tree")
        if not (ZERO <= t <= ONE):
            raise PointNotOnTree(f"parameter {t} outside [0,1]")
        if t == ZERO:
            return self.vertex_point(edge[0])
        if t == ONE:
            return self.vertex_point(edge[1])
        return TreePoint(edge, t)

    def vertex_point(self, vertex: str) -> TreePoint:
        try:
            incident = self._adj[vertex]
        except KeyError:
            raise PointNotOnTree(f"no vertex {vertex} on this tree") from None
        edge = min(incident)
        return TreePoint(edge, ZERO if edge[0] == vertex else ONE)

    def as_vertex(self, p: TreePoint) -> str | None:
        if p.t == ZERO:
            return p.edge[0]
        if p.t == ONE:
            return p.edge[1]
        return None

    def param_on_edge(self, p: TreePoint, edge: EdgeKey) -> Fraction | None:
        """Parameter of ``p`` on ``edge`` if p lies on it, else None."""
        if p.edge == edge:
            return p.t
        v = self.as_vertex(p)
        if v is not None:
            if edge[0] == v:
                return ZERO
            if edge[1] == v:
                return ONE
        return None

    def valence(self, p: TreePoint) -> int:
        v = self.as_vertex(p)
        return self.degree(v) if v is not None else 2

    def is_endpoint(self, p: TreePoint) -> bool:
        return self.valence(p) == 1

    def is_cutpoint(self, p: TreePoint) -> bool:
        return self.valence(p) >= 2

    def endpoints(self) -> tuple[TreePoint, ...]:
        return tuple(
            self.vertex_point(v) for v in self.vertices if self.degree(v) == 1
        )

    def branch_vertices(self) -> tuple[str, ...]:
        return tuple(v for v in self.vertices if self.degree(v) >= 3)

    # -- metric ------------------------------------------------------------------

    def distance(self, x: TreePoint, y: TreePoint) -> Fraction:
        if x == y:
            return ZERO
        # same-edge shortcut (also catches vertex points on a shared edge)
        for e in self._edges_containing(x):
            ty = self.param_on_edge(y, e)
            if ty is not None:
                tx = self.param_on_edge(x, e)
                return abs(tx - ty) * self._edges[e]
        best = None
        for a, da in self._anchors(x):
            row = self._vdist[a]
            for b, db in self._anchors(y):
                cand = da + row[b] + db
                if best is None or cand < best:
                    best = cand
        return best

    def _edges_containing(self, p: TreePoint) -> tuple[EdgeKey, ...]:
        v = self.as_vertex(p)
        if v is None:
            return (p.edge,)
        return self._adj[v]

    def _anchors(self, p: TreePoint) -> tuple[tuple[str, Fraction], ...]:
        v = self.as_vertex(p)
        if v is not None:
            return ((v, ZERO),)
        u, w = p.edge
        length = self._edges[p.edge]
        return ((u, p.t * length), (w, (ONE - p.t) * length))

    # -- arcs ----------------------------------------------------------------------

    def path_segments(self, x: TreePoint, y: TreePoint) -> list[PathSeg]:
        """Ordered traversal of the unique arc from x to y."""
        if x == y:
            return [PathSeg(x.edge, x.t, x.t)]
        for e in self._edges_containing(x):
            ty = self.param_on_edge(y, e)
            if ty is not None:
                tx = self.param_on_edge(x, e)
                return [PathSeg(e, tx, ty)]
        best = None
        for a, da in self._anchors(x):
            row = self._vdist[a]
            for b, db in self._anchors(y):
                cand = (da + row[b] + db, a, b)
                if best is None or cand < best:
                    best = cand
        _, a, b = best
        segs: list[PathSeg] = []
        if self.as_vertex(x) is None:
            ta = self.param_on_edge(self.vertex_point(a), x.edge)
            segs.append(PathSeg(x.edge, x.t, ta))
        cur = a
        while cur != b:
            nxt = self._next[cur][b]
            e = self.edge_between(cur, nxt)
            segs.append(PathSeg(e, ZERO, ONE) if e[0] == cur else PathSeg(e, ONE, ZERO))
            cur = nxt
        if self.as_vertex(y) is None:
            tb = self.param_on_edge(self.vertex_point(b), y.edge)
            segs.append(PathSeg(y.edge, tb, y.t))
        return segs

    def arc(self, x: TreePoint, y: TreePoint) -> Subtree:
        """The unique arc [x, y] as a subtree; arc(x, x) = {x}."""
        spans: dict[EdgeKey, tuple[Fraction, Fraction]] = {}
        for seg in self.path_segments(x, y):
            lo, hi = min(seg.a, seg.b), max(seg.a, seg.b)
            if seg.edge in spans:
                plo, phi = spans[seg.edge]
                lo, hi = min(lo, plo), max(hi, phi)
            spans[seg.edge] = (lo, hi)
        return self.subtree(spans)

    def point_at_distance(self, x: TreePoint, y: TreePoint, d: Fraction) -> TreePoint:
        """The point on the arc [x, y] at exact distance d from x."""
        if d < 0:
            raise PointNotOnTree(f"negative arclength {d}")
        remaining = d
        segs = self.path_segments(x, y)
        for seg in segs:
            ln = seg.length_on(self)
            if remaining <= ln:
                if ln == 0:
                    return self.point(seg.edge, seg.a)
                step = (remaining / self._edges[seg.edge])
                t = seg.a + step if seg.b >= seg.a else seg.a - step
                return self.point(seg.edge, t)
            remaining -= ln
        if remaining == 0:
            return y
        raise PointNotOnTree(f"arclength {d} exceeds arc length {d - remaining}")

    # -- subtrees -----------------------------------------------------------------

    def subtree(self, spans: Mapping[EdgeKey, tuple[Fraction, Fraction]]) -> Subtree:
        """Canonicalize and validate a per-edge interval family."""
        cleaned: dict[EdgeKey, tuple[Fraction, Fraction]] = {}
        for e, (lo, hi) in spans.items():
            if e not in self._edges:
                raise PointNotOnTree(f"no edge {e} on this tree")
            lo, hi = frac(lo), frac(hi)
            if not (ZERO <= lo <= hi <= ONE):
                raise PointNotOnTree(f"bad interval [{lo},{hi}] on {e}")
            cleaned[e] = (lo, hi)
        if not cleaned:
            raise Disconnected("empty subtree")
        # drop degenerate spans sitting at a vertex already covered elsewhere
        covered_vertices = set()
        for e, (lo, hi) in cleaned.items():
            if lo == hi:
                continue
            if lo == ZERO:
                covered_vertices.add(e[0])
            if hi == ONE:
                covered_vertices.add(e[1])
        def degenerate_vertex(e, lo, hi):
            if lo != hi:
                return None
            if lo == ZERO:
                return e[0]
            if lo == ONE:
                return e[1]
            return None
        final = {}
        degenerate_at = {}
        for e, (lo, hi) in cleaned.items():
            dv = degenerate_vertex(e, lo, hi)
            if dv is not None:
                if dv in covered_vertices:
                    continue
                degenerate_at[dv] = min(degenerate_at.get(dv, e), e)
            final[e] = (lo, hi)
        # merge duplicate degenerate vertex spans to the canonical edge
        for e in list(final):
            lo, hi = final[e]
            dv = degenerate_vertex(e, lo, hi)
            if dv is not None and degenerate_at.get(dv) != e:
                del final[e]
        # re-canonicalize degenerate vertex spans onto the canonical edge
        out = {}
        for e, (lo, hi) in final.items():
            dv = degenerate_vertex(e, lo, hi)
            if dv is not None:
                p = self.vertex_point(dv)
                out[p.edge] = (p.t, p.t)
            else:
                out[e] = (lo, hi)
        self._check_subtree_connected(out)
        return Subtree(tuple(sorted((e, lo, hi) for e, (lo, hi) in out.items())))

    def _check_subtree_connected(self, spans: dict[EdgeKey, tuple[Fraction, Fraction]]):
        keys = list(spans)
        if len(keys) == 1:
            return
        # union-find over spans, connected through shared reached vertices
        parent = {k: k for k in keys}

        def find(k):
            while parent[k] != k:
                parent[k] = parent[parent[k]]
                k = parent[k]
            return k

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb

        reach: dict[str, EdgeKey] = {}
        for e, (lo, hi) in spans.items():
            touched = []
            if lo == ZERO:
                touched.append(e[0])
            if hi == ONE:
                touched.append(e[1])
            for v in touched:
                if v in reach:
                    union(e, reach[v])
                else:
                    reach[v] = e
        roots = {find(k) for k in keys}
        if len(roots) != 1:
            raise Disconnected(f"subtree spans are not connected: {spans}")

    def singleton(self, p: TreePoint) -> Subtree:
        return self.subtree({p.edge: (p.t, p.t)})

    def full_subtree(self) -> Subtree:
        return self.subtree({e: (ZERO, ONE) for e in self._edges})

    def subtree_contains(self, A: Subtree, p: TreePoint) -> bool:
        sm = A.span_map()
        for e in self._edges_containing(p):
            if e in sm:
                t = self.param_on_edge(p, e)
                lo, hi = sm[e]
                if lo <= t <= hi:
                    return True
        return False

    def subtree_covers_vertex(self, A: Subtree, v: str) -> bool:
        return self.subtree_contains(A, self.vertex_point(v))

    def subtree_contains_subtree(self, A: Subtree, B: Subtree) -> bool:
        """Exact containment B <= A."""
        am = A.span_map()
        for e, lo, hi in B.spans:
            if lo == hi:
                if not self.subtree_contains(A, self.point(e, lo)):
                    return False
                continue
            if e not in am:
                return False
            alo, ahi = am[e]
            if not (alo <= lo and hi <= ahi):
                return False
        return True

    def subtree_points(self, A: Subtree) -> list[TreePoint]:
        """Span extremities of A (superset of its leaf points)."""
        pts = []
        for e, lo, hi in A.spans:
            pts.append(self.point(e, lo))
            if hi != lo:
                pts.append(self.point(e, hi))
        out, seen = [], set()
        for p in pts:
            if p not in seen:
                seen.add(p)
                out.append(p)
        return out

    def subtree_intersection(self, A: Subtree, B: Subtree) -> Subtree | None:
        """Intersection of two subtrees (a subtree, or None when disjoint)."""
        am, bm = A.span_map(), B.span_map()
        spans: dict[EdgeKey, tuple[Fraction, Fraction]] = {}
        for e, (alo, ahi) in am.items():
            if e in bm:
                blo, bhi = bm[e]
                lo, hi = max(alo, blo), min(ahi, bhi)
                if lo <= hi:
                    spans[e] = (lo, hi)
        # shared vertices where coverage comes from different edges
        for v in self._adj:
            p = self.vertex_point(v)
            if self.subtree_contains(A, p) and self.subtree_contains(B, p):
                t = self.param_on_edge(p, p.edge)
                if p.edge not in spans:
                    spans[p.edge] = (t, t)
        if not spans:
            return None
        return self.subtree(spans)

    def subtree_union(self, parts: Iterable[Subtree]) -> Subtree:
        """Union of subtrees whose total union is connected."""
        acc: dict[EdgeKey, list[tuple[Fraction, Fraction]]] = {}
        for part in parts:
            for e, lo, hi in part.spans:
                ivals = acc.setdefault(e, [])
                merged = (lo, hi)
                keep = []
                for plo, phi in ivals:
                    if merged[0] <= phi and plo <= merged[1]:
                        merged = (min(merged[0], plo), max(merged[1], phi))
                    else:
                        keep.append((plo, phi))
                keep.append(merged)
                acc[e] = keep
        spans = {}
        for e, ivals in acc.items():
            if len(ivals) != 1:
                raise Disconnected(f"union leaves disjoint intervals on {e}: {ivals}")
            spans[e] = ivals[0]
        return self.subtree(spans)

    def boundary(self, A: Subtree) -> list[TreePoint]:
        """Points of A that touch the closure of the complement."""
        if A == self.full_subtree():
            return []
        out = []
        seen = set()

        def add(p):
            if p not in seen:
                seen.add(p)
                out.append(p)

        for e, lo, hi in A.spans:
            if lo > ZERO:
                add(self.point(e, lo))
            if hi < ONE and hi != lo:
                add(self.point(e, hi))
            if hi == lo and ZERO < lo < ONE:
                add(self.point(e, lo))
        # vertices inside A with an uncovered outgoing direction
        for v in self._adj:
            p = self.vertex_point(v)
            if not self.subtree_contains(A, p):
                continue
            for e in self._adj[v]:
                tv = ZERO if e[0] == v else ONE
                sm = A.span_map()
                covered = False
                if e in sm:
                    lo, hi = sm[e]
                    if (tv == ZERO and lo == ZERO and hi > ZERO) or (
                        tv == ONE and hi == ONE and lo < ONE
                    ):
                        covered = True
                if not covered:
                    add(p)
                    break
        return out

    def diameter(self, A: Subtree) -> Fraction:
        pts = self.subtree_points(A)
        best = ZERO
        for i, p in enumerate(pts):
            for q in pts[i + 1:]:
                d = self.distance(p, q)
                if d > best:
                    best = d
        return best

    # -- components and projections --------------------------------------------

    def component(self, c: TreePoint, x: TreePoint) -> Subtree:
        """Closure of the connected component of T minus {c} containing x.

        Follows the convention that the component of a point not in the set
        is the singleton, so component(c, c) = {c}.
        """
        if x == c:
            return self.singleton(c)
        spans: dict[EdgeKey, tuple[Fraction, Fraction]] = {}
        cv = self.as_vertex(c)
        if cv is None:
            e = c.edge
            u, v = e
            # which side of c does x sit on
            du = self.distance(x, self.vertex_point(u)) + c.t * self._edges[e]
            dv = self.distance(x, self.vertex_point(v)) + (ONE - c.t) * self._edges[e]
            tx = self.param_on_edge(x, e)
            if tx is not None:
                side = u if tx < c.t else v
            else:
                side = u if du < dv else v
            if side == u:
                spans[e] = (ZERO, c.t)
            else:
                spans[e] = (c.t, ONE)
            blocked_vertex = None
            start = side
        else:
            # find the incident edge of cv on x's side
            segs = self.path_segments(x, c)
            last = segs[-1]
            e = last.edge
            te = self.param_on_edge(c, e)
            assert te in (ZERO, ONE)
            spans[e] = (ZERO, te) if te == ONE else (te, ONE)
            blocked_vertex = cv
            start = e[0] if te == ONE else e[1]
        # flood fill from `start`, never crossing c
        seen = {start}
        if blocked_vertex is not None:
            seen.add(blocked_vertex)
        stack = [start]
        while stack:
            w = stack.pop()
            for e2 in self._adj[w]:
                if e2 in spans:
                    continue
                other = e2[1] if e2[0] == w else e2[0]
                if cv is not None and other == cv and e2 not in spans:
                    # edge running into c's vertex from the x side
                    spans[e2] = (ZERO, ONE)
                    continue
                spans[e2] = (ZERO, ONE)
                if other not in seen:
                    seen.add(other)
                    stack.append(other)
        return self.subtree(spans)

    def in_open_component(self, c: TreePoint, x: TreePoint, z: TreePoint) -> bool:
        """Is z in the open component of T minus {c} containing x?

        For c == x the component convention makes this 'z == c'.
        """
        if x == c:
            return z == c
        if z == c:
            return False
        return self.subtree_contains(self.component(c, x), z)

    def project(self, M: Subtree, z: TreePoint) -> TreePoint:
        """Nearest-point projection onto the subtree M (the unique gateway)."""
        if self.subtree_contains(M, z):
            return z
        e0, lo0, _ = M.spans[0]
        target = self.point(e0, lo0)
        for seg in self.path_segments(z, target):
            sm = M.span_map()
            if seg.edge in sm:
                mlo, mhi = sm[seg.edge]
                a, b = seg.a, seg.b
                if a <= b:
                    if mhi >= a and mlo <= b:
                        entry = max(a, mlo)
                        return self.point(seg.edge, entry)
                else:
                    if mlo <= a and mhi >= b:
                        entry = min(a, mhi)
                        return self.point(seg.edge, entry)
            else:
                # degenerate touch at a vertex of the segment's edge
                for tv, vtx in ((ZERO, seg.edge[0]), (ONE, seg.edge[1])):
                    lo, hi = min(seg.a, seg.b), max(seg.a, seg.b)
                    if lo <= tv <= hi and self.subtree_covers_vertex(M, vtx):
                        return self.vertex_point(vtx)
        raise AssertionError("projection walk never reached M")  # pragma: no cover

    def dist_to_subtree(self, z: TreePoint, A: Subtree) -> Fraction:
        return self.distance(z, self.project(A, z))

    # -- Hausdorff distance --------------------------------------------------------

    def directed_hausdorff(self, A: Subtree, B: Subtree) -> Fraction:
        """sup over a in A of dist(a, B), exact.

        The max of the piecewise-linear function dist(., B) over each span is
        attained at span ends, at B-span ends, or at route-tie points; a
        superset of those critical parameters is evaluated exactly.
        """
        bm = B.span_map()
        vdist: dict[str, Fraction] = {}

        def vertex_dist(v: str) -> Fraction:
            if v not in vdist:
                vdist[v] = self.dist_to_subtree(self.vertex_point(v), B)
            return vdist[v]

        best = ZERO
        for e, lo, hi in A.spans:
            length = self._edges[e]
            u, v = e
            cands = {lo, hi}
            if e in bm:
                blo, bhi = bm[e]
                du, dv = vertex_dist(u), vertex_dist(v)
                for c in (blo, bhi):
                    if lo < c < hi:
                        cands.add(c)
                # tie between walking to the B-span directly and routing via u/v
                if length > 0:
                    t1 = (blo * length - du) / (2 * length)
                    t2 = (bhi * length + dv + length) / (2 * length)
                    for c in (t1, t2):
                        if lo < c < hi:
                            cands.add(c)
            else:
                du, dv = vertex_dist(u), vertex_dist(v)
                if length > 0:
                    tstar = (length + dv - du) / (2 * length)
                    if lo < tstar < hi:
                        cands.add(tstar)
            for t in cands:
                d = self.dist_to_subtree(self.point(e, t), B)
                if d > best:
                    best = d
        return best

    def hausdorff(self, A: Subtree, B: Subtree) -> Fraction:
        return max(self.directed_hausdorff(A, B), self.directed_hausdorff(B, A))

    # -- quotient --------------------------------------------------------------------

    def quotient(self, M: Subtree) -> tuple["MetricTree", "QuotientProjection"]:
        """Collapse the subtree M to a single vertex.

        Returns the quotient tree and the projection map.  Collapsing the
        whole tree would leave a single point, which has no edge
        representation here; that case is rejected.
        """
        if M == self.full_subtree():
            raise Disconnected("quotient by the whole tree is a single point")
        mm = M.span_map()
        mstar = "M*"
        while mstar in self._adj:
            mstar += "*"

        def image_vertex(v: str) -> str:
            return mstar if self.subtree_covers_vertex(M, v) else v

        q_edges: list[tuple[str, str, Fraction]] = []
        pieces: dict[EdgeKey, list[tuple[Fraction, Fraction, EdgeKey]]] = {}
        inverse: dict[EdgeKey, tuple[EdgeKey, Fraction, Fraction]] = {}

        def add_piece(src: EdgeKey, s_lo: Fraction, s_hi: Fraction, qa: str, qb: str):
            length = (s_hi - s_lo) * self._edges[src]
            qkey = (qa, qb)
            assert qkey not in inverse, f"quotient edge collision at {qkey}"
            q_edges.append((qa, qb, length))
            pieces.setdefault(src, []).append((s_lo, s_hi, qkey))
            inverse[qkey] = (src, s_lo, s_hi)

        for e, length in self._edges.items():
            u, v = e
            if e in mm:
                lo, hi = mm[e]
                if lo == hi and not (lo == ZERO or hi == ONE):
                    # interior single-point collapse splits the edge
                    add_piece(e, ZERO, lo, u, mstar)
                    add_piece(e, hi, ONE, mstar, v)
                    continue
                if lo > ZERO:
                    add_piece(e, ZERO, lo, u, mstar)
                if hi < ONE:
                    add_piece(e, hi, ONE, mstar, v)
            else:
                add_piece(e, ZERO, ONE, image_vertex(u), image_vertex(v))

        qtree = MetricTree(q_edges)
        return qtree, QuotientProjection(self, qtree, M, mstar, pieces, inverse)

    # -- covers -----------------------------------------------------------------------

    def cover_by_continua(self, eps) -> list[Subtree]:
        """Closed connected pieces of diameter < eps covering the tree.

        Greedy: chop each edge into ceil(length/(eps/2)) equal pieces, then
        merge the pieces around each vertex when the merged star still has
        diameter < eps.
        """
        eps = frac(eps)
        if eps <= 0:
            raise NonpositiveEpsilon(f"eps must be positive, got {eps}")
        half = eps / 2
        pieces: list[Subtree] = []
        at_vertex: dict[str, list[int]] = {}
        for e, length in self._edges.items():
            k = -((-length) // half)  # ceil(length / half)
            k = max(int(k), 1)
            for i in range(k):
                lo, hi = Fraction(i, k), Fraction(i + 1, k)
                idx = len(pieces)
                pieces.append(self.subtree({e: (lo, hi)}))
                if i == 0:
                    at_vertex.setdefault(e[0], []).append(idx)
                if i == k - 1:
                    at_vertex.setdefault(e[1], []).append(idx)
        merged_away: set[int] = set()
        result: list[Subtree] = []
        for v in sorted(at_vertex):
            idxs = [i for i in at_vertex[v] if i not in merged_away]
            if len(idxs) < 2:
                continue
            star = self.subtree_union([pieces[i] for i in idxs])
            if self.diameter(star) < eps:
                for i in idxs:
                    merged_away.add(i)
                result.append(star)
        result.extend(p for i, p in enumerate(pieces) if i not in merged_away)
        return result


class QuotientProjection:
    """Projection onto the quotient of a tree by a collapsed subtree."""

    def __init__(self, source: MetricTree, quotient: MetricTree, collapsed: Subtree,
                 mstar: str, pieces, inverse):
        self.source = source
        self.quotient = quotient
        self.collapsed = collapsed
        self.mstar = mstar
        self._pieces = pieces          # src edge -> [(lo, hi, q_edge)]
        self._inverse = inverse        # q_edge -> (src edge, lo, hi)

    def __call__(self, p: TreePoint) -> TreePoint:
        return self.map_point(p)

    def map_point(self, p: TreePoint) -> TreePoint:
        src = self.source
        if src.subtree_contains(self.collapsed, p):
            return self.quotient.vertex_point(self.mstar)
        for e in src._edges_containing(p):
            t = src.param_on_edge(p, e)
            for lo, hi, qkey in self._pieces.get(e, ()):
                if lo <= t <= hi:
                    if hi == lo:
                        continue
                    return self.quotient.point(qkey, (t - lo) / (hi - lo))
        raise PointNotOnTree(f"{p} has no image piece")  # pragma: no cover

    def map_subtree(self, A: Subtree) -> Subtree:
        src = self.source
        spans: dict[EdgeKey, tuple[Fraction, Fraction]] = {}

        def add(qkey, a, b):
            lo, hi = min(a, b), max(a, b)
            if qkey in spans:
                plo, phi = spans[qkey]
                lo, hi = min(lo, plo), max(hi, phi)
            spans[qkey] = (lo, hi)

        touches_m = False
        for e, alo, ahi in A.spans:
            for lo, hi, qkey in self._pieces.get(e, ()):
                ilo, ihi = max(alo, lo), min(ahi, hi)
                if ilo > ihi or hi == lo:
                    continue
                add(qkey, (ilo - lo) / (hi - lo), (ihi - lo) / (hi - lo))
            mm = self.collapsed.span_map()
            if e in mm:
                mlo, mhi = mm[e]
                if max(alo, mlo) <= min(ahi, mhi):
                    touches_m = True
        for p in src.subtree_points(A):
            if src.subtree_contains(self.collapsed, p):
                touches_m = True
        if touches_m:
            mp = self.quotient.vertex_point(self.mstar)
            if mp.edge not in spans:
                spans[mp.edge] = (mp.t, mp.t)
        if not spans:
            # A entirely inside M
            mp = self.quotient.vertex_point(self.mstar)
            spans[mp.edge] = (mp.t, mp.t)
        return self.quotient.subtree(spans)

    def quotient_edge_source(self, qkey: EdgeKey) -> tuple[EdgeKey, Fraction, Fraction]:
        return self._inverse[qkey]

    def pull_param(self, qkey: EdgeKey, s: Fraction) -> tuple[EdgeKey, Fraction]:
        e, lo, hi = self._inverse[qkey]
        return e, lo + s * (hi - lo)
