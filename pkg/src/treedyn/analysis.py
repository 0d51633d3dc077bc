"""Structure theory for tree maps without periodic cut-points.

Consistent sequences and their finite partitions, set-theoretic limsup of a
continuum orbit, the unique attracting fixed point (AFP) and its
constructive descent, immediate basins of attraction, and orbit
classification for points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import (
    DescentStalled,
    FixedCutPointFound,
    FixedSegmentPresent,
    NoFixedPointInA,
    NotConsistent,
)
from .hyperspace import CONFIRM_WINDOW, ContinuumOrbit
from .metric_tree import MetricTree, ONE, Subtree, TreePoint, ZERO, frac
from .pl_map import PeriodicOrbitRecord, PLTreeMap

DEFAULT_TOL = Fraction(1, 10**6)
DEFAULT_BUDGET = 10**4
WITNESS_LADDER_DEPTH = 20
ZERO_RESIDUAL = Fraction(0)


# ---------------------------------------------------------------------------
# consistent sequences
# ---------------------------------------------------------------------------

def is_consistent_with(tree: MetricTree, x: TreePoint, seq: Sequence[TreePoint]) -> bool:
    """Exact check that later terms stay on x's side of every earlier term."""
    for n in range(len(seq)):
        for m in range(n + 1, len(seq)):
            if not tree.in_open_component(seq[n], x, seq[m]):
                return False
    return True


@dataclass(frozen=True)
class PartitionClass:
    endpoint: TreePoint
    indices: tuple[int, ...]
    limit_estimate: TreePoint


@dataclass(frozen=True)
class ConsistentPartition:
    anchor: TreePoint
    classes: tuple[PartitionClass, ...]

    def class_count(self) -> int:
        return len(self.classes)


def partition_consistent(tree: MetricTree, x: TreePoint,
                         seq: Sequence[TreePoint]) -> ConsistentPartition:
    """Split a consistent sequence into finitely many arc-monotone classes.

    Each index goes to the first tree endpoint whose arc from the anchor
    contains the term; within a class the arcs [x, x_m] are nested.
    """
    if not is_consistent_with(tree, x, seq):
        raise NotConsistent("sequence is not consistent with the anchor")
    ends = sorted(tree.endpoints(), key=repr)
    arcs = [tree.arc(x, e) for e in ends]
    buckets: dict[int, list[int]] = {}
    for i, p in enumerate(seq):
        for j, arc in enumerate(arcs):
            if tree.subtree_contains(arc, p):
                buckets.setdefault(j, []).append(i)
                break
        else:  # pragma: no cover - the endpoint arcs cover the tree
            raise NotConsistent(f"{p} lies on no endpoint arc")
    classes = []
    for j in sorted(buckets):
        idx = buckets[j]
        # nestedness within the class is part of the contract
        for a, b in zip(idx, idx[1:]):
            inner = tree.arc(x, seq[b])
            outer = tree.arc(x, seq[a])
            if not tree.subtree_contains_subtree(outer, inner):
                raise NotConsistent(
                    f"arcs not nested within class {j}: indices {a}, {b}"
                )
        classes.append(PartitionClass(ends[j], tuple(idx), seq[idx[-1]]))
    return ConsistentPartition(x, tuple(classes))


# ---------------------------------------------------------------------------
# limsup of a continuum orbit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimsupReport:
    subtree: Subtree
    residual: Fraction
    checkpoints: tuple[int, ...]


def limsup_set(f: PLTreeMap, A: Subtree, m_max: int = 60,
               window: int = 20) -> LimsupReport:
    """Approximate the set-theoretic limsup of the orbit of A.

    Requires a fixed point of f inside A.  Tail unions over a window are
    intersected at increasing checkpoints; the residual is the Hausdorff
    distance between the last two checkpoint unions.
    """
    tree = f.tree
    try:
        fixed = f.fixed_points()
        if not any(tree.subtree_contains(A, p) for p in fixed):
            raise NoFixedPointInA("A contains no fixed point of the map")
    except FixedSegmentPresent as err:
        if not any(
            tree.subtree_intersection(A, seg) is not None for seg in err.segments
        ) and not any(tree.subtree_contains(A, p) for p in err.isolated):
            raise NoFixedPointInA("A contains no fixed point of the map") from err
    orbit = ContinuumOrbit(f, A)
    orbit.extend(m_max + window)
    checkpoints = sorted({m_max // 2, (3 * m_max) // 4, m_max})
    unions = [
        tree.subtree_union(orbit.subtrees[m:m + window + 1]) for m in checkpoints
    ]
    delta = unions[0]
    for u in unions[1:]:
        nxt = tree.subtree_intersection(delta, u)
        assert nxt is not None, "checkpoint unions share the fixed point"
        delta = nxt
    residual = tree.hausdorff(unions[-2], unions[-1]) if len(unions) > 1 else ZERO
    return LimsupReport(delta, residual, tuple(checkpoints))


# ---------------------------------------------------------------------------
# periodic cut-point scan
# ---------------------------------------------------------------------------

def verify_no_periodic_cutpoints(
    f: PLTreeMap, up_to_period: int
) -> tuple[bool, PeriodicOrbitRecord | None]:
    """True iff no periodic orbit of minimal period <= P touches a cut-point."""
    for record in f.periodic_points(up_to_period):
        if "cutpoint" in record.kinds:
            return False, record
    return True, None


# ---------------------------------------------------------------------------
# attracting fixed point
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DescentStep:
    cutpoint: TreePoint
    endpoint: TreePoint
    endpoint_count: int


@dataclass(frozen=True)
class AfpReport:
    afp: TreePoint
    certificate: TreePoint        # witness w: f([afp, w]) inside [afp, w)
    trace: tuple[DescentStep, ...]
    fallback_used: bool = False


def _certificate_witness(f: PLTreeMap, s: TreePoint,
                         first: TreePoint | None = None) -> TreePoint | None:
    """Search a halving ladder for w with f([s, w]) inside [s, w)."""
    tree = f.tree
    sv = tree.as_vertex(s)
    edge = min(tree._adj[sv])
    far = tree.vertex_point(edge[1] if edge[0] == sv else edge[0])
    w = first if first is not None else tree.point_at_distance(s, far, tree.edge_length(edge) / 2)
    for _ in range(WITNESS_LADDER_DEPTH):
        seg = tree.arc(s, w)
        img = f.image_subtree(seg)
        if tree.subtree_contains_subtree(seg, img) and not tree.subtree_contains(img, w):
            return w
        w = tree.point_at_distance(s, w, tree.distance(s, w) / 2)
    return None


def _arc_position(tree: MetricTree, segs, q: TreePoint) -> Fraction | None:
    """Arclength of q along an ordered segment path, if q lies on it."""
    acc = ZERO
    for seg in segs:
        t = tree.param_on_edge(q, seg.edge)
        if t is not None:
            lo, hi = min(seg.a, seg.b), max(seg.a, seg.b)
            if lo <= t <= hi:
                return acc + abs(t - seg.a) * tree.edge_length(seg.edge)
        acc += seg.length_on(tree)
    return None


def _projected_fixed_on_arc(f: PLTreeMap, y1: TreePoint, y: TreePoint) -> TreePoint | None:
    """Smallest fixed point of project_onto_[y1,y] after f, measured from y1.

    The composite is piecewise linear along the arc: within each linear piece
    of f the image arc meets [y1, y] in one stretch, the projection is
    constant before it, tracks it inside, and is constant after it.  All
    stretches are solved exactly.
    """
    tree = f.tree
    base_segs = tree.path_segments(y1, y)
    base = tree.arc(y1, y)
    total = tree.distance(y1, y)
    if total == 0:
        return None

    # cut positions: f-breakpoints along the base arc plus seg joints
    cuts = {ZERO, total}
    acc = ZERO
    for seg in base_segs:
        lo, hi = min(seg.a, seg.b), max(seg.a, seg.b)
        for t in f.breakpoints_on(seg.edge):
            if lo < t < hi:
                cuts.add(acc + abs(t - seg.a) * tree.edge_length(seg.edge))
        acc += seg.length_on(tree)
        if ZERO < acc < total:
            cuts.add(acc)
    positions = sorted(cuts)

    def point_at(lam: Fraction) -> TreePoint:
        return tree.point_at_distance(y1, y, lam)

    def pos_of(q: TreePoint) -> Fraction:
        lam = _arc_position(tree, base_segs, q)
        assert lam is not None, "projection landed off the base arc"
        return lam

    solutions: list[Fraction] = []
    for la, lb in zip(positions, positions[1:]):
        pa, pb = point_at(la), point_at(lb)
        fa, fb = f.evaluate(pa), f.evaluate(pb)
        img_len = tree.distance(fa, fb)
        if img_len == 0:
            g_val = pos_of(tree.project(base, fa))
            if la <= g_val <= lb:
                solutions.append(g_val)
            continue
        rho = img_len / (lb - la)
        img_segs = tree.path_segments(fa, fb)
        # the stretch of the image arc inside the base arc
        touches: list[tuple[Fraction, Fraction]] = []  # (image arclength, base position)
        acc_i = ZERO
        for seg in img_segs:
            length = tree.edge_length(seg.edge)
            bm = base.span_map()
            if seg.edge in bm:
                blo, bhi = bm[seg.edge]
                lo, hi = min(seg.a, seg.b), max(seg.a, seg.b)
                olo, ohi = max(lo, blo), min(hi, bhi)
                if olo <= ohi:
                    for c in (olo, ohi):
                        ell = acc_i + abs(c - seg.a) * length
                        touches.append((ell, pos_of(tree.point(seg.edge, c))))
            else:
                for tv, vtx in ((ZERO, seg.edge[0]), (ONE, seg.edge[1])):
                    lo, hi = min(seg.a, seg.b), max(seg.a, seg.b)
                    if lo <= tv <= hi and tree.subtree_covers_vertex(base, vtx):
                        ell = acc_i + abs(tv - seg.a) * length
                        touches.append((ell, pos_of(tree.vertex_point(vtx))))
            acc_i += seg.length_on(tree)
        if not touches:
            g_val = pos_of(tree.project(base, fa))
            if la <= g_val <= lb:
                solutions.append(g_val)
            continue
        entry_ell = min(t[0] for t in touches)
        exit_ell = max(t[0] for t in touches)
        entry_pos = next(p for e, p in touches if e == entry_ell)
        exit_pos = next(p for e, p in touches if e == exit_ell)
        # three stretches in lambda: constant, tracking, constant
        lam_entry = la + entry_ell / rho
        lam_exit = la + exit_ell / rho
        for lo_l, hi_l, kind in (
            (la, lam_entry, "pre"),
            (lam_entry, lam_exit, "track"),
            (lam_exit, lb, "post"),
        ):
            if lo_l > hi_l:
                continue
            if kind == "pre":
                if lo_l <= entry_pos <= hi_l:
                    solutions.append(entry_pos)
            elif kind == "post":
                if lo_l <= exit_pos <= hi_l:
                    solutions.append(exit_pos)
            else:
                if lam_exit == lam_entry:
                    if lo_l <= entry_pos <= hi_l and entry_pos == lam_entry:
                        solutions.append(entry_pos)
                    continue
                sigma = (exit_pos - entry_pos) / (exit_ell - entry_ell)
                slope = sigma * rho
                # solve entry_pos + slope (lam - lam_entry) = lam
                if slope == 1:
                    if entry_pos == lam_entry:
                        solutions.append(lam_entry)
                else:
                    lam_star = (entry_pos - slope * lam_entry) / (1 - slope)
                    if lo_l <= lam_star <= hi_l:
                        solutions.append(lam_star)
    if not solutions:
        return None
    return point_at(min(solutions))


def find_afp(f: PLTreeMap, initial_cutpoint: TreePoint | None = None) -> AfpReport:
    """Locate the unique attracting fixed endpoint by the component descent.

    Precondition: no cut-point of the tree is fixed.  Each round finds a
    cut-point moving towards an endpoint whose component holds strictly
    fewer endpoints, ending at a certified attracting endpoint.  If the
    descent cannot make progress an exhaustive witness scan over all
    endpoints runs before giving up.
    """
    tree = f.tree
    try:
        fixed = f.fixed_points()
    except FixedSegmentPresent as err:
        raise FixedCutPointFound(
            "a pointwise-fixed segment contains cut-points", witness=err.segments
        ) from err
    for p in fixed:
        if tree.is_cutpoint(p):
            raise FixedCutPointFound(f"fixed cut-point at {p}", witness=p)

    en_count = len(tree.endpoints())
    trace: list[DescentStep] = []

    if initial_cutpoint is not None:
        y = initial_cutpoint
    else:
        branches = tree.branch_vertices()
        if branches:
            y = tree.vertex_point(branches[0])
        else:
            e = tree.edge_keys[0]
            y = tree.point(e, Fraction(1, 2))
    if not tree.is_cutpoint(y):
        raise ValueError(f"initial point {y} is not a cut-point")

    for _ in range(en_count + 1):
        fy = f.evaluate(y)
        comp = tree.component(y, fy)
        side_ends = [e for e in tree.endpoints() if tree.subtree_contains(comp, e)]
        assert side_ends, "every component holds an endpoint of the tree"
        x = min(side_ends, key=repr)
        k = len(side_ends)
        trace.append(DescentStep(y, x, k))

        xv = tree.as_vertex(x)
        edge = min(tree._adj[xv])
        edge_len = tree.edge_length(edge)
        cap = min(tree.distance(x, y), edge_len)
        y1 = tree.point_at_distance(x, y, cap / 2)
        fy1 = f.evaluate(y1)
        if tree.in_open_component(y1, x, fy1) or fy1 == x:
            # x attracts; certify with a closed-image witness
            w = _certificate_witness(f, x, first=y1)
            if w is not None:
                return AfpReport(x, w, tuple(trace))
            break
        y2 = _projected_fixed_on_arc(f, y1, y)
        if y2 is None or y2 == y1 or y2 == y:
            break
        new_comp = tree.component(y2, f.evaluate(y2))
        new_count = sum(
            1 for e in tree.endpoints() if tree.subtree_contains(new_comp, e)
        )
        if new_count >= k:
            break
        y = y2

    # fallback: exhaustive witness scan over all endpoints
    for s in sorted(tree.endpoints(), key=repr):
        w = _certificate_witness(f, s)
        if w is not None:
            return AfpReport(s, w, tuple(trace), fallback_used=True)
    raise DescentStalled("descent made no progress and no endpoint certifies", trace)


# ---------------------------------------------------------------------------
# immediate basin of attraction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BasinReport:
    closure: Subtree
    boundary: tuple[TreePoint, ...]   # the open basin is closure minus these
    depth_used: int
    stabilized: bool


def _open_preimage_component(f: PLTreeMap, C: Subtree, excluded: frozenset,
                             s: TreePoint) -> tuple[Subtree, frozenset]:
    """Component of s of the preimage of the open set (C minus excluded)."""
    tree = f.tree
    pieces: list[tuple] = []     # (edge, lo, hi)
    exclusions: set[TreePoint] = set()
    for e, rows in f.table.items():
        for i in range(len(rows) - 1):
            t0, p0 = rows[i]
            t1, p1 = rows[i + 1]
            arc_len = tree.distance(p0, p1)
            if arc_len == 0:
                img = p0
                if tree.subtree_contains(C, img):
                    if img in excluded:
                        exclusions.add(tree.point(e, t0))
                        exclusions.add(tree.point(e, t1))
                    else:
                        pieces.append((e, t0, t1))
                continue
            segs = tree.path_segments(p0, p1)
            cm = C.span_map()
            touches: list[Fraction] = []
            acc = ZERO
            for seg in segs:
                length = tree.edge_length(seg.edge)
                lo, hi = min(seg.a, seg.b), max(seg.a, seg.b)
                if seg.edge in cm:
                    blo, bhi = cm[seg.edge]
                    olo, ohi = max(lo, blo), min(hi, bhi)
                    if olo <= ohi:
                        touches.append(acc + abs(olo - seg.a) * length)
                        touches.append(acc + abs(ohi - seg.a) * length)
                else:
                    for tv, vtx in ((ZERO, seg.edge[0]), (ONE, seg.edge[1])):
                        if lo <= tv <= hi and tree.subtree_covers_vertex(C, vtx):
                            touches.append(acc + abs(tv - seg.a) * length)
                acc += seg.length_on(tree)
            if not touches:
                continue
            entry, exit_ = min(touches), max(touches)
            ta = t0 + (entry / arc_len) * (t1 - t0)
            tb = t0 + (exit_ / arc_len) * (t1 - t0)
            # exclusion hits within the covered stretch
            splits = []
            for q in excluded:
                ell = _arc_position(tree, segs, q)
                if ell is not None and entry <= ell <= exit_:
                    tq = t0 + (ell / arc_len) * (t1 - t0)
                    exclusions.add(tree.point(e, tq))
                    if ta < tq < tb:
                        splits.append(tq)
            bounds = [ta] + sorted(splits) + [tb]
            if ta == tb:
                pieces.append((e, ta, tb))
            else:
                for lo_b, hi_b in zip(bounds, bounds[1:]):
                    pieces.append((e, lo_b, hi_b))

    # connect pieces through shared non-excluded points
    connectors: dict[TreePoint, list[int]] = {}
    for idx, (e, lo, hi) in enumerate(pieces):
        for t in {lo, hi}:
            p = tree.point(e, t)
            if p not in exclusions:
                connectors.setdefault(p, []).append(idx)
    parent = list(range(len(pieces)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for idxs in connectors.values():
        for j in idxs[1:]:
            ra, rb = find(idxs[0]), find(j)
            if ra != rb:
                parent[ra] = rb
    s_piece = None
    for idx, (e, lo, hi) in enumerate(pieces):
        t = tree.param_on_edge(s, e)
        if t is not None and lo <= t <= hi:
            s_piece = idx
            break
    assert s_piece is not None, "the attracting endpoint left its own basin"
    root = find(s_piece)
    members = [pieces[i] for i in range(len(pieces)) if find(i) == root]
    spans: dict = {}
    parts = [tree.subtree({e: (lo, hi)}) for e, lo, hi in members]
    closure = tree.subtree_union(parts)
    new_excluded = frozenset(
        q for q in exclusions if tree.subtree_contains(closure, q)
    )
    return closure, new_excluded


def immediate_basin(f: PLTreeMap, s: TreePoint, depth: int = 30) -> BasinReport:
    """Growing approximation of the immediate basin of the AFP.

    Starts from the half-open edge neighbourhood of s and pulls back through
    exact piecewise-linear preimages, keeping the component of s.  The open
    set is reported as its closure plus the finite excluded boundary.
    """
    tree = f.tree
    if not tree.is_endpoint(s):
        raise ValueError(f"{s} is not an endpoint")
    sv = tree.as_vertex(s)
    edge = min(tree._adj[sv])
    far = tree.vertex_point(edge[1] if edge[0] == sv else edge[0])
    C = tree.subtree({edge: (ZERO, ONE)})
    excluded = frozenset({far})
    stabilized = False
    used = 0
    for step in range(1, depth + 1):
        C2, ex2 = _open_preimage_component(f, C, excluded, s)
        assert tree.subtree_contains_subtree(C2, C), "basin approximation shrank"
        used = step
        if C2 == C and ex2 == excluded:
            stabilized = True
            break
        C, excluded = C2, ex2
    # closure-boundary points are always part of the excluded boundary
    assert set(tree.boundary(C)) <= set(excluded)
    return BasinReport(C, tuple(sorted(excluded, key=repr)), used, stabilized)


# ---------------------------------------------------------------------------
# point orbits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointClassification:
    kind: str                      # hits_periodic_cutpoint | exact_eventually_periodic
                                   # | converges_to_afp | undecided
    steps: int
    period: int | None = None
    preperiod: int | None = None
    residual: Fraction | None = None

    @property
    def decided(self) -> bool:
        return self.kind != "undecided"


def classify_point(f: PLTreeMap, x: TreePoint, afp: TreePoint,
                   budget: int = DEFAULT_BUDGET, tol=DEFAULT_TOL,
                   window: int = CONFIRM_WINDOW) -> PointClassification:
    """Classify a point orbit: exact eventual periodicity or convergence to the AFP."""
    tree = f.tree
    tol = frac(tol)
    seen: dict[TreePoint, int] = {x: 0}
    current = x
    close_streak = 0
    best = tree.distance(x, afp)
    for n in range(1, budget + 1):
        current = f.evaluate(current)
        prev = seen.get(current)
        if prev is not None:
            period = n - prev
            cycle = f.orbit(current, period - 1)
            if period == 1 and cycle[0] == afp:
                return PointClassification(
                    "converges_to_afp", n, residual=ZERO_RESIDUAL
                )
            kind = (
                "hits_periodic_cutpoint"
                if any(tree.is_cutpoint(q) for q in cycle)
                else "exact_eventually_periodic"
            )
            return PointClassification(kind, n, period=period, preperiod=prev)
        seen[current] = n
        d = tree.distance(current, afp)
        best = min(best, d)
        if d < tol:
            close_streak += 1
            if close_streak >= window:
                return PointClassification("converges_to_afp", n, residual=d)
        else:
            close_streak = 0
    return PointClassification("undecided", budget, residual=best)


def omega_limit(f: PLTreeMap, x: TreePoint, budget: int = DEFAULT_BUDGET,
                tol=DEFAULT_TOL, window: int = CONFIRM_WINDOW) -> list[TreePoint]:
    """Cluster representatives of the orbit tail; exact on eventual cycles."""
    tree = f.tree
    tol = frac(tol)
    seen: dict[TreePoint, int] = {x: 0}
    orbit = [x]
    for n in range(1, budget + 1):
        nxt = f.evaluate(orbit[-1])
        prev = seen.get(nxt)
        if prev is not None:
            cycle = orbit[prev:]
            return sorted(set(cycle), key=repr)
        orbit.append(nxt)
        seen[nxt] = n
    tail = orbit[-window:]
    reps: list[TreePoint] = []
    for p in tail:
        if all(tree.distance(p, r) > tol for r in reps):
            reps.append(p)
    return sorted(reps, key=repr)
