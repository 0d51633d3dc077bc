"""Topological entropy machinery for piecewise-linear tree maps.

Separated-set lower bounds and certified spanning upper bounds for the base
system, the induced system on subcontinua, and the induced system on the
closure of the map space (graphs under the Hausdorff metric of the max
product metric).  A Markov transition-matrix oracle provides independent
expected values for acceptance experiments.

Counts are exact: greedy searches run on integer-scaled rational data (a
numpy int64 fast path for single-edge trees, a Fraction path otherwise), so
every reported separated pair and every spanning subdivision is certified
by exact arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (
    BreakpointBudgetExceeded,
    EpsilonTooLarge,
    GridTooCoarse,
    LipschitzOverflow,
    NonpositiveEpsilon,
    NotMarkov,
)
from .metric_tree import MetricTree, ONE, Subtree, TreePoint, ZERO, frac
from .pl_map import DEFAULT_BREAKPOINT_BUDGET, PLTreeMap

INT64_LIMIT = 2 ** 62


# ---------------------------------------------------------------------------
# dynamical metric and grids
# ---------------------------------------------------------------------------

def dyn_metric(f: PLTreeMap, n: int, x: TreePoint, y: TreePoint) -> Fraction:
    """max over the first n iterates of the path-metric distance."""
    if n < 1:
        raise ValueError("n must be at least 1")
    tree = f.tree
    best = ZERO
    cx, cy = x, y
    for j in range(n):
        if j > 0:
            cx, cy = f.evaluate(cx), f.evaluate(cy)
        d = tree.distance(cx, cy)
        if d > best:
            best = d
    return best


def grid_points(tree: MetricTree, resolution) -> list[TreePoint]:
    """Uniform grid with spacing at most `resolution`, deterministic order."""
    resolution = frac(resolution)
    if resolution <= 0:
        raise NonpositiveEpsilon(f"resolution must be positive, got {resolution}")
    pts: list[TreePoint] = []
    seen = set()
    for e in tree.edge_keys:
        length = tree.edge_length(e)
        k = max(int(-((-length) // resolution)), 1)
        for i in range(k + 1):
            p = tree.point(e, Fraction(i, k))
            if p not in seen:
                seen.add(p)
                pts.append(p)
    return pts


# ---------------------------------------------------------------------------
# greedy separated sets
# ---------------------------------------------------------------------------

def _int_rows(rows: list[list[Fraction]]) -> tuple[np.ndarray, int] | None:
    """Scale rational rows to a shared integer lattice if int64 allows."""
    denom = 1
    for row in rows:
        for v in row:
            denom = denom * v.denominator // math.gcd(denom, v.denominator)
            if denom >= INT64_LIMIT:
                return None
    max_abs = 0
    data = []
    for row in rows:
        out = []
        for v in row:
            iv = v.numerator * (denom // v.denominator)
            out.append(iv)
            max_abs = max(max_abs, abs(iv))
        data.append(out)
    if max_abs >= INT64_LIMIT:
        return None
    return np.array(data, dtype=np.int64), denom


def _int_threshold(eps: Fraction, denom: int) -> int | None:
    t = (eps.numerator * denom) // eps.denominator + 1
    return t if t < INT64_LIMIT else None


def _greedy_separated_int(matrix: np.ndarray, threshold: int,
                          prior: list[int] | None = None) -> list[int]:
    """Indices of a greedily built separated subset: all pairwise max-metric
    differences at least `threshold` on the integer lattice."""
    total, width = matrix.shape
    buf = np.empty((total, width), dtype=np.int64)
    count = 0
    out: list[int] = []
    chosen = set()
    for i in prior or ():
        buf[count] = matrix[i]
        count += 1
        out.append(i)
        chosen.add(i)
    for i in range(total):
        if i in chosen:
            continue
        if count:
            dmax = np.abs(buf[:count] - matrix[i]).max(axis=1)
            if int(dmax.min()) < threshold:
                continue
        buf[count] = matrix[i]
        count += 1
        out.append(i)
    return out


def _greedy_separated_frac(rows: list[list[Fraction]], eps: Fraction,
                           prior: list[int] | None = None) -> list[int]:
    selected = list(prior) if prior else []
    out = list(selected)
    for i in range(len(rows)):
        if i in out:
            continue
        ok = True
        ri = rows[i]
        for j in out:
            rj = rows[j]
            if not any(abs(a - b) > eps for a, b in zip(ri, rj)):
                ok = False
                break
        if ok:
            out.append(i)
    return out


class SeparatedSearch:
    """Greedy separated-set search over a fixed grid, extendable in n.

    Rows are per-grid-point coordinate traces whose pairwise max-metric is
    the dynamical metric: orbit positions for points, interval ends for
    single-edge subtrees.  Selections extend monotonically as n grows, so
    counts are nondecreasing in n by construction.
    """

    def __init__(self, rows_fn, count: int, eps: Fraction):
        self._rows_fn = rows_fn      # n -> list of row lists (len count)
        self.count = count
        self.eps = eps
        self._selected: list[int] = []
        self._n_done = 0

    def selected_at(self, n: int) -> list[int]:
        if n < self._n_done:
            raise ValueError("searches only extend forward in n")
        rows = self._rows_fn(n)
        packed = _int_rows(rows)
        if packed is not None:
            matrix, denom = packed
            threshold = _int_threshold(self.eps, denom)
        else:
            threshold = None
        if packed is not None and threshold is not None:
            self._selected = _greedy_separated_int(matrix, threshold, self._selected)
        else:
            self._selected = _greedy_separated_frac(rows, self.eps, self._selected)
        self._n_done = n
        return list(self._selected)


class _ScalarMap:
    """Param-space view of a PL self-map of a single-edge tree.

    On one edge the arc between images is the straight parameter interval,
    so evaluation is plain linear interpolation in exact rationals.
    """

    def __init__(self, f: PLTreeMap):
        tree = f.tree
        (e,) = tree.edge_keys
        self.edge = e
        self.length = tree.edge_length(e)
        rows = f.table[e]
        self.xs = [t for t, _ in rows]
        self.ys = [tree.param_on_edge(p, e) for _, p in rows]

    def __call__(self, t: Fraction) -> Fraction:
        from bisect import bisect_right

        xs, ys = self.xs, self.ys
        i = bisect_right(xs, t) - 1
        if i >= len(xs) - 1:
            return ys[-1]
        if t == xs[i]:
            return ys[i]
        return ys[i] + (t - xs[i]) * (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])


def _point_rows(tree: MetricTree, f: PLTreeMap, pts: list[TreePoint]):
    """Row factory for point orbits on a single-edge tree (arclength coords)."""
    scalar = _ScalarMap(f)
    length = scalar.length
    orbits = [[tree.param_on_edge(p, scalar.edge)] for p in pts]

    def rows(n: int) -> list[list[Fraction]]:
        for orb in orbits:
            while len(orb) < n:
                orb.append(scalar(orb[-1]))
        return [[q * length for q in orb[:n]] for orb in orbits]

    return rows


def _point_rows_general(tree: MetricTree, f: PLTreeMap, pts: list[TreePoint]):
    """General-tree variant: per-step distances handled via Fraction rows of
    coordinates against anchor landmarks (exact lower-bounding is unsafe, so
    pairwise distances are computed directly)."""
    orbits = [[p] for p in pts]

    def ensure(n):
        for orb in orbits:
            while len(orb) < n:
                orb.append(f.evaluate(orb[-1]))

    class GeneralSearch:
        def __init__(self, eps):
            self.eps = eps
            self._selected: list[int] = []
            self._n_done = 0

        def selected_at(self, n: int) -> list[int]:
            ensure(n)
            out = list(self._selected)
            for i in range(len(orbits)):
                if i in out:
                    continue
                ok = True
                for j in out:
                    if not any(
                        tree.distance(orbits[i][k], orbits[j][k]) > self.eps
                        for k in range(n)
                    ):
                        ok = False
                        break
                if ok:
                    out.append(i)
            self._selected = out
            self._n_done = n
            return list(out)

    return GeneralSearch


def _make_point_search(f: PLTreeMap, eps: Fraction, resolution: Fraction):
    tree = f.tree
    pts = grid_points(tree, resolution)
    if len(tree.edge_keys) == 1:
        search = SeparatedSearch(_point_rows(tree, f, pts), len(pts), eps)
    else:
        search = _point_rows_general(tree, f, pts)(eps)
    return pts, search


def _validate_sep_args(eps, resolution):
    eps = frac(eps)
    if eps <= 0:
        raise NonpositiveEpsilon(f"eps must be positive, got {eps}")
    resolution = frac(resolution) if resolution is not None else eps / 8
    if resolution > eps / 4:
        raise GridTooCoarse(
            f"grid resolution {resolution} exceeds eps/4 = {eps / 4}"
        )
    return eps, resolution


def sep_points(f: PLTreeMap, n: int, eps, grid_resolution=None) -> list[TreePoint]:
    """A greedily built (n, f, eps)-separated subset of a uniform grid."""
    eps, resolution = _validate_sep_args(eps, grid_resolution)
    pts, search = _make_point_search(f, eps, resolution)
    return [pts[i] for i in search.selected_at(n)]


def sep_count(f: PLTreeMap, n: int, eps, grid_resolution=None) -> int:
    """Certified lower bound for the maximal (n, f, eps)-separated cardinality."""
    return len(sep_points(f, n, eps, grid_resolution))


# ---------------------------------------------------------------------------
# certified spanning upper bounds
# ---------------------------------------------------------------------------

class SpanTable:
    """Affine-piece refinement of a single-edge map with full orbit vectors.

    Holds parameters on which every iterate below the build depth is affine,
    plus each parameter's orbit; dynamical piece diameters (and hence
    certified spanning counts) for any shallower depth read straight off it.
    Finer-than-needed pieces only loosen the upper bound, never break it.
    """

    def __init__(self, f: PLTreeMap, n: int, budget: int):
        scalar = _ScalarMap(f)
        self.length = scalar.length
        self.depth = max(n, 1)
        params = sorted(set(scalar.xs))
        vecs = {p: [p] for p in params}
        if self.depth >= 2:
            for p in params:
                vecs[p].append(scalar(p))
        self._levels = {1: list(params)}
        for k in range(2, self.depth):
            fresh = []
            for a, b in zip(params, params[1:]):
                va, vb = vecs[a][k - 1], vecs[b][k - 1]
                if va == vb:
                    continue
                lo, hi = (va, vb) if va < vb else (vb, va)
                for c in scalar.xs:
                    if lo < c < hi:
                        t = a + (c - va) * (b - a) / (vb - va)
                        if t not in vecs:
                            ratio = (t - a) / (b - a)
                            vecs[t] = [
                                vecs[a][j] + ratio * (vecs[b][j] - vecs[a][j])
                                for j in range(k)
                            ]
                            fresh.append(t)
            if fresh:
                params = sorted(set(params) | set(fresh))
                if len(params) > budget:
                    raise LipschitzOverflow(
                        f"refinement needs {len(params)} pieces, budget {budget}"
                    )
            self._levels[k] = list(params)
            for p in params:
                vecs[p].append(scalar(vecs[p][k - 1]))
        self._vecs = vecs

    def _params_for(self, n: int) -> list[Fraction]:
        if n > self.depth:
            raise ValueError("table built too shallow")
        return self._levels[min(max(n - 1, 1), max(self._levels))]

    def span_count(self, n: int, eps: Fraction, resolution=None) -> int:
        """Spanning bound at depth n over the native level-(n-1) pieces."""
        params = self._params_for(n)
        vecs = self._vecs
        total = 0
        for a, b in zip(params, params[1:]):
            va, vb = vecs[a], vecs[b]
            rho = max(abs(va[j] - vb[j]) for j in range(n)) * self.length
            k = max(int(-((-rho) // eps)), 1)
            if resolution is not None:
                dom = (b - a) * self.length
                k = max(k, int(-((-dom) // resolution)))
            total += k
        return total


def _span_count_generic(f: PLTreeMap, n: int, eps, resolution, budget: int) -> int:
    """Multi-edge fallback: refine through exact composite breakpoints."""
    try:
        prefixes = f.prefix_iterates(max(n - 1, 0), budget)
    except BreakpointBudgetExceeded as err:
        raise LipschitzOverflow(
            f"certifying the spanning bound needs iterates past the "
            f"breakpoint budget: {err}"
        ) from err
    tree = f.tree
    total = 0
    for e in tree.edge_keys:
        params = set()
        for g in prefixes:
            params.update(g.breakpoints_on(e))
        params = sorted(params)
        length = tree.edge_length(e)
        orbit_cache: dict[Fraction, list[TreePoint]] = {}

        def orbit_of(t):
            if t not in orbit_cache:
                orbit_cache[t] = f.orbit(tree.point(e, t), n - 1)
            return orbit_cache[t]

        for a, b in zip(params, params[1:]):
            oa, ob = orbit_of(a), orbit_of(b)
            rho = max(tree.distance(pa, pb) for pa, pb in zip(oa, ob))
            k = max(int(-((-rho) // eps)), 1)
            if resolution is not None:
                dom = (b - a) * length
                k = max(k, int(-((-dom) // resolution)))
            total += k
    return total


def span_count(f: PLTreeMap, n: int, eps, grid_resolution=None,
               budget: int = DEFAULT_BREAKPOINT_BUDGET,
               table: SpanTable | None = None) -> int:
    """Certified upper bound for the minimal (n, f, eps)-spanning cardinality.

    Every iterate below n is affine on the refined pieces, so a piece's
    dynamical diameter is the max over iterates of the image arclength;
    chopping each piece into ceil(diameter/eps) parts yields centers whose
    dynamical balls of radius eps cover the tree.
    """
    eps = frac(eps)
    if eps <= 0:
        raise NonpositiveEpsilon(f"eps must be positive, got {eps}")
    if n < 1:
        raise ValueError("n must be at least 1")
    resolution = frac(grid_resolution) if grid_resolution is not None else None
    if table is not None:
        return table.span_count(n, eps, resolution)
    if len(f.tree.edge_keys) == 1:
        return SpanTable(f, n, budget).span_count(n, eps, resolution)
    return _span_count_generic(f, n, eps, resolution, budget)


# ---------------------------------------------------------------------------
# entropy tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CellEstimate:
    n: int
    eps: Fraction
    sep_lb: int
    span_ub: int
    rate_lb: float        # log(sep_lb)/n
    rate_ub: float        # log(span_ub)/n


@dataclass
class EntropyEstimate:
    ns: tuple[int, ...]
    eps_list: tuple[Fraction, ...]
    rows: tuple[CellEstimate, ...]
    bracket: tuple[float, float]
    span_increments: dict[Fraction, float]
    grid_resolutions: dict[Fraction, Fraction]

    def cell(self, n: int, eps) -> CellEstimate:
        eps = frac(eps)
        for row in self.rows:
            if row.n == n and row.eps == eps:
                return row
        raise KeyError((n, eps))

    def check_monotonicity(self) -> list[str]:
        """sep counts nondecreasing in n, nonincreasing in eps; span likewise."""
        problems = []
        for eps in self.eps_list:
            cells = [r for r in self.rows if r.eps == eps]
            for a, b in zip(cells, cells[1:]):
                if b.sep_lb < a.sep_lb:
                    problems.append(f"sep drops in n at eps={eps}: {a.sep_lb}->{b.sep_lb}")
                if b.span_ub < a.span_ub:
                    problems.append(f"span drops in n at eps={eps}: {a.span_ub}->{b.span_ub}")
        for n in self.ns:
            cells = [r for r in self.rows if r.n == n]
            cells.sort(key=lambda r: r.eps, reverse=True)
            for a, b in zip(cells, cells[1:]):
                if b.sep_lb < a.sep_lb:  # smaller eps must separate at least as much
                    problems.append(f"sep rises with eps at n={n}")
        return problems

    def csv_rows(self) -> list[tuple]:
        return [
            (r.n, str(r.eps), r.sep_lb, r.span_ub, f"{r.rate_lb:.6f}", f"{r.rate_ub:.6f}")
            for r in self.rows
        ]


def _ladder(n_max: int) -> tuple[int, ...]:
    ns = sorted({min(k, n_max) for k in (4, 8, 12, 16)} | {n_max})
    return tuple(n for n in ns if n >= 1)


def entropy_estimate(f: PLTreeMap, n_max: int, eps_list: Sequence,
                     grid_resolution=None, grid_divisor: int = 8,
                     budget: int = DEFAULT_BREAKPOINT_BUDGET,
                     workers: int = 1) -> EntropyEstimate:
    """Separated/spanning tables with a final entropy bracket.

    The bracket lower end is the best (1/n) log sep rate at the deepest n;
    the upper end is the smallest per-eps tail growth rate of the spanning
    bounds (a difference quotient, so eventually-constant spanning tables
    report zero).  Per-eps cells are independent; `workers` > 1 runs them in
    a thread pool without changing the output.
    """
    eps_list = tuple(sorted((frac(e) for e in eps_list), reverse=True))
    if not eps_list or eps_list[-1] <= 0:
        raise NonpositiveEpsilon("eps ladder must be positive")
    ns = _ladder(n_max)
    table = SpanTable(f, ns[-1], budget) if len(f.tree.edge_keys) == 1 else None

    def one_eps(eps: Fraction):
        res = frac(grid_resolution) if grid_resolution is not None else eps / grid_divisor
        eps_v, res = _validate_sep_args(eps, res)
        pts, search = _make_point_search(f, eps_v, res)
        cells = []
        span_logs = []
        for n in ns:
            sep_n = len(search.selected_at(n))
            span_n = span_count(f, n, eps_v, budget=budget, table=table)
            rate_lb = math.log(sep_n) / n if sep_n > 0 else 0.0
            rate_ub = math.log(span_n) / n if span_n > 0 else 0.0
            cells.append(CellEstimate(n, eps_v, sep_n, span_n, rate_lb, rate_ub))
            span_logs.append((n, math.log(span_n) if span_n > 0 else 0.0))
        if len(span_logs) >= 2:
            (n0, l0), (n1, l1) = span_logs[-2], span_logs[-1]
            inc = (l1 - l0) / (n1 - n0)
        else:
            inc = span_logs[-1][1] / span_logs[-1][0]
        return eps, res, cells, inc

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one_eps, eps_list))
    else:
        results = [one_eps(e) for e in eps_list]

    rows = []
    increments: dict[Fraction, float] = {}
    resolutions: dict[Fraction, Fraction] = {}
    lower = -math.inf
    for eps, res, cells, inc in results:
        resolutions[eps] = res
        rows.extend(cells)
        increments[eps] = inc
        lower = max(lower, cells[-1].rate_lb)
    upper = min(increments.values())
    return EntropyEstimate(ns, eps_list, tuple(rows), (lower, upper),
                           increments, resolutions)


def subsystem_entropy_sup(estimates: Sequence[EntropyEstimate]) -> tuple[float, float]:
    """Entropy bracket of a union of invariant pieces: the sup of the pieces'."""
    if not estimates:
        raise ValueError("need at least one estimate")
    lows = [e.bracket[0] for e in estimates]
    highs = [e.bracket[1] for e in estimates]
    return max(lows), max(highs)


# ---------------------------------------------------------------------------
# Markov oracle
# ---------------------------------------------------------------------------

def markov_entropy_oracle(f: PLTreeMap, partition: Sequence[Subtree],
                          tol: float = 1e-9, max_iter: int = 10 ** 5) -> float:
    """log spectral radius of the exact covering matrix of a Markov partition."""
    tree = f.tree
    _validate_partition(tree, partition)
    images = [f.image_subtree(p) for p in partition]
    m = len(partition)
    matrix = np.zeros((m, m))
    for i, img in enumerate(images):
        covered = []
        for j, piece in enumerate(partition):
            if tree.subtree_contains_subtree(img, piece):
                matrix[i, j] = 1.0
                covered.append(piece)
        if not covered:
            raise NotMarkov(f"piece {i} image covers no piece", piece_index=i)
        if tree.subtree_union(covered) != img:
            raise NotMarkov(
                f"piece {i} image is not an exact union of pieces", piece_index=i
            )
    radius = _power_iteration_radius(matrix, tol, max_iter)
    return math.log(max(radius, 1.0))


def _validate_partition(tree: MetricTree, partition: Sequence[Subtree]):
    per_edge: dict = {e: [] for e in tree.edge_keys}
    for idx, piece in enumerate(partition):
        for e, lo, hi in piece.spans:
            if lo != hi:
                per_edge[e].append((lo, hi, idx))
    for e, ivals in per_edge.items():
        ivals.sort()
        if not ivals or ivals[0][0] != ZERO or ivals[-1][1] != ONE:
            raise NotMarkov(f"partition does not tile edge {e}")
        for (l1, h1, i1), (l2, h2, i2) in zip(ivals, ivals[1:]):
            if h1 != l2:
                raise NotMarkov(
                    f"partition gap or overlap on {e} between pieces {i1} and {i2}"
                )


def _power_iteration_radius(matrix: np.ndarray, tol: float, max_iter: int) -> float:
    m = matrix.shape[0]
    v = np.ones(m)
    radius = 0.0
    for _ in range(max_iter):
        w = matrix @ v
        norm = float(np.max(np.abs(w)))
        if norm == 0.0:
            return 0.0
        w /= norm
        if abs(norm - radius) < tol:
            return norm
        radius = norm
        v = w
    return radius


# ---------------------------------------------------------------------------
# connected envelope: separated subcontinua
# ---------------------------------------------------------------------------

def _subtree_sample(tree: MetricTree, point_grid: list[TreePoint],
                    arc_grid: int) -> list[Subtree]:
    """Singletons at the point grid, then arcs over a coarse grid."""
    sample = [tree.singleton(p) for p in point_grid]
    if arc_grid > 1:
        diam = tree.diameter(tree.full_subtree())
        coarse = grid_points(tree, diam / (arc_grid - 1))
        for i in range(len(coarse)):
            for j in range(i + 1, len(coarse)):
                sample.append(tree.arc(coarse[i], coarse[j]))
    return sample


def connected_envelope_sep(f: PLTreeMap, n: int, eps, grid_resolution=None,
                           arc_grid: int = 17, sample_size: int | None = None,
                           return_selection: bool = False):
    """Greedy separated subset of subcontinua under the dynamical Hausdorff metric.

    The sample holds grid singletons (in the same order as sep_points) and
    arcs over a coarse grid; singleton-only separation reproduces the base
    point counts exactly.
    """
    eps, resolution = _validate_sep_args(eps, grid_resolution)
    tree = f.tree
    sample = _subtree_sample(tree, grid_points(tree, resolution), arc_grid)
    if sample_size is not None:
        sample = sample[:sample_size]
    orbits = [[s] for s in sample]

    def ensure(upto):
        for orb in orbits:
            while len(orb) < upto:
                orb.append(f.image_subtree(orb[-1]))

    ensure(n)
    if len(tree.edge_keys) == 1:
        e = tree.edge_keys[0]
        length = tree.edge_length(e)
        rows = []
        for orb in orbits:
            row = []
            for s in orb[:n]:
                (lo, hi) = s.span_map()[e]
                row.extend((lo * length, hi * length))
            rows.append(row)
        packed = _int_rows(rows)
        threshold = _int_threshold(eps, packed[1]) if packed else None
        if packed is not None and threshold is not None:
            selected = _greedy_separated_int(packed[0], threshold)
        else:
            selected = _greedy_separated_frac(rows, eps)
    else:
        selected = []
        for i in range(len(sample)):
            ok = True
            for j in selected:
                if not any(
                    tree.hausdorff(orbits[i][k], orbits[j][k]) > eps
                    for k in range(n)
                ):
                    ok = False
                    break
            if ok:
                selected.append(i)
    if return_selection:
        return len(selected), [sample[i] for i in selected]
    return len(selected)


# ---------------------------------------------------------------------------
# functional envelope: the finitely-described separated family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiMapGraph:
    """A closed set-valued map as a finite union of domain-by-value blocks.

    Values are subtrees (nonempty, compact, connected); the block domains
    cover the tree, so the graph is a closed subset of the product with
    upper-semicontinuous fibers.
    """

    blocks: tuple[tuple[Subtree, Subtree], ...]

    def iterate_values(self, f: PLTreeMap) -> "MultiMapGraph":
        return MultiMapGraph(
            tuple((dom, f.image_subtree(val)) for dom, val in self.blocks)
        )

    def point_distance(self, tree: MetricTree, a: TreePoint, b: TreePoint) -> Fraction:
        """Distance from the product point (a, b) to the graph, max metric."""
        best = None
        for dom, val in self.blocks:
            d = max(tree.dist_to_subtree(a, dom), tree.dist_to_subtree(b, val))
            if best is None or d < best:
                best = d
        return best


def _complement_components(tree: MetricTree, edge) -> list[Subtree]:
    """Closures of the components of the tree minus the open edge."""
    out = []
    for v in edge:
        spans = {}
        stack = [v]
        seen = {v}
        while stack:
            w = stack.pop()
            for e2 in tree._adj[w]:
                if e2 == edge or e2 in spans:
                    continue
                spans[e2] = (ZERO, ONE)
                other = e2[1] if e2[0] == w else e2[0]
                if other not in seen:
                    seen.add(other)
                    stack.append(other)
        if spans:
            out.append(tree.subtree(spans))
    return out


@dataclass
class EnvelopeFamily:
    """The lazily materialized separated family of set-valued maps.

    Tuples over the base separated set index piecewise-constant maps on one
    edge (full-valued at the grid points and off the edge); distinct tuples
    are dynamically separated because hiding in a full-valued block costs
    more than eps in the domain direction.
    """

    f: PLTreeMap
    edge: tuple
    n: int
    eps: Fraction
    K: int
    base_points: tuple[TreePoint, ...]

    @property
    def claimed_count(self) -> int:
        return len(self.base_points) ** self.K

    def _grid_param(self, k: int) -> Fraction:
        return Fraction(k, self.K)

    def graph(self, tuple_indices: Sequence[int]) -> MultiMapGraph:
        if len(tuple_indices) != self.K:
            raise ValueError(f"need a {self.K}-tuple")
        tree = self.f.tree
        full = tree.full_subtree()
        blocks = []
        for j, idx in enumerate(tuple_indices, start=1):
            dom = tree.subtree({self.edge: (self._grid_param(j - 1), self._grid_param(j))})
            blocks.append((dom, tree.singleton(self.base_points[idx])))
        for k in range(self.K + 1):
            blocks.append(
                (tree.singleton(tree.point(self.edge, self._grid_param(k))), full)
            )
        for side in _complement_components(tree, self.edge):
            blocks.append((side, full))
        return MultiMapGraph(tuple(blocks))

    def sample_tuples(self, count: int, rng) -> list[tuple[int, ...]]:
        m = len(self.base_points)
        out = set()
        guard = 0
        while len(out) < count and guard < 50 * count:
            out.add(tuple(rng.randrange(m) for _ in range(self.K)))
            guard += 1
        return sorted(out)

    def verify_pair_separated(self, ta: Sequence[int], tb: Sequence[int]) -> bool:
        """Certify the two tuple maps are (n, eps)-separated in graph distance.

        Exhibits an iterate and a witness product point on one graph whose
        exact distance to the other graph exceeds eps.
        """
        if tuple(ta) == tuple(tb):
            return False
        tree = self.f.tree
        ga, gb = self.graph(ta), self.graph(tb)
        for _ in range(self.n):
            for j in range(self.K):
                if ta[j] == tb[j]:
                    continue
                dom_a, val_a = ga.blocks[j]
                mid = tree.point(
                    self.edge,
                    (self._grid_param(j) + self._grid_param(j + 1)) / 2,
                )
                ya = tree.subtree_points(val_a)[0]
                if gb.point_distance(tree, mid, ya) > self.eps:
                    return True
            ga, gb = ga.iterate_values(self.f), gb.iterate_values(self.f)
        return False


def envelope_sep_family(f: PLTreeMap, n: int, eps, edge=None,
                        grid_resolution=None) -> EnvelopeFamily:
    """Build the separated family of set-valued maps over one edge.

    The grid size is floor(1/(2 eps)) - 1 and the base separated set comes
    from sep_points; the family size is the base count to that power.
    """
    eps = frac(eps)
    K = int(Fraction(1, 2 * eps)) - 1
    if K < 1:
        raise EpsilonTooLarge(f"eps={eps} leaves no interior grid (K={K})")
    tree = f.tree
    edge = edge if edge is not None else tree.edge_keys[0]
    base = sep_points(f, n, eps, grid_resolution)
    return EnvelopeFamily(f, edge, n, eps, K, tuple(base))


def envelope_span_count(f: PLTreeMap, n: int, delta,
                        budget: int = DEFAULT_BREAKPOINT_BUDGET,
                        table: SpanTable | None = None) -> int:
    """Certified upper bound for the (n, delta)-spanning count of the
    induced map on subcontinua.

    Hulls of up-to-|endpoints| subsets of the point-spanning centers
    delta-shadow every subcontinuum orbit, because each endpoint of a
    subcontinuum can be moved to its piece center at dynamical cost delta.
    """
    m = span_count(f, n, delta, budget=budget, table=table)
    ends = max(len(f.tree.endpoints()), 2)
    return sum(math.comb(m, k) for k in range(1, ends + 1))


@dataclass(frozen=True)
class EnvelopeBoundRow:
    n: int
    eps: Fraction
    n1: int                 # tuple length: grid cells on the edge
    n2: int                 # covering count by small continua
    sep_lb: int
    lower_log: float        # n1 * log(sep_lb) <= log sep(n, induced map, eps)
    envelope_span: int
    upper_log: float        # n2 * log(envelope_span) >= log sep(n, induced map, eps)


@dataclass
class EnvelopeBounds:
    rows: tuple[EnvelopeBoundRow, ...]
    upper_rate_increments: dict[Fraction, list[tuple[int, float]]]

    def row(self, n: int, eps) -> EnvelopeBoundRow:
        eps = frac(eps)
        for r in self.rows:
            if r.n == n and r.eps == eps:
                return r
        raise KeyError((n, eps))


def envelope_entropy_bounds(f: PLTreeMap, n_max: int, eps_list: Sequence,
                            grid_resolution=None, grid_divisor: int = 8,
                            budget: int = DEFAULT_BREAKPOINT_BUDGET) -> EnvelopeBounds:
    """Two-sided bounds on the growth of separated sets of set-valued maps.

    Per (n, eps): the lower side multiplies the base separated count's log
    by the edge-grid length; the upper side multiplies the subcontinua
    spanning bound's log by the covering number of the tree by small
    continua.  Upper rate increments (difference quotients in n, scaled by
    the covering number) expose the zero-entropy collapse.
    """
    eps_list = tuple(sorted((frac(e) for e in eps_list), reverse=True))
    ns = _ladder(n_max)
    tree = f.tree
    table = SpanTable(f, ns[-1], budget) if len(tree.edge_keys) == 1 else None
    shared_pts = None
    if grid_resolution is not None:
        shared_pts = grid_points(tree, frac(grid_resolution))
    rows = []
    increments: dict[Fraction, list[tuple[int, float]]] = {}
    shared_rows_fn = None
    if shared_pts is not None and len(tree.edge_keys) == 1:
        shared_rows_fn = _point_rows(tree, f, shared_pts)
    for eps in eps_list:
        K = int(Fraction(1, 2 * eps)) - 1
        if K < 1:
            raise EpsilonTooLarge(f"eps={eps} too large for the edge grid")
        n2 = len(tree.cover_by_continua(eps))
        res = frac(grid_resolution) if grid_resolution is not None else eps / grid_divisor
        eps_v, res = _validate_sep_args(eps, res)
        if shared_rows_fn is not None:
            search = SeparatedSearch(shared_rows_fn, len(shared_pts), eps_v)
        else:
            pts, search = _make_point_search(f, eps_v, res)
        logs = []
        for n in ns:
            sep_n = len(search.selected_at(n))
            env_span = envelope_span_count(f, n, eps_v / 2, budget=budget, table=table)
            lower_log = K * (math.log(sep_n) if sep_n else 0.0)
            upper_log = n2 * math.log(env_span)
            rows.append(
                EnvelopeBoundRow(n, eps_v, K, n2, sep_n, lower_log, env_span, upper_log)
            )
            logs.append((n, math.log(env_span)))
        incs = []
        for (n0, l0), (n1, l1) in zip(logs, logs[1:]):
            incs.append((n1, n2 * (l1 - l0) / (n1 - n0)))
        increments[eps_v] = incs
    return EnvelopeBounds(tuple(rows), increments)
