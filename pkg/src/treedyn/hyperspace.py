"""Dynamics on the hyperspace of subcontinua.

Forward orbits of subtrees under the induced map A -> f(A), detection of
convergence in the Hausdorff metric, and the orbit classifier: every
subcontinuum orbit is reported as asymptotically periodic, asymptotically
degenerate, both, or honestly undecided within the budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import BudgetExceeded, EmptyLiminf
from .metric_tree import Subtree, frac
from .pl_map import PLTreeMap

DEFAULT_TOL = Fraction(1, 10**6)
DEFAULT_BUDGET = 10**4
DEFAULT_MAX_PERIOD = 24
CONFIRM_WINDOW = 50


class ContinuumOrbit:
    """Grow-only orbit of a subtree under the induced hyperspace map."""

    def __init__(self, f: PLTreeMap, start: Subtree):
        self.f = f
        self.tree = f.tree
        self.subtrees: list[Subtree] = [start]
        self.diameters: list[Fraction] = [self.tree.diameter(start)]
        self.step_distances: list[Fraction] = []  # d_H(A_n, A_{n+1})

    def __len__(self) -> int:
        return len(self.subtrees)

    def extend(self, n_total: int):
        """Grow the orbit until it holds iterates 0..n_total."""
        while len(self.subtrees) <= n_total:
            nxt = self.f.image_subtree(self.subtrees[-1])
            self.step_distances.append(self.tree.hausdorff(self.subtrees[-1], nxt))
            self.subtrees.append(nxt)
            self.diameters.append(self.tree.diameter(nxt))

    def entry(self, n: int) -> Subtree:
        self.extend(n)
        return self.subtrees[n]


def iterate_continuum(f: PLTreeMap, A: Subtree, n: int,
                      budget: int = DEFAULT_BUDGET) -> ContinuumOrbit:
    """Materialize the first n iterates of A (plus A itself)."""
    if n > budget:
        raise BudgetExceeded(f"requested {n} iterates, budget {budget}")
    orbit = ContinuumOrbit(f, A)
    orbit.extend(n)
    return orbit


@dataclass
class DichotomyVerdict:
    """Outcome of classify_subcontinuum.

    tag is one of 'periodic', 'degenerate', 'both', 'undecided'.  Periodic
    verdicts carry the observed period and the limit cycle; degenerate
    verdicts carry the tail diameters.  ``exact`` marks verdicts certified by
    exact rational equality of orbit entries rather than by tolerance.
    """

    tag: str
    period: int | None = None
    cycle: list[Subtree] = field(default_factory=list)
    witness_diameters: list[Fraction] = field(default_factory=list)
    iterations: int = 0
    exact: bool = False
    preperiod: int | None = None
    residuals: dict = field(default_factory=dict)

    @property
    def decided(self) -> bool:
        return self.tag != "undecided"

    @property
    def periodic(self) -> bool:
        return self.tag in ("periodic", "both")

    @property
    def degenerate(self) -> bool:
        return self.tag in ("degenerate", "both")


def classify_subcontinuum(f: PLTreeMap, A: Subtree,
                          budget: int = DEFAULT_BUDGET,
                          tol=DEFAULT_TOL,
                          max_period: int = DEFAULT_MAX_PERIOD,
                          window: int = CONFIRM_WINDOW) -> DichotomyVerdict:
    """Classify the orbit of A as periodic / degenerate / both / undecided.

    Exact short-circuit: a repeated orbit entry (rational equality) certifies
    periodicity immediately.  Otherwise a period p is confirmed once
    d_H(F^n A, F^{n+p} A) stays below tol for `window` consecutive steps, and
    degeneracy once diameters stay below tol as long.  After the first
    confirmation the orbit runs one grace stretch (window + max_period) to
    give the other verdict a chance before reporting.
    """
    tol = frac(tol)
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if budget < max_period:
        raise ValueError("budget must be at least max_period")
    tree = f.tree
    orbit = ContinuumOrbit(f, A)
    seen: dict = {A.spans: 0}
    streaks = [0] * (max_period + 1)
    degenerate_streak = 0
    periodic_at: tuple[int, int] | None = None  # (period, step confirmed)
    degenerate_at: int | None = None
    best_step_residual: Fraction | None = None
    min_diameter = orbit.diameters[0]
    grace = window + max_period
    deadline = budget

    n = 0
    while n < deadline:
        n += 1
        orbit.extend(n)
        current = orbit.subtrees[n]
        # exact cycle: certifies the verdict outright
        prev = seen.get(current.spans)
        if prev is not None:
            p = n - prev
            cycle = orbit.subtrees[prev:n]
            diam_zero = all(tree.diameter(s) == 0 for s in cycle)
            tag = "both" if diam_zero else "periodic"
            return DichotomyVerdict(
                tag=tag, period=p, cycle=cycle,
                witness_diameters=orbit.diameters[max(0, n - window):n + 1],
                iterations=n, exact=True, preperiod=prev,
                residuals={"step": Fraction(0)},
            )
        seen[current.spans] = n

        diam = orbit.diameters[n]
        min_diameter = min(min_diameter, diam)
        if diam < tol:
            degenerate_streak += 1
        else:
            degenerate_streak = 0
        if degenerate_at is None and degenerate_streak >= window:
            degenerate_at = n
            deadline = min(deadline, n + grace)

        for p in range(1, min(max_period, n) + 1):
            if periodic_at is not None:
                break
            # cheap necessary condition: 2 d_H >= |diam difference|
            if abs(diam - orbit.diameters[n - p]) >= 2 * tol:
                streaks[p] = 0
                continue
            d = tree.hausdorff(current, orbit.subtrees[n - p])
            if best_step_residual is None or d < best_step_residual:
                best_step_residual = d
            if d < tol:
                streaks[p] += 1
                if streaks[p] >= window:
                    periodic_at = (p, n)
                    deadline = min(deadline, n + grace)
            else:
                streaks[p] = 0

        if periodic_at is not None and degenerate_at is not None:
            break

    residuals = {
        "min_diameter": min_diameter,
        "best_step_residual": best_step_residual,
    }
    if periodic_at is not None and degenerate_at is not None:
        tag = "both"
    elif periodic_at is not None:
        tag = "periodic"
    elif degenerate_at is not None:
        tag = "degenerate"
    else:
        return DichotomyVerdict(
            tag="undecided", iterations=n,
            witness_diameters=orbit.diameters[max(0, n - window):n + 1],
            residuals=residuals,
        )
    period = None
    cycle: list[Subtree] = []
    if periodic_at is not None:
        period, confirmed_n = periodic_at
        # report the minimal confirmed divisor period
        for q in range(1, period):
            if period % q == 0 and streaks[q] >= window:
                period = q
                break
        cycle = orbit.subtrees[len(orbit.subtrees) - period:]
    return DichotomyVerdict(
        tag=tag, period=period, cycle=cycle,
        witness_diameters=orbit.diameters[-(window + 1):],
        iterations=len(orbit.subtrees) - 1, exact=False,
        residuals=residuals,
    )


def liminf_limsup(tree, sequence: Sequence[Subtree],
                  window: int | None = None) -> tuple[Subtree, Subtree]:
    """Windowed liminf/limsup of a finite subtree sequence.

    When the given prefix is exactly eventually periodic the values are exact
    over one cycle; otherwise they are tail-window approximants satisfying
    liminf <= limsup.  An empty windowed liminf (possible for sequences with
    no common tail point) raises EmptyLiminf: the true limsup of such a
    sequence need not be connected, so no Subtree pair is returned.
    """
    if not sequence:
        raise EmptyLiminf("empty sequence", window=0)
    seen: dict = {}
    tail: Sequence[Subtree] | None = None
    for i, s in enumerate(sequence):
        if s.spans in seen:
            start = seen[s.spans]
            # confirm the cycle pattern holds to the end of the prefix
            p = i - start
            if all(
                sequence[k].spans == sequence[k + p].spans
                for k in range(start, len(sequence) - p)
            ):
                tail = sequence[start:start + p]
                break
        seen[s.spans] = i
    if tail is None:
        w = window if window is not None else min(len(sequence), CONFIRM_WINDOW)
        tail = sequence[-w:]
    inf = tail[0]
    for s in tail[1:]:
        nxt = tree.subtree_intersection(inf, s)
        if nxt is None:
            raise EmptyLiminf(
                f"windowed liminf over {len(tail)} entries is empty",
                window=len(tail),
            )
        inf = nxt
    sup = tree.subtree_union(tail)
    assert tree.subtree_contains_subtree(sup, inf)
    return inf, sup
