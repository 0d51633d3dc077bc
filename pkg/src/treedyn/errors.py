"""Exception types shared across the toolkit."""


class TreeDynError(Exception):
    """Base class for all treedyn errors."""


# -- tree construction / geometry ------------------------------------------

class CycleDetected(TreeDynError):
    pass


class Disconnected(TreeDynError):
    pass


class NonpositiveLength(TreeDynError):
    pass


class PointNotOnTree(TreeDynError):
    pass


class NonpositiveEpsilon(TreeDynError):
    pass


# -- piecewise-linear maps ---------------------------------------------------

class FixedSegmentPresent(TreeDynError):
    """A whole segment is fixed pointwise.

    Carries the fixed segments (as subtrees) and any isolated fixed points
    found alongside them; the caller decides how to proceed.
    """

    def __init__(self, segments, isolated=()):
        self.segments = list(segments)
        self.isolated = list(isolated)
        super().__init__(f"{len(self.segments)} pointwise-fixed segment(s) present")


class BreakpointBudgetExceeded(TreeDynError):
    def __init__(self, count, budget):
        self.count = count
        self.budget = budget
        super().__init__(f"composite needs {count} breakpoints, budget is {budget}")


class NotInvariant(TreeDynError):
    pass


# -- orbits / classification -------------------------------------------------

class BudgetExceeded(TreeDynError):
    pass


class EmptyLiminf(TreeDynError):
    """Windowed liminf of a subtree sequence came out empty."""

    def __init__(self, message, window=None):
        self.window = window
        super().__init__(message)


class NotConsistent(TreeDynError):
    pass


class NoFixedPointInA(TreeDynError):
    pass


class FixedCutPointFound(TreeDynError):
    def __init__(self, message, witness=None):
        self.witness = witness
        super().__init__(message)


class DescentStalled(TreeDynError):
    def __init__(self, message, trace=()):
        self.trace = list(trace)
        super().__init__(message)


# -- entropy -------------------------------------------------------------------

class GridTooCoarse(TreeDynError):
    pass


class LipschitzOverflow(TreeDynError):
    """Certifying a spanning bound needs a finer structure than the budget allows."""


class EpsilonTooLarge(TreeDynError):
    pass


class NotMarkov(TreeDynError):
    def __init__(self, message, piece_index=None):
        self.piece_index = piece_index
        super().__init__(message)
