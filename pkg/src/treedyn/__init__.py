"""treedyn: exact dynamics of piecewise-linear maps on metric trees."""

__version__ = "0.1.0"

from .metric_tree import MetricTree, Subtree, TreePoint, frac
from .pl_map import PLTreeMap, PeriodicOrbitRecord

__all__ = [
    "MetricTree",
    "Subtree",
    "TreePoint",
    "PLTreeMap",
    "PeriodicOrbitRecord",
    "frac",
    "__version__",
]
