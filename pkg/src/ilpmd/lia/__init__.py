"""Integer linear arithmetic: bounds, propagation, reification and exact LP."""

from .bounds import INF, BoundsStore, LinearConstraint, Trail, make_constraint, propagate_bounds
from .reify import reify
from .simplex import LPResult, branch_select_int, lp_check

__all__ = [
    "INF", "BoundsStore", "LinearConstraint", "Trail", "make_constraint", "propagate_bounds",
    "reify", "LPResult", "branch_select_int", "lp_check",
]
