from .cells import (
    AffineMap,
    CellUnion,
    GeometryError,
    Point,
    apply_affine,
    classify_point,
    clip_halfplane,
    clip_rect,
    contains_point,
    dilate,
    minkowski_sum,
    point_cell_distance,
    regular_polygon,
    subtract_convex,
)
from .intervals import (
    TOL,
    ArcUnion,
    IntervalUnion,
    InvalidIntervalError,
    arc_measure,
    measure,
    normalize_arcs,
    normalize_intervals,
)
from .setexpr import (
    UNIT_SQUARE,
    Attractor,
    BudgetExceededError,
    Cells,
    Clip,
    IfsSystem,
    Image,
    SetExpr,
    Union,
    cell_count,
    eval_set,
    expand_attractor,
)
