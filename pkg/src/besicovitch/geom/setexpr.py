"""Lazy construction recipes for cell unions."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Union as _U

import numpy as np

from .cells import AffineMap, CellUnion, GeometryError, Rect, apply_affine, clip_rect

DEFAULT_CELL_BUDGET = 10**7
DEFAULT_MAX_LEVEL = 12
BUDGET_ENV = "BESICOVITCH_CELL_BUDGET"


class BudgetExceededError(RuntimeError):
    pass


def cell_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    return int(raw) if raw else DEFAULT_CELL_BUDGET


@dataclass(frozen=True)
class IfsSystem:
    maps: tuple[AffineMap, ...]

    def __post_init__(self):
        if not self.maps:
            raise GeometryError("an IFS needs at least one map")
        for i, m in enumerate(self.maps):
            if not m.operator_norm() < 1:
                raise GeometryError(f"map {i} is not a contraction")


@dataclass(frozen=True)
class Cells:
    cells: CellUnion


@dataclass(frozen=True)
class Attractor:
    system: IfsSystem
    level: int
    seed: CellUnion

    def __post_init__(self):
        if self.level < 0:
            raise GeometryError("attractor level must be nonnegative")


@dataclass(frozen=True)
class Image:
    map: AffineMap
    child: "SetExpr"


@dataclass(frozen=True)
class Union:
    children: tuple["SetExpr", ...]


@dataclass(frozen=True)
class Clip:
    rect: Rect
    child: "SetExpr"


SetExpr = _U[Cells, Attractor, Image, Union, Clip]

UNIT_SQUARE = CellUnion.from_rects([(0.0, 0.0, 1.0, 1.0)])


def cell_count(expr: SetExpr) -> int:
    """Cells produced by :func:`eval_set` before clipping drops any."""
    if isinstance(expr, Cells):
        return len(expr.cells)
    if isinstance(expr, Attractor):
        return len(expr.seed) * len(expr.system.maps) ** expr.level
    if isinstance(expr, (Image, Clip)):
        return cell_count(expr.child)
    if isinstance(expr, Union):
        return sum(cell_count(c) for c in expr.children)
    raise TypeError(f"not a set expression: {expr!r}")


def eval_set(expr: SetExpr, budget: int | None = None, max_level: int = DEFAULT_MAX_LEVEL) -> CellUnion:
    budget = cell_budget() if budget is None else budget
    n = cell_count(expr)
    if n > budget:
        raise BudgetExceededError(f"expression expands to {n} cells, budget is {budget}")
    return _eval(expr, max_level)


def _eval(expr: SetExpr, max_level: int) -> CellUnion:
    if isinstance(expr, Cells):
        return expr.cells
    if isinstance(expr, Attractor):
        if expr.level > max_level:
            raise BudgetExceededError(f"attractor level {expr.level} exceeds maximum {max_level}")
        return expand_attractor(expr.system, expr.level, expr.seed)
    if isinstance(expr, Image):
        return apply_affine(_eval(expr.child, max_level), expr.map)
    if isinstance(expr, Union):
        return CellUnion.concat([_eval(c, max_level) for c in expr.children])
    if isinstance(expr, Clip):
        return clip_rect(_eval(expr.child, max_level), expr.rect)
    raise TypeError(f"not a set expression: {expr!r}")


def expand_attractor(system: IfsSystem, level: int, seed: CellUnion) -> CellUnion:
    """All images of ``seed`` under words of length ``level``.

    Cell ``i`` of the result is ``f_{w1} o ... o f_{wn}(seed)`` with the word
    read as base-q digits of ``i``, outermost map most significant.
    """
    lin = np.stack([m.matrix for m in system.maps])
    off = np.stack([m.offset for m in system.maps])
    sign = np.sign([m.det for m in system.maps])
    v = seed.verts
    orient = np.ones(len(v))
    for _ in range(level):
        v = np.einsum("qij,mkj->qmki", lin, v) + off[:, None, None, :]
        v = v.reshape(-1, *v.shape[2:])
        orient = (sign[:, None] * orient[None, :]).ravel()
    if (orient < 0).any():
        v = v.copy()
        v[orient < 0] = v[orient < 0, ::-1]
    return CellUnion(v)
