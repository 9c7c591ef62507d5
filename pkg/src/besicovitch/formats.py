"""Set-description documents and the flat-file writers used by the CLI."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .constructions import four_corner_system
from .geom.cells import AffineMap, CellUnion, GeometryError
from .geom.setexpr import UNIT_SQUARE, Attractor, Cells, Clip, Image, SetExpr, Union


class DescriptionError(ValueError):
    """Malformed set description; ``path`` names the offending node."""

    def __init__(self, message: str, path: str = "$", line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.path = path
        self.line = line
        self.column = column

    def __str__(self):
        where = f"line {self.line} column {self.column}" if self.line is not None else self.path
        return f"{where}: {self.args[0]}"


_KEYS = {
    "cells": {"type", "rects", "polys"},
    "attractor": {"type", "system", "ratio", "level"},
    "affine": {"type", "matrix", "translate", "child"},
    "union": {"type", "children"},
    "clip": {"type", "rect", "child"},
}


def _number(x, path: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise DescriptionError(f"expected a finite number, got {x!r}", path)
    return float(x)


def _numbers(x, n: int, path: str) -> list[float]:
    if not isinstance(x, list) or len(x) != n:
        raise DescriptionError(f"expected a list of {n} numbers", path)
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(x)]


def _node(doc, path: str) -> SetExpr:
    if not isinstance(doc, dict):
        raise DescriptionError("expected an object", path)
    kind = doc.get("type")
    if kind not in _KEYS:
        raise DescriptionError(f"unknown node type {kind!r}", f"{path}.type")
    extra = set(doc) - _KEYS[kind]
    if extra:
        raise DescriptionError(f"unexpected keys {sorted(extra)}", path)
    try:
        if kind == "cells":
            return _cells(doc, path)
        if kind == "attractor":
            return _attractor(doc, path)
        if kind == "affine":
            if "child" not in doc:
                raise DescriptionError("missing child", path)
            m = _numbers(doc.get("matrix"), 4, f"{path}.matrix")
            t = _numbers(doc.get("translate", [0, 0]), 2, f"{path}.translate")
            return Image(AffineMap(tuple(m), tuple(t)), _node(doc["child"], f"{path}.child"))
        if kind == "union":
            ch = doc.get("children")
            if not isinstance(ch, list) or not ch:
                raise DescriptionError("children must be a nonempty list", f"{path}.children")
            return Union(tuple(_node(c, f"{path}.children[{i}]") for i, c in enumerate(ch)))
        if "child" not in doc:
            raise DescriptionError("missing child", path)
        r = _numbers(doc.get("rect"), 4, f"{path}.rect")
        if not (r[0] < r[2] and r[1] < r[3]):
            raise DescriptionError("rect needs x0 < x1 and y0 < y1", f"{path}.rect")
        return Clip(tuple(r), _node(doc["child"], f"{path}.child"))
    except GeometryError as exc:
        raise DescriptionError(str(exc), path) from exc


def _cells(doc, path: str) -> Cells:
    rects = doc.get("rects", [])
    polys = doc.get("polys", [])
    if not isinstance(rects, list) or not isinstance(polys, list):
        raise DescriptionError("rects and polys must be lists", path)
    parts = []
    rs = []
    for i, r in enumerate(rects):
        p = f"{path}.rects[{i}]"
        r = _numbers(r, 4, p)
        if not (r[0] <= r[2] and r[1] <= r[3]):
            raise DescriptionError("rect needs x0 <= x1 and y0 <= y1", p)
        rs.append(tuple(r))
    if rs:
        parts.append(CellUnion.from_rects(rs))
    for i, poly in enumerate(polys):
        p = f"{path}.polys[{i}]"
        if not isinstance(poly, list) or len(poly) < 1:
            raise DescriptionError("polygon must be a nonempty list of points", p)
        pts = [_numbers(q, 2, f"{p}[{j}]") for j, q in enumerate(poly)]
        try:
            parts.append(CellUnion.from_polygons([pts]))
        except GeometryError as exc:
            raise DescriptionError(str(exc), p) from exc
    return Cells(CellUnion.concat(parts) if parts else CellUnion.empty())


def _attractor(doc, path: str) -> Attractor:
    if doc.get("system") != "four_corner":
        raise DescriptionError(f"unknown system {doc.get('system')!r}", f"{path}.system")
    ratio = _number(doc.get("ratio", 0.25), f"{path}.ratio")
    level = doc.get("level")
    if isinstance(level, bool) or not isinstance(level, int) or level < 0:
        raise DescriptionError("level must be a nonnegative integer", f"{path}.level")
    try:
        system = four_corner_system(ratio)
    except ValueError as exc:
        raise DescriptionError(str(exc), f"{path}.ratio") from exc
    return Attractor(system, level, UNIT_SQUARE)


def parse_set_description(text: str) -> SetExpr:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DescriptionError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    return _node(doc, "$")


def load_set_description(path) -> SetExpr:
    return parse_set_description(Path(path).read_text(encoding="utf-8"))


# -- canonical emission ------------------------------------------------------


def _ratio_of(a: Attractor) -> float:
    ratio = float(a.system.maps[0].linear[0])
    if a.system != four_corner_system(ratio) or a.seed != UNIT_SQUARE:
        raise DescriptionError("only the four-corner system on the unit square has a textual form")
    return ratio


def _as_rect(poly: np.ndarray):
    if len(poly) != 4:
        return None
    x0, y0 = poly.min(axis=0)
    x1, y1 = poly.max(axis=0)
    if np.array_equal(poly, [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]):
        return [float(x0), float(y0), float(x1), float(y1)]
    return None


def to_document(expr: SetExpr) -> dict:
    if isinstance(expr, Cells):
        rects, polys = [], []
        for poly in expr.cells.polygons():
            r = _as_rect(poly)
            if r is None:
                polys.append(poly.tolist())
            else:
                rects.append(r)
        return {"type": "cells", "rects": rects, "polys": polys}
    if isinstance(expr, Attractor):
        return {"type": "attractor", "system": "four_corner", "ratio": _ratio_of(expr), "level": expr.level}
    if isinstance(expr, Image):
        return {
            "type": "affine",
            "matrix": [float(x) for x in expr.map.linear],
            "translate": [float(x) for x in expr.map.translation],
            "child": to_document(expr.child),
        }
    if isinstance(expr, Union):
        return {"type": "union", "children": [to_document(c) for c in expr.children]}
    if isinstance(expr, Clip):
        return {"type": "clip", "rect": [float(x) for x in expr.rect], "child": to_document(expr.child)}
    raise TypeError(f"not a set expression: {expr!r}")


def emit_set_description(expr: SetExpr) -> str:
    """Canonical text: fixed key order, compact separators, shortest round-trip floats."""
    return json.dumps(to_document(expr), separators=(",", ":"), allow_nan=False) + "\n"


# -- writers -------------------------------------------------------------------


def fmt(x) -> str:
    """Shortest string that reads back to the same double."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows([v if isinstance(v, str) else fmt(v) for v in row] for row in rows)
    return buf.getvalue()


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def write_pgm(path, grid: np.ndarray) -> None:
    """Binary PGM; occupied pixels black, row 0 at the top."""
    g = np.asarray(grid, dtype=np.uint8)
    h, w = g.shape
    pixels = np.where(g > 0, 0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(pixels.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4][: w * h], dtype=np.uint8).reshape(h, w)


def _svg_frame(viewport, px: int):
    x0, y0, x1, y1 = viewport
    scale = px / max(x1 - x0, y1 - y0)
    w, h = round((x1 - x0) * scale), round((y1 - y0) * scale)
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" '
        f'viewBox="{fmt(x0)} {fmt(-y1)} {fmt(x1 - x0)} {fmt(y1 - y0)}">\n'
        f'<rect x="{fmt(x0)}" y="{fmt(-y1)}" width="{fmt(x1 - x0)}" height="{fmt(y1 - y0)}" fill="white"/>\n'
    )
    return head


def cells_svg(c: CellUnion, viewport=None, px: int = 800, fill: str = "black") -> str:
    """Cells as filled polygons; y is flipped so the picture is upright."""
    if viewport is None:
        x0, y0, x1, y1 = c.bbox() if len(c) else (0.0, 0.0, 1.0, 1.0)
        pad = 0.05 * max(x1 - x0, y1 - y0, 1e-9)
        viewport = (x0 - pad, y0 - pad, x1 + pad, y1 + pad)
    out = [_svg_frame(viewport, px), f'<g fill="{fill}" stroke="none">\n']
    for poly in c.polygons():
        pts = " ".join(f"{fmt(x)},{fmt(-y)}" for x, y in poly)
        out.append(f'<polygon points="{pts}"/>\n')
    out.append("</g>\n</svg>\n")
    return "".join(out)


def raster_svg(grid: np.ndarray, viewport, px: int = 800, fill: str = "black") -> str:
    """Occupancy grid as run-length horizontal strips (row 0 at the top)."""
    x0, y0, x1, y1 = viewport
    h, w = grid.shape
    dx, dy = (x1 - x0) / w, (y1 - y0) / h
    out = [_svg_frame(viewport, px), f'<g fill="{fill}" stroke="none" shape-rendering="crispEdges">\n']
    for r in range(h):
        row = np.concatenate([[0], (grid[r] > 0).astype(np.int8), [0]])
        edges = np.flatnonzero(np.diff(row))
        for s, e in zip(edges[::2], edges[1::2]):
            out.append(
                f'<rect x="{fmt(x0 + s * dx)}" y="{fmt(-y1 + r * dy)}" width="{fmt((e - s) * dx)}" height="{fmt(dy)}"/>\n'
            )
    out.append("</g>\n</svg>\n")
    return "".join(out)
