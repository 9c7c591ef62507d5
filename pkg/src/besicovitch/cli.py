"""``besicovitch`` command line.

Every subcommand writes a CSV (header row, LF endings, shortest round-trip
floats) to ``--out`` or stdout. Failures print one JSON line on stderr and
exit with 2 (usage), 3 (input or schema), 4 (cell budget) or 5 (a ``suite``
criterion failed).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import formats
from .constructions import (
    assembly_section_measure,
    besicovitch_assemble,
    covers_direction,
    find_margin,
    fitted_invisible_set,
    raster_assembly,
    refine_round,
)
from .duality import Sloped, Vertical, line_section, raster_dual, section_via_radial, vertical_section
from .geom.cells import GeometryError
from .geom.intervals import IntervalUnion
from .geom.setexpr import UNIT_SQUARE, BudgetExceededError, Union, eval_set
from .metrics import hausdorff
from .projections import angle_grid, direction_scan, point_grid, viewpoint_scan

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_BUDGET, EXIT_PROPERTY = 0, 2, 3, 4, 5
MAX_LEVEL = 12
MAX_PIXELS = 8192


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _diagnose("usage", message)
        sys.exit(EXIT_USAGE)


def _diagnose(kind: str, message: str, **extra) -> None:
    print(json.dumps({"error": kind, "message": message, **extra}), file=sys.stderr)


# -- argument helpers ----------------------------------------------------------


def _floats(n: int | None = None):
    def parse(text: str) -> list[float]:
        try:
            vals = [float(t) for t in text.split(",")]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
        if n is not None and len(vals) != n:
            raise argparse.ArgumentTypeError(f"expected {n} numbers, got {len(vals)}")
        if not all(math.isfinite(v) for v in vals):
            raise argparse.ArgumentTypeError("numbers must be finite")
        return vals

    return parse


def _levels(text: str) -> list[int]:
    """``3``, ``1..6`` or ``2,4,6``."""
    try:
        if ".." in text:
            a, b = text.split("..")
            out = list(range(int(a), int(b) + 1))
        else:
            out = [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level list {text!r}")
    if not out or any(not 0 <= n <= MAX_LEVEL for n in out):
        raise argparse.ArgumentTypeError(f"levels must lie in 0..{MAX_LEVEL}")
    return out


def _positive(text: str) -> float:
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError("must be a positive number")
    return v


def _count(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _probe(text: str):
    kind, _, rest = text.partition(":")
    vals = _floats()(rest)
    if kind == "vertical" and len(vals) == 1:
        return Vertical(vals[0])
    if kind == "sloped" and len(vals) == 2:
        return Sloped(*vals)
    raise argparse.ArgumentTypeError("probe is vertical:X or sloped:A,B")


def _rect(vals) -> tuple:
    x0, y0, x1, y1 = vals
    if not (x0 < x1 and y0 < y1):
        raise UsageError("rectangle needs x0 < x1 and y0 < y1")
    return tuple(vals)


def _read_expr(path):
    if path == "-":
        return formats.parse_set_description(sys.stdin.read())
    try:
        return formats.load_set_description(path)
    except OSError as exc:
        raise formats.DescriptionError(f"cannot read {path}: {exc.strerror}") from exc


def _expr(args):
    """Set expression from a file, or a fitted set when ``--fitted`` is given."""
    if getattr(args, "fitted", None) is not None:
        if args.input is not None:
            raise UsageError("give either an input file or --fitted, not both")
        return fitted_invisible_set(_rect(args.fitted), args.level)
    if args.input is None:
        raise UsageError("an input file (or - for stdin) is required")
    return _read_expr(args.input)


def _emit(args, header, rows) -> None:
    text = formats.csv_text(header, rows)
    if args.out:
        formats.write_text(args.out, text)
    else:
        sys.stdout.write(text)


def _interval_rows(iv: IntervalUnion, window=None):
    if window is not None:
        iv = iv.clipped(*window)
    return [(lo, hi) for lo, hi in iv]


# -- subcommands ---------------------------------------------------------------


def cmd_construct(args):
    expr = _expr(args)
    c = eval_set(expr)
    if args.emit:
        formats.write_text(args.emit, formats.emit_set_description(expr))
    if args.svg:
        formats.write_text(args.svg, formats.cells_svg(c))
    if args.cells_csv:
        rows = [(i, j, x, y) for i, poly in enumerate(c.polygons()) for j, (x, y) in enumerate(poly)]
        formats.write_text(args.cells_csv, formats.csv_text(["cell", "vertex", "x", "y"], rows))
    from .projections import ortho_measure

    xm = ortho_measure(c, (0.0, 1.0)) if len(c) else 0.0
    area = float(np.abs(c.areas()).sum()) if len(c) else 0.0
    _emit(args, ["cells", "x_projection_measure", "cell_area_sum"], [(len(c), xm, area)])


def cmd_project(args):
    c = eval_set(_expr(args))
    grid = angle_grid(args.directions, args.start, args.stop)
    table = direction_scan(c, grid, workers=args.workers)
    _emit(args, ["index", "angle", "measure"], [(i, a, m) for i, (a, m) in enumerate(table.rows())])


def cmd_radial(args):
    c = eval_set(_expr(args))
    if args.point:
        pts = np.array(args.point, dtype=float)
    else:
        x0, x1, y0, y1, nx, ny = args.grid
        if nx < 1 or ny < 1 or nx != int(nx) or ny != int(ny):
            raise UsageError("grid counts must be positive integers")
        pts = point_grid(x0, x1, y0, y1, int(nx), int(ny))
    table = viewpoint_scan(c, pts, args.exclusion, workers=args.workers)
    _emit(args, ["index", "x", "y", "measure"], [(i, p[0], p[1], m) for i, (p, m) in enumerate(table.rows())])


def cmd_section(args):
    c = eval_set(_expr(args))
    e = args.probe
    if isinstance(e, Vertical):
        iv = vertical_section(c, e.x0)
    elif args.via == "radial":
        iv = section_via_radial(c, e)
    else:
        iv = line_section(c, e, args.exclude_coding_point, args.exclusion_side)
    _emit(args, ["lo", "hi"], _interval_rows(iv, args.window))


def _description_of_rects(rects, level) -> str:
    parts = [fitted_invisible_set(r, level) for r in rects]
    return formats.emit_set_description(Union(tuple(parts)) if len(parts) != 1 else parts[0])


def cmd_refine(args):
    if args.input is None and args.fitted is None:
        c = UNIT_SQUARE
    else:
        c = eval_set(_expr(args))
    rep = refine_round(c, args.eps, args.refine_level, h=args.h, workers=args.workers)
    summary = rep.summary()
    summary["h"] = rep.distance.sample_spacing
    if args.report:
        formats.write_text(args.report, json.dumps(summary, indent=2) + "\n")
    if args.emit:
        formats.write_text(args.emit, _description_of_rects(rep.rects, args.refine_level))
    if args.svg:
        formats.write_text(args.svg, formats.cells_svg(rep.k_prime, viewport=(0.0, 0.0, 1.0, 1.0)))
    keys = list(summary)
    _emit(args, keys, [[summary[k] for k in keys]])


def cmd_margin(args):
    c = eval_set(_expr(args))
    if args.directions:
        grid = angle_grid(args.directions)
    else:
        x0, x1, y0, y1, nx, ny = args.grid
        grid = point_grid(x0, x1, y0, y1, int(nx), int(ny))
    res = find_margin(c, grid, args.threshold, args.r_max, args.exclusion, args.steps, workers=args.workers)
    if args.steps_csv:
        formats.write_text(args.steps_csv, formats.csv_text(["radius", "passed"], res.steps))
    formula = "" if res.formula_margin is None else formats.fmt(res.formula_margin)
    _emit(
        args,
        ["margin", "formula_margin", "max_scan_value"],
        [(res.margin, formula, float(res.scan.values.max()))],
    )


def cmd_assemble(args):
    if args.levels is not None:
        if args.input is not None:
            raise UsageError("give either an input file or --levels, not both")
        target = _rect(args.target)
        codes = [(str(n), fitted_invisible_set(target, n)) for n in args.levels]
    else:
        if args.input is None:
            raise UsageError("an input file or --levels is required")
        codes = [("input", _read_expr(args.input))]
    rows, header = [], None
    for label, expr in codes:
        asm = besicovitch_assemble(eval_set(expr), args.copies)
        if args.raster:
            grid, frac = raster_assembly(asm, _rect(args.viewport), args.size, args.size)
            if args.outdir:
                out = Path(args.outdir)
                out.mkdir(parents=True, exist_ok=True)
                formats.write_pgm(out / f"assembly_{label}.pgm", grid)
                if args.svg:
                    formats.write_text(out / f"assembly_{label}.svg", formats.raster_svg(grid, args.viewport))
            header = ["level", "fraction"]
            rows.append((label, frac))
        elif args.probe:
            header = ["level", "probe", "measure"]
            for i, e in enumerate(args.probe):
                rows.append((label, i, assembly_section_measure(asm, e, args.window_radius)))
        else:
            header = ["level", "index", "angle", "covered"]
            n = args.coverage
            for i in range(n):
                phi = i * math.pi / n
                rows.append((label, i, phi, covers_direction(asm, phi)))
    _emit(args, header, rows)


def cmd_hausdorff(args):
    a = eval_set(_read_expr(args.a))
    b = eval_set(_read_expr(args.b))
    d = hausdorff(a, b, args.h)
    _emit(args, ["lower", "upper", "h"], [(d.lower, d.upper, d.sample_spacing)])


def cmd_raster(args):
    c = eval_set(_expr(args))
    grid, frac = raster_dual(c, _rect(args.viewport), args.width, args.height)
    if args.pgm:
        formats.write_pgm(args.pgm, grid)
    if args.svg:
        formats.write_text(args.svg, formats.raster_svg(grid, args.viewport))
    _emit(args, ["width", "height", "fraction"], [(args.width, args.height, frac)])


def cmd_suite(args):
    from .suite import run_suite

    results = run_suite(args.only, workers=args.workers, echo=lambda s: print(s, file=sys.stderr, flush=True))
    rows = [(r.number, r.name, r.passed, r.in_time, r.elapsed, r.detail) for r in results]
    _emit(args, ["criterion", "name", "property_ok", "within_time", "seconds", "detail"], rows)
    return EXIT_OK if all(r.ok for r in results) else EXIT_PROPERTY


# -- parser ------------------------------------------------------------------------


def _add_input(p, fitted: bool = True):
    p.add_argument("input", nargs="?", help="set-description JSON file, or - for stdin")
    if fitted:
        p.add_argument("--fitted", type=_floats(4), metavar="X0,Y0,X1,Y1", help="use the fitted invisible set on this rectangle")
        p.add_argument("--level", type=lambda s: _levels(s)[0], default=4, help="level for --fitted (default 4)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="besicovitch", description="Dual line families, projections and certified distances.")
    parser.add_argument("--workers", type=_count, default=os.cpu_count() or 1, help="worker threads (default: CPU count)")
    parser.add_argument("-o", "--out", help="CSV output path (default stdout)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("construct", help="evaluate a set description")
    _add_input(p)
    p.add_argument("--emit", help="write the canonical description here")
    p.add_argument("--svg", help="render the cells as SVG")
    p.add_argument("--cells-csv", help="write cell vertices as CSV")
    p.set_defaults(fn=cmd_construct)

    p = sub.add_parser("project", help="orthogonal projection measures over a direction grid")
    _add_input(p)
    p.add_argument("--ortho", action="store_true", help="orthogonal projections (the only kind; accepted for clarity)")
    p.add_argument("--directions", type=_count, default=180)
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--stop", type=float, default=math.pi)
    p.set_defaults(fn=cmd_project)

    p = sub.add_parser("radial", help="radial projection measures over a viewpoint grid")
    _add_input(p)
    p.add_argument("--grid", type=_floats(6), default=[-2.0, 3.0, -2.0, 3.0, 5, 5], metavar="X0,X1,Y0,Y1,NX,NY")
    p.add_argument("--point", type=_floats(2), action="append", metavar="X,Y", help="explicit viewpoint (repeatable)")
    p.add_argument("--exclusion", type=float, default=0.0, help="exclusion ball radius")
    p.set_defaults(fn=cmd_radial)

    p = sub.add_parser("section", help="intersection of one probe line with the dual family")
    _add_input(p)
    p.add_argument("--probe", type=_probe, required=True, metavar="vertical:X|sloped:A,B")
    p.add_argument("--via", choices=["direct", "radial"], default="direct")
    p.add_argument("--exclude-coding-point", action="store_true")
    p.add_argument("--exclusion-side", type=_positive)
    p.add_argument("--window", type=_floats(2), metavar="LO,HI", help="truncate unbounded components to this window")
    p.set_defaults(fn=cmd_section)

    p = sub.add_parser("refine", help="one refinement round (default input: the unit square)")
    _add_input(p)
    p.add_argument("--eps", type=_positive, required=True)
    p.add_argument("--refine-level", type=lambda s: _levels(s)[0], default=3, help="level of the fitted sets (default 3)")
    p.add_argument("--h", type=_positive, help="Hausdorff sample spacing (default eps/100)")
    p.add_argument("--report", help="write the summary as JSON")
    p.add_argument("--emit", help="write K' as a set description")
    p.add_argument("--svg", help="render K' as SVG")
    p.set_defaults(fn=cmd_refine)

    p = sub.add_parser("margin", help="largest dilation keeping scan values below a threshold")
    _add_input(p)
    p.add_argument("--threshold", type=_positive, required=True)
    p.add_argument("--r-max", type=_positive, default=0.1)
    p.add_argument("--steps", type=_count, default=10)
    p.add_argument("--directions", type=_count, help="scan orthogonal projections instead of viewpoints")
    p.add_argument("--grid", type=_floats(6), default=[-2.0, 3.0, -2.0, 3.0, 5, 5], metavar="X0,X1,Y0,Y1,NX,NY")
    p.add_argument("--exclusion", type=float, default=0.0)
    p.add_argument("--steps-csv", help="write every tested radius")
    p.set_defaults(fn=cmd_margin)

    p = sub.add_parser("assemble", help="rotated copies of a dual family")
    p.add_argument("input", nargs="?", help="code set description")
    p.add_argument("--levels", type=_levels, help="use fitted codes at these levels, e.g. 1..6")
    p.add_argument("--target", type=_floats(4), default=[0.0, 0.0, 1.0, 1.0], metavar="X0,Y0,X1,Y1")
    p.add_argument("--copies", type=_count, default=4)
    p.add_argument("--coverage", type=_count, default=180, help="direction grid size for the coverage table")
    p.add_argument("--probe", type=_probe, action="append", help="section measure for this probe (repeatable)")
    p.add_argument("--window-radius", type=_positive, default=2.0)
    p.add_argument("--raster", action="store_true", help="occupancy raster per level")
    p.add_argument("--size", type=_count, default=1024)
    p.add_argument("--viewport", type=_floats(4), default=[-2.0, -2.0, 2.0, 2.0], metavar="X0,Y0,X1,Y1")
    p.add_argument("--outdir", help="directory for PGM (and SVG) images")
    p.add_argument("--svg", action="store_true", help="also write SVG renders")
    p.set_defaults(fn=cmd_assemble)

    p = sub.add_parser("hausdorff", help="certified Hausdorff distance bounds")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--h", type=_positive, default=0.01)
    p.set_defaults(fn=cmd_hausdorff)

    p = sub.add_parser("raster", help="occupancy raster of the dual family")
    _add_input(p)
    p.add_argument("--viewport", type=_floats(4), default=[-2.0, -2.0, 2.0, 2.0], metavar="X0,Y0,X1,Y1")
    p.add_argument("--width", type=_count, default=512)
    p.add_argument("--height", type=_count, default=512)
    p.add_argument("--pgm")
    p.add_argument("--svg")
    p.set_defaults(fn=cmd_raster)

    p = sub.add_parser("suite", help="run acceptance criteria (exit 5 if any fails)")
    p.add_argument("--only", type=lambda s: [int(t) for t in s.split(",")], help="comma-separated criterion numbers")
    p.set_defaults(fn=cmd_suite)
    return parser


def _check_ranges(args) -> None:
    for name in ("size", "width", "height"):
        v = getattr(args, name, None)
        if v is not None and v > MAX_PIXELS:
            raise UsageError(f"--{name} must be at most {MAX_PIXELS}")
    if getattr(args, "only", None):
        from .suite import CRITERIA

        bad = [k for k in args.only if k not in CRITERIA]
        if bad:
            raise UsageError(f"unknown criteria {bad}")
    if getattr(args, "copies", 1) > 8:
        raise UsageError("--copies must be at most 8")
    if getattr(args, "exclusion", 0.0) < 0:
        raise UsageError("--exclusion must be nonnegative")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _check_ranges(args)
        status = args.fn(args)
    except UsageError as exc:
        _diagnose("usage", str(exc))
        return EXIT_USAGE
    except formats.DescriptionError as exc:
        extra = {"path": exc.path} if exc.line is None else {"line": exc.line, "column": exc.column}
        _diagnose("input", exc.args[0], **extra)
        return EXIT_INPUT
    except BudgetExceededError as exc:
        _diagnose("budget", str(exc))
        return EXIT_BUDGET
    except (GeometryError, ValueError) as exc:
        _diagnose("input", f"{type(exc).__name__}: {exc}")
        return EXIT_INPUT
    return EXIT_OK if status is None else status


if __name__ == "__main__":
    sys.exit(main())
