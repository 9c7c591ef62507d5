"""Acceptance checks, shared by ``besicovitch suite`` and the test-suite."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .constructions import (
    besicovitch_assemble,
    assembly_section_measure,
    covers_direction,
    fitted_invisible_set,
    raster_assembly,
    refine_round,
    rotate_probe,
)
from .duality import Sloped, Vertical, line_section, section_via_radial, vertical_section
from .geom.cells import CellUnion, contains_point
from .geom.setexpr import UNIT_SQUARE, eval_set
from .metrics import hausdorff, metric_axiom_suite
from .projections import angle_grid, continuity_probe, direction_scan, ortho_project, point_grid, radial_measure

UNIT = (0.0, 0.0, 1.0, 1.0)

# Frozen from the first full run; see the README for the measured values.
RADIAL_DECAY_MIN = 20
SECTION_DECAY_MIN = 18


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed: float
    limit: float

    @property
    def in_time(self) -> bool:
        return self.elapsed < self.limit

    @property
    def ok(self) -> bool:
        return self.passed and self.in_time

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        timing = f"{self.elapsed:.2f}s/<{self.limit:g}s"
        return f"[{status}] {self.number:2d} {self.name}: {self.detail} ({timing})"


def random_rects(rng: np.random.Generator, n: int, lo: float = -2.0, hi: float = 2.0, max_side: float = 1.0) -> CellUnion:
    corner = rng.uniform(lo, hi, size=(n, 2))
    side = rng.uniform(0.05, max_side, size=(n, 2))
    return CellUnion.from_rects(np.concatenate([corner, corner + side], axis=1))


def _intervals_match(a, b, tol: float) -> bool:
    """Endpoint-wise agreement, relative for endpoints beyond magnitude 1."""
    if len(a.lo) != len(b.lo):
        return False
    for x, y in ((a.lo, b.lo), (a.hi, b.hi)):
        inf = np.isinf(x) | np.isinf(y)
        if not np.array_equal(x[inf], y[inf]):
            return False
        xf, yf = x[~inf], y[~inf]
        if (np.abs(xf - yf) > tol * np.maximum(1.0, np.abs(xf))).any():
            return False
    return True


def criterion_1(seed: int = 1) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(100):
        c = random_rects(rng, int(rng.integers(1, 11)))
        for x in rng.uniform(-5, 5, size=100):
            sec = vertical_section(c, x)
            pr = ortho_project(c, (-1.0, x)).scaled(math.hypot(x, 1.0))
            bad += not _intervals_match(sec, pr, 1e-9)
    return bad == 0, f"{bad} mismatches in 10000 sections"


def criterion_2(seed: int = 2) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    bad = unbounded = n = 0
    while n < 100:
        c = random_rects(rng, int(rng.integers(1, 11)))
        a0, b0 = rng.uniform(-2.5, 2.5, size=2)
        if contains_point(c, (a0, b0)):
            continue
        n += 1
        e = Sloped(float(a0), float(b0))
        direct, radial = line_section(c, e), section_via_radial(c, e)
        bad += not _intervals_match(direct, radial, 1e-9)
        unbounded += bool(np.isinf(direct.lo).any() or np.isinf(direct.hi).any())
    return bad == 0 and unbounded >= 10, f"{bad} mismatches, {unbounded} unbounded of 100"


def criterion_3() -> tuple[bool, str]:
    worst = 0.0
    for n in range(1, 11):
        c = eval_set(fitted_invisible_set(UNIT, n))
        worst = max(worst, abs(ortho_project(c, (0.0, 1.0)).measure() - 1.0))
    return worst <= 1e-12, f"max |measure - 1| = {worst:.3g} over levels 1..10"


def radial_decay_table(levels=(2, 4, 6, 8)):
    """Rows ``(x, y, m_level...)`` for the 5x5 grid; ``None`` when the point is in the set."""
    vp = point_grid(-2.0, 3.0, -2.0, 3.0, 5, 5)
    sets = [eval_set(fitted_invisible_set(UNIT, n)) for n in levels]
    rows = []
    for p in vp:
        if contains_point(sets[0], p):
            rows.append((p, None))
            continue
        rows.append((p, [radial_measure(c, p) for c in sets]))
    return rows


def criterion_4() -> tuple[bool, str]:
    rows = radial_decay_table()
    monotone = True
    halved = 0
    used = 0
    for _, vals in rows:
        if vals is None:
            continue
        used += 1
        monotone &= all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
        halved += vals[-1] < 0.5 * vals[0]
    ok = monotone and halved >= RADIAL_DECAY_MIN
    return ok, f"monotone={monotone}, halved at {halved}/{used} viewpoints (need {RADIAL_DECAY_MIN} of 25)"


REFINE_LEVEL = 3


def criterion_5(workers=None) -> tuple[bool, str]:
    parts = []
    ok = True
    for eps in (0.3, 0.1, 0.03):
        rep = refine_round(UNIT_SQUARE, eps, REFINE_LEVEL, workers=workers)
        h = eps / 100
        up = rep.distance.upper
        good = up < rep.bound_target + h * math.sqrt(2) and up < eps
        ok &= good
        parts.append(f"eps={eps}: upper={up:.5g} vs {rep.bound_target + h * math.sqrt(2):.5g}")
    return ok, "; ".join(parts)


def criterion_6() -> tuple[bool, str]:
    rep = refine_round(UNIT_SQUARE, 0.3, REFINE_LEVEL, viewpoints=np.array([[-2.0, -2.0]]))
    asm = besicovitch_assemble(rep.k_prime)
    misses = [k for k in range(180) if not covers_direction(asm, math.radians(k))]
    return not misses, f"{len(misses)} misses on the 1-degree grid"


def section_probes(seed: int = 7, check_level: int = 2):
    """10 vertical and 10 sloped probes, none coded by any copy at ``check_level``."""
    rng = np.random.default_rng(seed)
    code = eval_set(fitted_invisible_set(UNIT, check_level))
    asm = besicovitch_assemble(code)
    probes = [Vertical(float(x)) for x in rng.uniform(-1.5, 1.5, size=10)]
    while len(probes) < 20:
        a0, b0 = rng.uniform(-2.0, 2.0), rng.uniform(-1.5, 1.5)
        e = Sloped(float(a0), float(b0))
        coded = False
        for theta, _ in asm.copies:
            local = rotate_probe(e, -theta)
            if isinstance(local, Sloped) and contains_point(code, (local.a0, local.b0)):
                coded = True
        if not coded:
            probes.append(e)
    return probes


def section_decay_table(levels=range(2, 9)):
    probes = section_probes()
    rows = [[] for _ in probes]
    for n in levels:
        asm = besicovitch_assemble(eval_set(fitted_invisible_set(UNIT, n)))
        for i, e in enumerate(probes):
            rows[i].append(assembly_section_measure(asm, e))
    return probes, rows


def criterion_7() -> tuple[bool, str]:
    _, rows = section_decay_table()
    monotone = all(all(b <= a + 1e-12 for a, b in zip(r, r[1:])) for r in rows)
    dropped = sum(r[-1] < r[0] for r in rows)
    return monotone and dropped >= SECTION_DECAY_MIN, f"monotone={monotone}, decayed on {dropped}/20 probes"


def _rect_point_distance(r, p) -> float:
    dx = max(r[0] - p[0], 0.0, p[0] - r[2])
    dy = max(r[1] - p[1], 0.0, p[1] - r[3])
    return math.hypot(dx, dy)


def rect_hausdorff(r, s) -> float:
    """Exact: the directed distance to a convex set is maximised at a vertex."""
    def corners(q):
        return [(q[0], q[1]), (q[2], q[1]), (q[2], q[3]), (q[0], q[3])]

    return max(
        max(_rect_point_distance(s, p) for p in corners(r)),
        max(_rect_point_distance(r, p) for p in corners(s)),
    )


def criterion_8(seed: int = 8) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    outside = 0
    for _ in range(100):
        x0, y0 = rng.uniform(-1, 1, size=2)
        w, hgt = rng.uniform(0.1, 1.0, size=2)
        r = (x0, y0, x0 + w, y0 + hgt)
        t = rng.uniform(-0.5, 0.5, size=2)
        k = rng.uniform(0.5, 1.5)
        s = (x0 + t[0], y0 + t[1], x0 + t[0] + k * w, y0 + t[1] + k * hgt)
        true = rect_hausdorff(r, s)
        d = hausdorff(CellUnion.from_rects([r]), CellUnion.from_rects([s]), 0.01)
        outside += true not in d
    triples = [tuple(random_rects(rng, int(rng.integers(1, 4))) for _ in range(3)) for _ in range(100)]
    rep = metric_axiom_suite(triples, 1e-3)
    return outside == 0 and rep.passed, f"{outside}/100 outside bounds, {len(rep.violations)} axiom violations"


def criterion_9(seed: int = 9) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    step = 1e-3
    grid = angle_grid(int(math.ceil(math.pi / step)), 0.0, step * math.ceil(math.pi / step))
    worst = -math.inf
    for _ in range(20):
        c = random_rects(rng, int(rng.integers(1, 11)))
        jump, _ = continuity_probe(direction_scan(c, grid))
        allowed = 2 * len(c) * c.diameter() * step + 1e-9
        worst = max(worst, jump - allowed)
    return worst <= 0, f"max(jump - allowance) = {worst:.3g}"


def raster_table(levels=range(1, 7), size: int = 1024):
    out = []
    for n in levels:
        asm = besicovitch_assemble(eval_set(fitted_invisible_set(UNIT, n)))
        _, frac = raster_assembly(asm, (-2.0, -2.0, 2.0, 2.0), size, size)
        out.append(frac)
    return out


def criterion_10() -> tuple[bool, str]:
    fr = raster_table()
    monotone = all(b <= a for a, b in zip(fr, fr[1:]))
    ok = monotone and fr[-1] < 0.5 * fr[0]
    return ok, "fractions " + ", ".join(f"{f:.4f}" for f in fr)


CRITERIA: dict[int, tuple[str, float, Callable]] = {
    1: ("vertical section identity", 5.0, criterion_1),
    2: ("cross-path section equality", 5.0, criterion_2),
    3: ("fitted set x-projection", 30.0, criterion_3),
    4: ("radial invisibility decay", 60.0, criterion_4),
    5: ("refinement round inequality", 60.0, criterion_5),
    6: ("direction coverage", 5.0, criterion_6),
    7: ("assembly section decay", 120.0, criterion_7),
    8: ("Hausdorff certification", 10.0, criterion_8),
    9: ("semicontinuity probes", 30.0, criterion_9),
    10: ("raster decay", 120.0, criterion_10),
}


def run_criterion(k: int, workers=None) -> CriterionResult:
    name, limit, fn = CRITERIA[k]
    t = time.perf_counter()
    passed, detail = fn(workers=workers) if k == 5 else fn()
    return CriterionResult(k, name, bool(passed), detail, time.perf_counter() - t, limit)


def run_suite(which=None, workers=None, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    out = []
    for k in which or sorted(CRITERIA):
        r = run_criterion(k, workers)
        if echo:
            echo(r.line())
        out.append(r)
    return out
