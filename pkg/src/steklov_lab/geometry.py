"""Tessellations, holes, and weight fields for perforated planar domains.

The exact-tiling path (axis-aligned polygons cut by a 1/m grid) runs on
rational arithmetic wherever the inputs are rational, so tiling checks and
cell areas carry no floating-point slack.  Voronoi tessellations are built
for geometric validation only and are never meshed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from . import oracles


class GeometryError(ValueError):
    pass


# ---------------------------------------------------------------------------
# polygon helpers (shared by the weight-defect integration and validators)

def poly_area(pts):
    """Signed shoelace area; exact when the coordinates are Fractions."""
    n = len(pts)
    acc = 0
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        acc += x0 * y1 - x1 * y0
    return acc / 2


def clip_halfplane(pts, a, b, c):
    """Sutherland-Hodgman clip of a convex polygon to a*x + b*y <= c."""
    out = []
    n = len(pts)
    for i in range(n):
        p, q = pts[i], pts[(i + 1) % n]
        fp = a * p[0] + b * p[1] - c
        fq = a * q[0] + b * q[1] - c
        if fp <= 0:
            out.append(p)
        if (fp < 0 < fq) or (fq < 0 < fp):
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def clip_box(pts, x0, y0, x1, y1):
    for a, b, c in ((1, 0, x1), (-1, 0, -x0), (0, 1, y1), (0, -1, -y0)):
        pts = clip_halfplane(pts, a, b, c)
        if not pts:
            return []
    return pts


def dist_to_polygon_boundary(point, pts):
    px, py = point
    best = math.inf
    n = len(pts)
    for i in range(n):
        ax, ay = pts[i]
        bx, by = pts[(i + 1) % n]
        dx, dy = bx - ax, by - ay
        t = ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)
        t = min(1.0, max(0.0, t))
        best = min(best, math.hypot(px - ax - t * dx, py - ay - t * dy))
    return best


def _circle_from(points):
    if len(points) == 1:
        return points[0], 0.0
    if len(points) == 2:
        (ax, ay), (bx, by) = points
        c = ((ax + bx) / 2, (ay + by) / 2)
        return c, math.hypot(ax - c[0], ay - c[1])
    (ax, ay), (bx, by), (cx, cy) = points
    d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if d == 0:
        return None
    ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay)
          + (cx * cx + cy * cy) * (ay - by)) / d
    uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx)
          + (cx * cx + cy * cy) * (bx - ax)) / d
    return (ux, uy), math.hypot(ax - ux, ay - uy)


def min_enclosing_circle(pts):
    """Smallest ball containing the points (brute force over supports)."""
    pts = [tuple(map(float, p)) for p in pts]
    tol = 1e-12
    best = None
    m = len(pts)
    for i in range(m):
        for j in range(i + 1, m):
            c, r = _circle_from([pts[i], pts[j]])
            if all(math.hypot(p[0] - c[0], p[1] - c[1]) <= r + tol for p in pts):
                if best is None or r < best[1]:
                    best = (c, r)
    if best is not None:
        return best
    for i in range(m):
        for j in range(i + 1, m):
            for k in range(j + 1, m):
                ck = _circle_from([pts[i], pts[j], pts[k]])
                if ck is None:
                    continue
                c, r = ck
                if all(math.hypot(p[0] - c[0], p[1] - c[1]) <= r + tol for p in pts):
                    if best is None or r < best[1]:
                        best = (c, r)
    if best is None:
        raise GeometryError("degenerate point set for enclosing circle")
    return best


def chebyshev_center(pts):
    """Center and radius of the largest ball inscribed in a convex polygon,
    by linear programming over the edge half-planes."""
    n = len(pts)
    rows, rhs = [], []
    area = poly_area(pts)
    sgn = 1.0 if area > 0 else -1.0
    for i in range(n):
        ax, ay = map(float, pts[i])
        bx, by = map(float, pts[(i + 1) % n])
        # inward normal for CCW ordering is (-(by-ay), bx-ax)
        nx, ny = sgn * (ay - by), sgn * (bx - ax)
        norm = math.hypot(nx, ny)
        # n.(x - a) >= r*|n|  <=>  -n.x + r|n| <= -n.a
        rows.append((-nx, -ny, norm))
        rhs.append(-(nx * ax + ny * ay))
    res = linprog(c=(0.0, 0.0, -1.0), A_ub=rows, b_ub=rhs,
                  bounds=((None, None), (None, None), (0, None)), method="highs")
    if not res.success:
        raise GeometryError("Chebyshev LP failed")
    return (res.x[0], res.x[1]), res.x[2]


# ---------------------------------------------------------------------------
# domain and tessellation types

@dataclass(frozen=True)
class Domain:
    """Axis-aligned simple polygon, positively oriented (exact tiling)."""
    vertices: tuple          # tuple of (Fraction, Fraction)
    kind: str = "polygon"

    def __post_init__(self):
        v = self.vertices
        if len(v) < 4:
            raise GeometryError("domain needs at least 4 vertices")
        if poly_area(v) <= 0:
            raise GeometryError("domain must be positively oriented")
        for i in range(len(v)):
            a, b = v[i], v[(i + 1) % len(v)]
            if a[0] != b[0] and a[1] != b[1]:
                raise GeometryError(f"edge {a}-{b} is not axis-aligned")

    @property
    def area(self) -> Fraction:
        return poly_area(self.vertices)

    def float_vertices(self) -> np.ndarray:
        return np.array([[float(x), float(y)] for x, y in self.vertices])

    def bbox(self):
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)

    def contains(self, x, y) -> bool:
        """Crossing test; exact for rational input off the boundary."""
        inside = False
        v = self.vertices
        for i in range(len(v)):
            (x0, y0), (x1, y1) = v[i], v[(i + 1) % len(v)]
            if (y0 > y) != (y1 > y):
                xi = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
                if x < xi:
                    inside = not inside
        return inside


def _frac(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    return Fraction(value).limit_denominator(10 ** 12)


def make_domain(vertices, kind="polygon") -> Domain:
    return Domain(tuple((_frac(x), _frac(y)) for x, y in vertices), kind)


def unit_square() -> Domain:
    return make_domain([(0, 0), (1, 0), (1, 1), (0, 1)], "unit-square")


def l_shape(size=1) -> Domain:
    """L-shaped domain [0,s]^2 minus the open upper-right quadrant square."""
    s = _frac(size)
    h = s / 2
    return make_domain([(0, 0), (s, 0), (s, h), (h, h), (h, s), (0, s)], "L-shape")


def rectangle(width, height) -> Domain:
    w, h = _frac(width), _frac(height)
    return make_domain([(0, 0), (w, 0), (w, h), (0, h)], "rectangle")


@dataclass(frozen=True)
class Cell:
    """Convex tessellation cell with inscribed/enclosing radii."""
    index: int
    polygon: tuple                   # vertices, CCW
    r_in: float
    r_out: float
    center: tuple                    # Chebyshev center
    grid: tuple | None = None        # (ix, iy, m) for exact-tiling cells

    @property
    def area(self):
        return poly_area(self.polygon)

    def float_polygon(self) -> np.ndarray:
        return np.array([[float(x), float(y)] for x, y in self.polygon])


@dataclass(frozen=True)
class Hole:
    cell_index: int
    kind: str                        # "circle" | "kgon"
    center: tuple
    d: float                         # radius of smallest enclosing ball
    k: int | None = None             # polygon order for "kgon"

    @property
    def perimeter(self) -> float:
        if self.kind == "circle":
            return 2.0 * math.pi * self.d
        return 2.0 * self.k * self.d * math.sin(math.pi / self.k)

    def boundary_point(self, theta: float) -> tuple:
        """Point of the hole boundary in direction theta from the center."""
        if self.kind == "circle":
            rho = self.d
        else:
            step = 2.0 * math.pi / self.k
            loc = math.fmod(theta, step)
            if loc < 0:
                loc += step
            rho = self.d * math.cos(math.pi / self.k) / math.cos(loc - math.pi / self.k)
        cx, cy = self.center
        return (cx + rho * math.cos(theta), cy + rho * math.sin(theta))


@dataclass(frozen=True)
class AssumptionConstants:
    """Configured uniform-geometry bounds the generated data must satisfy."""
    c_tilde: float = 1.5             # outer/inner cell radius ratio
    c_sec: float = 0.5               # secure-distance fraction of r
    c_d_minus: float = 0.1           # lower bound on d / r^2
    c_d_plus: float = 10.0           # upper bound on d / r^2


DEFAULT_CONSTANTS = AssumptionConstants()


@dataclass
class PerforatedGeometry:
    domain: Domain
    m: int
    cells: list
    holes: list
    beta: float
    constants: AssumptionConstants = field(default_factory=AssumptionConstants)

    @property
    def epsilon(self) -> float:
        return 1.0 / self.m

    @property
    def r_eps(self) -> float:
        return max(c.r_in for c in self.cells)


# ---------------------------------------------------------------------------
# square tessellation (exact tiling)

def build_square_tessellation(domain: Domain, m: int) -> list:
    """Cells of the 1/m grid inside the domain; rejects non-tileable input."""
    if m < 1:
        raise GeometryError("m must be a positive integer")
    for x, y in domain.vertices:
        if (x * m).denominator != 1 or (y * m).denominator != 1:
            raise GeometryError(
                f"domain vertex ({x}, {y}) is not on the 1/{m} grid; "
                "exact tiling impossible")
    x0, y0, x1, y1 = domain.bbox()
    eps = Fraction(1, m)
    ix0, ix1 = int(x0 * m), int(x1 * m)
    iy0, iy1 = int(y0 * m), int(y1 * m)
    cells = []
    r_in = 1.0 / (2 * m)
    r_out = math.sqrt(2.0) / (2 * m)
    for iy in range(iy0, iy1):
        for ix in range(ix0, ix1):
            cx = Fraction(2 * ix + 1, 2 * m)
            cy = Fraction(2 * iy + 1, 2 * m)
            if not domain.contains(cx, cy):
                continue
            poly = (
                (ix * eps, iy * eps),
                ((ix + 1) * eps, iy * eps),
                ((ix + 1) * eps, (iy + 1) * eps),
                (ix * eps, (iy + 1) * eps),
            )
            cells.append(Cell(
                index=len(cells), polygon=poly, r_in=r_in, r_out=r_out,
                center=(float(cx), float(cy)), grid=(ix, iy, m)))
    if not cells:
        raise GeometryError("tessellation produced no cells")
    return cells


# ---------------------------------------------------------------------------
# Voronoi tessellation (validation only, never meshed)

@dataclass
class VoronoiTessellation:
    cells: list
    seeds: np.ndarray
    separation: float                # min pairwise seed distance
    covering: float                  # max distance from box points to seeds
    clipped: list                    # indices of cells cut by the box
    skipped: list = field(default_factory=list)   # seeds outside the box

    def check_radius_bounds(self):
        """(separation <= 2 r_i on unclipped cells, r_out <= covering)."""
        cut = set(self.clipped)
        ok_sep = all(self.separation <= 2 * c.r_in + 1e-12
                     for c in self.cells if c.index not in cut)
        ok_cov = all(c.r_out <= self.covering + 1e-12 for c in self.cells)
        return ok_sep, ok_cov


def build_voronoi_tessellation(seeds, box=(0.0, 0.0, 1.0, 1.0)) -> VoronoiTessellation:
    seeds = np.asarray(seeds, dtype=float)
    if len(seeds) < 3:
        raise GeometryError("need at least 3 seeds")
    d2 = np.sum((seeds[:, None, :] - seeds[None, :, :]) ** 2, axis=2)
    np.fill_diagonal(d2, np.inf)
    if np.min(d2) < 1e-24:
        i, j = np.unravel_index(np.argmin(d2), d2.shape)
        raise GeometryError(f"duplicate seeds {i} and {j}")
    separation = math.sqrt(float(np.min(d2)))

    bx0, by0, bx1, by1 = box
    base = [(bx0, by0), (bx1, by0), (bx1, by1), (bx0, by1)]
    cells = []
    clipped = []
    skipped = []
    covering = 0.0
    for i, s in enumerate(seeds):
        poly = list(base)
        for j, t in enumerate(seeds):
            if j == i:
                continue
            # keep the side of the bisector closer to s
            a, b = t - s
            c = 0.5 * (t[0] ** 2 - s[0] ** 2 + t[1] ** 2 - s[1] ** 2)
            poly = clip_halfplane(poly, a, b, c)
            if not poly:
                break
        if not poly:
            skipped.append(i)      # region lies entirely outside the box
            continue
        on_box = any(
            abs(x - bx0) < 1e-12 or abs(x - bx1) < 1e-12
            or abs(y - by0) < 1e-12 or abs(y - by1) < 1e-12
            for x, y in poly)
        if on_box:
            clipped.append(i)
        center, r_in = chebyshev_center(poly)
        _, r_out = min_enclosing_circle(poly)
        covering = max(covering, max(
            math.hypot(x - s[0], y - s[1]) for x, y in poly))
        cells.append(Cell(index=i, polygon=tuple(poly), r_in=r_in,
                          r_out=r_out, center=center))
    if not cells:
        raise GeometryError("every seed region lies outside the box")
    return VoronoiTessellation(cells, seeds, separation, covering, clipped,
                               skipped)


# ---------------------------------------------------------------------------
# holes

def max_admissible_beta(cells, constants=DEFAULT_CONSTANTS) -> float:
    r_max = max(c.r_in for c in cells)
    return constants.c_sec / (2.0 * r_max)


def place_holes(cells, shape_spec, beta, constants=DEFAULT_CONSTANTS,
                jitter=None, rng=None) -> list:
    """One hole per cell at the Chebyshev center, enclosing radius beta*r^2.

    shape_spec is "circle" or ("kgon", k).  jitter is None, a fixed offset
    ("fixed", dx, dy) in units of r, or ("random", frac) with frac < 1 of the
    largest offset that keeps the secure-distance margin.
    """
    if isinstance(shape_spec, str):
        kind, k = shape_spec, None
    else:
        kind, k = shape_spec[0], int(shape_spec[1])
    if kind not in ("circle", "kgon"):
        raise GeometryError(f"unsupported hole shape {shape_spec!r}")
    if kind == "kgon" and (k is None or k < 3):
        raise GeometryError("kgon holes need k >= 3")

    r_max = max(c.r_in for c in cells)
    beta_max = max_admissible_beta(cells, constants)
    if beta <= 0 or beta > beta_max:
        raise GeometryError(
            f"beta={beta} violates hole smallness (2*d <= c_sec*r); "
            f"max admissible beta is {beta_max:.6g}")
    if constants.c_sec * r_max > 0.5 + 1e-15:
        raise GeometryError("c_sec * r exceeds 1/2; refine the tessellation")

    holes = []
    for cell in cells:
        r = cell.r_in
        cx, cy = cell.center
        if jitter is None:
            off = (0.0, 0.0)
        elif jitter[0] == "fixed":
            off = (jitter[1] * r, jitter[2] * r)
        elif jitter[0] == "random":
            frac = float(jitter[1])
            if not 0 <= frac < 1:
                raise GeometryError("random jitter fraction must be in [0,1)")
            if rng is None:
                raise GeometryError("random jitter needs an rng")
            ang = rng.uniform(0.0, 2.0 * math.pi)
            mag = frac * (1.0 - constants.c_sec) * r
            off = (mag * math.cos(ang), mag * math.sin(ang))
        else:
            raise GeometryError(f"unknown jitter spec {jitter!r}")
        center = (cx + off[0], cy + off[1])
        dist = dist_to_polygon_boundary(center, cell.float_polygon())
        if dist < constants.c_sec * r - 1e-12:
            raise GeometryError(
                f"jittered hole in cell {cell.index} breaks the secure "
                f"distance: dist={dist:.3g} < c_sec*r={constants.c_sec * r:.3g}")
        holes.append(Hole(cell_index=cell.index, kind=kind, k=k,
                          center=center, d=beta * r * r))
    return holes


def build_perforated_geometry(domain, m, beta, shape_spec="circle",
                              constants=DEFAULT_CONSTANTS, jitter=None,
                              rng=None) -> PerforatedGeometry:
    cells = build_square_tessellation(domain, m)
    holes = place_holes(cells, shape_spec, beta, constants, jitter, rng)
    return PerforatedGeometry(domain=domain, m=m, cells=cells, holes=holes,
                              beta=beta, constants=constants)


# ---------------------------------------------------------------------------
# weight field and its convergence defect

@dataclass
class WeightField:
    per_cell: np.ndarray             # hole perimeter / cell area, per cell
    q_limit: object = None           # float or callable, set by the study
    sigma: float = 1.0
    kappa: float | None = None

    @property
    def q_min(self) -> float:
        return float(np.min(self.per_cell))

    @property
    def q_max(self) -> float:
        return float(np.max(self.per_cell))


def weight_field(geometry: PerforatedGeometry) -> WeightField:
    values = np.empty(len(geometry.cells))
    for cell, hole in zip(geometry.cells, geometry.holes):
        values[cell.index] = hole.perimeter / float(cell.area)
    return WeightField(per_cell=values)


def _boxes_meeting(bbox):
    x0, y0, x1, y1 = (float(v) for v in bbox)
    kx0, kx1 = math.floor(x0), math.ceil(x1)
    ky0, ky1 = math.floor(y0), math.ceil(y1)
    for ky in range(ky0, ky1):
        for kx in range(kx0, kx1):
            yield kx, ky


def kappa(geometry: PerforatedGeometry, wf: WeightField, q_limit,
          sigma: float = 1.0) -> float:
    """Worst L^(1+sigma) defect of the piecewise weight against its limit,
    over unit boxes of the integer lattice that meet the domain.

    Cell-against-box intersections are clipped exactly (rational vertices);
    a callable limit weight is integrated with an order-4 Gauss rule on a
    fan triangulation of each clipped piece.
    """
    mu = 1.0 + sigma
    box_acc: dict = {}
    for cell in geometry.cells:
        qi = wf.per_cell[cell.index]
        for kx, ky in _boxes_meeting(_cell_bbox(cell)):
            piece = clip_box(list(cell.polygon), kx, ky, kx + 1, ky + 1)
            if len(piece) < 3:
                continue
            area = abs(poly_area(piece))
            if area == 0:
                continue
            if callable(q_limit):
                val = _gauss_defect(piece, qi, q_limit, mu)
            else:
                val = abs(qi - float(q_limit)) ** mu * float(area)
            box_acc[(kx, ky)] = box_acc.get((kx, ky), 0.0) + val
    if not box_acc:
        return 0.0
    return max(box_acc.values()) ** (1.0 / mu)


def _cell_bbox(cell):
    xs = [v[0] for v in cell.polygon]
    ys = [v[1] for v in cell.polygon]
    return min(xs), min(ys), max(xs), max(ys)


def _gauss_defect(piece, qi, q_limit, mu):
    pts = np.array([[float(x), float(y)] for x, y in piece])
    total = 0.0
    for i in range(1, len(pts) - 1):
        tri = np.array([pts[0], pts[i], pts[i + 1]])
        area = abs(0.5 * ((tri[1, 0] - tri[0, 0]) * (tri[2, 1] - tri[0, 1])
                          - (tri[2, 0] - tri[0, 0]) * (tri[1, 1] - tri[0, 1])))
        gp = oracles._TRI_B @ tri
        for (x, y), w in zip(gp, oracles._TRI_W):
            total += w * area * abs(qi - q_limit(x, y)) ** mu
    return total


# ---------------------------------------------------------------------------
# assumption validation

@dataclass
class AssumptionCheck:
    name: str
    passed: bool
    measured: float
    bound: float
    worst_cell: int | None = None


@dataclass
class AssumptionReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self):
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "measured": c.measured,
                 "bound": c.bound, "worst_cell": c.worst_cell}
                for c in self.checks
            ],
        }


def validate_assumptions(geometry: PerforatedGeometry,
                         wf: WeightField | None = None) -> AssumptionReport:
    cst = geometry.constants
    cells, holes = geometry.cells, geometry.holes
    checks = []

    if all(c.grid is not None for c in cells):
        # grid cells are exact 1/m squares regardless of how they were loaded
        tiled = Fraction(len(cells), geometry.m ** 2)
    else:
        tiled = sum(c.area for c in cells)
    exact = tiled == geometry.domain.area
    checks.append(AssumptionCheck(
        "tiling-partition", exact, float(tiled), float(geometry.domain.area)))

    ratios = [(c.r_out / c.r_in, c.index) for c in cells]
    worst, idx = max(ratios)
    checks.append(AssumptionCheck(
        "cell-radius-ratio", worst <= cst.c_tilde + 1e-12, worst,
        cst.c_tilde, idx if worst > cst.c_tilde + 1e-12 else None))

    sec = []
    for cell, hole in zip(cells, holes):
        dist = dist_to_polygon_boundary(hole.center, cell.float_polygon())
        sec.append((dist / cell.r_in, cell.index))
    worst, idx = min(sec)
    checks.append(AssumptionCheck(
        "secure-distance", worst >= cst.c_sec - 1e-12, worst, cst.c_sec,
        idx if worst < cst.c_sec - 1e-12 else None))

    scaling = [(h.d / c.r_in ** 2, c.index) for c, h in zip(cells, holes)]
    lo, lo_i = min(scaling)
    hi, hi_i = max(scaling)
    checks.append(AssumptionCheck(
        "hole-scaling-lower", lo >= cst.c_d_minus - 1e-12, lo, cst.c_d_minus,
        lo_i if lo < cst.c_d_minus - 1e-12 else None))
    checks.append(AssumptionCheck(
        "hole-scaling-upper", hi <= cst.c_d_plus + 1e-12, hi, cst.c_d_plus,
        hi_i if hi > cst.c_d_plus + 1e-12 else None))

    if wf is None:
        wf = weight_field(geometry)
    checks.append(AssumptionCheck(
        "weight-positive", wf.q_min > 0.0, wf.q_min, 0.0,
        int(np.argmin(wf.per_cell)) if wf.q_min <= 0 else None))

    return AssumptionReport(checks)


# ---------------------------------------------------------------------------
# serialization

def geometry_to_json(geometry: PerforatedGeometry, wf: WeightField | None = None,
                     indent: int | None = 2) -> str:
    wf = weight_field(geometry) if wf is None else wf
    payload = {
        "domain": {
            "kind": geometry.domain.kind,
            "vertices": [[str(x), str(y)] for x, y in geometry.domain.vertices],
        },
        "epsilon": {"m": geometry.m, "value": geometry.epsilon},
        "beta": geometry.beta,
        "constants": {
            "c_tilde": geometry.constants.c_tilde,
            "c_sec": geometry.constants.c_sec,
            "c_d_minus": geometry.constants.c_d_minus,
            "c_d_plus": geometry.constants.c_d_plus,
        },
        "cells": [
            {"id": c.index,
             "vertices": [[str(x), str(y)] for x, y in c.polygon],
             "r": c.r_in, "r_outer": c.r_out, "center": list(c.center),
             "grid": list(c.grid) if c.grid else None}
            for c in geometry.cells
        ],
        "holes": [
            {"cell": h.cell_index, "shape": h.kind, "k": h.k,
             "center": list(h.center), "d": h.d}
            for h in geometry.holes
        ],
        "weights": {
            "per_cell": [float(v) for v in wf.per_cell],
            "Q_limit": wf.q_limit if not callable(wf.q_limit) else None,
            "kappa": wf.kappa,
            "sigma": wf.sigma,
        },
    }
    return json.dumps(payload, indent=indent)


def geometry_from_json(text: str) -> PerforatedGeometry:
    data = json.loads(text)
    domain = make_domain(
        [(Fraction(x), Fraction(y)) for x, y in data["domain"]["vertices"]],
        data["domain"]["kind"])
    cst = AssumptionConstants(**data["constants"])
    m = int(data["epsilon"]["m"])
    cells = [
        Cell(index=c["id"],
             polygon=tuple((Fraction(x), Fraction(y))
                           for x, y in c["vertices"]),
             r_in=c["r"], r_out=c["r_outer"], center=tuple(c["center"]),
             grid=tuple(c["grid"]) if c.get("grid") else None)
        for c in data["cells"]
    ]
    holes = [
        Hole(cell_index=h["cell"], kind=h["shape"], k=h["k"],
             center=tuple(h["center"]), d=h["d"])
        for h in data["holes"]
    ]
    return PerforatedGeometry(domain=domain, m=m, cells=cells, holes=holes,
                              beta=data["beta"], constants=cst)
