"""Conforming P1 triangulations of perforated and plain rectilinear domains.

Each grid cell is meshed from a fixed template: geometrically graded circular
rings climb out of the tiny hole to the secure ball, then transfinite rows
connect that ring straight to the cell boundary, graded per connector so the
band heights track the local spacing.  Cell boundary nodes sit on the global
1/(m*s) lattice and are generated from integer formulas, so neighbouring
cells produce bit-identical shared nodes and stitching is exact coordinate
matching, no tolerances involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .geometry import Hole

OUTER = -1


class MeshError(ValueError):
    pass


@dataclass
class Mesh:
    nodes: np.ndarray                # (n, 2) float
    triangles: np.ndarray            # (m, 3) int, positively oriented
    boundary_edges: np.ndarray       # (e, 2) int
    edge_tags: np.ndarray            # (e,) int: OUTER or hole id >= 0
    tri_cell: np.ndarray = None      # (m,) int, -1 when not cell-based
    hole_geoms: dict = field(default_factory=dict)
    h_max: float = 0.0
    outer_curve: tuple | None = None  # ("circle", cx, cy, radius) if curved

    def __post_init__(self):
        if self.tri_cell is None:
            self.tri_cell = np.full(len(self.triangles), -1, dtype=np.int64)

    @property
    def num_nodes(self):
        return len(self.nodes)

    @property
    def num_triangles(self):
        return len(self.triangles)

    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                      - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))

    def area(self) -> float:
        return float(np.sum(self.signed_areas()))

    def min_angle(self) -> float:
        """Smallest triangle angle in degrees."""
        p = self.nodes[self.triangles]
        worst = math.inf
        for i in range(3):
            a = p[:, (i + 1) % 3] - p[:, i]
            b = p[:, (i + 2) % 3] - p[:, i]
            cosv = np.sum(a * b, axis=1) / (
                np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            worst = min(worst, float(np.min(np.degrees(np.arccos(
                np.clip(cosv, -1.0, 1.0))))))
        return worst

    def edge_lengths(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        out = []
        for i in range(3):
            out.append(np.hypot(*(p[:, (i + 1) % 3] - p[:, i]).T))
        return np.concatenate(out)

    def boundary_nodes(self, tag=None) -> np.ndarray:
        if tag is None:
            sel = np.ones(len(self.edge_tags), dtype=bool)
        else:
            sel = self.edge_tags == tag
        return np.unique(self.boundary_edges[sel])

    def interior_edge_multiplicities(self):
        """Map undirected edge -> incidence count over triangles."""
        t = self.triangles
        edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        edges.sort(axis=1)
        uniq, counts = np.unique(edges, axis=0, return_counts=True)
        return uniq, counts


@dataclass(frozen=True)
class CellMeshTemplate:
    ring_count: int = 8
    grading: float = 2.0
    boundary_nodes_per_side: int = 8
    hole_boundary_segments: int = 32

    def validate(self, hole_k: int | None = None):
        n, s = self.hole_boundary_segments, self.boundary_nodes_per_side
        if self.grading <= 1.0:
            raise MeshError("grading factor must exceed 1")
        if self.ring_count < 1:
            raise MeshError("ring_count must be >= 1")
        if n % 8 != 0:
            raise MeshError("hole_boundary_segments must be a multiple of 8")
        if s % 2 != 0:
            raise MeshError("boundary_nodes_per_side must be even")
        quot = 4 * s / n
        if quot < 1 or abs(math.log2(quot) - round(math.log2(quot))) > 1e-12:
            raise MeshError(
                "4 * boundary_nodes_per_side must equal "
                "hole_boundary_segments * 2^p for integer p >= 0")
        if hole_k is not None and n % hole_k != 0:
            raise MeshError(
                f"hole_boundary_segments must be a multiple of k={hole_k}")

    @property
    def doublings(self) -> int:
        return round(math.log2(4 * self.boundary_nodes_per_side
                               / self.hole_boundary_segments))


def _square_ring(cx, cy, a, count):
    """count nodes on the square of half-width a, uniform in arc length,
    counterclockwise from the mid-right point."""
    pts = []
    step = 8.0 * a / count
    for w in range(count):
        ell = w * step
        if ell <= a:
            pts.append((cx + a, cy + ell))
        elif ell <= 3 * a:
            pts.append((cx + a - (ell - a), cy + a))
        elif ell <= 5 * a:
            pts.append((cx - a, cy + a - (ell - 3 * a)))
        elif ell <= 7 * a:
            pts.append((cx - a + (ell - 5 * a), cy - a))
        else:
            pts.append((cx + a, cy - a + (ell - 7 * a)))
    return pts


def _cell_boundary_walk(ix, iy, m, s):
    """Lattice coordinates (units of 1/(m*s)) of the 4s cell boundary nodes,
    counterclockwise starting at the mid-right node."""
    x0, y0 = ix * s, iy * s
    walk = []
    walk += [(x0 + k, y0) for k in range(s)]            # bottom, left->right
    walk += [(x0 + s, y0 + k) for k in range(s)]        # right, up
    walk += [(x0 + s - k, y0 + s) for k in range(s)]    # top, right->left
    walk += [(x0, y0 + s - k) for k in range(s)]        # left, down
    start = s + s // 2                                  # mid-right
    return walk[start:] + walk[:start]


def _graded_fractions(length, first_band, count):
    """Cumulative fractions of a geometric subdivision of [0, length] into
    count bands whose first band is close to first_band."""
    if length <= first_band * count or count == 1:
        return [q / count for q in range(1, count + 1)]

    def total(ratio):
        if abs(ratio - 1.0) < 1e-12:
            return first_band * count
        return first_band * (ratio ** count - 1.0) / (ratio - 1.0)

    lo, hi = 1.0, 2.0
    while total(hi) < length:
        hi *= 1.5
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if total(mid) < length:
            lo = mid
        else:
            hi = mid
    g = 0.5 * (lo + hi)
    acc, out = 0.0, []
    band = first_band
    for _ in range(count):
        acc += band
        out.append(acc)
        band *= g
    return [v / acc for v in out]


def _tri_min_angle(pa, pb, pc):
    ax, ay = pb[0] - pa[0], pb[1] - pa[1]
    bx, by = pc[0] - pb[0], pc[1] - pb[1]
    cx, cy = pa[0] - pc[0], pa[1] - pc[1]
    area2 = ax * by - ay * bx
    if area2 <= 0:
        return -1.0
    worst = math.pi
    for (ux, uy), (vx, vy) in (((ax, ay), (-cx, -cy)),
                               ((bx, by), (-ax, -ay)),
                               ((cx, cy), (-bx, -by))):
        dot = ux * vx + uy * vy
        nrm = math.hypot(ux, uy) * math.hypot(vx, vy)
        worst = min(worst, math.acos(max(-1.0, min(1.0, dot / nrm))))
    return worst


def _quad_band(tris, inner, outer, pts=None):
    """Triangulate the band between two equal-count rings; with pts given,
    each quad is split along whichever diagonal maximizes the min angle."""
    n = len(inner)
    for j in range(n):
        v0, v3 = inner[j], inner[(j + 1) % n]
        v1, v2 = outer[j], outer[(j + 1) % n]
        split_a = ((v0, v1, v2), (v0, v2, v3))
        if pts is None:
            tris.extend(split_a)
            continue
        split_b = ((v0, v1, v3), (v1, v2, v3))
        score_a = min(_tri_min_angle(*(pts[i] for i in t)) for t in split_a)
        score_b = min(_tri_min_angle(*(pts[i] for i in t)) for t in split_b)
        tris.extend(split_a if score_a >= score_b else split_b)


def _doubling_band(tris, inner, outer):
    n = len(inner)
    for j in range(n):
        a, b = inner[j], inner[(j + 1) % n]
        c0, c1, c2 = outer[2 * j], outer[2 * j + 1], outer[(2 * j + 2) % (2 * n)]
        tris.append((a, c0, c1))
        tris.append((a, c1, b))
        tris.append((b, c1, c2))


def _build_cell(cell, hole: Hole, template: CellMeshTemplate, c_sec: float):
    """Nodes, triangles, hole edges, and lattice keys for one cell mesh.

    Returns (points, lattice, triangles, hole_edges) where lattice[i] is the
    integer lattice key of boundary node i (None off the boundary).
    """
    if cell.grid is None:
        raise MeshError("template meshing requires exact-tiling grid cells")
    template.validate(hole.k if hole.kind == "kgon" else None)
    ix, iy, m = cell.grid
    s = template.boundary_nodes_per_side
    n = template.hole_boundary_segments
    eps = 1.0 / m
    r = cell.r_in
    hx, hy = hole.center
    d = hole.d

    rho_out = c_sec * r
    ratio = rho_out / d
    if ratio < 2.0:
        raise MeshError("hole too large for the secure ball (2d > c_sec*r)")
    rings_needed = math.ceil(math.log(ratio) / math.log(template.grading) - 1e-12)
    if template.ring_count < rings_needed:
        raise MeshError(
            f"ring_count={template.ring_count} cannot grade from d={d:.3g} "
            f"to {rho_out:.3g} at grading {template.grading}; "
            f"use ring_count >= {rings_needed}")
    # ring_count is a budget: spend only as many rings as keeps the radial
    # step near the tangential spacing (ratio 1 + 2*pi/n per ring)
    balanced = round(math.log(ratio) / math.log(1.0 + 2.0 * math.pi / n))
    rings = min(template.ring_count, max(1, rings_needed, balanced))
    ccx, ccy = cell.center
    half = 0.5 * eps
    off_inf = max(abs(hx - ccx), abs(hy - ccy))
    if off_inf + rho_out > 0.95 * half:
        raise MeshError(
            f"hole offset in cell {cell.index} leaves no room for the "
            "transition layer to the cell boundary")

    points: list = []
    lattice: list = []

    def add(pt, key=None):
        points.append(pt)
        lattice.append(key)
        return len(points) - 1

    tris: list = []
    p = template.doublings
    rings = max(rings, p + 1)
    plain = rings - p
    t = ratio ** (1.0 / rings)

    # ring 0: the polygonalized hole boundary
    ring = [add(hole.boundary_point(2.0 * math.pi * j / n)) for j in range(n)]
    hole_edges = [(ring[j], ring[(j + 1) % n]) for j in range(n)]

    count = n
    circle_pts = None
    for j in range(1, rings + 1):
        rho = rho_out if j == rings else d * t ** j
        double = j > plain
        nxt_count = count * 2 if double else count
        pts = [(hx + rho * math.cos(2.0 * math.pi * q / nxt_count),
                hy + rho * math.sin(2.0 * math.pi * q / nxt_count))
               for q in range(nxt_count)]
        nxt = [add(pt) for pt in pts]
        if double:
            _doubling_band(tris, ring, nxt)
        else:
            _quad_band(tris, ring, nxt, points)
        ring, count = nxt, nxt_count
        circle_pts = pts

    # transition layer: transfinite rows from the secure-ball ring straight
    # to the lattice boundary walk.  Uniform circle angles pair with the
    # arc-uniform walk (corners align at the 45-degree nodes); every
    # connector is graded geometrically so its first band matches the circle
    # spacing, whatever its length.
    den = m * s
    walk = _cell_boundary_walk(ix, iy, m, s)
    walk_pts = [(gx / den, gy / den) for gx, gy in walk]
    t0 = 2.0 * math.pi * rho_out / (4 * s)
    lengths = [math.hypot(wp[0] - cp[0], wp[1] - cp[1])
               for wp, cp in zip(walk_pts, circle_pts)]
    grow = 2.0
    row_count = max(2, math.ceil(
        math.log(1.0 + max(lengths) * (grow - 1.0) / t0) / math.log(grow)))
    weights = [_graded_fractions(length, t0, row_count) for length in lengths]
    for q in range(1, row_count + 1):
        if q == row_count:
            nxt = [add(pt, key=key) for pt, key in zip(walk_pts, walk)]
        else:
            nxt = [add(((1.0 - wq[q - 1]) * cpt[0] + wq[q - 1] * wpt[0],
                        (1.0 - wq[q - 1]) * cpt[1] + wq[q - 1] * wpt[1]))
                   for cpt, wpt, wq in zip(circle_pts, walk_pts, weights)]
        _quad_band(tris, ring, nxt, points)
        ring = nxt

    return points, lattice, tris, hole_edges


def mesh_cell(cell, hole: Hole, template: CellMeshTemplate,
              c_sec: float = 0.5) -> Mesh:
    """Mesh a single cell; boundary edges carry only the hole tag."""
    points, _, tris, hole_edges = _build_cell(cell, hole, template, c_sec)
    nodes = np.array(points)
    triangles = np.array(tris, dtype=np.int64)
    edges = np.array(hole_edges, dtype=np.int64)
    tags = np.full(len(edges), cell.index, dtype=np.int64)
    mesh = Mesh(nodes, triangles, edges, tags,
                tri_cell=np.full(len(triangles), cell.index, dtype=np.int64),
                hole_geoms={cell.index: hole})
    mesh.h_max = float(np.max(mesh.edge_lengths()))
    _check_orientation(mesh)
    return mesh


def _check_orientation(mesh):
    areas = mesh.signed_areas()
    if np.any(areas <= 0):
        bad = int(np.argmin(areas))
        raise MeshError(f"non-positive triangle {bad} (area {areas[bad]:.3g})")


def mesh_perforated(geometry, template: CellMeshTemplate) -> Mesh:
    """Stitched conforming mesh of the perforated domain.

    Shared cell-boundary nodes are generated from integer lattice formulas in
    every adjacent cell, so deduplication is an exact key match.
    """
    s = template.boundary_nodes_per_side
    c_sec = geometry.constants.c_sec
    occupied = {cell.grid[:2] for cell in geometry.cells}

    nodes: list = []
    lattice_ids: dict = {}
    tri_chunks: list = []
    cell_ids: list = []
    edge_list: list = []
    tag_list: list = []

    for cell, hole in zip(geometry.cells, geometry.holes):
        points, lattice, tris, hole_edges = _build_cell(
            cell, hole, template, c_sec)
        local2global = np.empty(len(points), dtype=np.int64)
        for i, (pt, key) in enumerate(zip(points, lattice)):
            if key is None:
                local2global[i] = len(nodes)
                nodes.append(pt)
            else:
                gid = lattice_ids.get(key)
                if gid is None:
                    gid = len(nodes)
                    nodes.append(pt)
                    lattice_ids[key] = gid
                local2global[i] = gid
        tri_chunks.append(local2global[np.array(tris, dtype=np.int64)])
        cell_ids.append(np.full(len(tris), cell.index, dtype=np.int64))
        for a, b in hole_edges:
            edge_list.append((local2global[a], local2global[b]))
            tag_list.append(cell.index)

    # outer boundary edges: cell sides with no occupied neighbour
    for cell in geometry.cells:
        ix, iy, _ = cell.grid
        x0, y0 = ix * s, iy * s
        sides = {
            (ix, iy - 1): [(x0 + k, y0) for k in range(s + 1)],
            (ix + 1, iy): [(x0 + s, y0 + k) for k in range(s + 1)],
            (ix, iy + 1): [(x0 + s - k, y0 + s) for k in range(s + 1)],
            (ix - 1, iy): [(x0, y0 + s - k) for k in range(s + 1)],
        }
        for nbr, walk in sides.items():
            if nbr in occupied:
                continue
            for a, b in zip(walk[:-1], walk[1:]):
                edge_list.append((lattice_ids[a], lattice_ids[b]))
                tag_list.append(OUTER)

    mesh = Mesh(
        np.array(nodes),
        np.concatenate(tri_chunks),
        np.array(edge_list, dtype=np.int64),
        np.array(tag_list, dtype=np.int64),
        tri_cell=np.concatenate(cell_ids),
        hole_geoms={h.cell_index: h for h in geometry.holes},
    )
    mesh.h_max = float(np.max(mesh.edge_lengths()))
    _check_orientation(mesh)
    _check_conformity(mesh)
    return mesh


def _check_conformity(mesh):
    uniq, counts = mesh.interior_edge_multiplicities()
    if np.any(counts > 2):
        bad = uniq[counts > 2][0]
        raise MeshError(
            f"edge {tuple(bad)} shared by more than two triangles at "
            f"{mesh.nodes[bad[0]]}, {mesh.nodes[bad[1]]}")


def mesh_unperforated(domain, h: float) -> Mesh:
    """Structured right-triangle mesh of a rectilinear domain, size <= h."""
    if h <= 0:
        raise MeshError("h must be positive")
    den = 1
    for x, y in domain.vertices:
        den = math.lcm(den, x.denominator, y.denominator)
    nd = den * max(1, math.ceil(1.0 / (h * den) - 1e-12))
    x0, y0, x1, y1 = domain.bbox()
    ix0, ix1 = int(x0 * nd), math.ceil(x1 * nd)
    iy0, iy1 = int(y0 * nd), math.ceil(y1 * nd)

    node_ids: dict = {}
    nodes: list = []
    tris: list = []

    def nid(gx, gy):
        got = node_ids.get((gx, gy))
        if got is None:
            got = len(nodes)
            nodes.append((gx / nd, gy / nd))
            node_ids[(gx, gy)] = got
        return got

    for iy in range(iy0, iy1):
        for ix in range(ix0, ix1):
            if not domain.contains(Fraction(2 * ix + 1, 2 * nd),
                                   Fraction(2 * iy + 1, 2 * nd)):
                continue
            sw, se = nid(ix, iy), nid(ix + 1, iy)
            ne, nw = nid(ix + 1, iy + 1), nid(ix, iy + 1)
            tris.append((sw, se, ne))
            tris.append((sw, ne, nw))
    if not tris:
        raise MeshError("empty structured mesh")

    triangles = np.array(tris, dtype=np.int64)
    edges_once = _boundary_edges_oriented(triangles)
    mesh = Mesh(np.array(nodes), triangles,
                edges_once, np.full(len(edges_once), OUTER, dtype=np.int64))
    mesh.h_max = float(np.max(mesh.edge_lengths()))
    return mesh


def _boundary_edges_oriented(triangles):
    """Directed edges that occur exactly once over all triangles."""
    t = triangles
    directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    key = directed.copy()
    key.sort(axis=1)
    _, inverse, counts = np.unique(key, axis=0, return_inverse=True,
                                   return_counts=True)
    return directed[counts[inverse] == 1]


def refine(mesh: Mesh) -> Mesh:
    """Uniform red refinement; circular hole boundaries are re-projected so
    the polygonal approximation tightens with the mesh."""
    t = mesh.triangles
    all_edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    all_edges.sort(axis=1)
    uniq, inverse = np.unique(all_edges, axis=0, return_inverse=True)
    mids = 0.5 * (mesh.nodes[uniq[:, 0]] + mesh.nodes[uniq[:, 1]])
    mid_ids = len(mesh.nodes) + np.arange(len(uniq))

    # project boundary-edge midpoints onto their true curves
    edge_key = {}
    for (a, b), tag in zip(mesh.boundary_edges, mesh.edge_tags):
        edge_key[(min(a, b), max(a, b))] = tag
    for idx, (a, b) in enumerate(map(tuple, uniq)):
        tag = edge_key.get((a, b))
        if tag is None:
            continue
        if tag == OUTER:
            if mesh.outer_curve is None:
                continue
            _, cx, cy, rad = mesh.outer_curve
        else:
            hole = mesh.hole_geoms.get(int(tag))
            if hole is None or hole.kind != "circle":
                continue
            (cx, cy), rad = hole.center, hole.d
        vx, vy = mids[idx, 0] - cx, mids[idx, 1] - cy
        nrm = math.hypot(vx, vy)
        mids[idx] = (cx + rad * vx / nrm, cy + rad * vy / nrm)

    nodes = np.vstack([mesh.nodes, mids])
    nt = len(t)
    e01 = mid_ids[inverse[0 * nt:1 * nt]]
    e12 = mid_ids[inverse[1 * nt:2 * nt]]
    e20 = mid_ids[inverse[2 * nt:3 * nt]]
    children = np.concatenate([
        np.stack([t[:, 0], e01, e20], axis=1),
        np.stack([t[:, 1], e12, e01], axis=1),
        np.stack([t[:, 2], e20, e12], axis=1),
        np.stack([e01, e12, e20], axis=1),
    ])
    child_cells = np.concatenate([mesh.tri_cell] * 4)

    lookup = {tuple(e): mid for e, mid in zip(map(tuple, uniq), mid_ids)}
    new_edges, new_tags = [], []
    for (a, b), tag in zip(mesh.boundary_edges, mesh.edge_tags):
        mid = lookup[(min(a, b), max(a, b))]
        new_edges.append((a, mid))
        new_edges.append((mid, b))
        new_tags += [tag, tag]

    out = Mesh(nodes, children, np.array(new_edges, dtype=np.int64),
               np.array(new_tags, dtype=np.int64), tri_cell=child_cells,
               hole_geoms=dict(mesh.hole_geoms),
               outer_curve=mesh.outer_curve)
    out.h_max = float(np.max(out.edge_lengths()))
    return out


# ---------------------------------------------------------------------------
# plain-text export (round-trips bit-exactly through repr floats)

def export_mesh(mesh: Mesh) -> str:
    lines = [f"{mesh.num_nodes} nodes {mesh.num_triangles} triangles "
             f"{len(mesh.boundary_edges)} boundary_edges"]
    for x, y in mesh.nodes:
        lines.append(f"{float(x)!r} {float(y)!r}")
    for a, b, c in mesh.triangles:
        lines.append(f"{a} {b} {c}")
    for (a, b), tag in zip(mesh.boundary_edges, mesh.edge_tags):
        name = "outer" if tag == OUTER else f"hole:{tag}"
        lines.append(f"{a} {b} {name}")
    return "\n".join(lines) + "\n"


def load_mesh(text: str) -> Mesh:
    rows = text.strip().split("\n")
    head = rows[0].split()
    n, m, e = int(head[0]), int(head[2]), int(head[4])
    nodes = np.array([[float(v) for v in rows[1 + i].split()]
                      for i in range(n)])
    tris = np.array([[int(v) for v in rows[1 + n + i].split()]
                     for i in range(m)], dtype=np.int64)
    edges, tags = [], []
    for i in range(e):
        a, b, name = rows[1 + n + m + i].split()
        edges.append((int(a), int(b)))
        tags.append(OUTER if name == "outer" else int(name.split(":")[1]))
    mesh = Mesh(nodes, tris, np.array(edges, dtype=np.int64),
                np.array(tags, dtype=np.int64))
    if len(tris):
        mesh.h_max = float(np.max(mesh.edge_lengths()))
    return mesh
