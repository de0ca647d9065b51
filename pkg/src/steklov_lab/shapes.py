"""Meshes of single shapes: disks, gon holes, collars, and interface balls.

These feed the one-cell eigenvalue studies.  Rings are star-shaped around a
common center and consecutive rings are triangulated with an angular zipper,
which tolerates arbitrary node counts per ring; refinement then goes through
the standard red refinement, so two-mesh extrapolation always has a clean
h -> h/2 pair.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import Hole, chebyshev_center
from .meshgen import Mesh, MeshError, OUTER, _boundary_edges_oriented, refine

TWO_PI = 2.0 * math.pi


def _zip_band(tris, inner_ids, inner_ang, outer_ids, outer_ang):
    """Triangulate the band between two closed CCW rings of nodes."""
    ii = list(inner_ids) + [inner_ids[0]]
    ia = list(inner_ang) + [inner_ang[0] + TWO_PI]
    oi = list(outer_ids) + [outer_ids[0]]
    oa = list(outer_ang) + [outer_ang[0] + TWO_PI]
    i = o = 0
    ni, no = len(ii) - 1, len(oi) - 1
    while i < ni or o < no:
        take_outer = o < no and (i >= ni or oa[o + 1] <= ia[i + 1])
        if take_outer:
            tris.append((ii[i], oi[o], oi[o + 1]))
            o += 1
        else:
            tris.append((ii[i], oi[o], ii[i + 1]))
            i += 1


def _pow2_segments(target: float, mult: int) -> int:
    """mult * 2^j closest above target (at least mult, at least 8-ish)."""
    base = max(target / mult, 1.0)
    return mult * 2 ** max(0, math.ceil(math.log2(base) - 1e-12))


def _fill_star_interior(nodes, tris, center, boundary_pt, ids, angles, scale=1.0):
    """Fill the inside of a star-shaped ring by halving rings down to a fan."""
    cx, cy = center
    while len(ids) > 8:
        sub = angles[::2]
        scale *= 0.5
        new_ids = []
        for th in sub:
            px, py = boundary_pt(th)
            nodes.append((cx + scale * (px - cx), cy + scale * (py - cy)))
            new_ids.append(len(nodes) - 1)
        _zip_band(tris, new_ids, sub, ids, angles)
        ids, angles = new_ids, sub
    nodes.append((cx, cy))
    c = len(nodes) - 1
    n = len(ids)
    for j in range(n):
        tris.append((c, ids[j], ids[(j + 1) % n]))


def _shape_hole(kind: str, k: int | None, radius: float, center=(0.0, 0.0)) -> Hole:
    return Hole(cell_index=0, kind=kind, k=k, center=center, d=radius)


def _ring(nodes, pts):
    ids = []
    for p in pts:
        nodes.append(p)
        ids.append(len(nodes) - 1)
    return ids


def mesh_hole_shape(kind: str, k: int | None, h: float) -> Mesh:
    """Mesh of the upscaled hole (smallest enclosing ball = unit ball)."""
    mult = 8 if kind == "circle" else k
    n = _pow2_segments(TWO_PI / h, mult)
    hole = _shape_hole(kind, k, 1.0)
    angles = [TWO_PI * j / n for j in range(n)]
    nodes: list = []
    tris: list = []
    ids = _ring(nodes, [hole.boundary_point(t) for t in angles])
    _fill_star_interior(nodes, tris, (0.0, 0.0), hole.boundary_point, ids, angles)
    edges = np.array([(ids[j], ids[(j + 1) % n]) for j in range(n)], dtype=np.int64)
    curve = ("circle", 0.0, 0.0, 1.0) if kind == "circle" else None
    mesh = Mesh(np.array(nodes), np.array(tris, dtype=np.int64),
                edges, np.full(n, OUTER, dtype=np.int64), outer_curve=curve)
    mesh.h_max = float(np.max(mesh.edge_lengths()))
    return mesh


def mesh_disk(radius: float, h: float, center=(0.0, 0.0)) -> Mesh:
    mesh = mesh_hole_shape("circle", None, h / radius)
    mesh.nodes = mesh.nodes * radius + np.asarray(center)
    mesh.h_max *= radius
    mesh.outer_curve = ("circle", center[0], center[1], radius)
    return mesh


def _collar_rings(nodes, tris, start_ids, start_angles, inner, outer, h,
                  center=(0.0, 0.0)):
    """Rings from an existing inner boundary out to the circle of the outer
    radius; node counts double whenever the arc spacing falls behind."""
    cx, cy = center
    nr = max(2, math.ceil((outer - inner) / h))
    ids, angles = start_ids, start_angles
    count = len(ids)
    for j in range(1, nr + 1):
        rho = inner + (outer - inner) * j / nr
        nxt_count = count * 2 if TWO_PI * rho / count > 2.2 * h else count
        sub = [TWO_PI * q / nxt_count for q in range(nxt_count)]
        new_ids = _ring(nodes, [(cx + rho * math.cos(t), cy + rho * math.sin(t))
                                for t in sub])
        _zip_band(tris, ids, angles, new_ids, sub)
        ids, angles, count = new_ids, sub, nxt_count
    return ids


def mesh_collar(kind: str, k: int | None, h: float,
                inner: float = 1.0, outer: float = 2.0) -> Mesh:
    """Mesh of the collar: ball of the outer radius minus the closed hole."""
    mult = 8 if kind == "circle" else k
    n = _pow2_segments(TWO_PI * inner / h, mult)
    hole = _shape_hole(kind, k, inner)
    angles = [TWO_PI * j / n for j in range(n)]
    nodes: list = []
    tris: list = []
    ids = _ring(nodes, [hole.boundary_point(t) for t in angles])
    outer_ids = _collar_rings(nodes, tris, ids, angles, inner, outer, h)
    edges = [(ids[j], ids[(j + 1) % n]) for j in range(n)]
    tags = [0] * n
    no = len(outer_ids)
    edges += [(outer_ids[j], outer_ids[(j + 1) % no]) for j in range(no)]
    tags += [OUTER] * no
    geoms = {0: hole} if kind == "circle" else {}
    mesh = Mesh(np.array(nodes), np.array(tris, dtype=np.int64),
                np.array(edges, dtype=np.int64), np.array(tags, dtype=np.int64),
                hole_geoms=geoms,
                outer_curve=("circle", 0.0, 0.0, float(outer)))
    mesh.h_max = float(np.max(mesh.edge_lengths()))
    return mesh


def mesh_ball_with_interface(kind: str, k: int | None, h: float,
                             hole_radius: float = 1.0,
                             outer_radius: float = 2.0) -> Mesh:
    """Ball of the outer radius with the hole boundary as an interior ring.

    Triangles carry a region marker in tri_cell: 0 inside the hole, 1 in the
    collar.  The interface ring is recoverable as the nodes shared by both
    regions.
    """
    mult = 8 if kind == "circle" else k
    n = _pow2_segments(TWO_PI * hole_radius / h, mult)
    hole = _shape_hole(kind, k, hole_radius)
    angles = [TWO_PI * j / n for j in range(n)]
    nodes: list = []
    tris: list = []
    ids = _ring(nodes, [hole.boundary_point(t) for t in angles])
    _fill_star_interior(nodes, tris, (0.0, 0.0), hole.boundary_point,
                        ids, angles)
    hole_tris = len(tris)
    outer_ids = _collar_rings(nodes, tris, ids, angles, hole_radius,
                              outer_radius, h)
    region = np.zeros(len(tris), dtype=np.int64)
    region[hole_tris:] = 1
    no = len(outer_ids)
    edges = np.array([(outer_ids[j], outer_ids[(j + 1) % no])
                      for j in range(no)], dtype=np.int64)
    mesh = Mesh(np.array(nodes), np.array(tris, dtype=np.int64), edges,
                np.full(no, OUTER, dtype=np.int64), tri_cell=region,
                outer_curve=("circle", 0.0, 0.0, float(outer_radius)))
    mesh.h_max = float(np.max(mesh.edge_lengths()))
    return mesh


def mesh_secure_ball(d: float, ball_radius: float, n_hole: int = 32,
                     grading: float = 1.7) -> Mesh:
    """Ball around a tiny circular hole, geometrically graded in radius.

    Regions in tri_cell: 0 = hole interior (the ball of radius d), 1 = the
    annulus out to the secure radius.  Built for scale-separated sweeps where
    ball_radius / d spans orders of magnitude.
    """
    if n_hole % 8 or 2 ** round(math.log2(n_hole / 8)) * 8 != n_hole:
        raise MeshError("n_hole must be 8 * 2^j")
    ratio = ball_radius / d
    if ratio < 2:
        raise MeshError("ball_radius must be at least 2 d")
    hole = _shape_hole("circle", None, d)
    angles = [TWO_PI * j / n_hole for j in range(n_hole)]
    nodes: list = []
    tris: list = []
    ids = _ring(nodes, [hole.boundary_point(t) for t in angles])
    _fill_star_interior(nodes, tris, (0.0, 0.0), hole.boundary_point,
                        ids, angles)
    hole_tris = len(tris)

    nr = math.ceil(math.log(ratio) / math.log(grading) - 1e-12)
    t = ratio ** (1.0 / nr)
    cur, cur_ang = ids, angles
    for j in range(1, nr + 1):
        rho = ball_radius if j == nr else d * t ** j
        new_ids = _ring(nodes, [(rho * math.cos(a), rho * math.sin(a))
                                for a in cur_ang])
        _zip_band(tris, cur, cur_ang, new_ids, cur_ang)
        cur = new_ids
    region = np.zeros(len(tris), dtype=np.int64)
    region[hole_tris:] = 1
    n = len(cur)
    edges = np.array([(cur[j], cur[(j + 1) % n]) for j in range(n)],
                     dtype=np.int64)
    mesh = Mesh(np.array(nodes), np.array(tris, dtype=np.int64), edges,
                np.full(n, OUTER, dtype=np.int64), tri_cell=region,
                outer_curve=("circle", 0.0, 0.0, float(ball_radius)))
    mesh.h_max = float(np.max(mesh.edge_lengths()))
    return mesh


def mesh_slit_collar(beta: float, h: float) -> Mesh:
    """Collar of the slit-annulus hole inside the ball of radius 2.

    The hole is the annulus 1/2 < |x| < 1 with an angular channel of
    half-width beta removed, so the collar consists of the inner disk and the
    outer annulus joined through the narrow channel.
    """
    if not 0 < beta <= math.pi / 2:
        raise MeshError("beta must lie in (0, pi/2]")
    radii = []
    for lo, hi in ((0.0, 0.5), (0.5, 1.0), (1.0, 2.0)):
        steps = max(2, math.ceil((hi - lo) / h))
        radii += [lo + (hi - lo) * j / steps for j in range(1, steps + 1)]
    na = max(32, math.ceil(TWO_PI / h))
    base = [-math.pi + TWO_PI * j / na for j in range(na)]
    extras = [-beta, -beta / 2, 0.0, beta / 2, beta]
    angles = sorted(set(base) | set(extras))
    merged = [angles[0]]
    for a in angles[1:]:
        if a - merged[-1] > 1e-9:
            merged.append(a)
    angles = merged
    na = len(angles)

    nodes: list = [(0.0, 0.0)]
    ring_ids = []
    for rho in radii:
        ring_ids.append(_ring(nodes, [(rho * math.cos(a), rho * math.sin(a))
                                      for a in angles]))
    tris: list = []
    for j in range(na):
        tris.append((0, ring_ids[0][j], ring_ids[0][(j + 1) % na]))
    for q in range(len(radii) - 1):
        _zip_band(tris, ring_ids[q], angles, ring_ids[q + 1], angles)

    pts = np.array(nodes)
    tri_arr = np.array(tris, dtype=np.int64)
    cen = pts[tri_arr].mean(axis=1)
    rc = np.hypot(cen[:, 0], cen[:, 1])
    tc = np.arctan2(cen[:, 1], cen[:, 0])
    inside_hole = (rc > 0.5) & (rc < 1.0) & (np.abs(tc) > beta)
    keep = tri_arr[~inside_hole]

    used = np.unique(keep)
    remap = -np.ones(len(pts), dtype=np.int64)
    remap[used] = np.arange(len(used))
    tri_new = remap[keep]
    edges = _boundary_edges_oriented(tri_new)
    mesh = Mesh(pts[used], tri_new, edges,
                np.full(len(edges), OUTER, dtype=np.int64))
    mesh.h_max = float(np.max(mesh.edge_lengths()))
    return mesh


def mesh_convex_polygon(verts, h: float) -> Mesh:
    """Fan triangulation from the Chebyshev center plus red refinement."""
    verts = [tuple(map(float, v)) for v in verts]
    center, _ = chebyshev_center(verts)
    nodes = [center] + verts
    n = len(verts)
    tris = [(0, 1 + j, 1 + (j + 1) % n) for j in range(n)]
    edges = np.array([(1 + j, 1 + (j + 1) % n) for j in range(n)],
                     dtype=np.int64)
    mesh = Mesh(np.array(nodes), np.array(tris, dtype=np.int64), edges,
                np.full(n, OUTER, dtype=np.int64))
    mesh.h_max = float(np.max(mesh.edge_lengths()))
    while mesh.h_max > h:
        mesh = refine(mesh)
    return mesh


def mesh_cell_with_hole(d: float, c_sec: float = 0.5, segments: int = 32,
                        sides: int = 8) -> Mesh:
    """Unit cell [0,1]^2 with a centered circular hole of radius d meshed
    through: the graded cell template outside, a star fill inside, with the
    hole boundary kept as an interior interface (regions 0/1 in tri_cell)."""
    from .geometry import Cell
    from .meshgen import CellMeshTemplate, _build_cell, _boundary_edges_oriented

    cell = Cell(index=0, polygon=((0, 0), (1, 0), (1, 1), (0, 1)),
                r_in=0.5, r_out=math.sqrt(0.5), center=(0.5, 0.5),
                grid=(0, 0, 1))
    hole = _shape_hole("circle", None, d, center=(0.5, 0.5))
    template = CellMeshTemplate(ring_count=40, grading=1.9,
                                boundary_nodes_per_side=sides,
                                hole_boundary_segments=segments)
    pts, _, tris, _ = _build_cell(cell, hole, template, c_sec)
    nodes = list(pts)
    tris = list(tris)
    collar_tris = len(tris)
    ids = list(range(segments))
    angles = [TWO_PI * j / segments for j in range(segments)]
    _fill_star_interior(nodes, tris, (0.5, 0.5), hole.boundary_point,
                        ids, angles)
    region = np.ones(len(tris), dtype=np.int64)
    region[collar_tris:] = 0
    tri_arr = np.array(tris, dtype=np.int64)
    edges = _boundary_edges_oriented(tri_arr)
    mesh = Mesh(np.array(nodes), tri_arr, edges,
                np.full(len(edges), OUTER, dtype=np.int64), tri_cell=region)
    mesh.h_max = float(np.max(mesh.edge_lengths()))
    return mesh


def interface_edges(mesh: Mesh, region_a: int = 0, region_b: int = 1):
    """Undirected edges shared by triangles of two different regions."""
    owner: dict = {}
    out = []
    for tri, reg in zip(mesh.triangles, mesh.tri_cell):
        for i in range(3):
            a, b = tri[i], tri[(i + 1) % 3]
            key = (min(a, b), max(a, b))
            prev = owner.get(key)
            if prev is None:
                owner[key] = reg
            elif {prev, reg} == {region_a, region_b}:
                out.append(key)
    return np.array(out, dtype=np.int64)


def interface_nodes(mesh: Mesh, region_a: int = 0, region_b: int = 1):
    edges = interface_edges(mesh, region_a, region_b)
    return np.unique(edges)
