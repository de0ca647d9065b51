"""P1 finite-element matrices for the perforated and homogenized forms.

Assembled matrices realize three quadratic forms: the Dirichlet energy, the
mass of the hole boundaries (1D mass matrices summed over tagged edges), and
weighted bulk mass.  Assembly is element-symmetric, so every matrix is
exactly symmetric at the floating-point level, and Dirichlet conditions are
imposed by true row/column elimination to keep spectra unpolluted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .meshgen import Mesh, OUTER


class FemError(ValueError):
    pass


def _tri_geometry(mesh: Mesh):
    p = mesh.nodes[mesh.triangles]
    x, y = p[:, :, 0], p[:, :, 1]
    area = 0.5 * ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0])
                  - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    if np.any(area <= 0):
        bad = int(np.argmin(area))
        raise FemError(f"degenerate or inverted triangle {bad} "
                       f"(signed area {area[bad]:.3g})")
    return x, y, area


def assemble_stiffness(mesh: Mesh) -> sp.csr_matrix:
    """Standard P1 stiffness; row sums vanish before elimination."""
    x, y, area = _tri_geometry(mesh)
    bx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]],
                  axis=1)
    by = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]],
                  axis=1)
    n = mesh.num_nodes
    rows, cols, vals = [], [], []
    for i in range(3):
        for j in range(3):
            rows.append(mesh.triangles[:, i])
            cols.append(mesh.triangles[:, j])
            vals.append((bx[:, i] * bx[:, j] + by[:, i] * by[:, j])
                        / (4.0 * area))
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n)).tocsr()
    mat.sum_duplicates()
    return mat


_MASS_LOCAL = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


def assemble_weighted_mass(mesh: Mesh, weight=1.0) -> sp.csr_matrix:
    """P1 mass with per-triangle weight.

    weight may be a constant, an array indexed by the triangle's cell id
    (exact for cellwise-constant fields, since template triangles never
    straddle cells), or a callable evaluated at triangle midpoints.
    """
    x, y, area = _tri_geometry(mesh)
    if callable(weight):
        cx = x.mean(axis=1)
        cy = y.mean(axis=1)
        w = np.array([weight(a, b) for a, b in zip(cx, cy)])
    elif np.ndim(weight) == 0:
        w = float(weight) * np.ones(len(area))
    else:
        weight = np.asarray(weight, dtype=float)
        if np.any(mesh.tri_cell < 0):
            raise FemError("cellwise weight needs cell ids on every triangle")
        w = weight[mesh.tri_cell]
    n = mesh.num_nodes
    rows, cols, vals = [], [], []
    for i in range(3):
        for j in range(3):
            rows.append(mesh.triangles[:, i])
            cols.append(mesh.triangles[:, j])
            vals.append(w * area * _MASS_LOCAL[i, j])
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n)).tocsr()
    mat.sum_duplicates()
    return mat


def assemble_mass(mesh: Mesh) -> sp.csr_matrix:
    return assemble_weighted_mass(mesh, 1.0)


def assemble_boundary_mass(mesh: Mesh, which="holes") -> sp.csr_matrix:
    """1D P1 mass summed over tagged boundary edges.

    which: "holes" (every hole tag), "outer", "all", or an explicit tag.
    """
    if which == "holes":
        sel = mesh.edge_tags != OUTER
    elif which == "outer":
        sel = mesh.edge_tags == OUTER
    elif which == "all":
        sel = np.ones(len(mesh.edge_tags), dtype=bool)
    else:
        sel = mesh.edge_tags == int(which)
    edges = mesh.boundary_edges[sel]
    n = mesh.num_nodes
    if len(edges) == 0:
        return sp.csr_matrix((n, n))
    pa, pb = mesh.nodes[edges[:, 0]], mesh.nodes[edges[:, 1]]
    length = np.hypot(pb[:, 0] - pa[:, 0], pb[:, 1] - pa[:, 1])
    local = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    rows, cols, vals = [], [], []
    for i in range(2):
        for j in range(2):
            rows.append(edges[:, i])
            cols.append(edges[:, j])
            vals.append(length * local[i, j])
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n)).tocsr()
    mat.sum_duplicates()
    return mat


def assemble_hole_mass(mesh: Mesh) -> sp.csr_matrix:
    return assemble_boundary_mass(mesh, "holes")


def edge_mass(mesh: Mesh, edges) -> sp.csr_matrix:
    """1D P1 mass over an explicit edge list (e.g. an interior interface)."""
    edges = np.asarray(edges, dtype=np.int64)
    n = mesh.num_nodes
    if len(edges) == 0:
        return sp.csr_matrix((n, n))
    pa, pb = mesh.nodes[edges[:, 0]], mesh.nodes[edges[:, 1]]
    length = np.hypot(pb[:, 0] - pa[:, 0], pb[:, 1] - pa[:, 1])
    local = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    rows, cols, vals = [], [], []
    for i in range(2):
        for j in range(2):
            rows.append(edges[:, i])
            cols.append(edges[:, j])
            vals.append(length * local[i, j])
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n)).tocsr()
    mat.sum_duplicates()
    return mat


# ---------------------------------------------------------------------------
# Dirichlet elimination

@dataclass
class DofMap:
    free: np.ndarray                 # free node ids, ascending
    index_of: np.ndarray             # node id -> reduced index, -1 constrained

    @property
    def num_free(self):
        return len(self.free)

    def expand(self, reduced: np.ndarray) -> np.ndarray:
        full = np.zeros(len(self.index_of))
        full[self.free] = reduced
        return full

    def restrict(self, full: np.ndarray) -> np.ndarray:
        return np.asarray(full)[self.free]


def build_dofmap(mesh: Mesh, constrained="outer") -> DofMap:
    """constrained: "outer" (Outer-tagged nodes), "boundary" (all tagged
    boundary nodes), or an explicit iterable of node ids."""
    if isinstance(constrained, str):
        if constrained == "outer":
            fixed = mesh.boundary_nodes(OUTER)
        elif constrained == "boundary":
            fixed = mesh.boundary_nodes(None)
        else:
            raise FemError(f"unknown constraint spec {constrained!r}")
    else:
        fixed = np.asarray(list(constrained), dtype=np.int64)
    mask = np.ones(mesh.num_nodes, dtype=bool)
    mask[fixed] = False
    free = np.nonzero(mask)[0]
    if len(free) == 0:
        raise FemError("every node is constrained; empty system")
    index_of = -np.ones(mesh.num_nodes, dtype=np.int64)
    index_of[free] = np.arange(len(free))
    return DofMap(free=free, index_of=index_of)


def apply_dirichlet(matrix: sp.spmatrix, dofmap: DofMap) -> sp.csr_matrix:
    """Delete constrained rows and columns (true elimination, not penalty)."""
    if matrix.shape[0] != len(dofmap.index_of):
        raise FemError(
            f"matrix dimension {matrix.shape[0]} does not match the "
            f"{len(dofmap.index_of)}-node mesh")
    return matrix.tocsr()[dofmap.free][:, dofmap.free]


# ---------------------------------------------------------------------------
# inter-mesh interpolation (restriction of fine homogenized solutions)

class PointLocator:
    """Bucket grid over the triangles of a mesh for P1 point evaluation."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        p = mesh.nodes[mesh.triangles]
        self.p0 = p[:, 0]
        m = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
        det = m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
        self.inv = np.empty_like(m)
        self.inv[:, 0, 0] = m[:, 1, 1] / det
        self.inv[:, 0, 1] = -m[:, 0, 1] / det
        self.inv[:, 1, 0] = -m[:, 1, 0] / det
        self.inv[:, 1, 1] = m[:, 0, 0] / det
        lo = p.min(axis=1)
        hi = p.max(axis=1)
        self.box_lo = mesh.nodes.min(axis=0)
        self.box_hi = mesh.nodes.max(axis=0)
        self.nb = max(1, int(math.sqrt(len(p) / 2.0)))
        span = np.maximum(self.box_hi - self.box_lo, 1e-300)
        self.scale = self.nb / span
        self.buckets: dict = {}
        ilo = self._cell_of(lo)
        ihi = self._cell_of(hi)
        for t in range(len(p)):
            for gx in range(ilo[t, 0], ihi[t, 0] + 1):
                for gy in range(ilo[t, 1], ihi[t, 1] + 1):
                    self.buckets.setdefault((gx, gy), []).append(t)

    def _cell_of(self, pts):
        g = np.floor((pts - self.box_lo) * self.scale).astype(np.int64)
        return np.clip(g, 0, self.nb - 1)

    def locate(self, points, tol=1e-10):
        """Triangle id and barycentric (l1, l2) per point; -1 when outside."""
        points = np.asarray(points, dtype=float)
        tri = -np.ones(len(points), dtype=np.int64)
        bary = np.zeros((len(points), 2))
        cells = self._cell_of(points)
        for i, (pt, (gx, gy)) in enumerate(zip(points, cells)):
            best_t, best_b, best_m = -1, None, -math.inf
            for ring in range(2):
                cand: list = []
                for dx in range(-ring, ring + 1):
                    for dy in range(-ring, ring + 1):
                        if ring and max(abs(dx), abs(dy)) < ring:
                            continue
                        cand += self.buckets.get((gx + dx, gy + dy), [])
                for t in cand:
                    v = pt - self.p0[t]
                    l1 = self.inv[t, 0, 0] * v[0] + self.inv[t, 0, 1] * v[1]
                    l2 = self.inv[t, 1, 0] * v[0] + self.inv[t, 1, 1] * v[1]
                    m = min(l1, l2, 1.0 - l1 - l2)
                    if m > best_m:
                        best_t, best_b, best_m = t, (l1, l2), m
                if best_m >= -tol:
                    break
            if best_m >= -tol:
                tri[i] = best_t
                bary[i] = best_b
        return tri, bary


def interpolate(source_mesh: Mesh, values, target, tol=1e-10) -> np.ndarray:
    """P1 evaluation of source nodal values at target points (or the nodes of
    a target mesh).  Exact for functions linear on source triangles."""
    values = np.asarray(values, dtype=float)
    points = target.nodes if isinstance(target, Mesh) else np.asarray(target)
    loc = PointLocator(source_mesh)
    tri, bary = loc.locate(points, tol=tol)
    if np.any(tri < 0):
        bad = np.nonzero(tri < 0)[0]
        raise FemError(
            f"{len(bad)} target nodes outside the source mesh, first at "
            f"{points[bad[0]]}")
    v = values[source_mesh.triangles[tri]]
    l1, l2 = bary[:, 0], bary[:, 1]
    return v[:, 0] * (1.0 - l1 - l2) + v[:, 1] * l1 + v[:, 2] * l2


def h_eps_norm(mesh: Mesh, values, K=None, B=None) -> float:
    """Energy norm of the perforated form: sqrt(u' (K + B) u)."""
    u = np.asarray(values, dtype=float)
    K = assemble_stiffness(mesh) if K is None else K
    B = assemble_hole_mass(mesh) if B is None else B
    return math.sqrt(max(0.0, float(u @ (K @ u) + u @ (B @ u))))


# ---------------------------------------------------------------------------
# symmetric coordinate text export

def export_sym_matrix(mat: sp.spmatrix) -> str:
    coo = sp.triu(mat).tocoo()
    lines = [f"{mat.shape[0]} {coo.nnz}"]
    for i, j, v in zip(coo.row, coo.col, coo.data):
        lines.append(f"{i} {j} {float(v)!r}")
    return "\n".join(lines) + "\n"


def load_sym_matrix(text: str) -> sp.csr_matrix:
    rows = text.strip().split("\n")
    n, nnz = (int(v) for v in rows[0].split())
    ri, ci, vals = [], [], []
    for line in rows[1:1 + nnz]:
        i, j, v = line.split()
        ri.append(int(i))
        ci.append(int(j))
        vals.append(float(v))
    upper = sp.coo_matrix((vals, (ri, ci)), shape=(n, n)).tocsr()
    diag = sp.diags(upper.diagonal())
    return (upper + upper.T - diag).tocsr()
