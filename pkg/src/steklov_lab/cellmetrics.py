"""Eigenvalue constants of single upscaled cells and their stability tests.

Everything here runs on one shape at a time: Neumann gaps of collars, trace
constants of holes, harmonic-extension norms across an interface, Dirichlet
and Robin ground states, plus stability sweeps for the scale-separated cell
inequalities (worst constants measured either by an exact two-form
eigensolve or by sampling random H1 test functions).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fem, shapes
from .eigen import factor_spd, largest_pencil_eigs, smallest_pencil_eigs
from .geometry import chebyshev_center, make_domain, unit_square
from .meshgen import Mesh, mesh_unperforated, refine


class CellMetricsError(ValueError):
    pass


@dataclass
class Extrapolated:
    """Two-mesh Richardson value with its reported uncertainty."""
    value: float
    uncertainty: float
    coarse: float
    fine: float


def _richardson(coarse: float, fine: float) -> Extrapolated:
    value = fine + (fine - coarse) / 3.0
    return Extrapolated(value=value, uncertainty=abs(value - fine),
                        coarse=coarse, fine=fine)


def mesh_shape(shape, h: float) -> Mesh:
    """Meshes for the shape vocabulary used by the cell studies.

    "square", "disk", ("kgon", k), ("polygon", verts), ("annulus", a, b),
    ("collar", inner_shape), ("slit_collar", beta).
    """
    if shape == "square":
        return mesh_unperforated(unit_square(), h)
    if shape == "disk":
        return shapes.mesh_disk(1.0, h)
    kind = shape[0]
    if kind == "kgon":
        return shapes.mesh_hole_shape("kgon", int(shape[1]), h)
    if kind == "polygon":
        return shapes.mesh_convex_polygon(shape[1], h)
    if kind == "annulus":
        return shapes.mesh_collar("circle", None, h,
                                  inner=float(shape[1]), outer=float(shape[2]))
    if kind == "collar":
        inner = shape[1]
        if inner == "disk":
            return shapes.mesh_collar("circle", None, h)
        return shapes.mesh_collar("kgon", int(inner[1]), h)
    if kind == "slit_collar":
        return shapes.mesh_slit_collar(float(shape[1]), h)
    raise CellMetricsError(f"unknown shape {shape!r}")


def _neumann_gap_on(mesh: Mesh) -> float:
    K = fem.assemble_stiffness(mesh)
    M = fem.assemble_mass(mesh)
    ones = np.ones(mesh.num_nodes)
    res = smallest_pencil_eigs((K + M).tocsr(), M, 1, deflate=ones)
    return float(res.values[0]) - 1.0


def neumann_gap(shape, h: float) -> Extrapolated:
    """Smallest nonzero Neumann eigenvalue, extrapolated from h and h/2.

    The constant mode is deflated explicitly, so narrow-channel collars with
    gaps near zero stay resolvable.
    """
    coarse = _neumann_gap_on(mesh_shape(shape, h))
    fine = _neumann_gap_on(refine(mesh_shape(shape, h)))
    return _richardson(coarse, fine)


def _dirichlet_ground_on(mesh: Mesh) -> float:
    K = fem.assemble_stiffness(mesh)
    M = fem.assemble_mass(mesh)
    dm = fem.build_dofmap(mesh, "boundary")
    res = smallest_pencil_eigs(fem.apply_dirichlet(K, dm),
                               fem.apply_dirichlet(M, dm), 1)
    return float(res.values[0])


def dirichlet_ground(shape, h: float) -> Extrapolated:
    coarse = _dirichlet_ground_on(mesh_shape(shape, h))
    fine = _dirichlet_ground_on(refine(mesh_shape(shape, h)))
    return _richardson(coarse, fine)


def _robin_ground_on(mesh: Mesh, alpha: float) -> float:
    K = fem.assemble_stiffness(mesh)
    M = fem.assemble_mass(mesh)
    Bb = fem.assemble_boundary_mass(mesh, "all")
    res = smallest_pencil_eigs((K + alpha * Bb).tocsr(), M, 1)
    return float(res.values[0])


def robin_ground(shape, alpha: float, h: float) -> Extrapolated:
    """Ground state of the Robin Laplacian du/dn + alpha u = 0."""
    if alpha <= 0:
        raise CellMetricsError("alpha must be positive")
    coarse = _robin_ground_on(mesh_shape(shape, h), alpha)
    fine = _robin_ground_on(refine(mesh_shape(shape, h)), alpha)
    return _richardson(coarse, fine)


def _trace_sq_on(mesh: Mesh) -> float:
    K = fem.assemble_stiffness(mesh)
    M = fem.assemble_mass(mesh)
    Bb = fem.assemble_boundary_mass(mesh, "all")
    res = largest_pencil_eigs((K + M).tocsr(), Bb, 1)
    return float(res.values[0])


def trace_constant(shape, h: float) -> Extrapolated:
    """Best constant of ||u||_{L2(boundary)} <= C ||u||_{H1}: the square root
    of the largest eigenvalue of the (boundary mass, H1 form) pencil."""
    coarse = _trace_sq_on(mesh_shape(shape, h))
    fine = _trace_sq_on(refine(mesh_shape(shape, h)))
    ex = _richardson(coarse, fine)
    val = math.sqrt(ex.value)
    return Extrapolated(value=val, uncertainty=abs(val - math.sqrt(ex.fine)),
                        coarse=math.sqrt(coarse), fine=math.sqrt(fine))


# ---------------------------------------------------------------------------
# harmonic extension across the hole interface

def _extension_parts(mesh: Mesh):
    """Collar matrices and the harmonic-lift operator of an interface ball
    mesh (regions in tri_cell: 0 hole interior, 1 collar)."""
    region = mesh.tri_cell
    collar_nodes = np.unique(mesh.triangles[region == 1])
    hole_nodes = np.unique(mesh.triangles[region == 0])
    interface = np.intersect1d(collar_nodes, hole_nodes)
    inner = np.setdiff1d(hole_nodes, interface)

    K = fem.assemble_stiffness(mesh)
    M = fem.assemble_mass(mesh)
    A_full = (K + M).tocsr()

    # collar-only H1 form, on collar nodes
    collar_mesh = Mesh(mesh.nodes, mesh.triangles[region == 1],
                       np.empty((0, 2), dtype=np.int64),
                       np.empty(0, dtype=np.int64))
    Kg = fem.assemble_stiffness(collar_mesh)
    Mg = fem.assemble_weighted_mass(collar_mesh, 1.0)
    A_g = (Kg + Mg).tocsr()[collar_nodes][:, collar_nodes]

    K_ii = K[inner][:, inner].tocsc()
    K_ig = K[inner][:, interface].tocsr()
    lift = factor_spd(K_ii)

    n_full = mesh.num_nodes
    pos_of = -np.ones(n_full, dtype=np.int64)
    pos_of[collar_nodes] = np.arange(len(collar_nodes))
    iface_pos = pos_of[interface]

    def extend(v):
        full = np.zeros(n_full)
        full[collar_nodes] = v
        full[inner] = lift.solve(-(K_ig @ v[iface_pos]))
        return full

    def extend_t(z):
        out = z[collar_nodes].copy()
        out[iface_pos] -= K_ig.T @ lift.solve(z[inner])
        return out

    return A_g, A_full, extend, extend_t, collar_nodes


def _extension_norm_on(mesh: Mesh) -> float:
    A_g, A_full, extend, extend_t, _ = _extension_parts(mesh)

    def bmul(v):
        return extend_t(A_full @ extend(v))

    # the extension operator's spectrum clusters at 1, so give the Krylov
    # space room to isolate the top
    res = largest_pencil_eigs(A_g, bmul, 1, max_iter=400)
    return float(res.values[0])


def harmonic_extension_norm(shape, h: float) -> Extrapolated:
    """Operator norm of harmonic extension from the collar to the full ball
    of radius 2, in H1 norms; the extension fixes interface traces and fills
    the hole with the discrete harmonic lift."""
    kind, k = ("circle", None) if shape == "disk" else (shape[0], int(shape[1]))
    coarse_sq = _extension_norm_on(shapes.mesh_ball_with_interface(kind, k, h))
    fine_sq = _extension_norm_on(
        refine(shapes.mesh_ball_with_interface(kind, k, h)))
    ex = _richardson(coarse_sq, fine_sq)
    val = math.sqrt(max(ex.value, 0.0))
    return Extrapolated(value=val, uncertainty=abs(val - math.sqrt(fine_sq)),
                        coarse=math.sqrt(coarse_sq), fine=math.sqrt(fine_sq))


def inscribed_radius(shape) -> float:
    """Inner radius of the upscaled hole (enclosing ball is the unit ball)."""
    if shape == "disk":
        return 1.0
    if shape[0] == "kgon":
        return math.cos(math.pi / int(shape[1]))
    if shape[0] == "slit":
        return 0.25        # annulus 1/2..1 admits balls of radius 1/4
    raise CellMetricsError(f"no inscribed radius for {shape!r}")


@dataclass
class CellConstants:
    shape: object
    c_inn: float
    c_tr: Extrapolated
    neumann_gap_collar: Extrapolated
    c_p: Extrapolated
    dirichlet_ground: Extrapolated
    robin_ground_1: Extrapolated

    def as_dict(self):
        def ex(e):
            return {"value": e.value, "uncertainty": e.uncertainty,
                    "coarse": e.coarse, "fine": e.fine}
        return {
            "shape": str(self.shape),
            "c_inn": self.c_inn,
            "c_tr": ex(self.c_tr),
            "neumann_gap_collar": ex(self.neumann_gap_collar),
            "c_p": ex(self.c_p),
            "dirichlet_ground": ex(self.dirichlet_ground),
            "robin_ground_1": ex(self.robin_ground_1),
        }


def cell_constants(shape, h: float = 0.08) -> CellConstants:
    """All uniform-geometry constants of one upscaled hole shape."""
    collar = ("collar", shape)
    return CellConstants(
        shape=shape,
        c_inn=inscribed_radius(shape),
        c_tr=trace_constant(shape, h),
        neumann_gap_collar=neumann_gap(collar, h),
        c_p=harmonic_extension_norm(shape, h),
        dirichlet_ground=dirichlet_ground(shape, h),
        robin_ground_1=robin_ground(shape, 1.0, h),
    )


def slit_collar_gaps(betas, h: float = 0.1) -> np.ndarray:
    """Neumann gaps of the slit collar across channel half-widths."""
    return np.array([_neumann_gap_on(shapes.mesh_slit_collar(b, h))
                     for b in betas])


# ---------------------------------------------------------------------------
# classical eigenvalue inequalities on random shapes

def random_convex_polygon(rng, n_min=5, n_max=10):
    """Convex hull of random points in the unit square, rejecting slivers."""
    while True:
        pts = rng.uniform(0.1, 0.9, size=(rng.integers(n_min, n_max + 1), 2))
        hull = _convex_hull(pts)
        if len(hull) >= 4:
            _, r_in = chebyshev_center(hull)
            if r_in > 0.08:
                return hull


def _convex_hull(points):
    pts = sorted(map(tuple, points))

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and (
                    (out[-1][0] - out[-2][0]) * (p[1] - out[-2][1])
                    - (out[-1][1] - out[-2][1]) * (p[0] - out[-2][0])) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    return lower[:-1] + upper[:-1]


def payne_weinberger_check(count: int = 20, h: float = 0.05,
                           seed: int = 7) -> list:
    """Neumann gap of random convex polygons against pi^2 / diam^2.

    Conforming FEM overestimates Neumann eigenvalues, so the discrete gap
    must clear the bound up to roundoff.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(count):
        poly = random_convex_polygon(rng)
        mesh = shapes.mesh_convex_polygon(poly, h)
        gap = _neumann_gap_on(mesh)
        diam = max(math.dist(p, q) for p in poly for q in poly)
        bound = math.pi ** 2 / diam ** 2
        rows.append({"gap": gap, "bound": bound, "ok": gap >= bound * (1 - 1e-9)})
    return rows


# ---------------------------------------------------------------------------
# stability sweeps for the scale-separated cell inequalities

@dataclass
class LemmaReport:
    lemma_id: str
    rows: list                       # dicts with the sweep parameter + ratio
    slope: float | None
    passed: bool
    method: str
    detail: str = ""


def _fit_slope(xs, ys):
    lx, ly = np.log(np.asarray(xs)), np.log(np.asarray(ys))
    n = len(lx)
    sx, sy = lx.sum(), ly.sum()
    sxx, sxy = (lx * lx).sum(), (lx * ly).sum()
    return (n * sxy - sx * sy) / (n * sxx - sx * sx)


def _sample_functions(mesh: Mesh, count: int, rng) -> list:
    """Random H1 test data: mass-smoothed Gaussian nodal vectors plus a
    deterministic polynomial/trigonometric family."""
    M = fem.assemble_mass(mesh)
    dinv = 1.0 / M.diagonal()
    out = []
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    for fn in (lambda: x, lambda: y, lambda: x * y,
               lambda: x * x - y * y, lambda: np.sin(3 * x) * np.cos(2 * y),
               lambda: np.exp(x - y)):
        out.append(fn())
    for _ in range(count):
        v = rng.standard_normal(mesh.num_nodes)
        out.append(dinv * (M @ v))
    return out


def _secure_ball_forms(d: float, r: float, c_sec: float = 0.5,
                       refine_once: bool = False):
    mesh = shapes.mesh_secure_ball(d, c_sec * r, n_hole=32)
    if refine_once:
        mesh = refine(mesh)
    K = fem.assemble_stiffness(mesh)
    M_collar = fem.assemble_weighted_mass(mesh, np.array([0.0, 1.0]))
    M_hole = fem.assemble_weighted_mass(mesh, np.array([1.0, 0.0]))
    B_int = fem.edge_mass(mesh, shapes.interface_edges(mesh))
    return mesh, K, M_collar, M_hole, B_int


def _lemma_trace_ratio(d, r, refine_once=False):
    _, K, M_collar, _, B_int = _secure_ball_forms(d, r, refine_once=refine_once)
    zeta = abs(math.log(d))
    W = ((d / r ** 2) * M_collar + d * zeta * K).tocsr()
    return float(largest_pencil_eigs(W, B_int, 1).values[0])


def _lemma_hole_ratio(d, r, refine_once=False):
    _, K, M_collar, M_hole, _ = _secure_ball_forms(d, r, refine_once=refine_once)
    zeta = abs(math.log(d))
    W = ((d ** 2 / r ** 2) * M_collar + d ** 2 * zeta * K).tocsr()
    return float(largest_pencil_eigs(W, M_hole, 1).values[0])


def _lemma_strip_ratio(width, h=None):
    h = width / 8 if h is None else h
    dom = make_domain([(0, 0), (1, 0), (1, width), (0, width)], "strip")
    mesh = mesh_unperforated(dom, h)
    K = fem.assemble_stiffness(mesh)
    M = fem.assemble_mass(mesh)
    fixed = np.nonzero(mesh.nodes[:, 1] < 1e-12)[0]
    dm = fem.build_dofmap(mesh, fixed)
    lam = float(smallest_pencil_eigs(fem.apply_dirichlet(K, dm),
                                     fem.apply_dirichlet(M, dm), 1).values[0])
    return 1.0 / (lam * width ** 2)


def _lemma_mean_ratio(d, sample_count, rng):
    mesh = shapes.mesh_cell_with_hole(d)
    K = fem.assemble_stiffness(mesh)
    M = fem.assemble_mass(mesh)
    B_int = fem.edge_mass(mesh, shapes.interface_edges(mesh))
    ones = np.ones(mesh.num_nodes)
    per = float(ones @ (B_int @ ones))
    vol = float(ones @ (M @ ones))
    zeta = abs(math.log(d))
    worst = 0.0
    for u in _sample_functions(mesh, sample_count, rng):
        mean_b = float(ones @ (B_int @ u)) / per
        mean_c = float(ones @ (M @ u)) / vol
        grad = float(u @ (K @ u))
        if grad < 1e-14:
            continue
        worst = max(worst, (mean_b - mean_c) ** 2 / (zeta * grad))
    return worst


def _lemma_convex_ratio(d, sample_count, rng):
    # the two-subdomain L2 comparison on a convex cell: D1 a ball of radius
    # d, D2 a fixed half, gradient term over the whole square
    mesh = mesh_unperforated(unit_square(), 0.05)
    K = fem.assemble_stiffness(mesh)
    cx, cy = 0.3, 0.5

    def in_ball(x, y):
        return 1.0 if (x - cx) ** 2 + (y - cy) ** 2 < d * d else 0.0

    M1 = fem.assemble_weighted_mass(mesh, in_ball)
    M2 = fem.assemble_weighted_mass(mesh, lambda x, y: 1.0 if x > 0.5 else 0.0)
    vol1 = math.pi * d * d
    vol2 = 0.5
    diam = math.sqrt(2.0)
    worst = 0.0
    for u in _sample_functions(mesh, sample_count, rng):
        lhs = float(u @ (M1 @ u))
        rhs = (2.0 * vol1 / vol2 * float(u @ (M2 @ u))
               + diam ** 3 * math.sqrt(vol1) / vol2 * float(u @ (K @ u)))
        worst = max(worst, lhs / rhs)
    return worst


def _lemma_extension_ratio(shape, sample_count, rng):
    kind, k = ("circle", None) if shape == "disk" else (shape[0], int(shape[1]))
    mesh = shapes.mesh_ball_with_interface(kind, k, 0.1)
    region = mesh.tri_cell
    collar_nodes = np.unique(mesh.triangles[region == 1])
    K_full = fem.assemble_stiffness(mesh)
    collar_mesh = Mesh(mesh.nodes, mesh.triangles[region == 1],
                       np.empty((0, 2), dtype=np.int64),
                       np.empty(0, dtype=np.int64))
    K_g = fem.assemble_stiffness(collar_mesh)
    _, _, extend, _, cn = _extension_parts(mesh)
    worst = 0.0
    for u in _sample_functions(mesh, sample_count, rng):
        v = u[cn]
        g = float(v @ (K_g[cn][:, cn] @ v))
        if g < 1e-13:
            continue
        full = extend(v)
        worst = max(worst, float(full @ (K_full @ full)) / g)
    return worst


def verify_lemma(lemma_id: str, shape_params=None, sample_count: int = 48,
                 seed: int = 0) -> LemmaReport:
    """Constant-stability sweep for one of the cell inequalities.

    Ids follow the build's naming: "3.1" convex two-subdomain comparison,
    "3.2" hole-boundary trace, "3.3" hole L2, "3.4" boundary/cell mean gap,
    "3.5" thin-strip Poincare, "3.6" harmonic extension.  3.2/3.3/3.5 are
    exact sup computations via generalized eigensolves; the rest sample.
    PASS means no growth trend: fitted log-log slope of the worst ratio
    against the sweep parameter stays below 0.2.
    """
    rng = np.random.default_rng(seed + 1234)
    rows = []
    if lemma_id in ("3.2", "3.3"):
        r = 0.5
        ds = shape_params or [0.002, 0.004, 0.008, 0.012, 0.02]
        fn = _lemma_trace_ratio if lemma_id == "3.2" else _lemma_hole_ratio
        for d in ds:
            rows.append({"d": d, "r": r, "ratio": fn(d, r)})
        slope = _fit_slope([q["d"] for q in rows], [q["ratio"] for q in rows])
        return LemmaReport(lemma_id, rows, slope, slope <= 0.2,
                           "eigensolve", f"sup over FEM space, r={r}")
    if lemma_id == "3.5":
        widths = shape_params or [0.2, 0.1, 0.05]
        for w in widths:
            rows.append({"d": w, "ratio": _lemma_strip_ratio(w)})
        slope = _fit_slope([q["d"] for q in rows], [q["ratio"] for q in rows])
        return LemmaReport(lemma_id, rows, slope, abs(slope) <= 0.2,
                           "eigensolve", "mixed strip eigenvalue, C = sqrt")
    if lemma_id == "3.4":
        ds = shape_params or [0.002, 0.004, 0.008, 0.012, 0.02]
        for d in ds:
            rows.append({"d": d, "r": 0.5,
                         "ratio": _lemma_mean_ratio(d, sample_count, rng)})
        slope = _fit_slope([q["d"] for q in rows], [q["ratio"] for q in rows])
        ratios = [q["ratio"] for q in rows]
        bounded = max(ratios) <= 10.0 * max(min(ratios), 1e-12)
        return LemmaReport(lemma_id, rows, slope, bounded, "sampled",
                           "sampled sup; PASS = bounded across the sweep")
    if lemma_id == "3.1":
        ds = shape_params or [0.05, 0.1, 0.2]
        for d in ds:
            rows.append({"d": d,
                         "ratio": _lemma_convex_ratio(d, sample_count, rng)})
        slope = _fit_slope([q["d"] for q in rows], [q["ratio"] for q in rows])
        return LemmaReport(lemma_id, rows, slope, max(
            q["ratio"] for q in rows) <= 1.0, "sampled",
            "ratios must stay below 1 (constant-free comparison)")
    if lemma_id == "3.6":
        shapes_list = shape_params or ["disk", ("kgon", 4), ("kgon", 6)]
        for sh in shapes_list:
            rows.append({"shape": str(sh),
                         "ratio": _lemma_extension_ratio(sh, sample_count, rng)})
        worst = max(q["ratio"] for q in rows)
        return LemmaReport(lemma_id, rows, None, worst < 50.0, "sampled",
                           "gradient-only extension bound, bounded check")
    raise CellMetricsError(f"unknown lemma id {lemma_id!r}")
