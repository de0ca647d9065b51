"""Spectral pipeline: perforated boundary spectra vs. the weighted Dirichlet
limit, their Hausdorff distance, sampled resolvent gaps, and rate fits.

Every eigenvalue is computed on a mesh and its red refinement, reported as
the Richardson-extrapolated value with the two-mesh change as discretization
error; sweep points whose error is not well below the homogenization gap are
flagged and excluded from rate fitting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fem, geometry, meshgen
from .eigen import SpectralResult, largest_pencil_eigs, smallest_pencil_eigs


class SpectraError(ValueError):
    pass


def steklov_spectrum(geom, template, k: int, tol: float = 1e-10,
                     mesh=None) -> SpectralResult:
    """Top boundary-spectrum values mu of the perforated domain (and the
    Steklov eigenvalues 1/mu - 1 via the result's .steklov)."""
    mesh = meshgen.mesh_perforated(geom, template) if mesh is None else mesh
    return _steklov_on(mesh, k, tol)


def _steklov_on(mesh, k: int, tol: float = 1e-10) -> SpectralResult:
    K = fem.assemble_stiffness(mesh)
    B = fem.assemble_hole_mass(mesh)
    dm = fem.build_dofmap(mesh, "outer")
    Kr = fem.apply_dirichlet(K, dm)
    Br = fem.apply_dirichlet(B, dm)
    return largest_pencil_eigs((Kr + Br).tocsr(), Br, k, tol=tol)


def homogenized_spectrum(domain, q, h: float, k: int,
                         tol: float = 1e-10) -> SpectralResult:
    """Smallest eigenvalues of the q-weighted Dirichlet problem on the plain
    domain; .mu gives the resolvent values 1/(1+lambda)."""
    mesh = meshgen.mesh_unperforated(domain, h)
    return _homogenized_on(mesh, q, k, tol)


def _homogenized_on(mesh, q, k: int, tol: float = 1e-10) -> SpectralResult:
    K = fem.assemble_stiffness(mesh)
    Mq = fem.assemble_weighted_mass(mesh, q)
    dm = fem.build_dofmap(mesh, "outer")
    return smallest_pencil_eigs(fem.apply_dirichlet(K, dm),
                                fem.apply_dirichlet(Mq, dm), k, tol=tol)


def hausdorff(set_a, set_b) -> float:
    """Two-sided max-min distance between finite nonempty sets."""
    a = np.asarray(list(set_a), dtype=float)
    b = np.asarray(list(set_b), dtype=float)
    if len(a) == 0 or len(b) == 0:
        raise SpectraError("Hausdorff distance needs nonempty sets")
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def truncated_spectrum_distance(steklov_mu, homog_mu, k: int,
                                floor_mu: float) -> float:
    """Hausdorff distance between {0} plus the top-k values above the floor
    of each spectrum; values below the floor are truncated away and their
    contribution is capped by the appended 0."""
    def trunc(vals):
        vals = np.asarray(vals, dtype=float)
        kept = vals[vals >= floor_mu][:k]
        if len(kept) < k:
            raise SpectraError(
                f"only {len(kept)} eigenvalues above floor {floor_mu:.3g}; "
                "raise k or lower the floor")
        return np.concatenate([[0.0], kept])

    return hausdorff(trunc(steklov_mu), trunc(homog_mu))


# ---------------------------------------------------------------------------
# source functions for resolvent-gap sampling

def source_function(descriptor):
    """Vectorized analytic source from a descriptor; all members vanish on
    the boundary of the unit square."""
    kind = descriptor.get("kind", "sine")
    scale = float(descriptor.get("scale", 1.0))
    if kind == "sine":
        px, py = int(descriptor.get("px", 1)), int(descriptor.get("py", 1))

        def f(x, y):
            return scale * np.sin(math.pi * px * x) * np.sin(math.pi * py * y)
        return f
    if kind == "bump":
        x0 = float(descriptor.get("x0", 0.5))
        y0 = float(descriptor.get("y0", 0.5))
        w = float(descriptor.get("w", 0.2))

        def f(x, y):
            env = x * (1.0 - x) * y * (1.0 - y)
            return scale * env * np.exp(
                -(((x - x0) ** 2 + (y - y0) ** 2) / w ** 2))
        return f
    raise SpectraError(f"unknown source descriptor {descriptor!r}")


@dataclass
class ResolventGapSample:
    descriptor: dict
    gap: float                       # || R_eps J f - J R f || in the
    f_norm: float                    # perforated energy norm, vs ||f||_H
    epsilon: float

    @property
    def normalized(self) -> float:
        return self.gap / self.f_norm


def resolvent_gap(geom, template, descriptor, q_limit,
                  h_ref: float | None = None, perf_mesh=None
                  ) -> ResolventGapSample:
    """Apply both solution operators to one analytic source and measure the
    energy-norm discrepancy on the perforated mesh."""
    f = source_function(descriptor)
    pm = meshgen.mesh_perforated(geom, template) if perf_mesh is None \
        else perf_mesh
    K = fem.assemble_stiffness(pm)
    B = fem.assemble_hole_mass(pm)
    dm = fem.build_dofmap(pm, "outer")
    A_red = (fem.apply_dirichlet(K, dm) + fem.apply_dirichlet(B, dm)).tocsr()
    f_perf = f(pm.nodes[:, 0], pm.nodes[:, 1])
    rhs = (B @ f_perf)[dm.free]
    from .eigen import factor_spd
    u_eps = dm.expand(factor_spd(A_red).solve(rhs))

    if h_ref is None:
        s = template.boundary_nodes_per_side
        h_ref = 1.0 / (2 * s * geom.m)
    hm = meshgen.mesh_unperforated(geom.domain, h_ref)
    Kh = fem.assemble_stiffness(hm)
    Mq = fem.assemble_weighted_mass(hm, q_limit)
    dmh = fem.build_dofmap(hm, "outer")
    Ah = (fem.apply_dirichlet(Kh, dmh) + fem.apply_dirichlet(Mq, dmh)).tocsr()
    f_hom = f(hm.nodes[:, 0], hm.nodes[:, 1])
    u_hom = dmh.expand(factor_spd(Ah).solve((Mq @ f_hom)[dmh.free]))

    u_restricted = fem.interpolate(hm, u_hom, pm)
    gap = fem.h_eps_norm(pm, u_eps - u_restricted, K=K, B=B)
    f_norm = math.sqrt(float(f_hom @ (Kh @ f_hom) + f_hom @ (Mq @ f_hom)))
    return ResolventGapSample(descriptor=dict(descriptor), gap=gap,
                              f_norm=f_norm, epsilon=geom.epsilon)


# ---------------------------------------------------------------------------
# two-mesh spectrum pairs and the rate fit

@dataclass
class SpectrumPair:
    epsilon: float
    m: int
    r_eps: float
    d: float
    kappa: float
    delta: float
    steklov_mu: np.ndarray           # extrapolated, descending
    homog_mu: np.ndarray
    steklov_err: np.ndarray          # two-mesh changes per eigenvalue
    homog_err: np.ndarray
    hausdorff: float
    floor_mu: float
    gate_ok: bool
    gate_detail: list = field(default_factory=list)


def rate_scale(r_eps: float, kappa: float) -> float:
    """The theoretical error scale max(kappa, r |ln r|^(1/2)) in 2D."""
    return max(kappa, r_eps * math.sqrt(abs(math.log(r_eps))))


def spectrum_pair(geom, template, k: int, q_limit, h_hom: float,
                  tol: float = 1e-10, kappa_value: float | None = None,
                  extra: int = 2, perf_mesh=None) -> SpectrumPair:
    """Solve both sides on a mesh and its refinement, Richardson-extrapolate
    eigenvalue by eigenvalue, and gate the pair on discretization error.

    extra eigenvalues beyond k are solved on each side so the truncation
    floor has headroom.
    """
    kk = k + extra
    pm = meshgen.mesh_perforated(geom, template) if perf_mesh is None \
        else perf_mesh
    st_coarse = _steklov_on(pm, kk, tol).values
    st_fine_res = _steklov_on(meshgen.refine(pm), kk, tol)
    st_fine = st_fine_res.values
    n = min(len(st_coarse), len(st_fine))
    st_mu = st_fine[:n] + (st_fine[:n] - st_coarse[:n]) / 3.0
    st_err = np.abs(st_fine[:n] - st_coarse[:n])

    ho_coarse = _homogenized_on(
        meshgen.mesh_unperforated(geom.domain, h_hom), q_limit, kk, tol).mu
    ho_fine = _homogenized_on(
        meshgen.mesh_unperforated(geom.domain, h_hom / 2), q_limit, kk, tol).mu
    ho_mu = ho_fine + (ho_fine - ho_coarse) / 3.0
    ho_err = np.abs(ho_fine - ho_coarse)

    if kappa_value is None:
        wf = geometry.weight_field(geom)
        kappa_value = geometry.kappa(geom, wf, q_limit)
    r_eps = geom.r_eps
    d_hole = max(h.d for h in geom.holes)
    delta = rate_scale(r_eps, kappa_value)

    floor = 0.5 * ho_mu[k - 1]
    dist = truncated_spectrum_distance(st_mu, ho_mu, k, floor)

    detail = []
    ok = True
    for j in range(k):
        gap = abs(st_mu[j] - ho_mu[j])
        err = st_err[j] + ho_err[j]
        good = err <= 0.1 * gap
        ok = ok and good
        detail.append({"j": j + 1, "gap": float(gap), "disc_err": float(err),
                       "ok": bool(good)})
    return SpectrumPair(
        epsilon=geom.epsilon, m=geom.m, r_eps=r_eps, d=d_hole,
        kappa=float(kappa_value), delta=float(delta),
        steklov_mu=st_mu[:kk], homog_mu=ho_mu[:kk],
        steklov_err=st_err[:kk], homog_err=ho_err[:kk],
        hausdorff=float(dist), floor_mu=float(floor),
        gate_ok=bool(ok), gate_detail=detail)


@dataclass
class RateModel:
    deltas: np.ndarray
    distances: np.ndarray
    slope: float
    intercept: float
    residual: float
    consistent: bool
    note: str


def fit_rate(deltas, distances, min_points: int = 4,
             min_span: float = 4.0) -> RateModel:
    """Least-squares slope of log(distance) against log(delta).

    The theoretical bound is one-sided: slopes of at least 1 - 0.3 count as
    consistent, steeper decay is consistent a fortiori.
    """
    deltas = np.asarray(deltas, dtype=float)
    distances = np.asarray(distances, dtype=float)
    if len(deltas) < min_points:
        raise SpectraError(
            f"rate fit needs at least {min_points} usable sweep points, "
            f"got {len(deltas)}")
    if np.max(deltas) < min_span * np.min(deltas):
        raise SpectraError(
            f"degenerate sweep: delta spans less than a factor {min_span}")
    if np.any(distances <= 0):
        raise SpectraError("distances must be positive for a log fit")
    lx, ly = np.log(deltas), np.log(distances)
    n = len(lx)
    sx, sy = lx.sum(), ly.sum()
    sxx, sxy = (lx * lx).sum(), (lx * ly).sum()
    slope = float((n * sxy - sx * sy) / (n * sxx - sx * sx))
    intercept = float((sy - slope * sx) / n)
    resid = float(np.sqrt(np.mean((ly - slope * lx - intercept) ** 2)))
    if slope >= 1.3:
        note = "faster than the bound, consistent"
    elif slope >= 0.7:
        note = "consistent with the first-order bound"
    else:
        note = "INCONSISTENT: decay slower than the bound"
    return RateModel(deltas=deltas, distances=distances, slope=slope,
                     intercept=intercept, residual=resid,
                     consistent=slope >= 0.7, note=note)


def eigenwise_monotone(pairs, j: int) -> bool:
    """|mu_j^eps - mu_j| decreasing along the sweep within error bars."""
    gaps = [abs(p.steklov_mu[j] - p.homog_mu[j]) for p in pairs]
    errs = [p.steklov_err[j] + p.homog_err[j] for p in pairs]
    for a in range(len(gaps) - 1):
        if gaps[a + 1] > gaps[a] + errs[a] + errs[a + 1]:
            return False
    return True
