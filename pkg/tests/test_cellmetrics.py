import math

import numpy as np
import pytest

from steklov_lab import cellmetrics as cm
from steklov_lab import fem, oracles, shapes
from steklov_lab.eigen import dense_reference_eigs
from steklov_lab.meshgen import refine


def test_square_neumann_gap():
    gap = cm.neumann_gap("square", 0.05)
    assert gap.value == pytest.approx(math.pi ** 2, rel=5e-3)


def test_annulus_gap_against_radial_oracle():
    gap = cm.neumann_gap(("annulus", 1.0, 2.0), 0.07)
    ref = oracles.annulus_neumann_gap(1.0, 2.0)
    assert gap.value == pytest.approx(ref, rel=5e-3)


def test_disk_dirichlet_ground_is_bessel_zero():
    val = cm.dirichlet_ground("disk", 0.06)
    assert val.value == pytest.approx(oracles.j0_zero(1) ** 2, rel=5e-3)


def test_square_dirichlet_ground():
    val = cm.dirichlet_ground("square", 0.05)
    assert val.value == pytest.approx(2 * math.pi ** 2, rel=5e-3)


def test_dirichlet_domain_monotonicity():
    # hexagon inscribed in the unit ball is contained in it
    ball = cm.dirichlet_ground("disk", 0.08).value
    hexa = cm.dirichlet_ground(("kgon", 6), 0.08).value
    assert ball <= hexa


def test_disk_robin_ground_against_oracle():
    val = cm.robin_ground("disk", 1.0, 0.06)
    assert val.value == pytest.approx(oracles.robin_disk_ground(1.0), rel=5e-3)


def test_robin_monotone_in_alpha_and_dirichlet_cap():
    r1 = cm.robin_ground("disk", 1.0, 0.1).value
    r2 = cm.robin_ground("disk", 2.0, 0.1).value
    rd = cm.dirichlet_ground("disk", 0.1).value
    assert r1 <= r2 <= rd + 1e-6
    sq1 = cm.robin_ground("square", 1.0, 0.1).value
    sq2 = cm.robin_ground("square", 2.0, 0.1).value
    assert sq1 <= sq2


def test_robin_rescaling_law():
    # ground state of the unit-alpha problem on a shrunk disk against the
    # rescaled oracle value
    for ell in (0.5, 0.8):
        coarse = cm._robin_ground_on(shapes.mesh_disk(ell, 0.05 * ell), 1.0)
        fine = cm._robin_ground_on(
            refine(shapes.mesh_disk(ell, 0.05 * ell)), 1.0)
        val = cm._richardson(coarse, fine).value
        ref = oracles.robin_disk_ground(ell) / ell ** 2
        assert val == pytest.approx(ref, rel=5e-3)


def test_trace_constant_bounds_and_dense_check():
    tc = cm.trace_constant("disk", 0.1)
    # plugging u = 1 gives perimeter/area as a lower bound for C^2
    assert tc.value ** 2 >= 2.0 - 1e-9
    mesh = cm.mesh_shape("disk", 0.15)
    K = fem.assemble_stiffness(mesh)
    M = fem.assemble_mass(mesh)
    Bb = fem.assemble_boundary_mass(mesh, "all")
    dense = dense_reference_eigs((K + M).toarray(), Bb.toarray())
    got = cm._trace_sq_on(mesh)
    assert got == pytest.approx(dense.values[0], abs=1e-6)


def test_trace_constant_stable_under_refinement():
    hexa = cm.trace_constant(("kgon", 6), 0.1)
    assert abs(hexa.fine - hexa.coarse) / hexa.fine < 0.01


def test_trace_inequality_every_shape():
    for shape in ("disk", ("kgon", 3), ("kgon", 6), "square"):
        mesh = cm.mesh_shape(shape, 0.1)
        ones = np.ones(mesh.num_nodes)
        Bb = fem.assemble_boundary_mass(mesh, "all")
        M = fem.assemble_mass(mesh)
        per = ones @ (Bb @ ones)
        area = ones @ (M @ ones)
        c2 = cm._trace_sq_on(mesh)
        assert c2 >= per / area / (1.0 + 1e-9)


def test_harmonic_extension_constant_bound():
    cp = cm.harmonic_extension_norm("disk", 0.12)
    # extending the constant costs the full-ball vs collar mass ratio
    ratio = math.sqrt(4.0 / 3.0)
    assert cp.value >= ratio - 1e-3


def test_harmonic_extension_energy_minimality():
    mesh = shapes.mesh_ball_with_interface("circle", None, 0.15)
    K = fem.assemble_stiffness(mesh)
    a_g, a_full, extend, extend_t, cn = cm._extension_parts(mesh)
    rng = np.random.default_rng(4)
    region = mesh.tri_cell
    hole_nodes = np.unique(mesh.triangles[region == 0])
    interface = np.intersect1d(np.unique(mesh.triangles[region == 1]),
                               hole_nodes)
    inner = np.setdiff1d(hole_nodes, interface)
    for _ in range(5):
        v = rng.standard_normal(len(cn))
        harmonic = extend(v)
        competitor = harmonic.copy()
        competitor[inner] += rng.standard_normal(len(inner))
        e_h = harmonic @ (K @ harmonic)
        e_c = competitor @ (K @ competitor)
        assert e_h <= e_c + 1e-12


def test_faber_krahn_robin():
    for shape in ("square", ("kgon", 3), ("kgon", 6)):
        mesh = cm.mesh_shape(shape, 0.05)
        area = mesh.area()
        ell = math.sqrt(area / math.pi)
        ball = oracles.robin_disk_ground(ell) / ell ** 2
        val = cm._robin_ground_on(mesh, 1.0)
        assert val >= ball * (1 - 1e-9)


def test_payne_weinberger_random_polygons():
    rows = cm.payne_weinberger_check(count=8, h=0.06, seed=3)
    assert all(r["ok"] for r in rows)


def test_slit_collar_gap_vanishes():
    betas = [math.pi / 8, math.pi / 16, math.pi / 32, math.pi / 64,
             math.pi / 128]
    gaps = cm.slit_collar_gaps(betas, 0.08)
    assert np.all(np.diff(gaps) < 0)
    assert gaps[-1] < 0.3 * gaps[0]


def test_cell_constants_bundle():
    consts = cm.cell_constants("disk", h=0.15)
    assert consts.c_inn == 1.0
    assert consts.c_tr.value > 1.0
    assert consts.neumann_gap_collar.value == pytest.approx(
        oracles.annulus_neumann_gap(1.0, 2.0), rel=2e-2)
    assert consts.c_p.value > 1.0
    d = consts.as_dict()
    assert set(d) == {"shape", "c_inn", "c_tr", "neumann_gap_collar",
                      "c_p", "dirichlet_ground", "robin_ground_1"}


def test_inscribed_radius_values():
    assert cm.inscribed_radius("disk") == 1.0
    assert cm.inscribed_radius(("kgon", 4)) == pytest.approx(math.cos(math.pi / 4))
    assert cm.inscribed_radius(("slit", 0.1)) == 0.25


@pytest.mark.parametrize("lemma", ["3.2", "3.3"])
def test_lemma_eigensolve_stability(lemma):
    rep = cm.verify_lemma(lemma, shape_params=[0.004, 0.008, 0.02])
    assert rep.method == "eigensolve"
    assert abs(rep.slope) <= 0.2
    assert rep.passed


def test_lemma_strip_constant():
    rep = cm.verify_lemma("3.5")
    # the sup equals (2/pi)^2 for a half-open strip, independent of width
    for row in rep.rows:
        assert row["ratio"] == pytest.approx((2 / math.pi) ** 2, rel=1e-2)
    assert rep.passed


def test_lemma_mean_value_linear_and_constant():
    mesh = shapes.mesh_cell_with_hole(0.01)
    B_int = fem.edge_mass(mesh, shapes.interface_edges(mesh))
    M = fem.assemble_mass(mesh)
    ones = np.ones(mesh.num_nodes)
    per = ones @ (B_int @ ones)
    vol = ones @ (M @ ones)
    # constants: both means are the constant itself
    c = 3.7 * ones
    assert abs((ones @ (B_int @ c)) / per - (ones @ (M @ c)) / vol) < 1e-13
    # linear u with a centered hole: both means hit the center value
    u = mesh.nodes[:, 0]
    assert abs((ones @ (B_int @ u)) / per - 0.5) < 1e-12
    assert abs((ones @ (M @ u)) / vol - 0.5) < 1e-9


def test_lemma_mean_value_sampled_bounded():
    rep = cm.verify_lemma("3.4", shape_params=[0.004, 0.01, 0.02],
                          sample_count=16)
    assert rep.passed


def test_lemma_convex_comparison():
    rep = cm.verify_lemma("3.1", sample_count=16)
    assert rep.passed


def test_lemma_extension_bounded():
    rep = cm.verify_lemma("3.6", shape_params=["disk", ("kgon", 4)],
                          sample_count=12)
    assert rep.passed


def test_unknown_lemma_rejected():
    with pytest.raises(cm.CellMetricsError, match="unknown lemma"):
        cm.verify_lemma("9.9")
