import math

import numpy as np
import pytest
import scipy.sparse as sp

from steklov_lab import eigen, fem
from steklov_lab import geometry as geo
from steklov_lab import meshgen as mg
from steklov_lab import oracles


def steklov_pencil(m=2, beta=1.0, tpl=None):
    tpl = tpl or mg.CellMeshTemplate()
    geom = geo.build_perforated_geometry(geo.unit_square(), m, beta)
    mesh = mg.mesh_perforated(geom, tpl)
    K = fem.assemble_stiffness(mesh)
    B = fem.assemble_hole_mass(mesh)
    dm = fem.build_dofmap(mesh)
    A = (fem.apply_dirichlet(K, dm) + fem.apply_dirichlet(B, dm)).tocsr()
    return A, fem.apply_dirichlet(B, dm).tocsr(), mesh


def test_factor_identity_and_2x2():
    f = eigen.factor_spd(sp.eye(4).tocsc())
    assert np.allclose(f.solve(np.arange(4.0)), np.arange(4.0))
    A = sp.csc_matrix(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert np.allclose(eigen.factor_spd(A).solve(np.array([3.0, 3.0])),
                       [1.0, 1.0])


def test_factor_rejects_indefinite():
    A = sp.diags([1.0, -1.0, 2.0]).tocsc()
    with pytest.raises(eigen.EigenError, match="positive"):
        eigen.factor_spd(A)


def test_factor_solve_accuracy_on_pencil():
    A, _, _ = steklov_pencil()
    f = eigen.factor_spd(A)
    rng = np.random.default_rng(0)
    b = rng.standard_normal(A.shape[0])
    x = f.solve(b)
    assert np.linalg.norm(A @ x - b) <= 1e-12 * np.linalg.norm(b)


def test_diagonal_pencil():
    A = sp.eye(3).tocsr()
    B = sp.diags([0.9, 0.5, 0.1]).tocsr()
    res = eigen.largest_pencil_eigs(A, B, 2)
    assert np.allclose(res.values, [0.9, 0.5], atol=1e-12)


def test_smallest_diagonal():
    K = sp.diags([1.0, 2.0, 3.0]).tocsr()
    res = eigen.smallest_pencil_eigs(K, sp.eye(3).tocsr(), 2)
    assert np.allclose(res.values, [1.0, 2.0], atol=1e-12)


def test_mu_within_unit_interval():
    A, B, _ = steklov_pencil(m=2)
    res = eigen.largest_pencil_eigs(A, B, 5)
    assert res.values.max() <= 1 + 1e-10
    assert res.values.min() > 0


def test_iterative_matches_dense_and_orthogonality():
    A, B, _ = steklov_pencil(m=2)
    it = eigen.largest_pencil_eigs(A, B, 5)
    dn = eigen.dense_reference_eigs(A, B)
    assert np.abs(it.values - dn.values[:5]).max() < 1e-9
    G = it.vectors @ (A @ it.vectors.T)
    assert np.abs(G - np.eye(5)).max() < 1e-9
    # residual contract
    import scipy.sparse.linalg as spla
    anorm = spla.norm(A, np.inf)
    assert np.all(it.residuals <= 1e-10 * anorm + 1e-13)
    assert np.all(it.converged)


def test_degenerate_pair_recovered():
    # the symmetric cell layout makes the 2nd/3rd values an exact pair
    A, B, _ = steklov_pencil(m=2)
    res = eigen.largest_pencil_eigs(A, B, 3)
    assert res.values[1] == pytest.approx(res.values[2], rel=1e-9)
    assert res.clusters()[1] == [1, 2]


def test_zero_eigenvalue_multiplicity_matches_rank():
    tpl = mg.CellMeshTemplate(8, 2.0, 4, 16)
    A, B, mesh = steklov_pencil(m=2, tpl=tpl)
    dn = eigen.dense_reference_eigs(A, B)
    positive = (dn.values > 1e-10).sum()
    hole_nodes = len(np.unique(mesh.boundary_edges[mesh.edge_tags >= 0]))
    assert positive == hole_nodes
    assert (np.abs(dn.values) <= 1e-10).sum() == A.shape[0] - hole_nodes


def test_k_beyond_rank_truncates_with_warning():
    tpl = mg.CellMeshTemplate(8, 2.0, 4, 16)
    A, B, mesh = steklov_pencil(m=2, tpl=tpl)
    rank = len(np.unique(mesh.boundary_edges[mesh.edge_tags >= 0]))
    res = eigen.largest_pencil_eigs(A, B, rank + 3)
    assert len(res.values) == rank
    assert "rank" in res.warning


def test_empty_boundary_rejected():
    A, B, _ = steklov_pencil(m=2)
    with pytest.raises(eigen.EigenError, match="Steklov boundary"):
        eigen.largest_pencil_eigs(A, 0.0 * B, 2)


def test_dense_refuses_large():
    n = 4001
    with pytest.raises(eigen.EigenError, match="refused"):
        eigen.dense_reference_eigs(sp.eye(n), sp.eye(n))


def test_dense_random_pencil_orthogonality():
    rng = np.random.default_rng(1)
    n = 50
    R = rng.standard_normal((n, n))
    A = R @ R.T + n * np.eye(n)
    S = rng.standard_normal((n, 8))
    B = S @ S.T
    dn = eigen.dense_reference_eigs(A, B)
    G = dn.vectors @ A @ dn.vectors.T
    assert np.abs(G - np.eye(n)).max() < 1e-10


def test_one_by_one_pencil():
    res = eigen.dense_reference_eigs(np.array([[4.0]]), np.array([[2.0]]))
    assert res.values[0] == pytest.approx(0.5)


def test_smallest_pencil_square_spectrum():
    mesh = mg.mesh_unperforated(geo.unit_square(), 1 / 32)
    K = fem.assemble_stiffness(mesh)
    M = fem.assemble_mass(mesh)
    dm = fem.build_dofmap(mesh)
    res = eigen.smallest_pencil_eigs(fem.apply_dirichlet(K, dm),
                                     fem.apply_dirichlet(M, dm), 3)
    exact = oracles.square_dirichlet_spectrum(1.0, 3)
    assert np.all(np.abs(res.values - exact) / exact < 8e-3)
    # pencil scaling: q-weighted eigenvalues divide exactly
    res2 = eigen.smallest_pencil_eigs(
        fem.apply_dirichlet(K, dm),
        fem.apply_dirichlet(fem.assemble_weighted_mass(mesh, 2.0), dm), 3)
    assert np.abs(res2.values - res.values / 2.0).max() < 1e-10


def test_mu_lambda_involution():
    vals = np.array([1e-6, 0.03, 0.5, 1.0])
    assert np.abs(eigen.steklov_to_mu(eigen.mu_to_steklov(vals))
                  - vals).max() < 1e-15


def test_deflation_removes_known_mode():
    mesh = mg.mesh_unperforated(geo.unit_square(), 1 / 16)
    K = fem.assemble_stiffness(mesh)
    M = fem.assemble_mass(mesh)
    ones = np.ones(mesh.num_nodes)
    res = eigen.smallest_pencil_eigs((K + M).tocsr(), M, 1, deflate=ones)
    # first nonzero Neumann eigenvalue of the unit square is pi^2
    assert res.values[0] - 1.0 == pytest.approx(math.pi ** 2, rel=5e-3)
