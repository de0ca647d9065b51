import math

import numpy as np
import pytest

from steklov_lab import geometry as geo
from steklov_lab import meshgen as mg


TPL = mg.CellMeshTemplate()


def polygonal_hole_area(hole, segments):
    return 0.5 * segments * hole.d ** 2 * math.sin(2 * math.pi / segments)


def test_template_validation():
    with pytest.raises(mg.MeshError):
        mg.CellMeshTemplate(grading=0.9).validate()
    with pytest.raises(mg.MeshError):
        mg.CellMeshTemplate(hole_boundary_segments=20).validate()
    with pytest.raises(mg.MeshError):
        mg.CellMeshTemplate(boundary_nodes_per_side=5).validate()
    with pytest.raises(mg.MeshError):
        # 4*sides / segments not a power of two
        mg.CellMeshTemplate(boundary_nodes_per_side=6,
                            hole_boundary_segments=32).validate()
    mg.CellMeshTemplate(8, 2.0, 8, 16).validate()


def test_mesh_cell_quality_and_hole_polygon():
    # quarter cell with d = 1/64: two decades of scale separation
    cells = geo.build_square_tessellation(geo.unit_square(), 4)
    holes = geo.place_holes(cells, "circle", 1.0)
    tpl = mg.CellMeshTemplate(8, 2.0, 8, 16)
    mesh = mg.mesh_cell(cells[0], holes[0], tpl)
    assert mesh.min_angle() >= 20.0
    d = holes[0].d
    hx, hy = holes[0].center
    for (a, b), tag in zip(mesh.boundary_edges, mesh.edge_tags):
        assert tag == cells[0].index
        for nid in (a, b):
            assert abs(math.hypot(*(mesh.nodes[nid] - (hx, hy))) - d) < 1e-12


def test_ring_zero_conforms_to_hole_polygon():
    cells = geo.build_square_tessellation(geo.unit_square(), 4)
    holes = geo.place_holes(cells, "circle", 1.0)
    mesh = mg.mesh_cell(cells[0], holes[0], TPL)
    hole_nodes = mesh.boundary_nodes(cells[0].index)
    assert len(hole_nodes) == TPL.hole_boundary_segments


def test_adjacent_cells_share_identical_boundary_nodes():
    cells = geo.build_square_tessellation(geo.unit_square(), 2)
    holes = geo.place_holes(cells, "circle", 1.0)
    meshes = [mg.mesh_cell(c, h, TPL) for c, h in zip(cells, holes)]
    # shared edge between cell 0 (left-bottom) and cell 1 (right-bottom)
    right = {tuple(p) for p in meshes[0].nodes if p[0] == 0.5}
    left = {tuple(p) for p in meshes[1].nodes if p[0] == 0.5}
    s = TPL.boundary_nodes_per_side
    assert len(right) == s + 1
    assert right == left


def test_stitched_node_count_matches_dedup_oracle():
    geom = geo.build_perforated_geometry(geo.unit_square(), 2, 1.0)
    meshes = [mg.mesh_cell(c, h, TPL)
              for c, h in zip(geom.cells, geom.holes)]
    seen = set()
    for m in meshes:
        for p in m.nodes:
            seen.add((round(p[0], 13), round(p[1], 13)))
    stitched = mg.mesh_perforated(geom, TPL)
    assert stitched.num_nodes == len(seen)


def test_perforated_tags_and_euler():
    geom = geo.build_perforated_geometry(geo.unit_square(), 8, 1.0)
    mesh = mg.mesh_perforated(geom, TPL)
    # every hole tag present exactly once per cell
    tags = set(int(t) for t in mesh.edge_tags if t != mg.OUTER)
    assert tags == set(range(64))
    # every outer node on the domain boundary
    for nid in mesh.boundary_nodes(mg.OUTER):
        x, y = mesh.nodes[nid]
        assert min(x, y, 1 - x, 1 - y) < 1e-12
    uniq, counts = mesh.interior_edge_multiplicities()
    assert set(counts) <= {1, 2}
    euler = mesh.num_nodes - len(uniq) + mesh.num_triangles
    assert euler == 1 - len(geom.holes)
    boundary_once = (counts == 1).sum()
    assert boundary_once == len(mesh.boundary_edges)


def test_mesh_area_identity():
    geom = geo.build_perforated_geometry(geo.unit_square(), 4, 1.0)
    mesh = mg.mesh_perforated(geom, TPL)
    holes_area = sum(polygonal_hole_area(h, TPL.hole_boundary_segments)
                     for h in geom.holes)
    assert abs(mesh.area() - (1.0 - holes_area)) < 1e-12


@pytest.mark.parametrize("m,beta", [(2, 0.5), (4, 1.0), (8, 2.0), (16, 1.0)])
def test_min_angle_floor_across_grid(m, beta):
    geom = geo.build_perforated_geometry(geo.unit_square(), m, beta)
    mesh = mg.mesh_perforated(geom, TPL)
    assert mesh.min_angle() >= 20.0


def test_single_cell_study_matches_mesh_cell_plus_outer():
    geom = geo.build_perforated_geometry(geo.unit_square(), 2, 1.0)
    sub = geo.PerforatedGeometry(domain=geom.domain, m=2,
                                 cells=geom.cells[:1], holes=geom.holes[:1],
                                 beta=1.0)
    single = mg.mesh_perforated(sub, TPL)
    alone = mg.mesh_cell(geom.cells[0], geom.holes[0], TPL)
    assert single.num_nodes == alone.num_nodes
    assert single.num_triangles == alone.num_triangles
    outer = single.edge_tags == mg.OUTER
    assert outer.sum() == 4 * TPL.boundary_nodes_per_side
    assert (~outer).sum() == len(alone.boundary_edges)


def test_degenerate_grading_rejected_with_suggestion():
    cells = geo.build_square_tessellation(geo.unit_square(), 16)
    holes = geo.place_holes(cells, "circle", 1.0)
    tight = mg.CellMeshTemplate(ring_count=1, grading=1.2,
                                boundary_nodes_per_side=8,
                                hole_boundary_segments=32)
    with pytest.raises(mg.MeshError, match="ring_count >="):
        mg.mesh_cell(cells[0], holes[0], tight)


def test_structured_mesh_counts():
    um = mg.mesh_unperforated(geo.unit_square(), 0.5)
    assert (um.num_nodes, um.num_triangles) == (9, 8)
    assert mg.mesh_unperforated(geo.unit_square(), 1.0).num_triangles == 2
    # enumeration oracle: the L keeps 3 of the 4 half-grid squares
    lm = mg.mesh_unperforated(geo.l_shape(1), 0.5)
    assert lm.num_triangles == 6
    # structured mesh of a thin strip
    sm = mg.mesh_unperforated(geo.rectangle(1, "1/20"), 0.05)
    assert abs(sm.area() - 0.05) < 1e-14


def test_refine_counts_and_projection():
    um = mg.mesh_unperforated(geo.unit_square(), 1.0)
    assert mg.refine(um).num_triangles == 8
    assert mg.refine(mg.refine(um)).num_triangles == 32

    geom = geo.build_perforated_geometry(geo.unit_square(), 2, 1.0)
    mesh = mg.mesh_perforated(geom, TPL)
    fine = mg.refine(mesh)
    assert fine.num_triangles == 4 * mesh.num_triangles
    # hole-adjacent midpoints live on the true circle
    for (a, b), tag in zip(fine.boundary_edges, fine.edge_tags):
        if tag == mg.OUTER:
            continue
        h = geom.holes[int(tag)]
        for nid in (a, b):
            rr = math.hypot(*(fine.nodes[nid] - np.asarray(h.center)))
            assert abs(rr - h.d) < 1e-12


def test_refined_hole_perimeter_converges_quadratically():
    geom = geo.build_perforated_geometry(geo.unit_square(), 2, 1.0)
    mesh = mg.mesh_perforated(geom, TPL)
    per = []
    for _ in range(3):
        length = 0.0
        for (a, b), tag in zip(mesh.boundary_edges, mesh.edge_tags):
            if tag == 0:
                length += math.hypot(*(mesh.nodes[b] - mesh.nodes[a]))
        per.append(length)
        mesh = mg.refine(mesh)
    true = 2 * math.pi * geom.holes[0].d
    errs = [true - p for p in per]
    assert errs[0] > 0
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_export_roundtrip_bit_exact():
    geom = geo.build_perforated_geometry(geo.unit_square(), 2, 1.0)
    mesh = mg.mesh_perforated(geom, TPL)
    text = mg.export_mesh(mesh)
    back = mg.load_mesh(text)
    assert np.array_equal(back.nodes, mesh.nodes)
    assert np.array_equal(back.triangles, mesh.triangles)
    assert np.array_equal(back.boundary_edges, mesh.boundary_edges)
    assert np.array_equal(back.edge_tags, mesh.edge_tags)
    assert mg.export_mesh(back) == text
