"""Structured triangulation: counts, lookup, interpolation, text I/O."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fscm.errors import OutsideDomain
from fscm.geometry import make_l_section
from fscm.mesh import load_mesh, rect_mesh, save_mesh, triangulate

SECTION = make_l_section()
MESH = triangulate(SECTION, 8)


def test_counts_and_h():
    # three unit quadrants, two triangles per cell
    assert MESH.n_triangles == 3 * 2 * 8 * 8
    assert MESH.n_points == MESH.n_interior + MESH.n_boundary
    assert MESH.h == pytest.approx(np.sqrt(2.0) / 8)


def test_interior_points_first():
    labels = MESH.boundary_edges
    assert all(len(labels[i]) == 0 for i in range(MESH.n_interior))
    assert all(len(labels[i]) > 0 for i in range(MESH.n_interior, MESH.n_points))


def test_areas_sum_to_domain():
    assert MESH.areas().sum() == pytest.approx(3.0)
    assert np.all(MESH.areas() > 0.0)


def test_triangles_ccw():
    verts = MESH.points[MESH.triangles]
    d1 = verts[:, 1] - verts[:, 0]
    d2 = verts[:, 2] - verts[:, 0]
    assert np.all(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] > 0.0)


def test_corner_edges_labelled():
    # gamma_1 runs along y = 0, x >= 0; gamma_2 along x = 0, y <= 0
    for i in range(MESH.n_points):
        labs = MESH.boundary_edges[i]
        x, y = MESH.points[i]
        if 1 in labs:
            assert y == pytest.approx(0.0) and x >= -1e-12
        if 2 in labs:
            assert x == pytest.approx(0.0) and y <= 1e-12


@settings(max_examples=40)
@given(st.floats(-0.99, 0.99), st.floats(-0.99, 0.99))
def test_interpolate_reproduces_linears(x, y):
    if x > 1e-9 and y < -1e-9:
        return                       # removed quadrant
    field = 0.25 + 2.0 * MESH.points[:, 0] - 3.0 * MESH.points[:, 1]
    got = MESH.interpolate(field, np.array([[x, y]]))[0]
    assert got == pytest.approx(0.25 + 2.0 * x - 3.0 * y, abs=1e-12)


def test_locate_outside_raises():
    with pytest.raises(OutsideDomain):
        MESH.locate(np.array([[0.5, -0.5]]))
    with pytest.raises(OutsideDomain):
        MESH.locate(np.array([[1.5, 0.0]]))


def test_locate_on_reentrant_edges():
    # points on the corner edges must resolve to triangles inside the domain
    pts = np.array([[0.375, 0.0], [0.0, -0.375], [0.0, 0.0]])
    tri = MESH.locate(pts)
    assert np.all(tri >= 0)


def test_tri_gradients_linear_field():
    field = 1.0 + 4.0 * MESH.points[:, 0] - 2.5 * MESH.points[:, 1]
    g = MESH.tri_gradients(field)
    np.testing.assert_allclose(g[:, 0], 4.0, atol=1e-12)
    np.testing.assert_allclose(g[:, 1], -2.5, atol=1e-12)


def test_rect_mesh_counts():
    m = rect_mesh(0.0, 1.0, 0.0, 0.5, 4)
    assert m.n_triangles == 2 * 4 * 2
    assert m.areas().sum() == pytest.approx(0.5)


def test_save_load_roundtrip(tmp_path):
    path = tmp_path / "mesh.txt"
    save_mesh(MESH, path)
    header = path.read_text().splitlines()[0].split()
    assert [int(v) for v in header] == [MESH.n_points, MESH.n_triangles]
    back = load_mesh(path)
    np.testing.assert_allclose(back.points, MESH.points)
    np.testing.assert_array_equal(back.triangles, MESH.triangles)
    assert back.boundary_edges == MESH.boundary_edges
    assert back.h == pytest.approx(MESH.h)
    # the reconstructed locate metadata still works
    assert back.locate(np.array([[-0.3, 0.4]]))[0] >= 0
