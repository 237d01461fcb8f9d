"""Cross-section geometry: local polar frame, wedge checks, corner fan."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fscm.errors import OutsideWedge, UnsupportedGeometry
from fscm.geometry import (PolygonalSection, fan_triangles, make_l_section,
                           place_polar, polar_at, polar_at_many)

SECTION = make_l_section()


def test_l_section_shape():
    assert SECTION.n_edges == 6
    assert SECTION.interior_angle == pytest.approx(1.5 * np.pi)
    assert SECTION.alpha == pytest.approx(2.0 / 3.0)
    np.testing.assert_allclose(SECTION.corner, [0.0, 0.0])


def test_validate_passes():
    SECTION.validate()


def test_polar_basic_points():
    rho, phi = polar_at(SECTION, (1.0, 0.0))
    assert rho == pytest.approx(1.0)
    assert phi == pytest.approx(0.0)
    rho, phi = polar_at(SECTION, (0.0, -1.0))
    assert phi == pytest.approx(1.5 * np.pi)
    rho, phi = polar_at(SECTION, (-0.5, 0.5))
    assert rho == pytest.approx(np.sqrt(0.5))
    assert phi == pytest.approx(0.75 * np.pi)


def test_outside_wedge_raises():
    with pytest.raises(OutsideWedge):
        polar_at(SECTION, (0.5, -0.5))


@given(st.floats(1e-3, 2.0), st.floats(1e-6, 1.0))
def test_polar_roundtrip(rho, frac):
    phi = frac * SECTION.interior_angle * (1.0 - 1e-12)
    p = place_polar(SECTION, rho, phi)
    r2, p2 = polar_at(SECTION, p)
    assert r2 == pytest.approx(rho, rel=1e-12)
    assert p2 == pytest.approx(phi, rel=1e-9, abs=1e-9)


def test_polar_at_many_matches_scalar():
    pts = np.array([[0.3, 0.2], [-0.4, 0.7], [-0.1, -0.9]])
    rho, phi = polar_at_many(SECTION, pts)
    for i, p in enumerate(pts):
        r1, p1 = polar_at(SECTION, p)
        assert rho[i] == pytest.approx(r1)
        assert phi[i] == pytest.approx(p1)


def test_fan_triangles_cover_section():
    tris = fan_triangles(SECTION)
    # star-shaped fan from the corner: one triangle per non-adjacent edge
    area = 0.0
    for a, b in tris:
        da = np.asarray(a) - SECTION.corner
        db = np.asarray(b) - SECTION.corner
        cross = da[0] * db[1] - da[1] * db[0]
        assert cross > 0.0       # consistently oriented
        area += 0.5 * cross
    assert area == pytest.approx(3.0)


def test_one_reentrant_corner_required():
    square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(UnsupportedGeometry):
        PolygonalSection(
            vertices=square,
            edges=((0, 1), (1, 2), (2, 3), (3, 0)),
            reentrant_vertex=0,
            interior_angle=0.5 * np.pi,
            frame=np.eye(2),
        ).validate()
