"""Dual singular pair: analytic parts, graded integrals, discrete basis."""

import numpy as np
import pytest

from fscm.errors import CornerSingularity
from fscm.fem import assemble
from fscm.geometry import make_l_section
from fscm.mesh import triangulate
from fscm.singular import (boundary_data_s, build_singular_basis, eval_pP,
                           eval_phiP, grad_phiP, integrate_pP_squared,
                           integrate_singular)

SECTION = make_l_section()
MESH = triangulate(SECTION, 8)
SYSTEM = assemble(MESH)
BASIS = build_singular_basis(SYSTEM, SECTION)


def test_pP_phiP_product_is_sin_sq():
    # p_P * phi_P = sin(alpha phi)^2 regardless of radius
    pts = np.array([[0.5, 0.2], [-0.3, 0.8], [-0.01, -0.6]])
    a = SECTION.alpha
    rho = np.hypot(pts[:, 0], pts[:, 1])
    phi = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * np.pi)
    got = eval_pP(SECTION, pts) * eval_phiP(SECTION, pts)
    np.testing.assert_allclose(got, np.sin(a * phi)**2, rtol=1e-12)
    assert np.all(rho > 0)


def test_pP_raises_at_corner():
    with pytest.raises(CornerSingularity):
        eval_pP(SECTION, np.array([[0.0, 0.0]]))


def test_phiP_vanishes_on_corner_edges():
    pts = np.array([[0.7, 0.0], [0.0, -0.7], [0.05, 0.0]])
    np.testing.assert_allclose(eval_phiP(SECTION, pts), 0.0, atol=1e-14)


def test_grad_phiP_finite_differences():
    pts = np.array([[0.4, 0.3], [-0.5, 0.1], [-0.2, -0.8]])
    g = grad_phiP(SECTION, pts)
    eps = 1e-6
    for axis in range(2):
        d = np.zeros(2)
        d[axis] = eps
        fd = (eval_phiP(SECTION, pts + d) - eval_phiP(SECTION, pts - d)) / (2 * eps)
        np.testing.assert_allclose(g[:, axis], fd, rtol=1e-8, atol=1e-8)


def test_pP_squared_total():
    # frozen value of ||p_P||_0^2 on the canonical section (independent
    # cross-check: polar integration of the rho**(-2 alpha) profile)
    assert integrate_pP_squared(SECTION) == pytest.approx(
        3.8121210297132233, rel=1e-9)


def test_integrate_singular_matches_bulk_for_smooth():
    got = integrate_singular(MESH, SECTION,
                             lambda p: p[:, 0]**2 + p[:, 1]**2, sigma=0.0)
    assert got == pytest.approx(2.0, rel=1e-9)


def test_boundary_data_zero_on_corner_edges():
    assert boundary_data_s(SECTION, np.array([0.5, 0.0]), (1,)) == 0.0
    assert boundary_data_s(SECTION, np.array([0.0, -0.5]), (2,)) == 0.0
    far = np.array([1.0, 0.5])
    assert boundary_data_s(SECTION, far, (3,)) == pytest.approx(
        -eval_pP(SECTION, far[None, :])[0])


def test_p_tilde_discrete_harmonic():
    # step-one field is discrete-harmonic: interior stiffness residual ~ 0
    r = (SYSTEM.stiffness_full @ BASIS.p_tilde)[:MESH.n_interior]
    assert np.max(np.abs(r)) < 1e-9


def test_phiP_stiff_load_interior_vanishes():
    # phi_P is harmonic, so interior entries of a(phi_P, psi_j) reduce to
    # boundary flux terms that cancel exactly
    interior = BASIS.phiP_stiff_load[:MESH.n_interior]
    assert np.max(np.abs(interior)) < 1e-10


def test_beta_star_frozen_values():
    assert BASIS.beta_star == pytest.approx(0.636356796777905, rel=1e-9)
    assert BASIS.ps_norm_sq == pytest.approx(1.9991738378193995, rel=1e-9)
    assert BASIS.beta_star == pytest.approx(BASIS.ps_norm_sq / np.pi, rel=1e-13)


def test_phi_s_vanishes_on_corner_edges():
    nodal = BASIS.phi_s_nodal()
    for i in range(MESH.n_interior, MESH.n_points):
        labs = set(MESH.boundary_edges[i])
        if labs & {1, 2}:
            assert abs(nodal[i]) < 1e-12


def test_ps_load_consistency():
    # dot_ps of the interpolated p_tilde equals the FE mass product plus
    # the graded pairing with p_P
    z = np.linspace(0.0, 1.0, MESH.n_points)
    direct = (z @ (SYSTEM.mass_full @ BASIS.p_tilde)) + z @ BASIS.pP_load
    assert BASIS.dot_ps(z) == pytest.approx(direct, rel=1e-12)
