"""P1 assembly, CG solver, norms."""

import numpy as np
import pytest
import scipy.sparse.linalg as spla

from fscm.errors import NoConvergence
from fscm.fem import assemble, load_vector, pcg, solve
from fscm.geometry import make_l_section
from fscm.mesh import rect_mesh, triangulate

MESH = triangulate(make_l_section(), 8)
SYSTEM = assemble(MESH)


def test_stiffness_annihilates_constants():
    ones = np.ones(MESH.n_points)
    r = SYSTEM.stiffness_full @ ones
    assert np.max(np.abs(r)) < 1e-12


def test_mass_total_is_area():
    ones = np.ones(MESH.n_points)
    assert ones @ (SYSTEM.mass_full @ ones) == pytest.approx(3.0)


def test_norms_of_simple_fields():
    x = MESH.points[:, 0]
    # |x|_1^2 = area, ||1||_0^2 = area (P1-exact quadratic forms)
    assert SYSTEM.h1_seminorm(x) == pytest.approx(np.sqrt(3.0))
    assert SYSTEM.l2_norm(np.ones(MESH.n_points)) == pytest.approx(np.sqrt(3.0))


def test_with_mu_operator():
    sysmu = SYSTEM.with_mu(5.0)
    z = np.random.default_rng(7).normal(size=MESH.n_interior)
    lhs = sysmu.operator @ z
    rhs = SYSTEM.stiffness @ z + 5.0 * (SYSTEM.mass @ z)
    np.testing.assert_allclose(lhs, rhs, atol=1e-13)


def test_linear_reproduction_rect():
    mesh = rect_mesh(0.25, 1.0, -0.25, 0.5, 8)
    system = assemble(mesh)
    exact = 0.7 + 1.3 * mesh.points[:, 0] - 2.1 * mesh.points[:, 1]
    rhs = np.zeros(mesh.n_points)
    got = solve(system, rhs, boundary_values=exact)
    assert np.max(np.abs(got - exact)) < 1e-10


def test_solve_matches_direct():
    mu = 2.0
    sysmu = SYSTEM.with_mu(mu)
    load = load_vector(MESH, lambda p: np.ones(len(p)), mass=SYSTEM.mass_full)
    u = solve(sysmu, load)
    direct = spla.spsolve(sysmu.operator.tocsc(), load[:MESH.n_interior])
    np.testing.assert_allclose(u[:MESH.n_interior], direct, atol=1e-9)
    assert np.max(np.abs(u[MESH.n_interior:])) == 0.0


def test_load_vector_callback_vs_nodal():
    # for a linear f both quadratures are exact
    f = lambda p: 1.0 + 2.0 * p[:, 0] - p[:, 1]
    via_callback = load_vector(MESH, f)
    nodal = f(MESH.points)
    via_mass = load_vector(MESH, nodal, mass=SYSTEM.mass_full)
    np.testing.assert_allclose(via_callback, via_mass, atol=1e-13)


def test_pcg_no_convergence():
    A = SYSTEM.operator.tocsr()
    b = np.ones(A.shape[0])
    with pytest.raises(NoConvergence):
        pcg(A, b, tol=1e-14, maxiter=2)
