"""Sine-series reduction: mode projection, prism solve, Parseval."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fscm.fem import assemble, load_vector
from fscm.fourier import (FscmSolution, ModeProjector, PrismSpec, axial_rule,
                          fscm_solve, mode_values, parseval_residual)
from fscm.geometry import make_l_section
from fscm.mesh import triangulate
from fscm.scm import ScmConfig
from fscm.verify import h1_error_3d, problem_singular3d

SECTION = make_l_section()
MESH = triangulate(SECTION, 8)
PRISM = PrismSpec(SECTION, 1.0)


def test_mu_of_mode():
    assert PRISM.mu(1) == pytest.approx(np.pi**2)
    assert PrismSpec(SECTION, 2.0).mu(4) == pytest.approx(4.0 * np.pi**2)


def test_axial_rule_resolves_sines():
    x, w = axial_rule(1.0, 6)
    # orthogonality of the first modes under the rule
    for k in range(1, 7):
        mass = np.dot(w, np.sin(k * np.pi * x)**2)
        assert mass == pytest.approx(0.5, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-2.0, 2.0), min_size=3, max_size=3))
def test_mode_values_recover_series(amps):
    pts = np.array([[0.3, 0.2], [-0.6, 0.4]])

    def f(p3):
        out = np.zeros(len(p3))
        for k, a in enumerate(amps, start=1):
            out += a * np.sin(k * np.pi * p3[:, 2]) * (1.0 + p3[:, 0])
        return out

    coeffs = mode_values(f, pts, 1.0, 4)
    for k, a in enumerate(amps, start=1):
        np.testing.assert_allclose(coeffs[k - 1], a * (1.0 + pts[:, 0]),
                                   atol=1e-10)
    np.testing.assert_allclose(coeffs[3], 0.0, atol=1e-10)


def test_projector_load_matches_fem_load():
    proj = ModeProjector(MESH, SECTION)
    g = lambda p: (1.0 - p[:, 0]**2) * np.cos(p[:, 1])
    vals = g(proj.points)
    load, _ = proj.load_and_moment(vals)
    np.testing.assert_allclose(load, load_vector(MESH, g), atol=1e-13)


def test_projector_moment_is_graded_pairing():
    from fscm.singular import eval_pP, integrate_singular

    proj = ModeProjector(MESH, SECTION)
    g = lambda p: np.exp(p[:, 0] - p[:, 1])
    _, moment = proj.load_and_moment(g(proj.points))
    direct = integrate_singular(MESH, SECTION,
                                lambda p: g(p) * eval_pP(SECTION, p),
                                sigma=SECTION.alpha)
    assert moment == pytest.approx(direct, rel=1e-12)


def test_parseval_two_mode_source():
    prob = problem_singular3d()
    res = parseval_residual(prob.source(), PRISM, MESH, 4)
    assert res < 1e-12


def test_prism_solve_two_modes():
    prob = problem_singular3d()
    sol = fscm_solve(PRISM, prob.source(), 8, 3,
                     config=ScmConfig(c_star=np.inf))
    assert sol.n_modes == 3
    cks = sol.coefficients()
    # mode 1 is the singular problem, modes 2-3 carry no singular content
    assert cks[0] == pytest.approx(1.0 / 0.6363568, abs=0.05)
    assert abs(cks[1]) < 0.05
    assert abs(cks[2]) < 1e-8
    # the third discrete mode has no load at all
    assert np.max(np.abs(sol.modes[2].regular)) < 1e-10

    pts = np.array([[0.3, 0.3, 0.25], [-0.5, 0.2, 0.7]])
    exact = prob.u(pts)
    np.testing.assert_allclose(sol.evaluate(pts), exact, atol=0.03)


def test_truncation_error_drops_with_modes():
    prob = problem_singular3d()
    f = prob.source()
    sol1 = fscm_solve(PRISM, f, 8, 1, config=ScmConfig(c_star=np.inf))
    sol2 = fscm_solve(PRISM, f, 8, 2, config=ScmConfig(c_star=np.inf))
    assert h1_error_3d(sol2, prob) < h1_error_3d(sol1, prob)


def test_gradient_axial_component():
    prob = problem_singular3d()
    sol = fscm_solve(PRISM, prob.source(), 8, 2,
                     config=ScmConfig(c_star=np.inf))
    pts = np.array([[-0.4, 0.5, 0.3]])
    g = sol.gradient(pts)
    eps = 1e-5
    up = sol.evaluate(pts + [0, 0, eps])
    dn = sol.evaluate(pts - [0, 0, eps])
    assert g[0, 2] == pytest.approx((up[0] - dn[0]) / (2 * eps), rel=1e-5)
