"""Manufactured problems, error norms and rate reports."""

import math

import numpy as np
import pytest

from fscm.fem import assemble
from fscm.geometry import make_l_section
from fscm.mesh import triangulate
from fscm.scm import ModeSolution
from fscm.verify import (RateReport, _envelope, a_norm_error, fit_slope,
                         problem_modal3d, problem_regular2d,
                         problem_singular2d, problem_singular3d,
                         residual_selfcheck, residual_selfcheck_3d,
                         telescoping_amps)

SECTION = make_l_section()


def test_envelope_constraints():
    val0, _, _ = _envelope(np.array([0.0]))
    assert val0[0] == pytest.approx(1.0)
    val1, d1, _ = _envelope(np.array([1.0 - 1e-13]))
    assert abs(val1[0]) < 1e-7
    assert abs(d1[0]) < 1e-7
    out, dout, ddout = _envelope(np.array([1.5]))
    assert out[0] == dout[0] == ddout[0] == 0.0


def test_residual_selfchecks():
    # every manufactured problem satisfies its own PDE at spot points
    assert residual_selfcheck(problem_regular2d(), mu=1.0) < 1e-5
    assert residual_selfcheck(problem_singular2d(), mu=math.pi**2) < 1e-5
    assert residual_selfcheck_3d(problem_singular3d()) < 1e-5
    assert residual_selfcheck_3d(problem_modal3d(6)) < 1e-5


def test_singular_problem_boundary_trace():
    prob = problem_singular2d()
    pts = np.array([[0.9, 0.0], [0.3, 0.0], [0.0, -0.8],
                    [1.0, 0.5], [-1.0, 0.2], [0.4, 1.0]])
    np.testing.assert_allclose(prob.u(pts), 0.0, atol=1e-12)


def test_source_vanishes_at_prism_bases():
    prob = problem_singular3d()
    pts = np.array([[0.3, 0.4, 0.0], [-0.5, 0.1, 1.0]])
    np.testing.assert_allclose(prob.source()(pts), 0.0, atol=1e-12)


def test_a_norm_error_zero_for_exact():
    prob = problem_regular2d()
    mesh = triangulate(SECTION, 8)
    sol = ModeSolution(mesh=mesh, mu=1.0, regular=prob.u(mesh.points),
                       c=0.0, threshold_applied=False)
    # interpolation error only
    assert a_norm_error(sol, prob) < 0.2
    exact_zero = ModeSolution(mesh=mesh, mu=1.0,
                              regular=np.zeros(mesh.n_points),
                              c=0.0, threshold_applied=False)
    # zero solution: the full norm of u, cross-checked against quadrature
    from fscm.quadrature import integrate_bulk
    h1 = integrate_bulk(mesh.points, mesh.triangles,
                        lambda p: np.sum(prob.grad_u(p)**2, axis=1))
    l2 = integrate_bulk(mesh.points, mesh.triangles, lambda p: prob.u(p)**2)
    assert a_norm_error(exact_zero, prob, mu=2.0) == pytest.approx(
        math.sqrt(h1 + 2.0 * l2), rel=1e-8)


def test_a_norm_error_mu_zero_is_seminorm():
    prob = problem_regular2d()
    mesh = triangulate(SECTION, 8)
    zero = ModeSolution(mesh=mesh, mu=5.0, regular=np.zeros(mesh.n_points),
                        c=0.0, threshold_applied=False)
    semi = a_norm_error(zero, prob, mu=0.0)
    full = a_norm_error(zero, prob, mu=5.0)
    assert semi < full


def test_fit_slope_exact_power():
    hs = [0.4, 0.2, 0.1, 0.05]
    errs = [3.0 * h**1.37 for h in hs]
    assert fit_slope(hs, errs) == pytest.approx(1.37, rel=1e-12)


def test_rate_report_pair_slopes():
    rep = RateReport(ns=[8, 16, 32], hs=[0.4, 0.2, 0.1],
                     errors=[0.4, 0.2, 0.1])
    assert rep.slope == pytest.approx(1.0)
    np.testing.assert_allclose(rep.pair_slopes(), [1.0, 1.0])
    assert len(rep.rows()) == 3


def test_telescoping_amps_decay():
    amps = telescoping_amps(32)
    ks = np.arange(4, 33)
    vals = np.array([amps[k] for k in ks])
    # asymptotically ~ k**(-5/2)
    slope = fit_slope(1.0 / ks, vals)
    assert slope == pytest.approx(2.5, abs=0.1)


def test_modal3d_mode_content():
    amps = {1: 0.5, 2: 0.25}
    prob = problem_modal3d(2, amps=amps)
    assert prob.amps == amps
    assert prob.modes[2].singular_coefficient == 0.0
    # source restricted to a plane is the sine combination of mode sources
    pts3 = np.array([[0.2, 0.3, 0.25]])
    expect = sum(np.sin(k * np.pi * 0.25)
                 * prob.modes[k].source((k * np.pi)**2)(pts3[:, :2])[0]
                 for k in (1, 2))
    assert prob.source()(pts3)[0] == pytest.approx(expect, rel=1e-12)
