"""Discrete dual singular function and singular complement.

Builds the pair that the complement method adds to the P1 space:

* ``p_s^h = p_tilde_h + p_P`` with ``p_P = rho**(-alpha) sin(alpha phi)``,
  where the finite element part solves a discrete harmonic problem with the
  boundary data ``s`` (zero on gamma_1, gamma_2; ``-p_P`` elsewhere);
* ``beta_star_h = ||p_s^h||_0^2 / pi``;
* ``phi_s^h = phi_tilde_h + beta_star_h * phi_P`` with
  ``phi_P = rho**alpha sin(alpha phi)``, where the finite element part
  solves a Poisson problem with load ``p_s^h`` and boundary data
  ``-beta_star_h * phi_P``.

Integrals against the analytic parts use the corner-graded quadrature on
triangles touching the corner and the order-4 rule elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CornerSingularity
from .fem import FemSystem, load_vector, solve
from .geometry import PolygonalSection, fan_triangles, polar_at_many
from .mesh import TriMesh
from .quadrature import (GRADED_LEVELS, GRADED_NPTS, TRI6_BARY, TRI6_W,
                         _geometric_tail, _unit_graded_rule,
                         corner_triangle_ids, corner_triangle_quadrature,
                         gauss_panels)


def eval_pP(section: PolygonalSection, points) -> np.ndarray:
    """Dual singular part rho**(-alpha) sin(alpha phi); singular at the corner."""
    rho, phi = polar_at_many(section, np.atleast_2d(np.asarray(points, float)))
    if np.any(rho == 0.0):
        raise CornerSingularity("p_P is unbounded at the corner")
    a = section.alpha
    return rho**(-a) * np.sin(a * phi)


def eval_phiP(section: PolygonalSection, points) -> np.ndarray:
    """Primal singular part rho**alpha sin(alpha phi); vanishes at the corner."""
    rho, phi = polar_at_many(section, np.atleast_2d(np.asarray(points, float)))
    a = section.alpha
    return rho**a * np.sin(a * phi)


def grad_phiP(section: PolygonalSection, points) -> np.ndarray:
    """Gradient of phi_P in global coordinates, (N, 2); ~ rho**(alpha-1)."""
    pts = np.atleast_2d(np.asarray(points, float))
    rho, phi = polar_at_many(section, pts)
    a = section.alpha
    amp = a * rho**(a - 1.0)
    d_r = amp * np.sin(a * phi)
    d_t = amp * np.cos(a * phi)
    cos, sin = np.cos(phi), np.sin(phi)
    gx_local = d_r * cos - d_t * sin
    gy_local = d_r * sin + d_t * cos
    return np.column_stack([gx_local, gy_local]) @ section.frame


def boundary_data_s(section: PolygonalSection, point, edge_labels) -> float:
    """Boundary function s at a boundary vertex with the given gamma labels.

    Zero on gamma_1 and gamma_2 (including the corner); -p_P on the outer
    segments.  Where definitions overlap they agree because the trace of
    p_P is continuous and vanishes at phi in {0, pi/alpha}.
    """
    labels = set(edge_labels)
    if not labels:
        raise ValueError("s is defined on boundary vertices only")
    on_corner_edges = bool(labels & {1, 2})
    outer = labels - {1, 2}
    if outer:
        val = float(-eval_pP(section, point)[0])
        if on_corner_edges and abs(val) > 1e-12:
            raise AssertionError("inconsistent s at a gamma_1/gamma_2 junction")
        return 0.0 if on_corner_edges else val
    return 0.0


def _tri_geometry(mesh: TriMesh):
    verts = mesh.points[mesh.triangles]
    d1 = verts[:, 1] - verts[:, 0]
    d2 = verts[:, 2] - verts[:, 0]
    area = 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    return verts, area


def _barycentric_fn(verts: np.ndarray, local: int):
    """Callback lambda_local(x) on the triangle with given vertices."""
    a, b, c = verts

    def lam(pts):
        v0 = b - a
        v1 = c - a
        v2 = np.atleast_2d(pts) - a
        den = v0[0] * v1[1] - v0[1] * v1[0]
        l1 = (v2[:, 0] * v1[1] - v2[:, 1] * v1[0]) / den
        l2 = (v0[0] * v2[:, 1] - v0[1] * v2[:, 0]) / den
        return np.stack([1.0 - l1 - l2, l1, l2], axis=0)[local]

    return lam


def singular_basis_load(mesh: TriMesh, section: PolygonalSection, g,
                        sigma: float) -> np.ndarray:
    """Vector of integrals (g, psi_j) for a corner-singular integrand g.

    Order-4 rule on bulk triangles, corner-graded quadrature on triangles
    touching the corner; ``sigma`` is g's power at the corner.
    """
    corner_ids = corner_triangle_ids(mesh, section.corner)
    verts, area = _tri_geometry(mesh)
    keep = np.ones(mesh.n_triangles, dtype=bool)
    keep[corner_ids] = False

    out = np.zeros(mesh.n_points)
    pts = np.einsum("qj,tjk->tqk", TRI6_BARY, verts[keep])
    vals = g(pts.reshape(-1, 2)).reshape(-1, 6)
    contrib = area[keep, None] * (vals * TRI6_W[None, :]) @ TRI6_BARY
    np.add.at(out, mesh.triangles[keep].ravel(), contrib.ravel())

    corner = section.corner
    for t in corner_ids:
        tv = verts[t]
        loc = int(np.argmin(np.hypot(tv[:, 0] - corner[0], tv[:, 1] - corner[1])))
        others = [i for i in range(3) if i != loc]
        a, b = tv[others[0]], tv[others[1]]
        for local in range(3):
            lam = _barycentric_fn(tv, local)
            val = corner_triangle_quadrature(
                lambda p: g(p) * lam(p), corner, a, b, sigma=sigma)
            out[mesh.triangles[t, local]] += val
    return out


def integrate_singular(mesh: TriMesh, section: PolygonalSection, g,
                       sigma: float) -> float:
    """Integral of g over omega: bulk order-4 plus graded corner triangles."""
    corner_ids = corner_triangle_ids(mesh, section.corner)
    verts, area = _tri_geometry(mesh)
    keep = np.ones(mesh.n_triangles, dtype=bool)
    keep[corner_ids] = False
    pts = np.einsum("qj,tjk->tqk", TRI6_BARY, verts[keep])
    vals = g(pts.reshape(-1, 2)).reshape(-1, 6)
    total = float(np.sum(area[keep] * (vals @ TRI6_W)))
    corner = section.corner
    for t in corner_ids:
        tv = verts[t]
        loc = int(np.argmin(np.hypot(tv[:, 0] - corner[0], tv[:, 1] - corner[1])))
        others = [i for i in range(3) if i != loc]
        total += corner_triangle_quadrature(
            g, corner, tv[others[0]], tv[others[1]], sigma=sigma)
    return total


def integrate_pP_squared(section: PolygonalSection) -> float:
    """||p_P||_0^2 over omega via the corner fan (mesh independent)."""
    a = section.alpha

    def g(pts):
        return eval_pP(section, pts) ** 2

    total = 0.0
    for va, vb in fan_triangles(section):
        total += corner_triangle_quadrature(g, section.corner, va, vb,
                                            sigma=2.0 * a, phi_panels=12)
    return total


def _edge_phiP_means(mesh: TriMesh, section: PolygonalSection):
    """Mean of phi_P over each unique mesh edge, keyed by sorted vertex pair.

    Edges ending at the corner get a graded rule toward the rho**alpha
    endpoint; the rest share one composite Gauss rule on [0, 1].
    """
    pairs = set()
    for tri in mesh.triangles:
        for i, j in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            pairs.add((min(i, j), max(i, j)))
    pairs = np.array(sorted(pairs), dtype=int)
    a = mesh.points[pairs[:, 0]]
    b = mesh.points[pairs[:, 1]]
    corner = section.corner
    da = np.hypot(a[:, 0] - corner[0], a[:, 1] - corner[1])
    db = np.hypot(b[:, 0] - corner[0], b[:, 1] - corner[1])
    graded = (da < 1e-12) | (db < 1e-12)

    means = np.zeros(len(pairs))
    t_s, w_s = gauss_panels(0.0, 1.0, 4, GRADED_NPTS)
    sm = ~graded
    pts = a[sm, None, :] + t_s[None, :, None] * (b[sm] - a[sm])[:, None, :]
    vals = eval_phiP(section, pts.reshape(-1, 2)).reshape(sm.sum(), len(t_s))
    means[sm] = vals @ w_s

    t_g, w_g = _unit_graded_rule(GRADED_LEVELS, GRADED_NPTS)
    for k in np.nonzero(graded)[0]:
        p0, p1 = (a[k], b[k]) if da[k] < 1e-12 else (b[k], a[k])
        pts = p0 + t_g[:, None] * (p1 - p0)
        vals = eval_phiP(section, pts)
        panel_sums = (vals * w_g).reshape(GRADED_LEVELS, GRADED_NPTS).sum(axis=1)
        # t**alpha integrand: panel ratio 2**(-(alpha+1)) = 2**(sigma-2)
        means[k] = panel_sums.sum() + float(
            _geometric_tail(panel_sums, sigma=1.0 - section.alpha))
    return {(int(i), int(j)): m for (i, j), m in zip(pairs, means)}


def _grad_dot_basis_load(mesh: TriMesh, section: PolygonalSection) -> np.ndarray:
    """Entries int grad(phi_P) . grad(psi_j) over all vertices.

    Uses int_T grad(phi_P) = contour integral of phi_P times the outward
    normal, reducing everything to 1D edge integrals of the continuous
    phi_P; the interior entries are then ~0 to quadrature accuracy since
    phi_P is harmonic.
    """
    t = mesh.triangles
    verts = mesh.points[t]
    a, b, c = verts[:, 0], verts[:, 1], verts[:, 2]
    det = ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
           - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
    # grad lambda_i per triangle, shape (T, 3, 2)
    gl = np.stack([
        np.stack([b[:, 1] - c[:, 1], c[:, 0] - b[:, 0]], axis=1),
        np.stack([c[:, 1] - a[:, 1], a[:, 0] - c[:, 0]], axis=1),
        np.stack([a[:, 1] - b[:, 1], b[:, 0] - a[:, 0]], axis=1),
    ], axis=1) / det[:, None, None]

    means = _edge_phiP_means(mesh, section)
    gvec = np.zeros((mesh.n_triangles, 2))
    for ti, tri in enumerate(t):
        acc = np.zeros(2)
        for i, j in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            d = mesh.points[j] - mesh.points[i]
            # unnormalized outward normal of a CCW triangle edge times length
            acc += means[(min(i, j), max(i, j))] * np.array([d[1], -d[0]])
        gvec[ti] = acc

    out = np.zeros(mesh.n_points)
    contrib = np.einsum("tik,tk->ti", gl, gvec)
    np.add.at(out, t.ravel(), contrib.ravel())
    return out


@dataclass
class SingularBasis:
    """Discrete singular pair on one mesh, immutable once built.

    Cached load vectors make the inner products against p_s^h and the
    a_mu(phi_s^h, psi_j) right-hand sides cheap for every Fourier mode.
    """

    section: PolygonalSection
    mesh: TriMesh
    p_tilde: np.ndarray
    phi_tilde: np.ndarray
    beta_star: float
    ps_norm_sq: float
    pP_load: np.ndarray = field(repr=False)      # (p_P, psi_j)
    phiP_mass_load: np.ndarray = field(repr=False)   # (phi_P, psi_j)
    phiP_stiff_load: np.ndarray = field(repr=False)  # (grad phi_P, grad psi_j)
    ps_load: np.ndarray = field(repr=False)      # (p_s^h, psi_j)

    @property
    def alpha(self) -> float:
        return self.section.alpha

    def eval_pP(self, points):
        return eval_pP(self.section, points)

    def eval_phiP(self, points):
        return eval_phiP(self.section, points)

    def phi_s_nodal(self) -> np.ndarray:
        """Nodal values of phi_s^h = phi_tilde_h + beta_star * phi_P."""
        vals = self.phi_tilde.copy()
        pts = self.mesh.points
        rho = np.hypot(pts[:, 0] - self.section.corner[0],
                       pts[:, 1] - self.section.corner[1])
        ok = rho > 0.0
        vals[ok] += self.beta_star * eval_phiP(self.section, pts[ok])
        return vals

    def eval_phi_s(self, points) -> np.ndarray:
        pts = np.atleast_2d(points)
        return (self.mesh.interpolate(self.phi_tilde, pts)
                + self.beta_star * eval_phiP(self.section, pts))

    def dot_ps(self, field: np.ndarray) -> float:
        """(w_h, p_s^h) for a nodal field: exact FE x FE plus graded FE x p_P."""
        return float(field @ self.ps_load)

    def func_dot_ps(self, f, load: np.ndarray) -> float:
        """(f, p_s^h) for a callback f whose load vector is already known."""
        fpP = integrate_singular(self.mesh, self.section,
                                 lambda p: f(p) * eval_pP(self.section, p),
                                 sigma=self.alpha)
        return float(self.p_tilde @ load) + fpP

    def a_phi_s_load(self, system: FemSystem) -> np.ndarray:
        """Vector a_mu(phi_s^h, psi_j) over all vertices for system.mu."""
        mu = system.mu
        vec = (system.stiffness_full @ self.phi_tilde
               + mu * (system.mass_full @ self.phi_tilde))
        return vec + self.beta_star * (self.phiP_stiff_load
                                       + mu * self.phiP_mass_load)


def compute_ps_h(system: FemSystem, section: PolygonalSection,
                 pP_load: np.ndarray | None = None,
                 tol: float = 1e-10):
    """Finite element part of p_s^h and the norm ||p_s^h||_0^2."""
    mesh = system.mesh
    if pP_load is None:
        pP_load = singular_basis_load(mesh, section,
                                      lambda p: eval_pP(section, p),
                                      sigma=section.alpha)
    bc = np.zeros(mesh.n_points)
    ni = mesh.n_interior
    for j in range(ni, mesh.n_points):
        bc[j] = boundary_data_s(section, mesh.points[j], mesh.boundary_edges[j])
    p_tilde = solve(system.with_mu(0.0), np.zeros(mesh.n_points),
                    boundary_values=bc, tol=tol)
    ps_norm_sq = (float(p_tilde @ (system.mass_full @ p_tilde))
                  + 2.0 * float(pP_load @ p_tilde)
                  + integrate_pP_squared(section))
    return p_tilde, ps_norm_sq


def compute_phis_h(system: FemSystem, section: PolygonalSection,
                   p_tilde: np.ndarray, beta_star: float,
                   pP_load: np.ndarray | None = None,
                   tol: float = 1e-10) -> np.ndarray:
    """Finite element part of phi_s^h given p_s^h and beta_star_h."""
    mesh = system.mesh
    if pP_load is None:
        pP_load = singular_basis_load(mesh, section,
                                      lambda p: eval_pP(section, p),
                                      sigma=section.alpha)
    rhs = system.mass_full @ p_tilde + pP_load
    bc = np.zeros(mesh.n_points)
    ni = mesh.n_interior
    bpts = mesh.points[ni:]
    bc[ni:] = -beta_star * eval_phiP(section, bpts)
    return solve(system.with_mu(0.0), rhs, boundary_values=bc, tol=tol)


def build_singular_basis(system: FemSystem, section: PolygonalSection,
                         tol: float = 1e-10) -> SingularBasis:
    """Compute the full discrete singular pair for one mesh."""
    mesh = system.mesh
    alpha = section.alpha
    pP_load = singular_basis_load(mesh, section,
                                  lambda p: eval_pP(section, p), sigma=alpha)
    p_tilde, ps_norm_sq = compute_ps_h(system, section, pP_load, tol=tol)
    beta_star = ps_norm_sq / math.pi
    phi_tilde = compute_phis_h(system, section, p_tilde, beta_star,
                               pP_load, tol=tol)
    phiP_mass_load = singular_basis_load(mesh, section,
                                         lambda p: eval_phiP(section, p),
                                         sigma=-alpha)
    phiP_stiff_load = _grad_dot_basis_load(mesh, section)
    ps_load = system.mass_full @ p_tilde + pP_load
    return SingularBasis(
        section=section,
        mesh=mesh,
        p_tilde=p_tilde,
        phi_tilde=phi_tilde,
        beta_star=beta_star,
        ps_norm_sq=ps_norm_sq,
        pP_load=pP_load,
        phiP_mass_load=phiP_mass_load,
        phiP_stiff_load=phiP_stiff_load,
        ps_load=ps_load,
    )
