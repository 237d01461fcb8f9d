"""Fourier reduction of the 3D Dirichlet problem on a prism.

On Omega = omega x (0, L) the solution of -Delta u = f with homogeneous
Dirichlet data expands as u(x, x3) = sum_k u_k(x) sin(k pi x3 / L).  Each
coefficient solves the 2D mode problem -Delta u_k + mu_k u_k = f_k with
mu_k = (k pi / L)**2, handled by the singular complement solver; the
stiffness and mass matrices are assembled once and reused across modes.

Mode coefficients f_k are produced by composite Gauss quadrature in x3 on
one shared tensor grid: the source is evaluated once at (2D quadrature
point) x (axial node) and every mode's load vector and singular moment are
linear combinations of those values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fem import FemSystem, assemble, solve
from .geometry import PolygonalSection
from .mesh import TriMesh, triangulate
from .quadrature import (TRI6_BARY, TRI6_W, corner_sum, corner_triangle_ids,
                         corner_triangle_nodes, gauss_panels)
from .scm import ModeSolution, ScmConfig, scm_solve
from .singular import SingularBasis, build_singular_basis, eval_pP


@dataclass(frozen=True)
class PrismSpec:
    """Prism Omega = omega x (0, length)."""

    section: PolygonalSection
    length: float

    def mu(self, k: int) -> float:
        return (k * np.pi / self.length) ** 2


def axial_rule(length: float, n_modes: int, min_panels: int = 8,
               npts: int = 8):
    """Composite Gauss rule on (0, length) resolving sin(k pi x/L), k <= N.

    Panel count scales with the highest mode so the rule stays spectrally
    accurate; at least ``min_panels`` panels are used.
    """
    panels = max(min_panels, n_modes)
    return gauss_panels(0.0, length, panels, npts)


class ModeProjector:
    """Shared 2D quadrature layout for all sine-mode loads on one mesh.

    Holds the order-4 points of every triangle (for load vectors) plus the
    graded corner nodes (for the moment (f_k, p_P)); a 3D source is
    sampled once on ``points`` x axial rule and each mode reduces to dot
    products against the cached weights.
    """

    def __init__(self, mesh: TriMesh, section: PolygonalSection):
        self.mesh = mesh
        self.section = section
        t = mesh.triangles
        verts = mesh.points[t]
        d1 = verts[:, 1] - verts[:, 0]
        d2 = verts[:, 2] - verts[:, 0]
        self._area = 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        self._bulk_pts = np.einsum("qj,tjk->tqk", TRI6_BARY, verts)

        corner_ids = corner_triangle_ids(mesh, section.corner)
        self._corner_mask = np.zeros(mesh.n_triangles, dtype=bool)
        self._corner_mask[corner_ids] = True
        # p_P at the bulk points of non-corner triangles
        keep_pts = self._bulk_pts[~self._corner_mask].reshape(-1, 2)
        self._bulk_pP = eval_pP(section, keep_pts).reshape(-1, 6)

        corner = section.corner
        self._corner = []
        for ti in corner_ids:
            tv = verts[ti]
            loc = int(np.argmin(np.hypot(tv[:, 0] - corner[0],
                                         tv[:, 1] - corner[1])))
            others = [i for i in range(3) if i != loc]
            pts, wphi, wt = corner_triangle_nodes(corner, tv[others[0]],
                                                  tv[others[1]])
            pP = eval_pP(section, pts.reshape(-1, 2)).reshape(pts.shape[:2])
            self._corner.append((pts, wphi, wt, pP))

        blocks = [self._bulk_pts.reshape(-1, 2)]
        blocks += [c[0].reshape(-1, 2) for c in self._corner]
        self.points = np.concatenate(blocks, axis=0)
        self._n_bulk = self._bulk_pts.shape[0] * 6

    def load_and_moment(self, vals: np.ndarray):
        """Load vector (f_k, psi_j) and moment (f_k, p_P) from point values."""
        bulk = vals[:self._n_bulk].reshape(-1, 6)
        contrib = self._area[:, None] * (bulk * TRI6_W[None, :]) @ TRI6_BARY
        load = np.zeros(self.mesh.n_points)
        np.add.at(load, self.mesh.triangles.ravel(), contrib.ravel())

        keep = bulk[~self._corner_mask]
        moment = float(np.sum(self._area[~self._corner_mask]
                              * ((keep * self._bulk_pP) @ TRI6_W)))
        off = self._n_bulk
        for pts, wphi, wt, pP in self._corner:
            nv = pts.shape[0] * pts.shape[1]
            v = vals[off:off + nv].reshape(pts.shape[:2])
            moment += float(corner_sum(v * pP, wphi, wt,
                                       sigma=self.section.alpha))
            off += nv
        return load, moment


def mode_values(f, points: np.ndarray, length: float, n_modes: int):
    """Sine coefficients f_k at the given 2D points, shape (N, npoints)."""
    x3, w3 = axial_rule(length, n_modes)
    pts = np.asarray(points, dtype=float)
    p3 = np.empty((len(pts) * len(x3), 3))
    p3[:, :2] = np.repeat(pts, len(x3), axis=0)
    p3[:, 2] = np.tile(x3, len(pts))
    vals = f(p3).reshape(len(pts), len(x3))
    k = np.arange(1, n_modes + 1)
    sines = np.sin(np.outer(k, x3) * (np.pi / length)) * w3[None, :]
    return (2.0 / length) * sines @ vals.T


@dataclass
class FscmSolution:
    """Truncated sine-series solution with per-mode 2D solves."""

    prism: PrismSpec
    mesh: TriMesh
    modes: list[ModeSolution]

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def coefficients(self) -> np.ndarray:
        """Extracted singularity coefficients c_k (edge intensity series)."""
        return np.array([m.c for m in self.modes])

    def evaluate(self, points3d) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points3d, float))
        vals2d = np.stack([m.evaluate(pts[:, :2]) for m in self.modes])
        k = np.arange(1, self.n_modes + 1)
        sines = np.sin(np.outer(k, pts[:, 2]) * (np.pi / self.prism.length))
        return np.einsum("kn,kn->n", vals2d, sines)

    def gradient(self, points3d) -> np.ndarray:
        """Full 3D gradient (d1, d2, d3) at the given points."""
        pts = np.atleast_2d(np.asarray(points3d, float))
        length = self.prism.length
        k = np.arange(1, self.n_modes + 1)
        ang = np.outer(k, pts[:, 2]) * (np.pi / length)
        sines = np.sin(ang)
        cosines = np.cos(ang) * (k[:, None] * np.pi / length)
        out = np.zeros((len(pts), 3))
        for i, m in enumerate(self.modes):
            g2 = m.gradient(pts[:, :2])
            v2 = m.evaluate(pts[:, :2])
            out[:, 0] += sines[i] * g2[:, 0]
            out[:, 1] += sines[i] * g2[:, 1]
            out[:, 2] += cosines[i] * v2
        return out


def fscm_solve(prism: PrismSpec, f, n: int, n_modes: int,
               config: ScmConfig | None = None,
               system: FemSystem | None = None,
               basis: SingularBasis | None = None,
               projector: ModeProjector | None = None) -> FscmSolution:
    """Solve the 3D problem with mesh parameter n and N Fourier modes.

    ``f(points3d)`` is the vectorized source.  The assembled system,
    singular basis and projector may be passed in to amortize them across
    calls with the same mesh.
    """
    if config is None:
        config = ScmConfig()
    if system is None:
        system = assemble(triangulate(prism.section, n))
    mesh = system.mesh
    if basis is None:
        basis = build_singular_basis(system, prism.section)
    if projector is None:
        projector = ModeProjector(mesh, prism.section)

    coeffs = mode_values(f, projector.points, prism.length, n_modes)
    modes = []
    for k in range(1, n_modes + 1):
        load, moment = projector.load_and_moment(coeffs[k - 1])
        sol = scm_solve(system.with_mu(prism.mu(k)), basis, None,
                        config=config, load=load, f_dot_pP=moment)
        modes.append(sol)
    return FscmSolution(prism=prism, mesh=mesh, modes=modes)


def parseval_residual(f, prism: PrismSpec, mesh: TriMesh, n_modes: int) -> float:
    """Relative gap between ||f||^2 on the prism and its sine-series form.

    Both sides are evaluated on the same 2D quadrature points (order-4 per
    triangle) tensorized with the axial Gauss rule, so the gap reflects the
    series truncation only.
    """
    verts = mesh.points[mesh.triangles]
    pts2 = np.einsum("qj,tjk->tqk", TRI6_BARY, verts).reshape(-1, 2)
    d1 = verts[:, 1] - verts[:, 0]
    d2 = verts[:, 2] - verts[:, 0]
    area = 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    w2 = (area[:, None] * TRI6_W[None, :]).ravel()

    length = prism.length
    x3, w3 = axial_rule(length, n_modes)
    p3 = np.empty((len(pts2) * len(x3), 3))
    p3[:, :2] = np.repeat(pts2, len(x3), axis=0)
    p3[:, 2] = np.tile(x3, len(pts2))
    vals = f(p3).reshape(len(pts2), len(x3))
    lhs = float(w2 @ (vals**2 @ w3))

    coeffs = mode_values(f, pts2, length, n_modes)   # (N, npts2)
    rhs = 0.5 * length * float(np.sum(coeffs**2 @ w2))
    return abs(lhs - rhs) / abs(lhs)
