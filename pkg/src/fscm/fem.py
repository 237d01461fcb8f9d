"""P1 Lagrange assembly and a Jacobi-preconditioned CG solver.

The bilinear form is a_mu(w, v) = (grad w, grad v) + mu (w, v).  Dirichlet
conditions are handled by elimination: thanks to interior-first vertex
numbering the interior block is simply the leading (Ni x Ni) submatrix.
Nodal fields are plain numpy arrays of length n_points with boundary entries
stored explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateTriangle, NoConvergence
from .mesh import TriMesh
from .quadrature import TRI6_BARY, TRI6_W

_AREA_TOL = 1e-14


def element_matrices(verts: np.ndarray):
    """Exact P1 stiffness and mass blocks (3x3 each) for one triangle."""
    verts = np.asarray(verts, dtype=float)
    d1 = verts[1] - verts[0]
    d2 = verts[2] - verts[0]
    det = d1[0] * d2[1] - d1[1] * d2[0]
    area = 0.5 * det
    if area < _AREA_TOL:
        raise DegenerateTriangle(f"triangle area {area} below tolerance")
    # gradients of barycentric coordinates
    g = np.array([
        [verts[1, 1] - verts[2, 1], verts[2, 0] - verts[1, 0]],
        [verts[2, 1] - verts[0, 1], verts[0, 0] - verts[2, 0]],
        [verts[0, 1] - verts[1, 1], verts[1, 0] - verts[0, 0]],
    ]) / det
    stiffness = area * (g @ g.T)
    mass = area / 12.0 * (np.ones((3, 3)) + np.eye(3))
    return stiffness, mass


def _assemble_matrices(mesh: TriMesh):
    """Global (pre-elimination) stiffness and mass in CSR format."""
    p = mesh.points
    t = mesh.triangles
    a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    d1 = b - a
    d2 = c - a
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    area = 0.5 * det
    if np.any(area < _AREA_TOL):
        raise DegenerateTriangle("degenerate triangle in mesh")
    gx = np.stack([b[:, 1] - c[:, 1], c[:, 1] - a[:, 1], a[:, 1] - b[:, 1]], axis=1) / det[:, None]
    gy = np.stack([c[:, 0] - b[:, 0], a[:, 0] - c[:, 0], b[:, 0] - a[:, 0]], axis=1) / det[:, None]
    ke = area[:, None, None] * (gx[:, :, None] * gx[:, None, :]
                                + gy[:, :, None] * gy[:, None, :])
    me = (area / 12.0)[:, None, None] * (np.ones((3, 3)) + np.eye(3))[None]
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    nv = mesh.n_points
    stiffness = sp.csr_matrix((ke.ravel(), (rows, cols)), shape=(nv, nv))
    mass = sp.csr_matrix((me.ravel(), (rows, cols)), shape=(nv, nv))
    stiffness.sum_duplicates()
    mass.sum_duplicates()
    return stiffness, mass


@dataclass
class FemSystem:
    """Assembled a_mu system on one mesh.

    ``stiffness``/``mass`` are the interior (post-elimination) blocks;
    ``stiffness_full``/``mass_full`` keep the pre-elimination matrices for
    inner products against fields with boundary values.
    """

    mesh: TriMesh
    mu: float
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    stiffness_full: sp.csr_matrix
    mass_full: sp.csr_matrix

    @property
    def operator(self) -> sp.csr_matrix:
        return (self.stiffness + self.mu * self.mass).tocsr()

    def with_mu(self, mu: float) -> "FemSystem":
        """Same matrices, different zero-order coefficient."""
        return FemSystem(self.mesh, mu, self.stiffness, self.mass,
                         self.stiffness_full, self.mass_full)

    def l2_norm(self, field: np.ndarray) -> float:
        return float(np.sqrt(max(field @ (self.mass_full @ field), 0.0)))

    def h1_seminorm(self, field: np.ndarray) -> float:
        return float(np.sqrt(max(field @ (self.stiffness_full @ field), 0.0)))

    def a_norm(self, field: np.ndarray) -> float:
        q = field @ (self.stiffness_full @ field) + self.mu * (field @ (self.mass_full @ field))
        return float(np.sqrt(max(q, 0.0)))


def assemble(mesh: TriMesh, mu: float = 0.0) -> FemSystem:
    if mu < 0.0:
        raise ValueError("mu must be nonnegative")
    stiffness_full, mass_full = _assemble_matrices(mesh)
    ni = mesh.n_interior
    return FemSystem(
        mesh=mesh,
        mu=mu,
        stiffness=stiffness_full[:ni, :ni].tocsr(),
        mass=mass_full[:ni, :ni].tocsr(),
        stiffness_full=stiffness_full,
        mass_full=mass_full,
    )


def load_vector(mesh: TriMesh, f, mass: sp.csr_matrix | None = None) -> np.ndarray:
    """Entries (f, psi_j) for all vertices.

    Callback input uses the order-4 triangle rule; nodal input (array of
    length n_points) uses the exact P1 mass product.
    """
    if isinstance(f, np.ndarray):
        if mass is None:
            _, mass = _assemble_matrices(mesh)
        return mass @ f
    p = mesh.points
    t = mesh.triangles
    verts = p[t]
    pts = np.einsum("qj,tjk->tqk", TRI6_BARY, verts)
    d1 = verts[:, 1] - verts[:, 0]
    d2 = verts[:, 2] - verts[:, 0]
    area = 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    vals = f(pts.reshape(-1, 2)).reshape(len(t), 6)
    # contribution of local basis i: area * sum_q w_q f_q lambda_{i,q}
    contrib = area[:, None] * (vals * TRI6_W[None, :]) @ TRI6_BARY
    out = np.zeros(mesh.n_points)
    np.add.at(out, t.ravel(), contrib.ravel())
    return out


def pcg(A: sp.csr_matrix, b: np.ndarray, tol: float = 1e-10,
        maxiter: int | None = None) -> tuple[np.ndarray, int, float]:
    """Jacobi-preconditioned conjugate gradients.

    Converges when ||A x - b|| / ||b|| <= tol; raises NoConvergence past
    the iteration cap (default 20 * dim).
    """
    n = len(b)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), 0, 0.0
    if maxiter is None:
        maxiter = 20 * n
    inv_diag = 1.0 / A.diagonal()
    x = np.zeros(n)
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    for it in range(1, maxiter + 1):
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        res = np.linalg.norm(r) / bnorm
        if res <= tol:
            return x, it, res
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NoConvergence(
        f"PCG did not reach tol={tol} in {maxiter} iterations "
        f"(residual {res:.3e})", residual=res, iterations=maxiter)


def solve(system: FemSystem, rhs: np.ndarray,
          boundary_values: np.ndarray | None = None,
          tol: float = 1e-10) -> np.ndarray:
    """Galerkin solve of a_mu(u, v) = rhs(v) with Dirichlet data.

    ``rhs`` is a full load vector (f, psi_j); ``boundary_values`` is either
    None (homogeneous) or a full nodal array whose boundary entries hold the
    Dirichlet data.  Returns the full nodal field.
    """
    mesh = system.mesh
    ni = mesh.n_interior
    b = rhs[:ni].astype(float).copy()
    out = np.zeros(mesh.n_points)
    if boundary_values is not None:
        g = np.asarray(boundary_values, dtype=float)
        gb = g[ni:]
        if np.any(gb != 0.0):
            coupling = (system.stiffness_full[:ni, ni:]
                        + system.mu * system.mass_full[:ni, ni:])
            b -= coupling @ gb
            out[ni:] = gb
    x, _, _ = pcg(system.operator, b, tol=tol)
    out[:ni] = x
    return out
