"""Triangle and corner-graded quadrature rules.

Two regimes: a fixed order-4 (6-point) rule for smooth integrands on bulk
triangles, and a corner-graded scheme in polar coordinates about the
reentrant corner for integrands behaving like rho**(-sigma), sigma < 2.

The graded scheme uses dyadic radial panels (geometric ratio 1/2, levels
0..12) with a Gauss rule per panel; the leftover tip below the last panel is
summed with a geometric-tail estimate, which is exact for pure power
integrands.  Relative accuracy for pure powers is well below 1e-8.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import NotIntegrable

# order-4 (degree-4 exact) 6-point triangle rule; weights sum to 1
TRI6_BARY = np.array([
    [0.108103018168070, 0.445948490915965, 0.445948490915965],
    [0.445948490915965, 0.108103018168070, 0.445948490915965],
    [0.445948490915965, 0.445948490915965, 0.108103018168070],
    [0.816847572980459, 0.091576213509771, 0.091576213509771],
    [0.091576213509771, 0.816847572980459, 0.091576213509771],
    [0.091576213509771, 0.091576213509771, 0.816847572980459],
])
TRI6_W = np.array([
    0.223381589678011, 0.223381589678011, 0.223381589678011,
    0.109951743655322, 0.109951743655322, 0.109951743655322,
])

GRADED_LEVELS = 13      # dyadic panels ell = 0..12
GRADED_NPTS = 8


@lru_cache(maxsize=None)
def _leggauss(npts: int):
    return np.polynomial.legendre.leggauss(npts)


def gauss_panels(a: float, b: float, panels: int, npts: int = 4):
    """Composite Gauss-Legendre nodes/weights on [a, b]."""
    x0, w0 = _leggauss(npts)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
    w = (half[:, None] * w0[None, :]).ravel()
    return x, w


@lru_cache(maxsize=None)
def _unit_graded_rule(levels: int, npts: int):
    """Nodes/weights for int_0^1 h(t) dt on dyadic panels [2^-l-1, 2^-l]."""
    x0, w0 = _leggauss(npts)
    ts, ws = [], []
    for lev in range(levels):
        hi = 0.5 ** lev
        lo = 0.5 * hi
        mid = 0.5 * (hi + lo)
        half = 0.5 * (hi - lo)
        ts.append(mid + half * x0)
        ws.append(half * w0)
    return np.concatenate(ts), np.concatenate(ws)


def _geometric_tail(panel_sums: np.ndarray, sigma: float) -> np.ndarray:
    """Tail below the innermost panel from the last two panel sums.

    panel_sums has the panels along the last axis, outermost first.  The
    ratio is measured when it is sane and falls back to the theoretical
    2**(sigma - 2) for a rho**(-sigma) integrand otherwise.
    """
    s_last = panel_sums[..., -1]
    s_prev = panel_sums[..., -2]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(s_prev != 0.0, s_last / s_prev, 0.0)
    r_theory = 2.0 ** (sigma - 2.0)
    r = np.where((r > 0.0) & (r < 0.999), r, np.where(s_last != 0.0, r_theory, 0.0))
    return s_last * r / (1.0 - r)


def tri_rule(verts: np.ndarray):
    """Order-4 points (6, 2) and weights (6,) for one triangle."""
    pts = TRI6_BARY @ verts
    d1 = verts[1] - verts[0]
    d2 = verts[2] - verts[0]
    area = 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])
    return pts, TRI6_W * area


def integrate_bulk(points: np.ndarray, triangles: np.ndarray, f, skip=()):
    """Sum of order-4 triangle quadratures of f over all triangles.

    ``skip`` lists triangle indices excluded (handled by graded rules).
    f is vectorized over (N, 2) arrays.
    """
    keep = np.ones(len(triangles), dtype=bool)
    keep[list(skip)] = False
    tri = triangles[keep]
    verts = points[tri]                              # (T, 3, 2)
    pts = np.einsum("qj,tjk->tqk", TRI6_BARY, verts)  # (T, 6, 2)
    d1 = verts[:, 1] - verts[:, 0]
    d2 = verts[:, 2] - verts[:, 0]
    area = 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    vals = f(pts.reshape(-1, 2)).reshape(len(tri), 6)
    return float(np.sum(area * (vals @ TRI6_W)))


def sector_quadrature(f_polar, rmax: float, phi0: float, phi1: float,
                      sigma: float = 0.0, phi_panels: int = 8,
                      npts: int = GRADED_NPTS) -> float:
    """Integral of f over the sector rho < rmax, phi in (phi0, phi1).

    ``f_polar(rho, phi)`` is the integrand without the polar Jacobian
    (the rho factor is supplied here); it may behave like rho**(-sigma).
    """
    if sigma >= 2.0:
        raise NotIntegrable(f"rho**(-{sigma}) is not integrable at the corner")
    t, wt = _unit_graded_rule(GRADED_LEVELS, npts)
    phis, wphi = gauss_panels(phi0, phi1, phi_panels, npts)
    rho = rmax * t
    vals = np.broadcast_to(
        np.asarray(f_polar(rho[None, :], phis[:, None]), dtype=float),
        (len(phis), len(rho)))                       # (Nphi, Nr)
    inner = vals * (wt * t)[None, :]                 # int_0^1 f(Rt) t dt terms
    panel_sums = inner.reshape(len(phis), GRADED_LEVELS, npts).sum(axis=2)
    radial = panel_sums.sum(axis=1) + _geometric_tail(panel_sums, sigma)
    return float(rmax**2 * np.dot(wphi, radial))


def corner_triangle_nodes(corner: np.ndarray, a: np.ndarray, b: np.ndarray,
                          phi_panels: int = 8, npts: int = GRADED_NPTS):
    """Graded nodes for the triangle (corner, a, b) in polar layout.

    Returns ``(pts, wphi_scaled, wt_t)`` with ``pts`` of shape
    (n_phi, n_r, 2), the angular weights already scaled by R(phi)**2, and
    the radial weights on the unit parameter (panel layout preserved so a
    geometric tail can be attached by :func:`corner_sum`).
    """
    corner = np.asarray(corner, dtype=float)
    da = np.asarray(a, dtype=float) - corner
    db = np.asarray(b, dtype=float) - corner
    if da[0] * db[1] - da[1] * db[0] < 0.0:
        da, db = db, da
    phi_a = np.arctan2(da[1], da[0])
    span = (np.arctan2(db[1], db[0]) - phi_a) % (2.0 * np.pi)

    phis, wphi = gauss_panels(phi_a, phi_a + span, phi_panels, npts)
    u = np.column_stack([np.cos(phis), np.sin(phis)])
    # distance to the opposite edge along each ray
    m = np.array([-(db - da)[1], (db - da)[0]])
    if np.dot(m, da) < 0.0:
        m = -m
    R = np.dot(m, da) / (u @ m)

    t, wt = _unit_graded_rule(GRADED_LEVELS, npts)
    pts = corner[None, None, :] + (R[:, None] * t[None, :])[:, :, None] * u[:, None, :]
    return pts, wphi * R**2, wt * t


def corner_sum(vals: np.ndarray, wphi_scaled: np.ndarray, wt_t: np.ndarray,
               sigma: float) -> float:
    """Combine integrand values on corner_triangle_nodes into the integral.

    ``vals`` has shape (..., n_phi, n_r); the radial panel sums feed the
    geometric tail below the innermost panel.
    """
    if sigma >= 2.0:
        raise NotIntegrable(f"rho**(-{sigma}) is not integrable at the corner")
    inner = vals * wt_t
    npts = len(wt_t) // GRADED_LEVELS
    panel_sums = inner.reshape(*vals.shape[:-1], GRADED_LEVELS, npts).sum(axis=-1)
    radial = panel_sums.sum(axis=-1) + _geometric_tail(panel_sums, sigma)
    return radial @ wphi_scaled


def corner_triangle_quadrature(f, corner: np.ndarray, a: np.ndarray,
                               b: np.ndarray, sigma: float = 0.0,
                               phi_panels: int = 8,
                               npts: int = GRADED_NPTS) -> float:
    """Graded integral of f over the triangle (corner, a, b).

    f is vectorized over (N, 2) Cartesian points and may behave like
    rho**(-sigma) with respect to the distance to ``corner``.
    """
    if sigma >= 2.0:
        raise NotIntegrable(f"rho**(-{sigma}) is not integrable at the corner")
    pts, wphi_scaled, wt_t = corner_triangle_nodes(corner, a, b,
                                                   phi_panels, npts)
    vals = f(pts.reshape(-1, 2)).reshape(pts.shape[0], pts.shape[1])
    return float(corner_sum(vals, wphi_scaled, wt_t, sigma))


def corner_triangle_ids(mesh, corner) -> np.ndarray:
    """Indices of mesh triangles having ``corner`` as a vertex."""
    d = np.hypot(mesh.points[:, 0] - corner[0], mesh.points[:, 1] - corner[1])
    vid = np.nonzero(d < 1e-12)[0]
    if len(vid) == 0:
        return np.array([], dtype=int)
    return np.nonzero(np.any(mesh.triangles == vid[0], axis=1))[0]
