"""Polygonal cross-sections with a single reentrant corner.

The cross-section ``omega`` is a simple polygon whose boundary segments are
labelled ``gamma_1 .. gamma_K``; ``gamma_1`` and ``gamma_2`` are the two
segments meeting at the reentrant corner.  A local polar frame is attached to
the corner with ``gamma_1`` along ``phi = 0`` and the interior swept
counterclockwise, so that ``sin(alpha*phi)`` vanishes on both ``gamma_1``
(``phi = 0``) and ``gamma_2`` (``phi = pi/alpha``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import OutsideWedge, UnsupportedGeometry

_TOL = 1e-12


@dataclass(frozen=True)
class PolygonalSection:
    """Cross-section with one reentrant corner.

    ``edges`` lists vertex-index pairs in the order gamma_1 .. gamma_K
    (1-based labels elsewhere refer to positions in this list).  ``frame``
    holds the unit vectors (e1, e2) of the local corner frame as rows, with
    e1 along gamma_1 and e2 such that the interior wedge is phi in
    (0, interior_angle).
    """

    vertices: np.ndarray
    edges: tuple[tuple[int, int], ...]
    reentrant_vertex: int
    interior_angle: float
    frame: np.ndarray = field(repr=False)

    @property
    def alpha(self) -> float:
        return math.pi / self.interior_angle

    @property
    def corner(self) -> np.ndarray:
        return self.vertices[self.reentrant_vertex]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_points(self, label: int) -> tuple[np.ndarray, np.ndarray]:
        """Endpoints of gamma_label (1-based label)."""
        i, j = self.edges[label - 1]
        return self.vertices[i], self.vertices[j]

    def validate(self) -> None:
        if not 0.5 < self.alpha < 1.0:
            raise UnsupportedGeometry(
                f"alpha = {self.alpha} outside (1/2, 1)")
        if abs(self.interior_angle * self.alpha - math.pi) > 1e-14:
            raise UnsupportedGeometry("interior_angle * alpha != pi")
        # edges must form one closed simple loop: every vertex has degree 2
        degree = np.zeros(len(self.vertices), dtype=int)
        for i, j in self.edges:
            degree[i] += 1
            degree[j] += 1
        if not np.all(degree == 2):
            raise UnsupportedGeometry("edge list is not a single closed loop")
        # gamma_1 and gamma_2 are exactly the two edges at the corner
        at_corner = [lab for lab, (i, j) in enumerate(self.edges, start=1)
                     if self.reentrant_vertex in (i, j)]
        if at_corner != [1, 2]:
            raise UnsupportedGeometry("gamma_1, gamma_2 must be the corner edges")


def make_l_section() -> PolygonalSection:
    """The canonical L-shape (-1,1)^2 minus [0,1] x (-1,0].

    Corner at the origin, interior angle 3*pi/2, alpha = 2/3.
    gamma_1 = (0,0)->(1,0), gamma_2 = (0,0)->(0,-1); the wedge occupies
    phi in (0, 3*pi/2) measured counterclockwise from the positive x-axis.
    """
    vertices = np.array([
        [0.0, 0.0],
        [1.0, 0.0],
        [1.0, 1.0],
        [-1.0, 1.0],
        [-1.0, -1.0],
        [0.0, -1.0],
    ])
    edges = ((0, 1), (0, 5), (1, 2), (2, 3), (3, 4), (4, 5))
    frame = np.array([[1.0, 0.0], [0.0, 1.0]])
    section = PolygonalSection(
        vertices=vertices,
        edges=edges,
        reentrant_vertex=0,
        interior_angle=1.5 * math.pi,
        frame=frame,
    )
    section.validate()
    return section


def local_coords(section: PolygonalSection, points: np.ndarray) -> np.ndarray:
    """Map points (N, 2) into the corner frame (gamma_1 along +x)."""
    d = np.atleast_2d(points) - section.corner
    return d @ section.frame.T


def polar_at(section: PolygonalSection, point) -> tuple[float, float]:
    """Polar coordinates (rho, phi) of a point in the corner frame.

    phi is measured from gamma_1 into the wedge, phi in [0, pi/alpha].
    Raises OutsideWedge if phi lies outside that range beyond tolerance.
    """
    rho, phi = polar_at_many(section, np.asarray(point, dtype=float))
    return float(rho[0]), float(phi[0])


def polar_at_many(section: PolygonalSection, points: np.ndarray):
    """Vectorized polar coordinates; points (N, 2) -> (rho, phi) arrays."""
    xy = local_coords(section, points)
    rho = np.hypot(xy[:, 0], xy[:, 1])
    phi = np.arctan2(xy[:, 1], xy[:, 0])
    phi = np.where(phi < 0.0, phi + 2.0 * math.pi, phi)
    # a point on gamma_1 may round to phi ~ 2*pi; fold it back to 0
    phi = np.where(2.0 * math.pi - phi < _TOL, 0.0, phi)
    phi = np.where(rho == 0.0, 0.0, phi)
    top = section.interior_angle
    if np.any((phi > top + _TOL) & (rho > 0.0)):
        bad = np.argmax((phi > top + _TOL) & (rho > 0.0))
        raise OutsideWedge(
            f"phi = {phi[bad]} outside [0, {top}] at point index {bad}")
    return rho, np.minimum(phi, top)


def place_polar(section: PolygonalSection, rho: float, phi: float) -> np.ndarray:
    """Inverse of polar_at: Cartesian point at (rho, phi) in the wedge."""
    local = np.array([rho * math.cos(phi), rho * math.sin(phi)])
    return section.corner + local @ section.frame


def fan_triangles(section: PolygonalSection) -> list[tuple[np.ndarray, np.ndarray]]:
    """Fan decomposition of omega from the corner: pairs (a, b) such that
    the triangles (corner, a, b) tile the section (CCW).

    Requires the section to be star-shaped with respect to the corner,
    which holds for the supported rectilinear one-corner family.
    """
    from .mesh import _loop_vertices  # local import to avoid a cycle

    loop = _loop_vertices(section.vertices, section.edges)
    # rotate the loop so it starts at the corner
    start = min(range(len(loop)),
                key=lambda i: np.linalg.norm(loop[i] - section.corner))
    loop = loop[start:] + loop[:start]
    c = section.corner
    tris = []
    orient = 0.0
    for a, b in zip(loop[1:-1], loop[2:]):
        da, db = a - c, b - c
        orient += da[0] * db[1] - da[1] * db[0]
    for a, b in zip(loop[1:-1], loop[2:]):
        if orient < 0.0:
            a, b = b, a
        da, db = a - c, b - c
        if da[0] * db[1] - da[1] * db[0] <= 0.0:
            raise ValueError("section is not star-shaped about the corner")
        tris.append((np.asarray(a, float), np.asarray(b, float)))
    return tris
