"""Structured conforming P1 triangulations of rectilinear cross-sections.

Uniform meshes only: each grid square of side 1/n is split along its
bottom-left to top-right diagonal, giving h = sqrt(2)/n and a 45-degree
minimum angle.  Vertices are numbered interior-first: indices
``0 .. n_interior-1`` are interior, the rest lie on the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OutsideDomain, UnsupportedGeometry
from .geometry import PolygonalSection

_ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class TriMesh:
    """Conforming triangle mesh with boundary-edge markers.

    ``boundary_edges[v]`` is a tuple of 1-based gamma labels the vertex lies
    on (empty for interior vertices; corner vertices carry both adjacent
    labels).
    """

    points: np.ndarray
    triangles: np.ndarray
    boundary_edges: tuple[tuple[int, ...], ...]
    h: float
    n_interior: int
    n_boundary: int
    # structured-lookup metadata: grid origin, subdivision count, and the
    # base triangle index of each grid cell (-1 where the cell is outside)
    grid_origin: tuple[float, float] = field(repr=False)
    grid_n: int = field(repr=False)
    cell_tri: np.ndarray = field(repr=False)

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def areas(self) -> np.ndarray:
        p = self.points
        t = self.triangles
        d1 = p[t[:, 1]] - p[t[:, 0]]
        d2 = p[t[:, 2]] - p[t[:, 0]]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def unique_edges(self):
        """(edges, counts): undirected edges and their triangle counts."""
        t = self.triangles
        e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        edges, counts = np.unique(e, axis=0, return_counts=True)
        return edges, counts

    def locate(self, points: np.ndarray):
        """Triangle index for each point (N, 2); OutsideDomain if any miss.

        Points on the boundary resolve to an adjacent triangle.
        """
        pts = np.atleast_2d(points)
        n = self.grid_n
        ox, oy = self.grid_origin
        fx = (pts[:, 0] - ox) * n
        fy = (pts[:, 1] - oy) * n
        ny, nx = self.cell_tri.shape
        if np.any((fx < -1e-9) | (fx > nx + 1e-9)
                  | (fy < -1e-9) | (fy > ny + 1e-9)):
            raise OutsideDomain("point outside the meshed cross-section")
        ci = np.clip(np.floor(fx - 1e-12).astype(int), 0, nx - 1)
        cj = np.clip(np.floor(fy - 1e-12).astype(int), 0, ny - 1)
        base = self.cell_tri[cj, ci]
        # fall back to a neighbouring cell for points on an outside cell edge
        for dj, di in ((0, -1), (-1, 0), (-1, -1), (0, 1), (1, 0),
                       (1, 1), (-1, 1), (1, -1)):
            miss = base < 0
            if not miss.any():
                break
            cj2 = np.clip(cj + dj, 0, ny - 1)
            ci2 = np.clip(ci + di, 0, nx - 1)
            cand = self.cell_tri[cj2, ci2]
            take = miss & (cand >= 0)
            base = np.where(take, cand, base)
            cj = np.where(take, cj2, cj)
            ci = np.where(take, ci2, ci)
        if np.any(base < 0):
            raise OutsideDomain("point outside the meshed cross-section")
        # lower-right triangle of the cell iff (y - y0) <= (x - x0)
        lx = fx - ci
        ly = fy - cj
        upper = ly > lx
        return base + upper.astype(int)

    def barycentric(self, tri_idx: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Barycentric coordinates (N, 3) of points in given triangles."""
        pts = np.atleast_2d(points)
        tri = self.triangles[np.atleast_1d(tri_idx)]
        a = self.points[tri[:, 0]]
        b = self.points[tri[:, 1]]
        c = self.points[tri[:, 2]]
        v0 = b - a
        v1 = c - a
        v2 = pts - a
        den = v0[:, 0] * v1[:, 1] - v0[:, 1] * v1[:, 0]
        l1 = (v2[:, 0] * v1[:, 1] - v2[:, 1] * v1[:, 0]) / den
        l2 = (v0[:, 0] * v2[:, 1] - v0[:, 1] * v2[:, 0]) / den
        return np.column_stack([1.0 - l1 - l2, l1, l2])

    def interpolate(self, values: np.ndarray, points: np.ndarray) -> np.ndarray:
        """P1 interpolation of a nodal field at arbitrary points."""
        pts = np.atleast_2d(points)
        idx = self.locate(pts)
        lam = self.barycentric(idx, pts)
        return np.einsum("ij,ij->i", lam, values[self.triangles[idx]])

    def tri_gradients(self, values: np.ndarray) -> np.ndarray:
        """Per-triangle constant gradient (T, 2) of a P1 nodal field."""
        p = self.points
        t = self.triangles
        a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
        det = ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
               - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
        va, vb, vc = values[t[:, 0]], values[t[:, 1]], values[t[:, 2]]
        gx = (vb - va) * (c[:, 1] - a[:, 1]) - (vc - va) * (b[:, 1] - a[:, 1])
        gy = (vc - va) * (b[:, 0] - a[:, 0]) - (vb - va) * (c[:, 0] - a[:, 0])
        return np.column_stack([gx / det, gy / det])


def _point_in_polygon(x: float, y: float, verts: np.ndarray) -> bool:
    """Ray casting; assumes (x, y) is not on an edge."""
    inside = False
    n = len(verts)
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) / (y2 - y1) * (x2 - x1)
            if x < xc:
                inside = not inside
    return inside


def _on_segment(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    length = np.hypot(*d)
    t = ((pts - a) @ d) / length**2
    cross = (pts[:, 0] - a[0]) * d[1] - (pts[:, 1] - a[1]) * d[0]
    return (np.abs(cross) / length < _ALIGN_TOL) & (t > -_ALIGN_TOL) & (t < 1 + _ALIGN_TOL)


def _loop_vertices(verts: np.ndarray, edge_list) -> list:
    """Polygon boundary loop as ordered vertex coordinates."""
    adj: dict[int, list[int]] = {}
    for i, j in edge_list:
        adj.setdefault(i, []).append(j)
        adj.setdefault(j, []).append(i)
    start = edge_list[0][0]
    loop = [start]
    prev = None
    cur = start
    while True:
        nxt = adj[cur][0] if adj[cur][0] != prev else adj[cur][1]
        if nxt == start:
            break
        loop.append(nxt)
        prev, cur = cur, nxt
    return [verts[i] for i in loop]


def _structured_mesh(poly: np.ndarray, edge_segs, n: int) -> TriMesh:
    """Core structured mesher over the polygon ``poly`` (loop order).

    ``edge_segs`` maps 1-based labels to segment endpoint pairs (a, b).
    """
    if n < 2:
        raise ValueError("subdivision count n must be >= 2")
    scaled = poly * n
    if np.max(np.abs(scaled - np.round(scaled))) > _ALIGN_TOL:
        raise UnsupportedGeometry(
            "polygon vertices must align with the 1/n grid")
    xmin, ymin = poly.min(axis=0)
    xmax, ymax = poly.max(axis=0)
    nx = int(round((xmax - xmin) * n))
    ny = int(round((ymax - ymin) * n))
    inv = 1.0 / n

    inside = np.zeros((ny, nx), dtype=bool)
    for j in range(ny):
        for i in range(nx):
            cx = xmin + (i + 0.5) * inv
            cy = ymin + (j + 0.5) * inv
            inside[j, i] = _point_in_polygon(cx, cy, poly)
    if not inside.any():
        raise UnsupportedGeometry("no grid cell lies inside the polygon")

    # collect grid vertices of included cells
    vid = -np.ones((ny + 1, nx + 1), dtype=int)
    order: list[tuple[int, int]] = []
    for j in range(ny):
        for i in range(nx):
            if inside[j, i]:
                for gj, gi in ((j, i), (j, i + 1), (j + 1, i + 1), (j + 1, i)):
                    if vid[gj, gi] < 0:
                        vid[gj, gi] = len(order)
                        order.append((gj, gi))
    coords = np.array([[xmin + gi * inv, ymin + gj * inv] for gj, gi in order])

    # boundary labels per vertex
    labels: list[tuple[int, ...]] = []
    flags = np.zeros((len(coords), len(edge_segs)), dtype=bool)
    for lab, (a, b) in edge_segs.items():
        flags[:, lab - 1] = _on_segment(coords, np.asarray(a), np.asarray(b))
    for row in flags:
        labels.append(tuple(int(k) + 1 for k in np.nonzero(row)[0]))

    is_boundary = np.array([len(l) > 0 for l in labels])
    perm = np.concatenate([np.nonzero(~is_boundary)[0], np.nonzero(is_boundary)[0]])
    inv_perm = np.empty_like(perm)
    inv_perm[perm] = np.arange(len(perm))

    points = coords[perm]
    boundary_edges = tuple(labels[i] for i in perm)
    n_interior = int((~is_boundary).sum())
    n_boundary = int(is_boundary.sum())

    triangles = []
    cell_tri = -np.ones((ny, nx), dtype=int)
    for j in range(ny):
        for i in range(nx):
            if not inside[j, i]:
                continue
            bl = inv_perm[vid[j, i]]
            br = inv_perm[vid[j, i + 1]]
            tr = inv_perm[vid[j + 1, i + 1]]
            tl = inv_perm[vid[j + 1, i]]
            cell_tri[j, i] = len(triangles)
            triangles.append((bl, br, tr))   # lower-right, CCW
            triangles.append((bl, tr, tl))   # upper-left, CCW

    return TriMesh(
        points=points,
        triangles=np.array(triangles, dtype=int),
        boundary_edges=boundary_edges,
        h=np.sqrt(2.0) / n,
        n_interior=n_interior,
        n_boundary=n_boundary,
        grid_origin=(float(xmin), float(ymin)),
        grid_n=n,
        cell_tri=cell_tri,
    )


def triangulate(section: PolygonalSection, n: int) -> TriMesh:
    """Uniform structured triangulation of the section at size h = sqrt(2)/n."""
    for i, j in section.edges:
        d = section.vertices[j] - section.vertices[i]
        if abs(d[0]) > _ALIGN_TOL and abs(d[1]) > _ALIGN_TOL:
            raise UnsupportedGeometry("only axis-aligned rectilinear sections")
    poly = np.array(_loop_vertices(section.vertices, section.edges))
    segs = {lab: (section.vertices[i], section.vertices[j])
            for lab, (i, j) in enumerate(section.edges, start=1)}
    return _structured_mesh(poly, segs, n)


def rect_mesh(x0: float, x1: float, y0: float, y1: float, n: int) -> TriMesh:
    """Structured mesh of an axis-aligned rectangle (edge labels 1..4)."""
    poly = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    segs = {k + 1: (poly[k], poly[(k + 1) % 4]) for k in range(4)}
    return _structured_mesh(poly, segs, n)


def save_mesh(mesh: TriMesh, path) -> None:
    """Plain-text export: header ``V T``, V vertex lines, T triangle lines.

    Vertex flag is ``0`` for interior or comma-joined gamma labels;
    triangle indices are 1-based.
    """
    with open(path, "w") as fh:
        fh.write(f"{mesh.n_points} {mesh.n_triangles}\n")
        for p, labs in zip(mesh.points, mesh.boundary_edges):
            flag = ",".join(str(k) for k in labs) if labs else "0"
            fh.write(f"{p[0]:.17g} {p[1]:.17g} {flag}\n")
        for t in mesh.triangles:
            fh.write(f"{t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


def load_mesh(path) -> TriMesh:
    """Read a mesh written by save_mesh.

    The structured-lookup metadata is reconstructed from the vertex grid,
    assuming the file describes a uniform mesh in the native format.
    """
    with open(path) as fh:
        nv, nt = (int(tok) for tok in fh.readline().split())
        points = np.empty((nv, 2))
        labels = []
        for i in range(nv):
            x, y, flag = fh.readline().split()
            points[i] = (float(x), float(y))
            labels.append(tuple() if flag == "0"
                          else tuple(int(k) for k in flag.split(",")))
        triangles = np.array(
            [[int(tok) - 1 for tok in fh.readline().split()] for _ in range(nt)],
            dtype=int)

    xs = np.unique(points[:, 0])
    spacing = np.min(np.diff(xs))
    n = int(round(1.0 / spacing))
    xmin, ymin = points.min(axis=0)
    xmax, ymax = points.max(axis=0)
    nx = int(round((xmax - xmin) * n))
    ny = int(round((ymax - ymin) * n))
    cell_tri = -np.ones((ny, nx), dtype=int)
    # lower-right triangle of each cell is stored first by the mesher
    for k in range(0, nt, 2):
        a = points[triangles[k][0]]
        i = int(round((a[0] - xmin) * n))
        j = int(round((a[1] - ymin) * n))
        cell_tri[j, i] = k
    is_boundary = np.array([len(l) > 0 for l in labels])
    return TriMesh(
        points=points,
        triangles=triangles,
        boundary_edges=tuple(labels),
        h=np.sqrt(2.0) / n,
        n_interior=int((~is_boundary).sum()),
        n_boundary=int(is_boundary.sum()),
        grid_origin=(float(xmin), float(ymin)),
        grid_n=n,
        cell_tri=cell_tri,
    )
