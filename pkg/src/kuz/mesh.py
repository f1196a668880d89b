"""Structured triangulations of axis-aligned rectangles.

Rectangles are split into a regular nx-by-ny grid of cells, each cell cut
along its lower-left to upper-right diagonal.  All triangles are oriented
counter-clockwise.  Uniform refinement quarters every triangle through the
edge midpoints; the parent vertices keep their indices, so vertex sets nest
along a refinement lineage.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray       # (nv, 2) float
    triangles: np.ndarray      # (nt, 3) int, CCW
    boundary_vertex: np.ndarray  # (nv,) bool
    domain: tuple              # (xmin, xmax, ymin, ymax)
    grid: tuple = field(default=None)  # (nx, ny) cells, kept through refinement

    def __post_init__(self):
        for a in (self.vertices, self.triangles, self.boundary_vertex):
            a.setflags(write=False)

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_triangles(self):
        return self.triangles.shape[0]


def build_rect_mesh(bounds, nx, ny=None):
    """Triangulate [xmin,xmax] x [ymin,ymax] with nx*ny cells, two triangles each."""
    if ny is None:
        ny = nx
    xmin, xmax, ymin, ymax = bounds
    if not (xmax > xmin and ymax > ymin):
        raise ValueError(f"degenerate bounds {bounds}")
    if nx < 1 or ny < 1:
        raise ValueError(f"need at least one cell per direction, got nx={nx} ny={ny}")

    xs = np.linspace(xmin, xmax, nx + 1)
    ys = np.linspace(ymin, ymax, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])  # row-major: y outer, x inner

    def vid(i, j):
        return j * (nx + 1) + i

    tris = np.empty((2 * nx * ny, 3), dtype=np.int64)
    t = 0
    for j in range(ny):
        for i in range(nx):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            tris[t] = (v00, v10, v11)      # below the diagonal
            tris[t + 1] = (v00, v11, v01)  # above
            t += 2

    return Mesh(vertices, tris, _boundary_flags(vertices, bounds), tuple(bounds), (nx, ny))


def _boundary_flags(vertices, bounds, tol=1e-12):
    xmin, xmax, ymin, ymax = bounds
    x, y = vertices[:, 0], vertices[:, 1]
    return (
        (np.abs(x - xmin) <= tol) | (np.abs(x - xmax) <= tol)
        | (np.abs(y - ymin) <= tol) | (np.abs(y - ymax) <= tol)
    )


def mesh_size(mesh):
    """Longest edge over all triangles."""
    p = mesh.vertices[mesh.triangles]  # (nt, 3, 2)
    edges = p - p[:, [1, 2, 0], :]
    return float(np.sqrt((edges ** 2).sum(axis=2)).max())


def triangle_areas(mesh):
    """Signed areas; positive for CCW orientation."""
    p = mesh.vertices[mesh.triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def refine_uniform(mesh):
    """Quarter every triangle through its edge midpoints.

    Parent vertices come first in the refined mesh, so the coarse vertex set
    is a prefix of the fine one.  Midpoint vertices are appended in sorted
    edge order, which makes the construction deterministic.
    """
    nv = mesh.num_vertices
    edges = {}
    for tri in mesh.triangles:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(a, b), max(a, b))
            edges.setdefault(key, None)
    mid_index = {}
    mids = []
    for key in sorted(edges):
        mid_index[key] = nv + len(mids)
        mids.append(0.5 * (mesh.vertices[key[0]] + mesh.vertices[key[1]]))
    vertices = np.vstack([mesh.vertices, np.array(mids)])

    tris = np.empty((4 * mesh.num_triangles, 3), dtype=np.int64)
    t = 0
    for a, b, c in mesh.triangles:
        mab = mid_index[(min(a, b), max(a, b))]
        mbc = mid_index[(min(b, c), max(b, c))]
        mca = mid_index[(min(c, a), max(c, a))]
        tris[t] = (a, mab, mca)
        tris[t + 1] = (mab, b, mbc)
        tris[t + 2] = (mca, mbc, c)
        tris[t + 3] = (mab, mbc, mca)
        t += 4

    grid = None
    if mesh.grid is not None:
        grid = (2 * mesh.grid[0], 2 * mesh.grid[1])
    return Mesh(vertices, tris, _boundary_flags(vertices, mesh.domain), mesh.domain, grid)


def locate_points(mesh, points):
    """Map physical points to (triangle index, reference coordinates).

    Only works for meshes carrying grid metadata (anything produced by
    build_rect_mesh or its refinements).  Rejects points outside the domain;
    ones on cell interfaces are assigned to an adjacent cell, which is fine
    because finite element fields are continuous across interfaces.
    """
    if mesh.grid is None:
        raise ValueError("point location needs a structured mesh (grid metadata missing)")
    nx, ny = mesh.grid
    xmin, xmax, ymin, ymax = mesh.domain
    hx = (xmax - xmin) / nx
    hy = (ymax - ymin) / ny

    pts = np.asarray(points, dtype=float)
    tol = 1e-12 * max(xmax - xmin, ymax - ymin)
    outside = (
        (pts[:, 0] < xmin - tol)
        | (pts[:, 0] > xmax + tol)
        | (pts[:, 1] < ymin - tol)
        | (pts[:, 1] > ymax + tol)
    )
    if outside.any():
        bad = pts[outside][0]
        raise ValueError(f"point ({bad[0]}, {bad[1]}) lies outside the mesh domain")
    i = np.clip(np.floor((pts[:, 0] - xmin) / hx).astype(np.int64), 0, nx - 1)
    j = np.clip(np.floor((pts[:, 1] - ymin) / hy).astype(np.int64), 0, ny - 1)
    xloc = (pts[:, 0] - (xmin + i * hx)) / hx
    yloc = (pts[:, 1] - (ymin + j * hy)) / hy
    lower = yloc <= xloc  # below the cell diagonal

    # reference coords on (v00,v10,v11): r = xloc - yloc, s = yloc
    # reference coords on (v00,v11,v01): r = xloc,        s = yloc - xloc
    r = np.where(lower, xloc - yloc, xloc)
    s = np.where(lower, yloc, yloc - xloc)

    cell = _cell_lookup(mesh)[j, i, np.where(lower, 0, 1)]
    return cell, np.column_stack([r, s])


def _cell_lookup(mesh):
    """(j, i, half) -> triangle index, rebuilt from centroids.

    Refinement permutes triangle order relative to build_rect_mesh, so the
    structured index cannot be assumed; centroids recover it exactly.
    """
    hit = getattr(mesh, "_lookup_table", None)
    if hit is not None:
        return hit
    nx, ny = mesh.grid
    xmin, xmax, ymin, ymax = mesh.domain
    hx = (xmax - xmin) / nx
    hy = (ymax - ymin) / ny
    cent = mesh.vertices[mesh.triangles].mean(axis=1)
    ci = np.clip(np.floor((cent[:, 0] - xmin) / hx).astype(np.int64), 0, nx - 1)
    cj = np.clip(np.floor((cent[:, 1] - ymin) / hy).astype(np.int64), 0, ny - 1)
    yl = (cent[:, 1] - (ymin + cj * hy)) / hy
    xl = (cent[:, 0] - (xmin + ci * hx)) / hx
    half = (yl > xl).astype(np.int64)
    table = np.full((ny, nx, 2), -1, dtype=np.int64)
    table[cj, ci, half] = np.arange(mesh.num_triangles)
    if (table < 0).any():
        raise ValueError("mesh is not a structured two-triangle-per-cell grid")
    object.__setattr__(mesh, "_lookup_table", table)
    return table
