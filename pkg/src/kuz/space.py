"""Lagrange finite element spaces on triangles, degrees 1 to 3.

Degrees of freedom sit on the principal lattice of each triangle: vertices,
then evenly spaced edge nodes, then interior nodes.  Edge nodes shared by two
triangles are ordered along the edge from its lower-numbered vertex, so both
cells agree on the global numbering.  Homogeneous Dirichlet conditions are
realized by flagging boundary DOFs and assembling reduced systems over the
free ones.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from scipy.special import roots_jacobi, roots_legendre

from .mesh import locate_points

MAX_QUAD_ORDER = 30


@dataclass(frozen=True)
class QuadratureRule:
    """Points in reference coordinates on {r,s >= 0, r+s <= 1}; weights sum to 1/2."""
    points: np.ndarray
    weights: np.ndarray
    order: int


def quadrature(order):
    """Rule exact for polynomials of total degree <= order, all weights positive.

    Built by collapsing the unit square onto the triangle: Gauss-Legendre in
    the first direction, Gauss-Jacobi with weight (1-t) in the second, so the
    area Jacobian is integrated exactly rather than sampled.
    """
    if order < 1 or order > MAX_QUAD_ORDER:
        raise ValueError(f"quadrature order {order} outside 1..{MAX_QUAD_ORDER}")
    n = (order + 2) // 2
    xg, wg = roots_legendre(n)
    xi, wxi = (xg + 1.0) / 2.0, wg / 2.0
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    eta, weta = (xj + 1.0) / 2.0, wj / 4.0

    pts = np.empty((n * n, 2))
    wts = np.empty(n * n)
    idx = 0
    for j in range(n):
        for i in range(n):
            pts[idx] = (xi[i] * (1.0 - eta[j]), eta[j])
            wts[idx] = wxi[i] * weta[j]
            idx += 1
    return QuadratureRule(pts, wts, order)


def lattice_nodes(degree):
    """Barycentric multi-indices (a,b,c), a+b+c=degree: vertices, edges, interior."""
    k = degree
    nodes = [(k, 0, 0), (0, k, 0), (0, 0, k)]
    for m in range(1, k):
        nodes.append((k - m, m, 0))
    for m in range(1, k):
        nodes.append((0, k - m, m))
    for m in range(1, k):
        nodes.append((m, 0, k - m))
    for a in range(1, k):
        for b in range(1, k - a):
            nodes.append((a, b, k - a - b))
    return nodes


def _silvester(m, k, lam):
    """Value and derivative of prod_{i<m} (k*lam - i)/(m - i)."""
    val = np.ones_like(lam)
    der = np.zeros_like(lam)
    for i in range(m):
        f = (k * lam - i) / (m - i)
        der = der * f + val * (k / (m - i))
        val = val * f
    return val, der


def shape_functions(degree, points):
    """Nodal basis values and reference gradients at given reference points.

    Returns (values, gradients) with shapes (npts, nloc) and (npts, nloc, 2).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    lam = np.stack([1.0 - pts[:, 0] - pts[:, 1], pts[:, 0], pts[:, 1]], axis=1)
    dlam = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])  # d(lam_i)/d(r,s)

    nodes = lattice_nodes(degree)
    vals = np.empty((pts.shape[0], len(nodes)))
    grads = np.empty((pts.shape[0], len(nodes), 2))
    for l, abc in enumerate(nodes):
        p = [_silvester(abc[i], degree, lam[:, i]) for i in range(3)]
        vals[:, l] = p[0][0] * p[1][0] * p[2][0]
        dv = np.zeros((pts.shape[0], 2))
        for i in range(3):
            term = p[i][1].copy()
            for j in range(3):
                if j != i:
                    term = term * p[j][0]
            dv += term[:, None] * dlam[i]
        grads[:, l, :] = dv
    return vals, grads


def num_local_dofs(degree):
    return (degree + 1) * (degree + 2) // 2


class FeSpace:
    """A Lagrange space of given degree on a triangle mesh.

    Heavy per-space arrays (geometry factors, assembled stiffness and mass,
    factorizations) are cached lazily; the object is treated as immutable.
    """

    def __init__(self, mesh, degree, quad_order=None):
        if degree not in (1, 2, 3):
            raise ValueError(f"degree must be 1, 2 or 3, got {degree}")
        self.mesh = mesh
        self.degree = degree
        self.quad_order = quad_order if quad_order is not None else max(6, 3 * degree)
        self.quad = quadrature(self.quad_order)
        self._build_dofs()
        self._build_geometry()

    # -- construction -----------------------------------------------------

    def _build_dofs(self):
        mesh, k = self.mesh, self.degree
        nv = mesh.num_vertices
        tris = mesh.triangles

        edge_ids = {}
        for tri in tris:
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (min(a, b), max(a, b))
                edge_ids.setdefault(key, None)
        for eid, key in enumerate(sorted(edge_ids)):
            edge_ids[key] = eid
        ne = len(edge_ids)

        per_edge = k - 1
        per_cell = (k - 1) * (k - 2) // 2
        edge_base = nv
        cell_base = nv + ne * per_edge
        ndof = cell_base + mesh.num_triangles * per_cell

        nloc = num_local_dofs(k)
        cell_dofs = np.empty((mesh.num_triangles, nloc), dtype=np.int64)
        cell_dofs[:, :3] = tris
        if per_edge > 0:
            for c, tri in enumerate(tris):
                col = 3
                for (la, lb) in ((0, 1), (1, 2), (2, 0)):
                    ga, gb = tri[la], tri[lb]
                    eid = edge_ids[(min(ga, gb), max(ga, gb))]
                    for m in range(1, k):
                        sub = (m - 1) if ga < gb else (k - m - 1)
                        cell_dofs[c, col] = edge_base + eid * per_edge + sub
                        col += 1
                if per_cell > 0:
                    for s in range(per_cell):
                        cell_dofs[c, col] = cell_base + c * per_cell + s
                        col += 1

        coords = np.empty((ndof, 2))
        coords[:nv] = mesh.vertices
        for (lo, hi), eid in edge_ids.items():
            for m in range(1, k):
                t = m / k
                coords[edge_base + eid * per_edge + (m - 1)] = (
                    (1.0 - t) * mesh.vertices[lo] + t * mesh.vertices[hi]
                )
        if per_cell > 0:
            # degree 3: one interior node at the centroid
            cent = mesh.vertices[tris].mean(axis=1)
            coords[cell_base:] = cent

        xmin, xmax, ymin, ymax = mesh.domain
        tol = 1e-12
        x, y = coords[:, 0], coords[:, 1]
        on_boundary = (
            (np.abs(x - xmin) <= tol) | (np.abs(x - xmax) <= tol)
            | (np.abs(y - ymin) <= tol) | (np.abs(y - ymax) <= tol)
        )

        self.num_dofs = ndof
        self.cell_dofs = cell_dofs
        self.dof_coords = coords
        self.dirichlet_mask = on_boundary
        self.free = np.flatnonzero(~on_boundary)
        self.num_free = self.free.size

    def _build_geometry(self):
        mesh = self.mesh
        p = mesh.vertices[mesh.triangles]         # (nt, 3, 2)
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        if not (det > 0).all():
            raise ValueError("mesh contains non-CCW triangles")
        self.det_j = det
        inv_jt = np.empty((mesh.num_triangles, 2, 2))
        inv_jt[:, 0, 0] = e2[:, 1]
        inv_jt[:, 0, 1] = -e1[:, 1]
        inv_jt[:, 1, 0] = -e2[:, 0]
        inv_jt[:, 1, 1] = e1[:, 0]
        inv_jt /= det[:, None, None]
        self.inv_jt = inv_jt

        rule = self.quad
        self.shape_vals, self.shape_grads = shape_functions(self.degree, rule.points)
        # physical quadrature points, (nt, nq, 2)
        r, s = rule.points[:, 0], rule.points[:, 1]
        self.quad_xy = (
            p[:, None, 0, :]
            + r[None, :, None] * e1[:, None, :]
            + s[None, :, None] * e2[:, None, :]
        )
        self.quad_scale = rule.weights[None, :] * self.det_j[:, None]  # (nt, nq)

    # -- cached assembly helpers ------------------------------------------

    @cached_property
    def _scatter(self):
        nloc = self.cell_dofs.shape[1]
        rows = np.repeat(self.cell_dofs, nloc, axis=1).ravel()
        cols = np.tile(self.cell_dofs, (1, nloc)).ravel()
        return rows.astype(np.int64), cols.astype(np.int64)

    @cached_property
    def _scatter_reduced(self):
        rmap = np.full(self.num_dofs, -1, dtype=np.int64)
        rmap[self.free] = np.arange(self.num_free)
        rows, cols = self._scatter
        rr, cc = rmap[rows], rmap[cols]
        keep = (rr >= 0) & (cc >= 0)
        return keep, rr[keep], cc[keep]

    def scatter_matrix(self, local_vals, reduced=False):
        """Sum (ncells, nloc, nloc) local blocks into a CSR matrix."""
        vals = local_vals.reshape(-1)
        if reduced:
            keep, rr, cc = self._scatter_reduced
            m = sp.coo_array((vals[keep], (rr, cc)), shape=(self.num_free, self.num_free))
        else:
            rows, cols = self._scatter
            m = sp.coo_array((vals, (rows, cols)), shape=(self.num_dofs, self.num_dofs))
        out = m.tocsr()
        out.eliminate_zeros()
        return out

    def grad_at_quad(self, q):
        """Physical basis gradients at quadrature point q, shape (nt, nloc, 2)."""
        return np.einsum("cij,lj->cli", self.inv_jt, self.shape_grads[q])

    def field_at_quad(self, coeffs):
        """Values of a coefficient field at all quadrature points, (nt, nq)."""
        return coeffs[self.cell_dofs] @ self.shape_vals.T

    @cached_property
    def stiffness_local(self):
        """Per-cell (grad phi_j, grad phi_i) blocks, reused by every time step."""
        nt = self.mesh.num_triangles
        nloc = self.cell_dofs.shape[1]
        out = np.zeros((nt, nloc, nloc))
        for q in range(self.shape_vals.shape[0]):
            g = self.grad_at_quad(q)
            out += self.quad_scale[:, q, None, None] * np.einsum("cli,cmi->clm", g, g)
        out.setflags(write=False)
        return out

    @cached_property
    def stiffness(self):
        return assemble_stiffness(self)

    @cached_property
    def mass(self):
        return assemble_mass(self)

    @cached_property
    def stiffness_reduced(self):
        f = self.free
        return self.stiffness[f][:, f].tocsr()

    @cached_property
    def mass_reduced(self):
        f = self.free
        return self.mass[f][:, f].tocsr()

    @cached_property
    def stiffness_factor(self):
        return splu(sp.csc_matrix(self.stiffness_reduced))

    @cached_property
    def mass_factor(self):
        return splu(sp.csc_matrix(self.mass_reduced))


def build_space(mesh, degree, quad_order=None):
    return FeSpace(mesh, degree, quad_order)


# -- assembly -------------------------------------------------------------


def _weight_at_quad(space, weight):
    """Quadrature-point values of a + b*field; plain ones when weight is None."""
    nt, nq = space.quad_xy.shape[:2]
    if weight is None:
        a, b, field = 1.0, 0.0, None
    else:
        a, b, field = weight
    vals = np.zeros((nt, nq)) if field is None else space.field_at_quad(field)
    return a + b * vals


def assemble_mass(space, weight=None):
    """(w phi_j, phi_i) with optional affine weight (a, b, field): w = a + b*field."""
    w = _weight_at_quad(space, weight)
    return space.scatter_matrix(mass_local(space, w))


def mass_local(space, weight_vals):
    """Local weighted mass blocks, (nt, nloc, nloc), given weights at quad points."""
    nt = space.mesh.num_triangles
    nloc = space.cell_dofs.shape[1]
    v = space.shape_vals
    out = np.zeros((nt, nloc, nloc))
    for q in range(v.shape[0]):
        coeff = space.quad_scale[:, q] * weight_vals[:, q]
        out += coeff[:, None, None] * (v[q][:, None] * v[q][None, :])[None, :, :]
    return out


def assemble_stiffness(space):
    """(grad phi_j, grad phi_i)."""
    return space.scatter_matrix(space.stiffness_local)


def assemble_convection(space, w):
    """(grad w_h . grad phi_j, phi_i) for a coefficient field w."""
    return space.scatter_matrix(convection_local(space, w))


def convection_local(space, w):
    nt = space.mesh.num_triangles
    nloc = space.cell_dofs.shape[1]
    wc = w[space.cell_dofs]  # (nt, nloc)
    v = space.shape_vals
    out = np.zeros((nt, nloc, nloc))
    for q in range(v.shape[0]):
        g = space.grad_at_quad(q)
        gw = np.einsum("cl,cli->ci", wc, g)          # grad w_h at this point
        t = np.einsum("ci,cmi->cm", gw, g)           # grad w_h . grad phi_m
        out += space.quad_scale[:, q, None, None] * (v[q][:, None] * t[:, None, :])
    return out


def assemble_load(space, g):
    """Vector of (g, phi_i) for a spatial function g taking (n, 2) arrays."""
    nt, nq = space.quad_xy.shape[:2]
    gv = np.asarray(g(space.quad_xy.reshape(-1, 2)), dtype=float).reshape(nt, nq)
    local = np.einsum("cq,ql->cl", space.quad_scale * gv, space.shape_vals)
    return np.bincount(
        space.cell_dofs.ravel(), weights=local.ravel(), minlength=space.num_dofs
    )


# -- evaluation -----------------------------------------------------------


def evaluate_field(space, u, cell, point):
    """Value of the field at one physical point known to lie in the given cell."""
    mesh = space.mesh
    p = mesh.vertices[mesh.triangles[cell]]
    e1, e2 = p[1] - p[0], p[2] - p[0]
    det = e1[0] * e2[1] - e1[1] * e2[0]
    d = np.asarray(point, dtype=float) - p[0]
    r = (d[0] * e2[1] - d[1] * e2[0]) / det
    s = (e1[0] * d[1] - e1[1] * d[0]) / det
    vals, _ = shape_functions(space.degree, [(r, s)])
    return float(vals[0] @ u[space.cell_dofs[cell]])


def evaluate_at_points(space, u, points):
    """Values and gradients of the field at physical points (structured meshes).

    Returns (values, gradients) with shapes (n,) and (n, 2).
    """
    cells, ref = locate_points(space.mesh, points)
    vals, grads = shape_functions(space.degree, ref)
    dofs = space.cell_dofs[cells]
    uc = u[dofs]
    values = np.einsum("pl,pl->p", vals, uc)
    gphys = np.einsum("pij,plj->pli", space.inv_jt[cells], grads)
    gradients = np.einsum("pl,pli->pi", uc, gphys)
    return values, gradients
