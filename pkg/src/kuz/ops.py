"""Projections, the discrete Laplacian, and backward time differences."""

import math
from dataclasses import dataclass, field

import numpy as np

from .space import assemble_load


def ritz_project(space, g, grad_g):
    """Coefficients of the elliptic projection: (grad Rg, grad phi) = (grad g, grad phi).

    Needs the analytic gradient of g; homogeneous Dirichlet values are imposed
    on the result.
    """
    nt, nq = space.quad_xy.shape[:2]
    gg = np.asarray(grad_g(space.quad_xy.reshape(-1, 2)), dtype=float).reshape(nt, nq, 2)
    local = np.zeros((nt, space.cell_dofs.shape[1]))
    for q in range(nq):
        gphys = space.grad_at_quad(q)
        local += space.quad_scale[:, q, None] * np.einsum("ci,cli->cl", gg[:, q], gphys)
    b = np.bincount(space.cell_dofs.ravel(), weights=local.ravel(), minlength=space.num_dofs)
    out = np.zeros(space.num_dofs)
    out[space.free] = space.stiffness_factor.solve(b[space.free])
    return out


def l2_project(space, g):
    """Constrained L2 projection; only needs pointwise values of g."""
    b = assemble_load(space, g)
    out = np.zeros(space.num_dofs)
    out[space.free] = space.mass_factor.solve(b[space.free])
    return out


def nodal_interpolate(space, g):
    """Interpolant through the DOF nodes, clamped to zero on the boundary."""
    out = np.asarray(g(space.dof_coords), dtype=float).copy()
    out[space.dirichlet_mask] = 0.0
    return out


def discrete_laplacian(space, u):
    """w with (w, phi) = -(grad u, grad phi) for all free phi; zero on the boundary."""
    rhs = -(space.stiffness @ u)
    out = np.zeros(space.num_dofs)
    out[space.free] = space.mass_factor.solve(rhs[space.free])
    return out


@dataclass
class TimeSeries:
    """Values a^0, a^1, ... on the uniform grid t_n = n*tau."""
    tau: float
    values: list = field(default_factory=list)

    def append(self, v):
        self.values.append(v)

    def __len__(self):
        return len(self.values)


def dtau(ts, m, n):
    """m-th backward difference at index n: only defined for n >= m.

    The boundary conventions some analyses use for n < m are deliberately not
    provided; asking for them is an error here.
    """
    if m < 1:
        raise ValueError(f"difference order must be >= 1, got {m}")
    if n < m:
        raise ValueError(f"backward difference of order {m} undefined at index {n}")
    if n >= len(ts.values):
        raise IndexError(f"index {n} beyond recorded series of length {len(ts.values)}")
    acc = None
    for i in range(m + 1):
        term = (-1.0) ** i * math.comb(m, i) * np.asarray(ts.values[n - i], dtype=float)
        acc = term if acc is None else acc + term
    return acc / ts.tau**m
