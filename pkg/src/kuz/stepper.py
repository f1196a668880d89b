"""Semi-implicit time integration of the damped Kuznetsov equation.

The model is (1 + kappa u_t) u_tt - c^2 Lap(u) - beta Lap(u_t)
+ ell grad(u).grad(u_t) = f with homogeneous Dirichlet conditions.  Each step
freezes the nonlinear coefficients at the previous time and solves one linear
system for the new velocity v = backward difference of u; the displacement
update is u_new = u + tau * v_new.

Initialization is the Taylor start: u^0 and v^0 are elliptic projections of
the initial data, u^1 adds tau v0 + tau^2/2 w0 with w0 the projected initial
acceleration recovered from the PDE at t = 0.
"""

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .linalg import SolverError, solve_direct, solve_iterative
from .mesh import mesh_size
from .ops import l2_project, ritz_project
from .space import assemble_load, convection_local, mass_local

DEFAULT_GAMMA_MIN = 1e-2


class DegeneracyError(Exception):
    """1 + kappa * u_t dropped to or below the configured floor."""


@dataclass(frozen=True)
class ModelParams:
    kappa: float
    c2: float
    beta: float
    ell: float
    forcing: Optional[Callable] = None  # f(points (n,2), t) -> (n,)


@dataclass(frozen=True)
class InitialData:
    """Initial displacement and velocity with their gradients and Laplacians."""
    u0: Callable
    grad_u0: Callable
    lap_u0: Callable
    v0: Callable
    grad_v0: Callable
    lap_v0: Callable


@dataclass(frozen=True)
class StepperState:
    space: object
    params: ModelParams
    u: np.ndarray
    v: np.ndarray
    v_prev: np.ndarray
    n: int
    tau: float
    monitor: float  # min over quadrature points of 1 + kappa * v at this level

    @property
    def t(self):
        return self.n * self.tau


def nondegeneracy_min(space, kappa, v):
    """min over all quadrature points of 1 + kappa * v_h."""
    return float((1.0 + kappa * space.field_at_quad(v)).min())


def _check_monitor(space, weight_vals, n, gamma_min):
    m = float(weight_vals.min())
    if m <= gamma_min:
        c, q = np.unravel_index(np.argmin(weight_vals), weight_vals.shape)
        x, y = space.quad_xy[c, q]
        raise DegeneracyError(
            f"1 + kappa*v = {m:.3e} <= {gamma_min:.1e} at step {n}, "
            f"x = ({x:.4f}, {y:.4f})"
        )
    return m


def initial_state(space, params, data, tau, gamma_min=DEFAULT_GAMMA_MIN):
    """Project the initial data and take the Taylor half-step to time level 1."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    u0 = ritz_project(space, data.u0, data.grad_u0)
    v0 = ritz_project(space, data.v0, data.grad_v0)

    xy = space.quad_xy.reshape(-1, 2)
    denom = 1.0 + params.kappa * np.asarray(data.v0(xy), dtype=float)
    nt, nq = space.quad_xy.shape[:2]
    _check_monitor(space, denom.reshape(nt, nq), 0, gamma_min)

    def accel(pts):
        d = 1.0 + params.kappa * np.asarray(data.v0(pts), dtype=float)
        g = params.c2 * np.asarray(data.lap_u0(pts), dtype=float)
        g = g + params.beta * np.asarray(data.lap_v0(pts), dtype=float)
        gu = np.asarray(data.grad_u0(pts), dtype=float)
        gv = np.asarray(data.grad_v0(pts), dtype=float)
        g = g - params.ell * (gu * gv).sum(axis=1)
        if params.forcing is not None:
            g = g + np.asarray(params.forcing(pts, 0.0), dtype=float)
        return g / d

    w0 = l2_project(space, accel)
    u1 = u0 + tau * v0 + 0.5 * tau**2 * w0
    v1 = v0 + 0.5 * tau * w0
    mon = nondegeneracy_min(space, params.kappa, v1)
    return StepperState(space, params, u1, v1, v0, 1, tau, mon)


def step(state, solver="iterative", gamma_min=DEFAULT_GAMMA_MIN):
    """Advance one time level by solving the linearized velocity system."""
    space, p, tau = state.space, state.params, state.tau
    free = space.free

    w = 1.0 + p.kappa * space.field_at_quad(state.v)
    _check_monitor(space, w, state.n, gamma_min)

    local = mass_local(space, w)
    rhs_local = np.einsum("cij,cj->ci", local, state.v[space.cell_dofs])
    local += (p.c2 * tau**2 + tau * p.beta) * space.stiffness_local
    if p.ell != 0.0:
        local += tau * p.ell * convection_local(space, state.u)
    system = space.scatter_matrix(local, reduced=True)

    rhs = np.bincount(
        space.cell_dofs.ravel(), weights=rhs_local.ravel(), minlength=space.num_dofs
    )
    rhs -= tau * p.c2 * (space.stiffness @ state.u)
    t_next = (state.n + 1) * tau
    if p.forcing is not None:
        rhs += tau * assemble_load(space, lambda pts: p.forcing(pts, t_next))
    b = rhs[free]

    if solver == "direct":
        x = solve_direct(system, b)
    elif solver == "iterative":
        try:
            x, _ = solve_iterative(system, b, x0=state.v[free])
        except SolverError:
            x = solve_direct(system, b)
    else:
        raise ValueError(f"unknown solver {solver!r}")

    v_new = np.zeros(space.num_dofs)
    v_new[free] = x
    u_new = state.u + tau * v_new
    mon = nondegeneracy_min(space, p.kappa, v_new)
    return StepperState(space, p, u_new, v_new, state.v, state.n + 1, tau, mon)


@dataclass(frozen=True)
class CflReport:
    ok: bool
    tau: float
    threshold: float
    message: str


def cfl_check(space, params, tau, c_const=1.0, eps=0.0):
    """Advisory step-size restriction; warns, never aborts.

    For degree >= 2 the restriction couples tau to h^(4/3 + 2 eps); for degree
    1 it additionally needs strong damping, tau <= C sqrt(beta) h^(1/3 + 2 eps)
    together with h^(2/3 - 2 eps) <= C sqrt(beta).  eps = 0 is the permissive
    limit of the admissible range [0, 1/3).
    """
    if not 0.0 <= eps < 1.0 / 3.0:
        raise ValueError(f"eps must lie in [0, 1/3), got {eps}")
    h = mesh_size(space.mesh)
    if space.degree >= 2:
        threshold = c_const * h ** (4.0 / 3.0 + 2.0 * eps)
        ok = tau <= threshold
        msg = "" if ok else (
            f"tau = {tau:.3e} exceeds step-size threshold {threshold:.3e} "
            f"(h = {h:.3e}, degree {space.degree})"
        )
        return CflReport(ok, tau, threshold, msg)

    root_beta = np.sqrt(params.beta)
    threshold = c_const * root_beta * h ** (1.0 / 3.0 + 2.0 * eps)
    mesh_bound = c_const * root_beta
    mesh_val = h ** (2.0 / 3.0 - 2.0 * eps)
    ok = tau <= threshold and mesh_val <= mesh_bound
    msg = "" if ok else (
        f"degree-1 damping coupling violated: tau = {tau:.3e} vs "
        f"{threshold:.3e}, h^(2/3-2eps) = {mesh_val:.3e} vs {mesh_bound:.3e} "
        f"(beta = {params.beta:.1e})"
    )
    return CflReport(ok, tau, threshold, msg)


def run(space, params, data, tau, t_end, observers=(), solver="iterative",
        gamma_min=DEFAULT_GAMMA_MIN, cfl_const=1.0, cfl_eps=0.0):
    """Integrate to t_end; tau is nudged so the steps land on t_end exactly.

    Observers are called on the initialized state and after every step.
    Returns the final state; its tau attribute is the realized step size.
    """
    n_steps = max(1, round(t_end / tau))
    tau_real = t_end / n_steps

    report = cfl_check(space, params, tau_real, cfl_const, cfl_eps)
    if not report.ok:
        warnings.warn(report.message, stacklevel=2)

    state = initial_state(space, params, data, tau_real, gamma_min)
    for obs in observers:
        obs(state)
    while state.n < n_steps:
        state = step(state, solver=solver, gamma_min=gamma_min)
        for obs in observers:
            obs(state)
    return state
