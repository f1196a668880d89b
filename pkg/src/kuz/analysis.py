"""Error functionals, convergence rates, reference comparisons, CSV output."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize

from .mesh import locate_points
from .space import shape_functions
from .stepper import InitialData

CSV_COLUMNS = (
    "experiment", "k", "h", "tau", "beta", "t",
    "err_grad_dt", "err_dt2", "err_grad_l6_acc", "ebar", "rate",
)


# -- norms ----------------------------------------------------------------


def grad_error_lp(space, u, grad_exact, p=2):
    """|| grad_exact - grad u_h ||_Lp with the Euclidean norm on gradients."""
    nt, nq = space.quad_xy.shape[:2]
    ge = np.asarray(grad_exact(space.quad_xy.reshape(-1, 2)), dtype=float).reshape(nt, nq, 2)
    uc = u[space.cell_dofs]
    acc = 0.0
    for q in range(nq):
        gh = np.einsum("cl,cli->ci", uc, space.grad_at_quad(q))
        diff = ge[:, q] - gh
        mag2 = (diff**2).sum(axis=1)
        acc += (space.quad_scale[:, q] * mag2 ** (p / 2.0)).sum()
    return acc ** (1.0 / p)


def l2_error(space, u, exact):
    """|| exact - u_h ||_L2."""
    nt, nq = space.quad_xy.shape[:2]
    ev = np.asarray(exact(space.quad_xy.reshape(-1, 2)), dtype=float).reshape(nt, nq)
    uh = space.field_at_quad(u)
    return float(np.sqrt((space.quad_scale * (ev - uh) ** 2).sum()))


# -- convergence rates ----------------------------------------------------


def observed_order(errors, params):
    """Successive rates log(e_{i-1}/e_i) / log(p_{i-1}/p_i)."""
    errors = np.asarray(errors, dtype=float)
    params = np.asarray(params, dtype=float)
    if errors.shape != params.shape or errors.size < 2:
        raise ValueError("need matching error/parameter sequences of length >= 2")
    if (errors <= 0).any() or (params <= 0).any():
        raise ValueError("errors and parameters must be positive")
    return np.log(errors[:-1] / errors[1:]) / np.log(params[:-1] / params[1:])


def saturated_pairs(errors, threshold=0.2):
    """Mark refinement pairs where the error moved by less than the threshold.

    Such pairs sit on a plateau (another error source dominates) and should
    not enter a fitted order.
    """
    errors = np.asarray(errors, dtype=float)
    ratio = errors[1:] / errors[:-1]
    return ratio > (1.0 - threshold)


def fitted_order(errors, params, threshold=0.2):
    """Mean of the non-saturated successive rates; None if every pair saturated."""
    rates = observed_order(errors, params)
    keep = ~saturated_pairs(errors, threshold)
    if not keep.any():
        return None
    return float(rates[keep].mean())


def plateau_fit(errors, params):
    """Fit error(p) = sqrt((C p^q)^2 + F^2), a power law plus a floor.

    A refinement study often bottoms out where a second error source takes
    over (for a spatial study, the fixed time step).  The two contributions
    add close to orthogonally, so the measured error follows the model above
    and pairwise rates go soft well before the plateau is fully reached.
    Fitting the model recovers the clean order q and the plateau level F.

    Returns (order, floor).  floor is None when the fitted plateau sits below
    5% of the smallest error (no plateau visible in the data); order is None
    when the fitted power component stays below the floor over the whole
    window (no decay signal at all).  Flat data instead fits order ~ 0.
    Needs at least three points.
    """
    errors = np.asarray(errors, dtype=float)
    params = np.asarray(params, dtype=float)
    if errors.shape != params.shape or errors.size < 3:
        raise ValueError("need matching error/parameter sequences of length >= 3")
    if (errors <= 0).any() or (params <= 0).any():
        raise ValueError("errors and parameters must be positive")

    loge = np.log(errors)
    logp = np.log(params)

    def residual(theta):
        a, q, b = theta
        model = 0.5 * np.logaddexp(2.0 * (a + q * logp), 2.0 * b)
        return model - loge

    q0 = (loge[0] - loge[1]) / (logp[0] - logp[1])
    q0 = min(max(q0, 0.25), 8.0)
    a0 = loge[0] - q0 * logp[0]
    b0 = loge.min() - 1.0
    sol = optimize.least_squares(residual, (a0, q0, b0), method="lm")
    a, q, b = sol.x

    floor = float(np.exp(b))
    if np.exp(a + q * logp.max()) < 0.5 * floor:
        return None, floor
    if floor < 0.05 * errors.min():
        return float(q), None
    return float(q), floor


# -- reference comparisons ------------------------------------------------


def _pair_norm_same(space, du, dv):
    nt, nq = space.quad_xy.shape[:2]
    duc = du[space.cell_dofs]
    h1 = 0.0
    for q in range(nq):
        g = np.einsum("cl,cli->ci", duc, space.grad_at_quad(q))
        h1 += (space.quad_scale[:, q] * (g**2).sum(axis=1)).sum()
    l2 = (space.quad_scale * space.field_at_quad(dv) ** 2).sum()
    return float(np.sqrt(h1) + np.sqrt(l2))


def _is_ancestor(coarse_mesh, fine_mesh):
    if coarse_mesh.grid is None or fine_mesh.grid is None:
        return False
    if coarse_mesh.domain != fine_mesh.domain:
        return False
    cx, cy = coarse_mesh.grid
    fx, fy = fine_mesh.grid
    while fx > cx and fx % 2 == 0 and fy % 2 == 0:
        fx //= 2
        fy //= 2
    return (fx, fy) == (cx, cy)


def compare_states_nested(coarse, fine):
    """H1 x L2 distance between (u, v) pairs on nested or identical meshes.

    Arguments are (space, u, v) triples.  Returns
    ||grad(u_c - u_f)||_L2 + ||v_c - v_f||_L2 evaluated with the fine space's
    quadrature; the coarse fields are evaluated exactly at the fine points,
    which requires the coarse mesh to be a refinement ancestor.
    """
    cs, cu, cv = coarse
    fs, fu, fv = fine
    if cs.mesh is fs.mesh or (
        cs.mesh.grid == fs.mesh.grid and cs.mesh.domain == fs.mesh.domain
    ):
        if cs.degree != fs.degree:
            raise ValueError("same-mesh comparison needs matching degrees")
        return _pair_norm_same(fs, cu - fu, cv - fv)
    if not _is_ancestor(cs.mesh, fs.mesh):
        raise ValueError(
            f"coarse grid {cs.mesh.grid} is not a refinement ancestor of {fs.mesh.grid}"
        )

    nt, nq = fs.quad_xy.shape[:2]
    pts = fs.quad_xy.reshape(-1, 2)
    cells, ref = locate_points(cs.mesh, pts)
    vals, grads = shape_functions(cs.degree, ref)
    dofs = cs.cell_dofs[cells]
    gphys = np.einsum("pij,plj->pli", cs.inv_jt[cells], grads)

    cu_g = np.einsum("pl,pli->pi", cu[dofs], gphys).reshape(nt, nq, 2)
    cv_v = np.einsum("pl,pl->p", vals, cv[dofs]).reshape(nt, nq)

    fuc = fu[fs.cell_dofs]
    h1 = 0.0
    for q in range(nq):
        g = np.einsum("cl,cli->ci", fuc, fs.grad_at_quad(q))
        d = cu_g[:, q] - g
        h1 += (fs.quad_scale[:, q] * (d**2).sum(axis=1)).sum()
    l2 = (fs.quad_scale * (cv_v - fs.field_at_quad(fv)) ** 2).sum()
    return float(np.sqrt(h1) + np.sqrt(l2))


# -- manufactured solution ------------------------------------------------


@dataclass(frozen=True)
class ManufacturedSolution:
    """u = c_sp * exp(c_time t) * sin(pi x) sin(pi y) on the unit square."""
    c_sp: float
    c_time: float

    def _shape(self, pts):
        return np.sin(np.pi * pts[:, 0]) * np.sin(np.pi * pts[:, 1])

    def _grad_shape(self, pts):
        sx, cx = np.sin(np.pi * pts[:, 0]), np.cos(np.pi * pts[:, 0])
        sy, cy = np.sin(np.pi * pts[:, 1]), np.cos(np.pi * pts[:, 1])
        return np.pi * np.column_stack([cx * sy, sx * cy])

    def u(self, pts, t):
        return self.c_sp * math.exp(self.c_time * t) * self._shape(pts)

    def dt_u(self, pts, t):
        return self.c_time * self.u(pts, t)

    def dt2_u(self, pts, t):
        return self.c_time**2 * self.u(pts, t)

    def grad_u(self, pts, t):
        return self.c_sp * math.exp(self.c_time * t) * self._grad_shape(pts)

    def grad_dt_u(self, pts, t):
        return self.c_time * self.grad_u(pts, t)

    def lap_u(self, pts, t):
        return -2.0 * np.pi**2 * self.u(pts, t)

    def initial_data(self):
        return InitialData(
            u0=lambda p: self.u(p, 0.0),
            grad_u0=lambda p: self.grad_u(p, 0.0),
            lap_u0=lambda p: self.lap_u(p, 0.0),
            v0=lambda p: self.dt_u(p, 0.0),
            grad_v0=lambda p: self.grad_dt_u(p, 0.0),
            lap_v0=lambda p: self.c_time * self.lap_u(p, 0.0),
        )


def manufactured_forcing(kappa, c2, beta, ell, c_sp, c_time):
    """Source term that makes the manufactured field an exact solution."""

    def f(pts, t):
        et = math.exp(c_time * t)
        sx, cx = np.sin(np.pi * pts[:, 0]), np.cos(np.pi * pts[:, 0])
        sy, cy = np.sin(np.pi * pts[:, 1]), np.cos(np.pi * pts[:, 1])
        u = c_sp * et * sx * sy
        g = c_sp**2 * et**2 * np.pi**2 * (cx**2 * sy**2 + sx**2 * cy**2)
        return (
            (1.0 + kappa * c_time * u) * c_time**2 * u
            + 2.0 * np.pi**2 * c2 * u
            + 2.0 * np.pi**2 * beta * c_time * u
            + ell * c_time * g
        )

    return f


# -- result rows and CSV --------------------------------------------------


@dataclass
class ResultRow:
    experiment: str
    k: int
    h: float
    tau: float
    beta: float
    t: float
    err_grad_dt: Optional[float] = None
    err_dt2: Optional[float] = None
    err_grad_l6_acc: Optional[float] = None
    ebar: Optional[float] = None
    rate: Optional[float] = None


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def write_csv(rows, path):
    """Write result rows sorted into ladder order; floats keep full precision.

    The rate column is attached per row by the drivers (rate relative to the
    next-coarser ladder point), so sorting does not change its meaning.
    """
    def key(r):
        return (r.experiment, r.k, -(r.h or 0), -(r.tau or 0), -(r.beta or 0), r.t or 0)

    lines = [",".join(CSV_COLUMNS)]
    for r in sorted(rows, key=key):
        lines.append(",".join(_fmt(getattr(r, c)) for c in CSV_COLUMNS))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path):
    """Inverse of write_csv; empty fields come back as None."""
    rows = []
    with open(path, newline="\n") as fh:
        header = fh.readline().strip()
        if header != ",".join(CSV_COLUMNS):
            raise ValueError(f"unexpected CSV header: {header!r}")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            vals = dict(zip(CSV_COLUMNS, parts))
            rows.append(ResultRow(
                experiment=vals["experiment"],
                k=int(vals["k"]),
                h=float(vals["h"]),
                tau=float(vals["tau"]),
                beta=float(vals["beta"]),
                t=float(vals["t"]),
                err_grad_dt=float(vals["err_grad_dt"]) if vals["err_grad_dt"] else None,
                err_dt2=float(vals["err_dt2"]) if vals["err_dt2"] else None,
                err_grad_l6_acc=(
                    float(vals["err_grad_l6_acc"]) if vals["err_grad_l6_acc"] else None
                ),
                ebar=float(vals["ebar"]) if vals["ebar"] else None,
                rate=float(vals["rate"]) if vals["rate"] else None,
            ))
    return rows


# -- per-run error recording ----------------------------------------------


class ErrorRecorder:
    """Observer tracking errors of a run against a manufactured solution.

    Always provides the end-time velocity-gradient error and the second
    difference error; optionally accumulates the time sum
    tau * sum ||grad(u - u_h)||_L6^2 over observed levels (left endpoints),
    which roughly doubles the per-step cost.
    """

    def __init__(self, space, exact, accumulate_l6=False):
        self.space = space
        self.exact = exact
        self.accumulate_l6 = accumulate_l6
        self.l6_acc = 0.0
        self.history = []  # (t, l6_acc) per observed state
        self.last_state = None

    def __call__(self, state):
        if self.accumulate_l6:
            err = grad_error_lp(
                self.space, state.u, lambda p: self.exact.grad_u(p, state.t), p=6
            )
            self.l6_acc += state.tau * err**2
            self.history.append((state.t, self.l6_acc))
        self.last_state = state

    def final_errors(self):
        state = self.last_state
        t = state.t
        e_grad_dt = grad_error_lp(
            self.space, state.v, lambda p: self.exact.grad_dt_u(p, t), p=2
        )
        d2 = (state.v - state.v_prev) / state.tau
        e_dt2 = l2_error(self.space, d2, lambda p: self.exact.dt2_u(p, t))
        return e_grad_dt, e_dt2, (self.l6_acc if self.accumulate_l6 else None)
