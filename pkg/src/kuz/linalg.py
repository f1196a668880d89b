"""Sparse solves behind a fixed contract.

Matrices are scipy CSR arrays.  The direct path factorizes with SuperLU and
checks the true residual afterwards; the iterative path is BiCGStab with a
Jacobi preconditioner, warm-startable, again with the true residual checked
rather than trusting the solver's own stopping test.  Both are deterministic
for identical inputs.
"""

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import bicgstab, splu

DEFAULT_TOL = 1e-10


class SolverError(Exception):
    pass


def _residual(a, x, b, norm_b):
    if norm_b == 0.0:
        return float(np.linalg.norm(b - a @ x))
    return float(np.linalg.norm(b - a @ x) / norm_b)


def _suspect_row(a):
    """Best-effort diagnosis for a singular factorization: a zero row or pivot."""
    d = a.diagonal()
    zd = np.flatnonzero(d == 0.0)
    if zd.size:
        return int(zd[0]), "zero diagonal"
    row_norm = np.abs(a).sum(axis=1)
    zr = np.flatnonzero(row_norm == 0.0)
    if zr.size:
        return int(zr[0]), "empty row"
    return None, None


def solve_direct(a, b, tol=DEFAULT_TOL):
    """LU solve with a residual guarantee of ||b - Ax|| / ||b|| <= tol."""
    b = np.asarray(b, dtype=float)
    if a.shape[0] != a.shape[1] or a.shape[0] != b.shape[0]:
        raise ValueError(f"shape mismatch: matrix {a.shape}, rhs {b.shape}")
    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        return np.zeros_like(b)
    try:
        lu = splu(sp.csc_matrix(a))
        x = lu.solve(b)
    except RuntimeError as exc:
        row, why = _suspect_row(a)
        hint = f" (row {row}: {why})" if row is not None else ""
        raise SolverError(f"singular matrix in direct solve{hint}") from exc
    if not np.isfinite(x).all():
        row, why = _suspect_row(a)
        hint = f" (row {row}: {why})" if row is not None else ""
        raise SolverError(f"direct solve produced non-finite values{hint}")
    res = _residual(a, x, b, norm_b)
    if res > tol:
        raise SolverError(f"direct solve residual {res:.3e} exceeds {tol:.1e}")
    return x


def solve_iterative(a, b, x0=None, tol=DEFAULT_TOL, maxiter=1000):
    """Preconditioned BiCGStab; returns (x, iterations).

    A zero right-hand side short-circuits to the zero vector.  Raises
    SolverError when the true residual never reaches tol, reporting the last
    residual so callers can decide to fall back to the direct path.
    """
    b = np.asarray(b, dtype=float)
    if a.shape[0] != a.shape[1] or a.shape[0] != b.shape[0]:
        raise ValueError(f"shape mismatch: matrix {a.shape}, rhs {b.shape}")
    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        return np.zeros_like(b), 0

    d = a.diagonal()
    inv_d = np.where(d != 0.0, 1.0 / np.where(d != 0.0, d, 1.0), 1.0)
    precond = sp.dia_array((inv_d[None, :], [0]), shape=a.shape)

    count = [0]

    def cb(_):
        count[0] += 1

    x, info = bicgstab(
        a, b, x0=x0, rtol=tol, atol=0.0, maxiter=maxiter, M=precond, callback=cb
    )
    res = _residual(a, x, b, norm_b)
    if info != 0 or res > tol:
        raise SolverError(
            f"iterative solve stalled after {count[0]} iterations, residual {res:.3e}"
        )
    return x, count[0]
