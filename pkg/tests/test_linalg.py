import numpy as np
import pytest
from scipy import sparse

from kuz.linalg import SolverError, solve_direct, solve_iterative


def gaussian_elimination(a, b):
    """Textbook dense solve with partial pivoting, used as an oracle."""
    a = np.array(a, dtype=float)
    x = np.array(b, dtype=float)
    n = len(x)
    for col in range(n):
        p = col + np.argmax(np.abs(a[col:, col]))
        if p != col:
            a[[col, p]] = a[[p, col]]
            x[[col, p]] = x[[p, col]]
        for row in range(col + 1, n):
            f = a[row, col] / a[col, col]
            a[row, col:] -= f * a[col, col:]
            x[row] -= f * x[col]
    for col in range(n - 1, -1, -1):
        x[col] = (x[col] - a[col, col + 1 :] @ x[col + 1 :]) / a[col, col]
    return x


def random_spd(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, n)) * (rng.random((n, n)) < 0.3)
    a = m @ m.T + n * np.eye(n)
    return sparse.csr_array(a)


def test_identity():
    a = sparse.eye_array(5, format="csr")
    b = np.arange(5.0)
    assert np.allclose(solve_direct(a, b), b)


def test_diagonal():
    d = np.array([2.0, 4.0, 0.5])
    a = sparse.csr_array(np.diag(d))
    assert np.allclose(solve_direct(a, np.ones(3)), 1.0 / d)


@pytest.mark.parametrize("n,seed", [(12, 0), (40, 1), (80, 2)])
def test_direct_matches_elimination_oracle(n, seed):
    a = random_spd(n, seed)
    rng = np.random.default_rng(seed + 100)
    b = rng.standard_normal(n)
    want = gaussian_elimination(a.todense(), b)
    assert np.allclose(solve_direct(a, b), want, atol=1e-10)


def test_iterative_matches_direct():
    a = random_spd(60, 4)
    b = np.random.default_rng(5).standard_normal(60)
    x, iters = solve_iterative(a, b)
    assert iters > 0
    assert np.allclose(x, solve_direct(a, b), atol=1e-8)


def test_iterative_zero_rhs_shortcut():
    a = random_spd(20, 6)
    x, iters = solve_iterative(a, np.zeros(20))
    assert iters == 0
    assert (x == 0).all()


def test_iterative_warm_start():
    a = random_spd(30, 7)
    b = np.random.default_rng(8).standard_normal(30)
    exact = solve_direct(a, b)
    x, iters_cold = solve_iterative(a, b)
    x2, iters_warm = solve_iterative(a, b, x0=exact)
    assert np.allclose(x2, exact, atol=1e-8)
    assert iters_warm <= iters_cold


def test_singular_matrix_raises():
    a = sparse.csr_array(np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(SolverError):
        solve_direct(a, np.ones(2))


def test_zero_diagonal_mentioned_in_error():
    row = np.array([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 1.0]])
    a = sparse.csr_array(row)
    try:
        solve_direct(a, np.ones(3))
    except SolverError as err:
        assert "singular" in str(err).lower()
    else:
        pytest.fail("expected SolverError")


def test_shape_mismatch():
    a = sparse.eye_array(4, format="csr")
    with pytest.raises(ValueError):
        solve_direct(a, np.ones(3))
