import math

import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss

from kuz.mesh import build_rect_mesh
from kuz.space import (
    MAX_QUAD_ORDER,
    assemble_convection,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    build_space,
    evaluate_at_points,
    evaluate_field,
    lattice_nodes,
    num_local_dofs,
    quadrature,
    shape_functions,
)


def ref_monomial_integral(a, b):
    # int над reference triangle of x^a y^b
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


def brute_triangle_quadrature(n=24):
    """Independent rule: plain Gauss-Legendre squared, x = s, y = t(1-s)."""
    xs, ws = leggauss(n)
    xs = (xs + 1.0) / 2.0
    ws = ws / 2.0
    pts, wts = [], []
    for s, w1 in zip(xs, ws):
        for t, w2 in zip(xs, ws):
            pts.append((s, t * (1.0 - s)))
            wts.append(w1 * w2 * (1.0 - s))
    return np.array(pts), np.array(wts)


@pytest.mark.parametrize("order", [1, 2, 3, 4, 6, 9, 12])
def test_quadrature_exact_for_monomials(order):
    rule = quadrature(order)
    assert (rule.weights > 0).all()
    assert rule.weights.sum() == pytest.approx(0.5, abs=1e-14)
    for a in range(order + 1):
        for b in range(order + 1 - a):
            got = (rule.weights * rule.points[:, 0] ** a * rule.points[:, 1] ** b).sum()
            assert got == pytest.approx(ref_monomial_integral(a, b), rel=1e-12, abs=1e-16)


def test_quadrature_rejects_bad_order():
    with pytest.raises(ValueError):
        quadrature(0)
    with pytest.raises(ValueError):
        quadrature(MAX_QUAD_ORDER + 1)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_shape_functions_nodal(k):
    nodes = lattice_nodes(k)
    ref = np.array([(b / k, c / k) for (a, b, c) in nodes])
    vals, _ = shape_functions(k, ref)
    assert np.allclose(vals, np.eye(len(nodes)), atol=1e-13)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_partition_of_unity(k):
    rng = np.random.default_rng(3)
    r = rng.uniform(0, 1, size=(40, 2))
    r[r.sum(axis=1) > 1] /= 2.0
    vals, grads = shape_functions(k, r)
    assert np.allclose(vals.sum(axis=1), 1.0, atol=1e-12)
    assert np.allclose(grads.sum(axis=1), 0.0, atol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_polynomial_reproduction(k):
    # interpolating a degree-k polynomial at the lattice nodes reproduces it
    rng = np.random.default_rng(11)
    coeffs = {(a, b): rng.standard_normal() for a in range(k + 1) for b in range(k + 1 - a)}

    def poly(p):
        return sum(c * p[:, 0] ** a * p[:, 1] ** b for (a, b), c in coeffs.items())

    def poly_grad(p):
        gx = sum(c * a * p[:, 0] ** max(a - 1, 0) * p[:, 1] ** b for (a, b), c in coeffs.items())
        gy = sum(c * b * p[:, 0] ** a * p[:, 1] ** max(b - 1, 0) for (a, b), c in coeffs.items())
        return np.stack([gx, gy], axis=1)

    nodes = lattice_nodes(k)
    ref = np.array([(b / k, c / k) for (a, b, c) in nodes])
    nodal = poly(ref)
    pts = rng.uniform(0, 1, size=(30, 2))
    pts[pts.sum(axis=1) > 1] /= 2.0
    vals, grads = shape_functions(k, pts)
    assert np.allclose(vals @ nodal, poly(pts), atol=1e-12)
    assert np.allclose(np.einsum("l,pli->pi", nodal, grads), poly_grad(pts), atol=1e-11)


@pytest.mark.parametrize("k,nx,ny", [(1, 4, 4), (2, 3, 5), (3, 2, 2)])
def test_dof_counts(k, nx, ny):
    space = build_space(build_rect_mesh((0, 1, 0, 1), nx, ny), k)
    assert space.num_dofs == (k * nx + 1) * (k * ny + 1)
    assert num_local_dofs(k) == space.cell_dofs.shape[1]
    n_interior = (k * nx - 1) * (k * ny - 1)
    assert len(space.free) == n_interior
    assert space.dirichlet_mask.sum() == space.num_dofs - n_interior


def test_dof_coords_cover_lattice():
    space = build_space(build_rect_mesh((0, 1, 0, 1), 2, 2), 2)
    got = space.dof_coords[np.lexsort(space.dof_coords.T)]
    g = np.linspace(0, 1, 5)
    want = np.array([(x, y) for y in g for x in g])
    want = want[np.lexsort(want.T)]
    assert np.allclose(got, want, atol=1e-14)


def _dense(mat):
    return np.asarray(mat.todense())


@pytest.mark.parametrize("k", [1, 2, 3])
def test_assembly_against_brute_force(k):
    """Entrywise check of mass/stiffness/convection on a skewed 2-triangle mesh."""
    mesh = build_rect_mesh((0.2, 1.7, -0.3, 0.9), 1, 1)
    space = build_space(mesh, k)
    rng = np.random.default_rng(5)
    wfield = rng.standard_normal(space.num_dofs)

    bpts, bwts = brute_triangle_quadrature()
    vals, grads = shape_functions(k, bpts)
    nloc = num_local_dofs(k)
    mass = np.zeros((space.num_dofs, space.num_dofs))
    stiff = np.zeros_like(mass)
    conv = np.zeros_like(mass)
    for c in range(mesh.num_triangles):
        v = mesh.vertices[mesh.triangles[c]]
        jac = np.stack([v[1] - v[0], v[2] - v[0]], axis=1)
        det = abs(np.linalg.det(jac))
        gphys = grads @ np.linalg.inv(jac)  # (npts, nloc, 2)
        dofs = space.cell_dofs[c]
        gw = np.einsum("l,pli->pi", wfield[dofs], gphys)
        for i in range(nloc):
            for j in range(nloc):
                mass[dofs[i], dofs[j]] += det * (bwts * vals[:, i] * vals[:, j]).sum()
                stiff[dofs[i], dofs[j]] += det * (
                    bwts * (gphys[:, i] * gphys[:, j]).sum(axis=1)
                ).sum()
                conv[dofs[i], dofs[j]] += det * (
                    bwts * vals[:, i] * (gw * gphys[:, j]).sum(axis=1)
                ).sum()

    assert np.allclose(_dense(assemble_mass(space)), mass, atol=1e-12)
    assert np.allclose(_dense(assemble_stiffness(space)), stiff, atol=1e-12)
    assert np.allclose(_dense(assemble_convection(space, wfield)), conv, atol=1e-12)


def test_weighted_mass_against_brute_force():
    mesh = build_rect_mesh((0.0, 1.0, 0.0, 2.0), 1, 1)
    space = build_space(mesh, 2)
    rng = np.random.default_rng(9)
    field = rng.standard_normal(space.num_dofs)
    a, b = 0.3, 1.7

    bpts, bwts = brute_triangle_quadrature()
    vals, _ = shape_functions(2, bpts)
    want = np.zeros((space.num_dofs, space.num_dofs))
    for c in range(mesh.num_triangles):
        v = mesh.vertices[mesh.triangles[c]]
        det = abs(np.linalg.det(np.stack([v[1] - v[0], v[2] - v[0]], axis=1)))
        dofs = space.cell_dofs[c]
        w = a + b * (vals @ field[dofs])
        for i in range(len(dofs)):
            for j in range(len(dofs)):
                want[dofs[i], dofs[j]] += det * (bwts * w * vals[:, i] * vals[:, j]).sum()

    got = assemble_mass(space, weight=(a, b, field))
    assert np.allclose(_dense(got), want, atol=1e-12)


def test_unweighted_mass_is_weighted_with_zero_slope():
    # the two call forms must agree bit for bit, they share one code path
    space = build_space(build_rect_mesh((0, 1, 0, 1), 3, 3), 2)
    field = np.linspace(-1, 1, space.num_dofs)
    plain = assemble_mass(space)
    weighted = assemble_mass(space, weight=(1.0, 0.0, field))
    assert (plain.indptr == weighted.indptr).all()
    assert (plain.indices == weighted.indices).all()
    assert (plain.data == weighted.data).all()


def test_p1_stiffness_five_point_stencil():
    nx = 4
    space = build_space(build_rect_mesh((0, 1, 0, 1), nx, nx), 1)
    stiff = _dense(assemble_stiffness(space))
    center = np.flatnonzero(
        np.isclose(space.dof_coords, 0.5).all(axis=1)
    )[0]
    row = stiff[center]
    assert row[center] == pytest.approx(4.0, abs=1e-13)
    h = 1.0 / nx
    for dx, dy, val in [
        (h, 0, -1.0), (-h, 0, -1.0), (0, h, -1.0), (0, -h, -1.0),
        (h, h, 0.0), (-h, -h, 0.0),
    ]:
        other = np.flatnonzero(
            np.isclose(space.dof_coords[:, 0], 0.5 + dx)
            & np.isclose(space.dof_coords[:, 1], 0.5 + dy)
        )[0]
        assert row[other] == pytest.approx(val, abs=1e-13)
    assert row.sum() == pytest.approx(0.0, abs=1e-13)


def test_p1_mass_diagonal_interior():
    nx = 5
    space = build_space(build_rect_mesh((0, 1, 0, 1), nx, nx), 1)
    mass = _dense(assemble_mass(space))
    h = 1.0 / nx
    for d in space.free:
        assert mass[d, d] == pytest.approx(h * h / 2.0, rel=1e-12)


def test_load_vector_total():
    space = build_space(build_rect_mesh((0, 1, 0, 1), 32, 32), 2)
    b = assemble_load(space, lambda p: np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1]))
    assert b.sum() == pytest.approx(4.0 / np.pi**2, abs=1e-6)


def test_point_evaluation_of_interpolated_polynomial():
    space = build_space(build_rect_mesh((0, 2, 0, 1), 6, 3), 2)
    c = space.dof_coords
    u = 1.0 + 2.0 * c[:, 0] - c[:, 1] + 0.5 * c[:, 0] * c[:, 1] + c[:, 1] ** 2
    rng = np.random.default_rng(2)
    pts = rng.uniform((0, 0), (2, 1), size=(50, 2))
    vals, grads = evaluate_at_points(space, u, pts)
    want = 1.0 + 2.0 * pts[:, 0] - pts[:, 1] + 0.5 * pts[:, 0] * pts[:, 1] + pts[:, 1] ** 2
    gx = 2.0 + 0.5 * pts[:, 1]
    gy = -1.0 + 0.5 * pts[:, 0] + 2.0 * pts[:, 1]
    assert np.allclose(vals, want, atol=1e-12)
    assert np.allclose(grads, np.stack([gx, gy], axis=1), atol=1e-11)


def test_evaluate_field_single_cell():
    space = build_space(build_rect_mesh((0, 1, 0, 1), 2, 2), 1)
    u = space.dof_coords[:, 0].copy()  # the function x
    assert evaluate_field(space, u, 0, np.array([0.3, 0.1])) == pytest.approx(0.3)


def test_quad_scale_integrates_area():
    space = build_space(build_rect_mesh((0.2, 1.7, -0.3, 0.9), 3, 2), 2)
    assert space.quad_scale.sum() == pytest.approx(1.5 * 1.2, rel=1e-13)
