import numpy as np
from hypothesis import given, settings, strategies as st

from spfv.cases import RP1, case_setup, riemann_states
from spfv.mesh import generate_voronoi
from spfv.operators import (boundary_closure, curl_cell, curl_node, grad_node, grad_node_raw,
                            init_from_potential)


def smooth_potential(coef):
    """Random trigonometric potential on the unit square."""
    a, b, c, d, kx, ky = coef

    def phi(x, y):
        return a * np.sin(kx * x + b) * np.cos(ky * y + c) + d * x * y
    return phi


coef_strategy = st.tuples(st.floats(-2, 2), st.floats(-3, 3), st.floats(-3, 3), st.floats(-2, 2),
                          st.floats(0.5, 8), st.floats(0.5, 8))


def circulation(psi, mesh, c):
    """Trapezoidal line integral of a nodal field around cell c, divided by its area."""
    nodes = mesh.cell_nodes[c]
    xy, v = mesh.node_xy[nodes], psi[nodes]
    dx = np.roll(xy, -1, axis=0) - xy
    vm = 0.5 * (v + np.roll(v, -1, axis=0))
    return np.einsum("ki,ki->", vm, dx) / mesh.cell_volume[c]


def test_constant_potential_has_zero_gradient(unit_mesh):
    g = grad_node(np.full(unit_mesh.n_cells, 3.7), unit_mesh)
    assert np.abs(g).max() <= 1e-12


def test_linear_potential_exact(unit_mesh, rough_mesh):
    for m in (unit_mesh, rough_mesh):
        a = np.array([0.7, -1.3])
        g = grad_node_raw(m.generators @ a + 0.4, m)[m.interior_nodes]
        assert np.abs(g - a).max() <= 1e-12 * np.linalg.norm(a)


def test_constant_field_curl_free(unit_mesh):
    psi = np.tile([0.3, -2.0], (unit_mesh.n_nodes, 1))
    assert np.abs(curl_cell(psi, unit_mesh)).max() <= 1e-13


def test_rigid_rotation_curl(unit_mesh, rough_mesh):
    for m in (unit_mesh, rough_mesh):
        psi = np.column_stack([-m.node_xy[:, 1], m.node_xy[:, 0]])
        curl = curl_cell(psi, m)
        oracle = np.array([circulation(psi, m, c) for c in range(m.n_cells)])
        np.testing.assert_allclose(oracle, 2.0, atol=1e-12)
        np.testing.assert_allclose(curl, oracle, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(coef_strategy, st.sampled_from([0, 1, 2, 3, 4]))
def test_curl_grad_identity(coef, which):
    mesh = _meshes()[which]
    phi = smooth_potential(coef)(*mesh.generators.T)
    g = grad_node(phi, mesh)
    scale = max(np.abs(g).max(), 1.0) * 2 * sum(np.subtract(mesh.domain[2:], mesh.domain[:2]))
    assert np.abs(curl_cell(g, mesh)).max() <= 1e-13 * scale
    assert np.abs(curl_node(g, mesh)).max() <= 1e-13 * scale


_MESHES = []


def _meshes():
    if not _MESHES:
        _MESHES.extend(generate_voronoi((0, 0, 1, 1), n, lloyd_iters=k, seed=s)
                       for n, k, s in ((60, 0, 11), (90, 1, 12), (150, 3, 13), (200, 2, 14), (40, 0, 15)))
    return _MESHES


def test_curl_node_partition_of_unity(unit_mesh):
    np.testing.assert_allclose(unit_mesh.node_average @ np.full(unit_mesh.n_cells, 2.5), 2.5, rtol=1e-14)


def test_curl_node_is_convex_average(unit_mesh):
    rng = np.random.default_rng(0)
    psi = rng.normal(size=(unit_mesh.n_nodes, 2))
    cc = curl_cell(psi, unit_mesh)
    cn = curl_node(psi, unit_mesh, cc)
    for p in range(unit_mesh.n_nodes):
        around = cc[unit_mesh.node_cells[p]]
        assert around.min() - 1e-12 <= cn[p] <= around.max() + 1e-12


def test_closure_zeroes_boundary_curl(unit_mesh, rough_mesh):
    for m in (unit_mesh, rough_mesh):
        x, y = m.generators.T
        g = grad_node(np.sin(2 * x) * np.cos(3 * y) + x * x, m)
        assert np.abs(curl_cell(g, m)[m.boundary_cells]).max() <= 1e-13
        # wall normal component vanishes
        bnd = m.node_on_boundary
        assert np.abs(np.einsum("ki,ki->k", g[bnd], m.node_wall_normal[bnd])).max() <= 1e-14


def test_closure_leaves_interior_untouched(unit_mesh):
    rng = np.random.default_rng(1)
    psi = rng.normal(size=(unit_mesh.n_nodes, 2))
    out = boundary_closure(psi, unit_mesh)
    inner = unit_mesh.interior_nodes
    assert np.array_equal(out[inner], psi[inner])


def test_closure_prescribed_normal_component(unit_mesh):
    m = unit_mesh
    out = boundary_closure(np.zeros((m.n_nodes, 2)), m, jn=0.37)
    walls = m.node_on_boundary & ~m.node_is_corner
    normal = np.einsum("ki,ki->k", out[walls], m.node_wall_normal[walls])
    np.testing.assert_allclose(normal, 0.37, rtol=0, atol=1e-15)
    assert np.array_equal(out[m.interior_nodes], np.zeros((len(m.interior_nodes), 2)))


def test_wall_corner_nodes_are_zero(unit_mesh):
    rng = np.random.default_rng(2)
    out = boundary_closure(rng.normal(size=(unit_mesh.n_nodes, 2)), unit_mesh)
    assert np.abs(out[unit_mesh.node_is_corner]).max() == 0.0


def test_init_zero_potential(unit_mesh):
    j = init_from_potential(lambda x, y: 0.0 * x, unit_mesh)
    assert np.abs(j).max() == 0.0


def test_init_riemann_potential_piecewise_constant():
    setup = case_setup(RP1)
    m = generate_voronoi(setup.domain, 600, seed=3)
    j = init_from_potential(setup.potential, m)
    (_, _, _, _, jl, _), (_, _, _, _, jr, _), xd = riemann_states(RP1)
    far = np.abs(m.node_xy[:, 0] - xd) > 3 * m.h
    inner = far & ~m.node_on_boundary
    left = inner & (m.node_xy[:, 0] < xd)
    right = inner & (m.node_xy[:, 0] > xd)
    np.testing.assert_allclose(j[left, 0], jl, atol=1e-12)
    np.testing.assert_allclose(j[right, 0], jr, atol=1e-12)
    np.testing.assert_allclose(j[inner, 1], 0.0, atol=1e-12)


def test_init_potential_curl_free(rough_mesh):
    j = init_from_potential(lambda x, y: np.exp(-((x - 1) ** 2 + (y - 0.5) ** 2) * 8), rough_mesh)
    assert np.abs(curl_node(j, rough_mesh)).max() <= 1e-13


def test_gradient_first_order():
    """L_inf gradient error of a smooth potential decays at about first order."""
    errs, hs = [], []
    for n in (400, 1600):
        m = generate_voronoi((0, 0, 1, 1), n, seed=4)
        x, y = m.generators.T
        g = grad_node_raw(np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y), m)
        X, Y = m.node_xy.T
        exact = 2 * np.pi * np.column_stack([np.cos(2 * np.pi * X) * np.cos(2 * np.pi * Y),
                                             -np.sin(2 * np.pi * X) * np.sin(2 * np.pi * Y)])
        errs.append(np.abs(g - exact)[m.interior_nodes].max())
        hs.append(m.h)
    order = np.log(errs[0] / errs[1]) / np.log(hs[0] / hs[1])
    assert order >= 0.8
