import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spfv import model, primal
from spfv.driver import RunConfig, Simulation, build_simulation
from spfv.model import GasParams
from spfv.nodal import cell_values
from spfv.operators import init_from_potential

PARAMS = GasParams(gamma=1.4, cv=1.0, kappa=0.8)


def random_state(rng, params=PARAMS):
    rho = rng.uniform(0.5, 2.0)
    u = rng.normal(0, 0.4, 2)
    p = rng.uniform(0.5, 2.0)
    j = rng.normal(0, 0.3, 2)
    theta = p / (rho * params.cv * (params.gamma - 1))
    E = 0.5 * rho * u @ u + p / (params.gamma - 1) + 0.5 * params.kappa ** 2 * j @ j / rho
    return rho, u, p, theta, E, j


def simulation(mesh, rho, u, p, phi, params=PARAMS, alpha=True):
    j = init_from_potential(lambda x, y: phi, mesh)
    jc = cell_values(j, mesh)
    r, m, E = model.conserved_from_primitive(rho, u, p, jc, params)
    cfg = RunConfig(case="custom", t_final=1.0, params=params, alpha_correction=alpha)
    return Simulation(mesh, np.column_stack([r, m, E]), j, cfg)


# --------------------------------------------------------- physical flux

def test_rest_state_flux_is_pressure():
    f = model.euler_flux(np.array(1.3), np.zeros(2), np.array(0.7), np.array(2.0))
    np.testing.assert_allclose(f[1:3], 0.7 * np.eye(2))
    assert np.all(f[[0, 3]] == 0)
    g = model.thermal_flux(np.array(1.3), np.zeros(2), np.array(1.0), np.zeros(2), PARAMS)
    assert np.all(g == 0)


def test_thermal_momentum_flux_example():
    g = model.thermal_flux(np.array(1.0), np.zeros(2), np.array(1.0), np.array([1.0, 0.0]),
                           GasParams(kappa=1.0))
    np.testing.assert_allclose(g[1:3], np.diag([0.0, -1.0]), atol=1e-15)


def test_momentum_flux_matches_model_equation():
    """rho u u + p I + alpha j j + 0.5 (rho alpha' - alpha) |j|^2 I with alpha = kappa^2/rho."""
    rng = np.random.default_rng(0)
    for _ in range(50):
        rho, u, p, theta, E, j = random_state(rng)
        alpha = PARAMS.kappa ** 2 / rho
        dalpha = -PARAMS.kappa ** 2 / rho ** 2
        expected = (rho * np.outer(u, u) + p * np.eye(2) + alpha * np.outer(j, j)
                    + 0.5 * (rho * dalpha - alpha) * (j @ j) * np.eye(2))
        got = (model.euler_flux(np.array(rho), u, np.array(p), np.array(E))
               + model.thermal_flux(np.array(rho), u, np.array(theta), j, PARAMS))[1:3]
        np.testing.assert_allclose(got, expected, rtol=1e-13, atol=1e-13)


# ------------------------------------------------------------- Rusanov

def rusanov_scalar(left, right, n, z):
    """Scalar re-implementation of the Rusanov flux for (rho, m1, m2, E)."""
    out = []
    for (rho, u1, u2, p, E) in (left, right):
        un = u1 * n[0] + u2 * n[1]
        out.append([rho * un, rho * u1 * un + p * n[0], rho * u2 * un + p * n[1], (E + p) * un])
    fl, fr = out
    ql = [left[0], left[0] * left[1], left[0] * left[2], left[4]]
    qr = [right[0], right[0] * right[1], right[0] * right[2], right[4]]
    return [0.5 * (a + b) - 0.5 * z * (r - l) for a, b, l, r in zip(fl, fr, ql, qr)]


def test_rusanov_against_scalar_reference():
    n = np.array([np.cos(0.3), np.sin(0.3)])
    left = (1.0, 0.0, 0.0, 1.0, 2.5)
    right = (0.125, 0.0, 0.0, 0.1, 0.25)
    z = 1.7
    def state(s):
        rho, u1, u2, p, E = s
        return np.array([rho]), np.array([[u1, u2]]), np.array([p]), np.array([E])
    fl = primal._euler_normal(*state(left), n[None])
    fr = primal._euler_normal(*state(right), n[None])
    ql = np.array([[1.0, 0, 0, 2.5]])
    qr = np.array([[0.125, 0, 0, 0.25]])
    got = primal.rusanov(fl, fr, ql, qr, np.array([z]))[0]
    np.testing.assert_allclose(got, rusanov_scalar(left, right, n, z), rtol=1e-14, atol=1e-14)


def test_rusanov_consistency():
    rng = np.random.default_rng(1)
    rho, u, p, theta, E, j = random_state(rng)
    n = np.array([[0.6, 0.8]])
    f = primal._euler_normal(np.array([rho]), u[None], np.array([p]), np.array([E]), n)
    q = np.array([[rho, *(rho * u), E]])
    np.testing.assert_array_equal(primal.rusanov(f, f, q, q, np.array([3.0])), f)


def test_rusanov_density_jump_mass_flux():
    q = lambda r: np.array([[r, 0, 0, 1.0]])
    f = np.zeros((1, 4))
    out = primal.rusanov(f, f, q(1.0), q(0.5), np.array([2.0]))
    assert out[0, 0] == pytest.approx(-0.5 * 2.0 * (0.5 - 1.0))


# ------------------------------------------------------ node averaged g

def test_g_average_zero_and_equal_impulse():
    face_nodes = np.array([[0, 1]])
    n = np.array([[1.0, 0.0]])
    args = (np.array([1.2]), np.array([[0.3, 0.1]]), np.array([1.1]))
    zero = primal.g_face_average(np.zeros((2, 2)), *args, face_nodes, n, PARAMS)
    assert np.all(zero == 0)
    j = np.array([[0.2, -0.4], [0.2, -0.4]])
    avg = primal.g_face_average(j, *args, face_nodes, n, PARAMS)
    single = model.thermal_flux(args[0], args[1], args[2], j[:1], PARAMS)[0] @ n[0]
    np.testing.assert_allclose(avg[0], single, rtol=1e-15)


def test_g_average_symmetric_endpoints_cancel():
    """Mirror-image impulses (j1, j2) and (j1, -j2) on a vertical face: no y-momentum."""
    face_nodes = np.array([[0, 1]])
    n = np.array([[1.0, 0.0]])
    j = np.array([[0.3, 0.2], [0.3, -0.2]])
    g = primal.g_face_average(j, np.array([1.0]), np.array([[0.2, 0.0]]), np.array([1.0]),
                              face_nodes, n, PARAMS)
    assert abs(g[0, 2]) <= 1e-12


# --------------------------------------------------------- correction

def pair_fluxes(rng, n):
    cells = []
    for _ in range(2):
        rho, u, p, theta, E, j = random_state(rng)
        prim = model.Primitive(rho=np.array([rho]), u=u[None], p=np.array([p]),
                               theta=np.array([theta]),
                               eta=np.array([model.pressure_to_eta(rho, p, PARAMS)]))
        dual = model.dual_vars_from_primitive(prim, j[None], PARAMS).stack()
        h = primal.stacked_flux(np.array([rho]), u[None], np.array([p]), np.array([theta]),
                                np.array([E]), j[None], PARAMS)[0] @ n
        fs = model.entropy_flux_physical(np.array([rho]), u[None], prim.s, j[None], PARAMS)[0] @ n
        cells.append((dual, h[None], np.array([fs])))
    return cells


def test_alpha_zero_for_identical_states():
    rng = np.random.default_rng(2)
    n = np.array([1.0, 0.0])
    (pc, hc, fc), _ = pair_fluxes(rng, n)
    hhat = hc + 0.1
    assert primal.alpha_factor(hhat, pc, pc, hc, hc, fc, fc)[0] == 0.0


@settings(max_examples=200)
@given(st.integers(0, 2 ** 31 - 1), st.floats(0, 2 * np.pi))
def test_fluctuation_identity(seed, angle):
    rng = np.random.default_rng(seed)
    n = np.array([np.cos(angle), np.sin(angle)])
    (pc, hc, fc), (pd, hd, fd) = pair_fluxes(rng, n)
    hhat = 0.5 * (hc + hd) + rng.normal(0, 0.1, hc.shape)
    a = primal.alpha_factor(hhat, pc, pd, hc, hd, fc, fd)
    htilde = hhat - a[:, None] * (pd - pc)
    lhs = np.einsum("fi,fi->f", pd - pc, htilde)
    rhs = (np.einsum("fi,fi->f", pd, hd) - fd) - (np.einsum("fi,fi->f", pc, hc) - fc)
    scale = np.abs(pd).max() * np.abs(hd).max() + np.abs(pc).max() * np.abs(hc).max()
    assert abs(lhs[0] - rhs[0]) <= 1e-12 * scale


def test_entropy_flux_consistency_and_antisymmetry():
    rng = np.random.default_rng(3)
    n = np.array([0.0, 1.0])
    (pc, hc, fc), (pd, hd, fd) = pair_fluxes(rng, n)
    assert primal.entropy_flux_face(hc, pc, pc, hc, hc, fc, fc)[0] == pytest.approx(fc[0], rel=1e-13)
    ht = 0.5 * (hc + hd)
    fwd = primal.entropy_flux_face(ht, pc, pd, hc, hd, fc, fd)
    bwd = primal.entropy_flux_face(-ht, pd, pc, -hd, -hc, -fd, -fc)
    np.testing.assert_allclose(bwd, -fwd, rtol=1e-14)


def test_detector_marks_jumps():
    ok = primal.smooth_faces(np.array([1.0, 1.0, 1.0]), np.array([1.1, 1.5, 1.0]),
                             np.ones(3), np.array([1.0, 1.0, 2.0]))
    assert ok.tolist() == [True, False, False]


# ---------------------------------------------------------- assembled rhs

def test_uniform_state_rhs_vanishes(unit_mesh):
    m = unit_mesh
    one = np.ones(m.n_cells)
    sim = simulation(m, 1.2 * one, np.zeros((m.n_cells, 2)), 0.8 * one, np.zeros(m.n_cells))
    assert np.abs(sim.rates()["dU"]).max() <= 1e-13


def test_mass_and_energy_telescope(unit_mesh):
    m = unit_mesh
    x, y = m.generators.T
    rho = 1 + 0.2 * np.sin(2 * np.pi * x) * np.cos(np.pi * y)
    u = 0.2 * np.column_stack([np.sin(np.pi * y), np.cos(2 * np.pi * x)])
    p = 1 + 0.1 * x * y
    for alpha in (False, True):
        sim = simulation(m, rho, u, p, 0.05 * np.sin(3 * x + y), alpha=alpha)
        dU = sim.rates()["dU"]
        vol = m.cell_volume
        assert abs(vol @ dU[:, 0]) <= 1e-13 * (vol @ np.abs(dU[:, 0]))
        assert abs(vol @ dU[:, 3]) <= 1e-12 * (vol @ np.abs(dU[:, 3]))


def test_mirror_symmetry_preserved(square_lattice):
    m = square_lattice
    x, y = m.generators.T
    rho = 1 + 0.2 * np.sin(2 * np.pi * x) + 0.1 * (y - 0.5) ** 2
    u = np.column_stack([0.1 * np.cos(2 * np.pi * x), 0.2 * (y - 0.5)])
    p = 1 + 0.1 * x
    phi = 0.05 * np.sin(2 * np.pi * x) + 0.02 * (y - 0.5) ** 2
    dU = simulation(m, rho, u, p, phi).rates()["dU"]
    key = {(round(a, 9), round(b, 9)): i for i, (a, b) in enumerate(m.generators)}
    mirror = np.array([key[(round(a, 9), round(1 - b, 9))] for a, b in m.generators])
    sign = np.array([1, 1, -1, 1])
    np.testing.assert_allclose(dU[mirror] * sign, dU, atol=1e-12)


def test_euler_rows_are_dissipative(unit_mesh):
    """Rusanov part of the face flux produces entropy: -0.5 z dp . dq >= 0 per face."""
    m = unit_mesh
    rng = np.random.default_rng(4)
    x, y = m.generators.T
    rho = 1 + 0.3 * rng.random(m.n_cells)
    u = rng.normal(0, 0.2, (m.n_cells, 2))
    p = 1 + 0.3 * rng.random(m.n_cells)
    sim = simulation(m, rho, u, p, np.zeros(m.n_cells))
    cells = sim.thermo()
    inner = ~m.face_is_boundary
    c, d = m.face_cells[inner].T
    dq = cells.U[d] - cells.U[c]
    dp = (cells.dual[d] - cells.dual[c])[:, primal.ROWS_EVOLVED]
    assert (-np.einsum("fi,fi->f", dp, dq) >= -1e-14).all()


# ---------------------------------------------------------- entropy residual

def test_entropy_residual_uniform_state(unit_mesh):
    m = unit_mesh
    one = np.ones(m.n_cells)
    sim = simulation(m, one, np.zeros((m.n_cells, 2)), one, np.zeros(m.n_cells))
    sim.step(1e-3)
    assert np.abs(sim.last.entropy_residual).max() <= 1e-13


def test_entropy_source_closed_form():
    rho, theta, tau = np.array([2.0]), np.array([0.5]), np.array([0.1])
    j = np.array([[0.3, 0.4]])
    prim = model.Primitive(rho=rho, u=np.zeros((1, 2)), p=rho * theta * 0.4, theta=theta,
                           eta=np.zeros(1))
    cells = primal.CellThermo(U=None, prim=prim, j=j, speed=None, dual=None, s=None)
    src = primal.entropy_source(cells, tau, PARAMS)
    assert src[0] == pytest.approx(PARAMS.kappa ** 2 / 2.0 * 0.25 / (0.5 * 0.1), rel=1e-14)


def test_rp1_cellwise_entropy_production():
    """Shock run: the cell entropy residual stays above -1e-10 times its scale."""
    sim = build_simulation("rp1", h=1 / 60, seed=0)
    worst = 0.0
    while sim.t < 0.1:
        sim.step()
        r = sim.last.entropy_residual
        worst = min(worst, r.min() / max(np.abs(r).max(), 1e-300))
    assert worst >= -1e-10
