import numpy as np
import pytest

from spfv import model
from spfv.cases import (EXPLOSION, RP1, RP2, VORTEX, canonical_case, case_setup,
                        manufactured_source, riemann_states)
from spfv.driver import (AdmissibilityError, DIAGNOSTIC_COLUMNS, RunConfig, Simulation,
                         build_simulation, compute_dt, convergence_study, error_norms,
                         interior_conservation_check,
                         observed_orders, uniform_run_check)
from spfv.mesh import generate_voronoi, voronoi_from_seeds
from spfv.model import GasParams


def lattice(n):
    g = (np.arange(n) + 0.5) / n
    x, y = np.meshgrid(g, g)
    return voronoi_from_seeds((0, 0, 1, 1), np.column_stack([x.ravel(), y.ravel()]))


# ------------------------------------------------------------ time step

def test_dt_uniform_state(unit_mesh):
    dt = compute_dt(np.full(unit_mesh.n_cells, 2.0), unit_mesh, 0.45)
    assert dt == pytest.approx(0.45 * np.sqrt(unit_mesh.cell_volume.min()) / 2.0, rel=1e-15)


def test_dt_halves_with_mesh_size():
    dt1 = compute_dt(np.ones(100), lattice(10), 0.5)
    dt2 = compute_dt(np.ones(400), lattice(20), 0.5)
    assert dt2 == pytest.approx(0.5 * dt1, rel=1e-12)


def test_dt_rejects_non_positive_speed(unit_mesh):
    s = np.ones(unit_mesh.n_cells)
    s[3] = 0.0
    with pytest.raises(model.StateError):
        compute_dt(s, unit_mesh, 0.45)


def test_dt_independent_of_relaxation_time():
    mesh = generate_voronoi(case_setup(EXPLOSION).domain, 400, seed=2)
    dts = []
    for K in (1e-3, 1e-9):
        params = GasParams(gamma=5 / 3, cv=1.5, kappa=0.1, K=K, tau_mode=model.FOURIER)
        sim = build_simulation(EXPLOSION, mesh=mesh, params=params)
        dts.append(sim.step())
    assert dts[0] == dts[1]


# --------------------------------------------------------------- config

def test_run_config_validation():
    p = GasParams()
    for bad in (dict(t_final=0.0), dict(cfl=0.0), dict(cfl=1.5), dict(freeze_z="always"),
                dict(max_steps=0), dict(h=-1.0)):
        kw = dict(case="custom", t_final=1.0, params=p)
        kw.update(bad)
        with pytest.raises(ValueError):
            RunConfig(**kw)


def test_unknown_case():
    with pytest.raises(ValueError):
        canonical_case("tornado")
    assert canonical_case("manufactured") == "convergence"


# ------------------------------------------------------------ stepping

def test_uniform_state_exact_after_100_steps(unit_mesh):
    dU, jmax = uniform_run_check(unit_mesh, GasParams(kappa=0.5), steps=100)
    assert dU <= 1e-13 and jmax <= 1e-13


def test_reproducible_diagnostics():
    runs = []
    for _ in range(2):
        sim = build_simulation(RP2, h=1 / 40, seed=3, t_final=0.05)
        sim.run()
        runs.append(sim.diagnostics.as_array())
    assert runs[0].shape[1] == len(DIAGNOSTIC_COLUMNS)
    assert np.array_equal(runs[0], runs[1])
    assert (np.diff(runs[0][:, 0]) > 0).all()


def test_run_stops_at_final_time():
    sim = build_simulation(RP1, h=1 / 40, seed=1, t_final=0.03)
    sim.run()
    assert sim.t == pytest.approx(0.03, rel=1e-12)


def test_max_steps_limits_run():
    sim = build_simulation(RP1, h=1 / 40, seed=1, t_final=1.0, max_steps=3)
    sim.run()
    assert sim.steps == 3


def test_admissibility_failure_reports_step_and_cells(unit_mesh):
    m = unit_mesh
    n = m.n_cells
    x = m.generators - 0.5
    u = 5.0 * x / np.linalg.norm(x, axis=1, keepdims=True)
    rho, mom, E = model.conserved_from_primitive(np.ones(n), u, np.full(n, 1e-6),
                                                 np.zeros((n, 2)), GasParams())
    sim = Simulation(m, np.column_stack([rho, mom, E]), np.zeros((m.n_nodes, 2)),
                     RunConfig(case="custom", t_final=1.0, params=GasParams()))
    with pytest.raises(AdmissibilityError) as info:
        sim.step(0.5)
    assert info.value.step == 1 and info.value.cells.size > 0


def test_vortex_curl_free_evolution():
    sim = build_simulation(VORTEX, h=0.4, seed=0)
    sim.run()
    assert sim.t == pytest.approx(0.5)
    assert sim.diagnostics.column("curl_inf").max() <= 1e-12


# ----------------------------------------------------------------- cases

def test_rp1_initial_states():
    left, right, xd = riemann_states(RP1)
    assert left[0] == 0.8 and right[0] == 1.0 and xd == 0.5
    sim = build_simulation(RP1, h=1 / 40, seed=0)
    x = sim.mesh.generators[:, 0]
    np.testing.assert_allclose(sim.U[x < 0.5, 0], 0.8)
    np.testing.assert_allclose(sim.U[x > 0.5, 0], 1.0)


def test_vortex_starts_without_impulse():
    sim = build_simulation(VORTEX, h=0.5, seed=0)
    assert np.abs(sim.j).max() == 0.0
    assert sim.params.kappa == 1e-2 and sim.params.K == 1e-3
    assert model.relaxation_time(1.0, 1.0, sim.params) == pytest.approx(10.0)


def test_explosion_outer_state():
    rho, u, p = case_setup(EXPLOSION).primitive(np.array([0.0, 0.5]), np.array([0.0, 0.5]))
    np.testing.assert_array_equal(rho, [1.0, 0.1])
    np.testing.assert_array_equal(p, [1.0, 0.1])
    assert np.all(u == 0)


def test_case_parameters():
    assert case_setup(RP1).params.kappa == 0.8
    ex = case_setup(EXPLOSION).params
    assert (ex.gamma, ex.cv, ex.kappa, ex.K) == (5 / 3, 1.5, 0.1, 1e-3)
    assert case_setup("convergence").params.gamma == 2.0


# ---------------------------------------------------- manufactured case

def test_manufactured_source_values():
    s = manufactured_source(np.array([5 + np.sqrt(2), 6.0, 5e3]), np.array([5.0, 5.0, 5e3]))
    assert s[0] == pytest.approx(0.0, abs=1e-16)
    assert s[1] == pytest.approx(1 / (2 * np.pi), rel=1e-14)
    assert s[2] == 0.0


def test_error_norms():
    w = np.array([1.0, 2.0, 3.0])
    v = np.array([0.1, 0.2, 0.3])
    assert error_norms(v, v, w) == (0.0, 0.0)
    l2, linf = error_norms(v + 0.25, v, w)
    assert l2 == pytest.approx(0.25, rel=1e-14) and linf == pytest.approx(0.25, rel=1e-14)


def test_orders_of_synthetic_first_order_data():
    h = np.array([0.4, 0.2, 0.13, 0.05])
    np.testing.assert_allclose(observed_orders(h, 3.0 * h), 1.0, rtol=1e-13)


def test_convergence_harness_runs():
    rows, orders = convergence_study((0.6, 0.45, 0.35))
    assert len(rows) == 3 and all(len(v) == 2 for v in orders.values())
    assert all(r.curl <= 1e-12 for r in rows)
    assert rows[0].n_cells < rows[1].n_cells < rows[2].n_cells


def test_interior_impulse_conserved_away_from_walls():
    m = generate_voronoi((0.0, 0.0, 10.0, 10.0), 900, seed=3)
    drift, boundary_j = interior_conservation_check(m, steps=8)
    assert boundary_j <= 1e-12 and drift <= 1e-12
