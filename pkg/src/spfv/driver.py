"""Time stepping of the coupled primal/nodal scheme and run diagnostics."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import model, nodal, primal, subflux
from .cases import case_setup, manufactured_impulse
from .mesh import generate_voronoi, load_mesh, n_seeds_for_h
from .operators import boundary_closure, curl_cell, curl_node, init_from_potential

DIAGNOSTIC_COLUMNS = ("t", "dt", "mass", "momx", "momy", "energy", "sum_j_x", "sum_j_y",
                      "curl_inf", "entropy_residual_sum", "rho_min")


class AdmissibilityError(RuntimeError):
    """Raised when a step produces an inadmissible state."""

    def __init__(self, message, step, t, cells=()):
        super().__init__(message)
        self.step, self.t = step, t
        self.cells = np.atleast_1d(np.asarray(cells, dtype=np.int64))


@dataclass
class RunConfig:
    case: str
    t_final: float
    params: model.GasParams
    cfl: float = 0.45
    alpha_correction: bool = False
    source_on: bool = True
    freeze_z: str = "none"
    max_steps: int = 10_000_000
    output_every: int = 0
    mesh_file: Optional[str] = None   # mesh options: a saved mesh, or generation settings
    h: Optional[float] = None
    seed: int = 0
    lloyd_iters: int = 3

    def __post_init__(self):
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if self.freeze_z not in ("none", "initial"):
            raise ValueError("freeze_z must be 'none' or 'initial'")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.output_every < 0:
            raise ValueError("output_every must be non-negative")
        if self.h is not None and not self.h > 0:
            raise ValueError("h must be positive")
        if self.lloyd_iters < 0:
            raise ValueError("lloyd_iters must be non-negative")


@dataclass
class Diagnostics:
    rows: list = field(default_factory=list)
    entropy_residual_l1: list = field(default_factory=list)
    min_rhoeps: list = field(default_factory=list)

    def as_array(self):
        return np.array(self.rows, dtype=float).reshape(-1, len(DIAGNOSTIC_COLUMNS))

    def column(self, name):
        return self.as_array()[:, DIAGNOSTIC_COLUMNS.index(name)]


def compute_dt(cell_speed, mesh, cfl):
    """CFL * min sqrt(|w_c|) / lambda_c (independent of the relaxation time)."""
    speed = np.asarray(cell_speed, dtype=float)
    bad = np.flatnonzero(~(speed > 0))
    if bad.size:
        raise model.StateError("non-positive wave speed", bad)
    return cfl * float(np.min(np.sqrt(mesh.cell_volume) / speed))


@dataclass
class StepResult:
    dt: float
    entropy_residual: np.ndarray
    flux: primal.FaceFlux
    closure: nodal.CellClosure


class Simulation:
    """State (cell conserved variables, nodal impulse) plus the step pipeline."""

    def __init__(self, mesh, U, j, config, energy_source=None):
        self.mesh = mesh
        self.config = config
        self.params = config.params
        self.U = np.array(U, dtype=float)
        self.j = boundary_closure(np.array(j, dtype=float), mesh)
        self.t = 0.0
        self.steps = 0
        self.energy_source = energy_source if config.source_on else None
        self.diagnostics = Diagnostics()
        self._z0 = None
        self.last = None
        self.record(0.0, 0.0)

    # -------------------------------------------------------------- helpers

    def cell_impulse(self, j=None):
        return nodal.cell_values(self.j if j is None else j, self.mesh)

    def thermo(self, U=None, j=None):
        U = self.U if U is None else U
        return primal.cell_thermo(U, self.cell_impulse(j), self.params)

    def node_tau(self, closure):
        if self.params.tau_mode == model.FOURIER:
            return model.relaxation_time(closure.rho_p, closure.theta_p, self.params)
        return np.full(self.mesh.n_nodes, float(self.params.tau0))

    def totals(self):
        vol = self.mesh.cell_volume
        mass = vol @ self.U[:, 0]
        mom = vol @ self.U[:, 1:3]
        energy = vol @ self.U[:, 3]
        sj = self.mesh.node_volume @ self.j
        return mass, mom, energy, sj

    def curl_inf(self):
        return float(np.abs(curl_node(self.j, self.mesh)).max())

    def record(self, dt, residual_sum):
        mass, mom, energy, sj = self.totals()
        self.diagnostics.rows.append([self.t, dt, mass, mom[0], mom[1], energy, sj[0], sj[1],
                                      self.curl_inf(), residual_sum, self.U[:, 0].min()])

    # ------------------------------------------------------------- stepping

    def rates(self, cells=None):
        """All semi-discrete rates at the current level (no state change)."""
        mesh, params = self.mesh, self.params
        cells = self.thermo() if cells is None else cells
        pr = cells.prim
        speed = cells.speed
        if self.config.freeze_z == "initial":
            if self._z0 is None:
                self._z0 = speed.copy()
            speed = self._z0
        closure = nodal.cell_solver(self.j, pr.rho, pr.u, pr.theta, speed, mesh)
        ccurl = curl_cell(self.j, mesh)
        Phi = nodal.nodal_rhs(self.j, closure.phi_c, pr.u, mesh, ccurl)
        H = subflux.face_impulse_flux(Phi, closure.phi_c, mesh, closure.phi_p)
        tau_c = model.relaxation_time(pr.rho, pr.theta, params)
        flux = primal.face_fluxes(cells, self.j, H, mesh, params,
                                  alpha_correction=self.config.alpha_correction)
        dU = primal.primal_rhs(flux, mesh)
        src = None
        if self.energy_source is not None:
            g = mesh.generators
            src = self.energy_source(g[:, 0], g[:, 1])
            dU[:, 3] += src
        # the virtual impulse evolves with the corrected impulse rows of the face flux
        H_tilde = flux.htilde[:, 3:5] * mesh.face_length[:, None]
        dj_virtual = subflux.virtual_cell_rhs(H_tilde, cells.j, tau_c, mesh)
        return dict(cells=cells, closure=closure, Phi=Phi, H=H, flux=flux, dU=dU,
                    dj_virtual=dj_virtual, tau_c=tau_c, energy_source=src)

    def step(self, dt=None):
        mesh = self.mesh
        r = self.rates()
        cells = r["cells"]
        if dt is None:
            dt = compute_dt(cells.speed, mesh, self.config.cfl)
            if self.t < self.config.t_final:
                dt = min(dt, self.config.t_final - self.t)
        U_new = self.U + dt * r["dU"]
        tau_p = self.node_tau(r["closure"])
        j_new = nodal.imex_update(self.j, r["Phi"], dt, tau_p, active=~mesh.node_on_boundary)
        j_new = boundary_closure(j_new, mesh)
        try:
            cells_new = primal.cell_thermo(U_new, nodal.cell_values(j_new, mesh), self.params)
        except model.StateError as exc:
            raise AdmissibilityError(f"step {self.steps + 1} at t={self.t:.6g}: {exc}",
                                     self.steps + 1, self.t, exc.cells) from exc
        source = primal.entropy_source(cells, r["tau_c"], self.params, r["energy_source"])
        res = primal.entropy_residual(cells.s, cells_new.s, dt, r["flux"], source, mesh)
        self.U, self.j = U_new, j_new
        self.t += dt
        self.steps += 1
        l1 = float(mesh.cell_volume @ np.abs(res))
        self.diagnostics.entropy_residual_l1.append(l1)
        rhoeps = model.internal_energy(U_new[:, 0], U_new[:, 1:3], U_new[:, 3],
                                       cells_new.j, self.params)
        self.diagnostics.min_rhoeps.append(float(rhoeps.min()))
        self.record(dt, float(mesh.cell_volume @ res))
        self.last = StepResult(dt=dt, entropy_residual=res, flux=r["flux"], closure=r["closure"])
        return dt

    def run(self, callback=None):
        eps = 1e-12 * self.config.t_final
        while self.t < self.config.t_final - eps:
            if self.steps >= self.config.max_steps:
                break
            self.step()
            if callback is not None:
                callback(self)
        return self

    def time_integrated_entropy_residual(self):
        d = self.diagnostics
        dts = self.diagnostics.column("dt")[1:]
        return float(np.dot(dts, d.entropy_residual_l1))

    # --------------------------------------------------------------- fields

    def fields(self):
        cells = self.thermo()
        pr = cells.prim
        return dict(rho=pr.rho, u1=pr.u[:, 0], u2=pr.u[:, 1], p=pr.p, theta=pr.theta,
                    eta=pr.eta, j1=cells.j[:, 0], j2=cells.j[:, 1],
                    curl=curl_cell(self.j, self.mesh))


def initial_state(mesh, setup):
    g = mesh.generators
    rho, u, p = setup.primitive(g[:, 0], g[:, 1])
    j = init_from_potential(setup.potential, mesh)
    jbar = nodal.cell_values(j, mesh)
    rho, mom, E = model.conserved_from_primitive(rho, u, p, jbar, setup.params)
    U = np.column_stack([rho, mom, E])
    return U, j


def build_simulation(case, mesh=None, h=None, seed=0, params=None, t_final=None, cfl=0.45,
                     alpha_correction=None, lloyd_iters=3, **overrides):
    """Set up a named case on a given or freshly generated mesh."""
    setup = case_setup(case)
    if params is not None:
        setup.params = params
    if mesh is None:
        mesh = generate_voronoi(setup.domain, n_seeds_for_h(setup.domain, h or setup.h),
                                lloyd_iters=lloyd_iters, seed=seed)
    U, j = initial_state(mesh, setup)
    cfg = RunConfig(case=setup.name, t_final=t_final or setup.t_final, params=setup.params,
                    cfl=cfl,
                    alpha_correction=(setup.alpha_correction if alpha_correction is None
                                      else alpha_correction), **overrides)
    sim = Simulation(mesh, U, j, cfg, energy_source=setup.energy_source)
    sim.setup = setup
    return sim


def simulation_from_config(config, mesh=None):
    """Build the mesh described by a RunConfig (unless given) and set up the run."""
    setup = case_setup(config.case)
    setup.params = config.params
    if mesh is None:
        if config.mesh_file:
            mesh = load_mesh(config.mesh_file)
        else:
            mesh = generate_voronoi(setup.domain, n_seeds_for_h(setup.domain, config.h or setup.h),
                                    lloyd_iters=config.lloyd_iters, seed=config.seed)
    U, j = initial_state(mesh, setup)
    sim = Simulation(mesh, U, j, config, energy_source=setup.energy_source)
    sim.setup = setup
    return sim


# ------------------------------------------------------------------- errors

def error_norms(values, reference, weights):
    """Weighted L2 (normalised by total weight) and max norm of values - reference."""
    e = np.asarray(values, dtype=float) - np.asarray(reference, dtype=float)
    if e.ndim > 1:
        e = np.sqrt(np.sum(e ** 2, axis=tuple(range(1, e.ndim))))
    w = np.asarray(weights, dtype=float)
    l2 = float(np.sqrt(np.sum(w * e ** 2) / np.sum(w)))
    return l2, float(np.max(np.abs(e)))


def observed_orders(h, errors):
    """ln(e1/e2) / ln(h1/h2) between consecutive levels."""
    h, e = np.asarray(h, dtype=float), np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])


@dataclass
class ConvergenceRow:
    h: float
    n_cells: int
    err_rho: float
    err_u: float
    err_j1: float
    curl: float


def manufactured_errors(sim, U0):
    """L2 errors of (rho, u1, j1) of the convergence case against the steady exact
    fields sampled at the generators."""
    mesh = sim.mesh
    vol = mesh.cell_volume
    g = mesh.generators
    e_rho = error_norms(sim.U[:, 0], U0[:, 0], vol)[0]
    e_u = error_norms(sim.U[:, 1] / sim.U[:, 0], U0[:, 1] / U0[:, 0], vol)[0]
    e_j = error_norms(sim.cell_impulse()[:, 0], manufactured_impulse(g[:, 0], g[:, 1])[:, 0],
                      vol)[0]
    return e_rho, e_u, e_j


REFERENCE_LEVELS = (0.375, 0.295, 0.225, 0.184)


def convergence_study(h_levels=REFERENCE_LEVELS, seed=0, t_final=None, alpha_correction=None, progress=None):
    """Run the manufactured case on a mesh sequence; returns rows and orders."""
    rows = []
    for h in h_levels:
        sim = build_simulation("convergence", h=h, seed=seed, t_final=t_final,
                               alpha_correction=alpha_correction)
        U0 = sim.U.copy()
        sim.run()
        e_rho, e_u, e_j = manufactured_errors(sim, U0)
        rows.append(ConvergenceRow(sim.mesh.h, sim.mesh.n_cells, e_rho, e_u, e_j, sim.curl_inf()))
        if progress:
            progress(rows[-1])
    hs = [r.h for r in rows]
    orders = {k: observed_orders(hs, [getattr(r, k) for r in rows])
              for k in ("err_rho", "err_u", "err_j1")}
    return rows, orders


def uniform_run_check(mesh, params, steps=100):
    """Advance a uniform state; returns the max deviation (exactness check)."""
    n = mesh.n_cells
    rho, mom, E = model.conserved_from_primitive(np.ones(n), np.zeros((n, 2)),
                                                 np.ones(n), np.zeros((n, 2)), params)
    U0 = np.column_stack([rho, mom, E])
    cfg = RunConfig(case="custom", t_final=1e9, params=params, alpha_correction=True)
    sim = Simulation(mesh, U0, np.zeros((mesh.n_nodes, 2)), cfg)
    for _ in range(steps):
        sim.step()
    return float(np.abs(sim.U - U0).max()), float(np.abs(sim.j).max())


def interior_conservation_check(mesh, params=None, steps=8, radius=1.0):
    """Evolve a compactly supported disturbance that stays away from the walls
    (tau = inf, no source) and return (relative drift of sum |w_p| j_p, largest |j|
    on boundary nodes)."""
    params = params or model.GasParams()
    x0, y0, x1, y1 = mesh.domain
    centre = np.array([0.5 * (x0 + x1), 0.5 * (y0 + y1)])

    def bump(xy):
        r2 = np.sum((xy - centre) ** 2, axis=1) / radius ** 2
        return np.maximum(0.0, 1.0 - r2) ** 3

    n = mesh.n_cells
    p = 1.0 + 0.2 * bump(mesh.generators)
    u = 0.1 * bump(mesh.generators)[:, None] * np.array([1.0, -0.5])
    j = init_from_potential(lambda x, y: 0.05 * bump(np.column_stack([x, y])), mesh)
    rho, mom, E = model.conserved_from_primitive(np.ones(n), u, p, nodal.cell_values(j, mesh),
                                                 params)
    cfg = RunConfig(case="custom", t_final=1e9, params=params)
    sim = Simulation(mesh, np.column_stack([rho, mom, E]), j, cfg)
    s0 = mesh.node_volume @ sim.j
    scale = mesh.node_volume @ np.linalg.norm(sim.j, axis=1)
    for _ in range(steps):
        sim.step()
    drift = np.abs(mesh.node_volume @ sim.j - s0).max() / scale
    return float(drift), float(np.abs(sim.j[mesh.node_on_boundary]).max())
