"""Independent reference solvers used to validate the staggered scheme.

* :func:`riemann_1d` - second-order MUSCL (minmod) / Rusanov / SSP-RK2 solver of the
  one-dimensional reduction, where ``j = (j1, 0)`` and the system is conservative.
* :class:`FourierLimitSolver` - first-order Rusanov Euler solver on the Voronoi mesh
  with explicit Fourier heat conduction, the relaxation limit of the model.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import LinearNDInterpolator
from scipy.spatial import cKDTree

from . import model
from .cases import riemann_states
from .driver import RunConfig, Simulation, compute_dt
from .nodal import imex_update
from .operators import grad_node
from .primal import cell_thermo


@dataclass
class Profiles1D:
    x: np.ndarray
    rho: np.ndarray
    u1: np.ndarray
    p: np.ndarray
    theta: np.ndarray
    j1: np.ndarray

    def sample(self, x, name):
        return np.interp(x, self.x, getattr(self, name))


def _prim_1d(q, params):
    rho, m, j1, E = q
    u = m / rho
    k2 = params.kappa ** 2
    p = (params.gamma - 1) * (E - 0.5 * rho * u ** 2 - 0.5 * k2 * j1 ** 2 / rho)
    theta = p / (rho * params.cv * (params.gamma - 1))
    return rho, u, p, j1, theta


def _cons_1d(rho, u, p, j1, params):
    E = 0.5 * rho * u ** 2 + p / (params.gamma - 1) + 0.5 * params.kappa ** 2 * j1 ** 2 / rho
    return np.array([rho, rho * u, j1, E])


def _flux_1d(rho, u, p, j1, theta, params):
    E = 0.5 * rho * u ** 2 + p / (params.gamma - 1) + 0.5 * params.kappa ** 2 * j1 ** 2 / rho
    alpha = params.kappa ** 2 / rho
    return np.array([rho * u, rho * u ** 2 + p, j1 * u + theta,
                     (E + p) * u + alpha * theta * j1])


def _speed_1d(rho, u, p, j1, theta, params):
    # no transverse impulse in 1D, so the fast speed is |u1| + sqrt(Z1 + Z2)
    z1, z2 = model._z_terms(rho, p, theta, 0.0, params)
    return np.abs(u) + np.sqrt(z1 + z2)


def _minmod(a, b):
    return np.where(a * b > 0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def _rhs_1d(q, dx, params, reflective=True, order=2):
    prim = np.array(_prim_1d(q, params)[:4])  # rho, u, p, j1
    # reflective walls mirror the normal velocity and normal impulse
    sign = np.array([1.0, -1.0, 1.0, -1.0] if reflective else [1.0] * 4)[:, None]
    if reflective:
        ghost_l, ghost_r = prim[:, 1::-1], prim[:, :-3:-1]
    else:
        ghost_l, ghost_r = prim[:, :1].repeat(2, 1), prim[:, -1:].repeat(2, 1)
    ext = np.concatenate([sign * ghost_l, prim, sign * ghost_r], axis=1)
    slope = _minmod(ext[:, 1:-1] - ext[:, :-2], ext[:, 2:] - ext[:, 1:-1])
    if order == 1:
        slope[:] = 0.0
    centre = ext[:, 1:-1]
    left = (centre + 0.5 * slope)[:, :-1]    # state left of each interface
    right = (centre - 0.5 * slope)[:, 1:]
    out = []
    for s in (left, right):
        rho, u, p, j1 = s
        rho = np.maximum(rho, model.RHO_MIN)
        p = np.maximum(p, model.RHOEPS_MIN)
        theta = p / (rho * params.cv * (params.gamma - 1))
        out.append((_cons_1d(rho, u, p, j1, params), _flux_1d(rho, u, p, j1, theta, params),
                    _speed_1d(rho, u, p, j1, theta, params)))
    (qL, fL, sL), (qR, fR, sR) = out
    F = 0.5 * (fL + fR) - 0.5 * np.maximum(sL, sR) * (qR - qL)
    return -(F[:, 1:] - F[:, :-1]) / dx


def riemann_1d(case, n_cells=5000, t_final=0.5, cfl=0.4, params=None, length=1.0, order=2):
    """Reference profiles of a Riemann problem from the 1D MUSCL solver.

    ``order=1`` drops the slopes, giving the plain first-order Rusanov scheme.
    """
    left, right, xd = riemann_states(case)
    params = params or model.GasParams(kappa=0.8)
    dx = length / n_cells
    x = (np.arange(n_cells) + 0.5) * dx
    L, R = np.array(left), np.array(right)
    v = np.where((x < xd)[:, None], L, R)
    q = _cons_1d(v[:, 0], v[:, 1], v[:, 3], v[:, 4], params)
    return integrate_1d(q, x, dx, t_final, cfl, params, order=order)


def uniform_1d(state, n_cells=200, t_final=0.1, params=None, reflective=False):
    """Run the 1D solver from a uniform (rho, u1, p, j1) state (open ends by default)."""
    params = params or model.GasParams()
    dx = 1.0 / n_cells
    x = (np.arange(n_cells) + 0.5) * dx
    rho, u, p, j1 = (np.full(n_cells, float(s)) for s in state)
    return integrate_1d(_cons_1d(rho, u, p, j1, params), x, dx, t_final, 0.4, params,
                        reflective)


def integrate_1d(q, x, dx, t_final, cfl, params, reflective=True, order=2):
    """SSP-RK2 integration of conserved (rho, m1, j1, E) columns to ``t_final``."""
    t = 0.0
    while t < t_final - 1e-14:
        rho, u, p, j1, theta = _prim_1d(q, params)
        dt = min(cfl * dx / _speed_1d(rho, u, p, j1, theta, params).max(), t_final - t)
        q1 = q + dt * _rhs_1d(q, dx, params, reflective, order)
        q = 0.5 * (q + q1 + dt * _rhs_1d(q1, dx, params, reflective, order))
        t += dt
    rho, u, p, j1, theta = _prim_1d(q, params)
    return Profiles1D(x=x, rho=rho, u1=u, p=p, theta=theta, j1=j1)


class FourierLimitSolver:
    """Euler equations plus Fourier conduction div(K grad theta) on a Voronoi mesh."""

    def __init__(self, mesh, rho, u, p, params, cfl=0.45, diffusion_safety=0.25):
        self.mesh, self.params, self.cfl = mesh, params, cfl
        self.diffusion_safety = diffusion_safety
        rho, mom, E = model.conserved_from_primitive(rho, u, p, np.zeros_like(u), params)
        self.U = np.column_stack([rho, mom, E])
        self.t = 0.0
        self.steps = 0
        self.diffusion_limited_steps = 0

    def primitives(self):
        U = self.U
        return model.primitives(U[:, 0], U[:, 1:3], U[:, 3], np.zeros((len(U), 2)), self.params)

    def heat_flux_divergence(self, theta):
        """div(K grad theta) with nodal gradients averaged onto faces; walls insulated."""
        m = self.mesh
        G = grad_node(theta, m)
        g_face = 0.5 * (G[m.face_nodes[:, 0]] + G[m.face_nodes[:, 1]])
        q = self.params.K * np.einsum("fi,fi->f", g_face, m.face_normal) * m.face_length
        q[m.face_is_boundary] = 0.0
        out = np.zeros(m.n_cells)
        inner = ~m.face_is_boundary
        np.add.at(out, m.face_cells[:, 0], q)
        np.subtract.at(out, m.face_cells[inner, 1], q[inner])
        return out / m.cell_volume

    def rhs(self, pr):
        m = self.mesh
        n = m.face_normal
        c = m.face_cells[:, 0]
        d = np.where(m.face_is_boundary, c, m.face_cells[:, 1])
        wall = m.face_is_boundary
        u_c, u_d = pr.u[c], pr.u[d].copy()
        u_d[wall] = u_c[wall] - 2 * np.einsum("fi,fi->f", u_c[wall], n[wall])[:, None] * n[wall]
        E = self.U[:, 3]

        def normal_flux(rho, u, p, E_):
            return np.einsum("fij,fj->fi", model.euler_flux(rho, u, p, E_), n)

        qc = np.column_stack([pr.rho[c], pr.rho[c, None] * u_c, E[c]])
        qd = np.column_stack([pr.rho[d], pr.rho[d, None] * u_d, E[d]])
        speed = np.sqrt(np.einsum("ci,ci->c", pr.u, pr.u)) + np.sqrt(
            self.params.gamma * pr.p / pr.rho)
        z = np.maximum(speed[c], speed[d])
        F = (0.5 * (normal_flux(pr.rho[c], u_c, pr.p[c], E[c])
                    + normal_flux(pr.rho[d], u_d, pr.p[d], E[d]))
             - 0.5 * z[:, None] * (qd - qc)) * m.face_length[:, None]
        out = np.zeros((m.n_cells, 4))
        np.add.at(out, c, F)
        np.subtract.at(out, m.face_cells[~wall, 1], F[~wall])
        rate = -out / m.cell_volume[:, None]
        if self.params.K > 0:
            rate[:, 3] += self.heat_flux_divergence(pr.theta)
        return rate, speed

    def step(self, t_final):
        pr = self.primitives()
        rate, speed = self.rhs(pr)
        m = self.mesh
        dt = self.cfl * float(np.min(np.sqrt(m.cell_volume) / speed))
        if self.params.K > 0:
            # explicit diffusion: dt <= safety * |w| rho cv / K
            dt_diff = self.diffusion_safety * float(
                np.min(m.cell_volume * pr.rho * self.params.cv) / self.params.K)
            if dt_diff < dt:
                dt = dt_diff
                self.diffusion_limited_steps += 1
        dt = min(dt, t_final - self.t)
        self.U = self.U + dt * rate
        self.t += dt
        self.steps += 1
        return dt

    def run(self, t_final):
        while self.t < t_final - 1e-12 * t_final:
            self.step(t_final)
        return self


CUT_FIELDS = ("rho", "u1", "u2", "p", "theta", "j1", "j2")


def cut_line(mesh, fields, y=0.05, n_points=200):
    """Nearest-cell samples of cell fields at ``n_points`` equidistant x along a line."""
    x0, _, x1, _ = mesh.domain
    x = x0 + (np.arange(n_points) + 0.5) * (x1 - x0) / n_points
    idx = cKDTree(mesh.generators).query(np.column_stack([x, np.full(n_points, y)]))[1]
    out = {"x": x}
    for name in CUT_FIELDS:
        if name in fields:
            out[name] = np.asarray(fields[name])[idx]
    return out


@dataclass
class Wave:
    """A wave of a reference profile: the x range where the profile changes steeply."""

    start: float
    end: float
    left: float     # plateau value before the wave
    right: float    # plateau value after the wave

    def level(self, fraction):
        return self.left + fraction * (self.right - self.left)


def find_waves(x, v, min_fraction=0.05, slope_factor=1.0):
    """Waves of a finely resolved profile.

    A wave is a maximal run of intervals with |dv/dx| > slope_factor * range(v) whose
    total change is at least ``min_fraction`` of the range.
    """
    v = np.asarray(v)
    amp = np.ptp(v)
    if amp == 0:
        return []
    steep = np.abs(np.diff(v) / np.diff(x)) > slope_factor * amp
    waves = []
    i, n = 0, len(steep)
    while i < n:
        if not steep[i]:
            i += 1
            continue
        k = i
        while k + 1 < n and steep[k + 1]:
            k += 1
        if abs(v[k + 1] - v[i]) >= min_fraction * amp:
            waves.append(Wave(start=x[i], end=x[k + 1], left=v[i], right=v[k + 1]))
        i = k + 1
    return waves


def level_crossing(x, v, level, lo, hi):
    """Linearly interpolated x in [lo, hi] where v crosses ``level`` closest to the
    window centre; NaN if there is none."""
    v = np.asarray(v) - level
    inside = (x[:-1] >= lo) & (x[1:] <= hi)
    s = np.flatnonzero(inside & (np.sign(v[:-1]) * np.sign(v[1:]) <= 0) & (v[:-1] != v[1:]))
    if s.size == 0:
        return np.nan
    xs = x[s] - v[s] * (x[s + 1] - x[s]) / (v[s + 1] - v[s])
    return xs[np.argmin(np.abs(xs - 0.5 * (lo + hi)))]


def wave_markers(wave, fan_width):
    """Levels that locate a wave: the midpoint of a discontinuity, or the 10% and 90%
    edges of a fan wider than ``fan_width``."""
    if wave.end - wave.start > fan_width:
        return (0.1, 0.9)
    return (0.5,)


@dataclass
class CutComparison:
    field: str
    amplitude: float
    position_errors: np.ndarray   # |x_numerical - x_reference| per wave marker
    l1_away: float                # mean |difference| away from waves, / amplitude

    def max_position_error(self):
        return float(np.max(self.position_errors, initial=0.0))


def compare_cut(cut, reference, field, h, window=None):
    """Compare a numerical cut with reference profiles for one field."""
    x = cut["x"]
    xr, vr = reference.x, getattr(reference, field)
    amp = float(np.ptp(vr))
    waves = find_waves(xr, vr)
    window = 0.1 if window is None else window
    errors = []
    for w in waves:
        for frac in wave_markers(w, 6 * h):
            lvl = w.level(frac)
            lo, hi = w.start - window, w.end + window
            xs_ref = level_crossing(xr, vr, lvl, w.start - h, w.end + h)
            xs_num = level_crossing(x, cut[field], lvl, lo, hi)
            errors.append(abs(xs_num - xs_ref) if np.isfinite(xs_num) else np.inf)
    away = np.ones(len(x), dtype=bool)
    for w in waves:
        away &= (x < w.start - 3 * h) | (x > w.end + 3 * h)
    diff = np.abs(cut[field] - reference.sample(x, field))
    l1 = float(np.mean(diff[away]) / amp) if away.any() and amp > 0 else 0.0
    return CutComparison(field=field, amplitude=amp, position_errors=np.array(errors),
                         l1_away=l1)


def strip_spread(mesh, values, amplitude, n_points=200, n_lines=5):
    """Largest variation across the strip of a cell field, relative to ``amplitude``.

    The field is interpolated linearly between generators onto ``n_lines`` horizontal
    lines spanning the interior of the strip.
    """
    x0, y0, x1, y1 = mesh.domain
    x = x0 + (np.arange(n_points) + 0.5) * (x1 - x0) / n_points
    margin = mesh.h
    ys = np.linspace(y0 + margin, y1 - margin, n_lines)
    interp = LinearNDInterpolator(mesh.generators, values)
    samples = np.array([interp(np.column_stack([x, np.full(n_points, y)])) for y in ys])
    samples = samples[:, np.all(np.isfinite(samples), axis=0)]
    return float(np.max(np.ptp(samples, axis=0)) / amplitude)


def fourier_reference(mesh, setup, t_final=None, cfl=0.45):
    """Run the Fourier-limit solver from the case's initial data on ``mesh``."""
    g = mesh.generators
    rho, u, p = setup.primitive(g[:, 0], g[:, 1])
    solver = FourierLimitSolver(mesh, rho, u, p, setup.params, cfl=cfl)
    return solver.run(setup.t_final if t_final is None else t_final)


def l1_relative(values, reference, weights):
    """Volume-weighted mean |values - reference| divided by the reference's range."""
    rng = float(np.ptp(reference))
    err = float(weights @ np.abs(values - reference) / weights.sum())
    return err / rng if rng > 0 else err


def chapman_enskog_defects(mesh, U, params, taus, cfl=0.45):
    """First-order Chapman-Enskog defect of one IMEX step on a frozen background.

    For each relaxation time the impulse starts at its equilibrium value
    ``-tau grad_h theta`` and advances one hydrodynamic time step; the returned
    value is the |w_p|-weighted L2 norm of ``j^{n+1} + tau grad_h theta`` over the
    interior nodes.
    """
    interior = ~mesh.node_on_boundary
    w = mesh.node_volume[interior]
    Gx, Gy = mesh.grad_matrices
    out = []
    for tau in taus:
        p_tau = replace(params, tau_mode=model.CONSTANT, tau0=float(tau))
        theta = cell_thermo(U, np.zeros((mesh.n_cells, 2)), p_tau).prim.theta
        j0 = -tau * np.column_stack([Gx @ theta, Gy @ theta])
        sim = Simulation(mesh, U, j0, RunConfig(case="custom", t_final=1.0, params=p_tau))
        r = sim.rates()
        dt = compute_dt(r["cells"].speed, mesh, cfl)
        j1 = imex_update(sim.j, r["Phi"], dt, float(tau), active=interior)
        th = r["cells"].prim.theta
        d = j1 + tau * np.column_stack([Gx @ th, Gy @ th])
        out.append(float(np.sqrt(w @ np.einsum("pi,pi->p", d[interior], d[interior]) / w.sum())))
    return np.array(out)
