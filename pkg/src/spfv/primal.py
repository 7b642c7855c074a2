"""Finite-volume update of (rho, rho u, E) on the Voronoi cells.

Face fluxes combine a Rusanov flux for the Euler part with the thermal-impulse part
averaged over the two face endpoints (where the impulse lives).  An optional scalar
correction per face, along the jump of the entropy variables, makes the scheme
satisfy a discrete cell entropy balance.  The correction is computed on a six-row
stack (rho, m1, m2, j1, j2, E) whose impulse rows come from the virtual cell
evolution; only the evolved rows of the corrected flux are used for the update.
"""

from dataclasses import dataclass

import numpy as np

from . import model

ROWS_EVOLVED = np.array([0, 1, 2, 5])  # positions of (rho, m1, m2, E) in the 6-row stack
DETECTOR_THRESHOLD = 0.1


@dataclass
class CellThermo:
    """Everything the face assembly needs per cell."""

    U: np.ndarray          # (n, 4) conserved rho, m1, m2, E
    prim: model.Primitive
    j: np.ndarray          # (n, 2) cell impulse used by the thermodynamics
    speed: np.ndarray      # (n,) wave-speed bound
    dual: np.ndarray       # (n, 6) entropy variables
    s: np.ndarray          # (n,) rho * eta


def cell_thermo(U, j_cell, params):
    prim = model.primitives(U[:, 0], U[:, 1:3], U[:, 3], j_cell, params)
    speed = model.sound_bound(prim, j_cell, params)
    dual = model.dual_vars_from_primitive(prim, j_cell, params).stack()
    return CellThermo(U=U, prim=prim, j=j_cell, speed=speed, dual=dual, s=prim.s)


def stacked_flux(rho, u, p, theta, E, j, params):
    """Physical flux of the 6-row stack (rho, m1, m2, j1, j2, E), shape (..., 6, 2)."""
    f = model.total_flux(rho, u, p, theta, E, j, params)
    out = np.empty(f.shape[:-2] + (6, 2))
    out[..., ROWS_EVOLVED, :] = f
    out[..., 3:5, :] = model.impulse_flux(u, theta, j)
    return out


@dataclass
class FaceFlux:
    hhat: np.ndarray      # (n_faces, 6) uncorrected normal flux per unit length
    htilde: np.ndarray    # (n_faces, 6) corrected normal flux
    alpha: np.ndarray     # (n_faces,) correction factor
    entropy: np.ndarray   # (n_faces,) entropy flux per unit length, out of face_cells[:, 0]


def rusanov(fc, fd, qc, qd, z):
    """0.5 (f_c + f_d) - 0.5 z (q_d - q_c), normal components already taken."""
    return 0.5 * (fc + fd) - 0.5 * z[..., None] * (qd - qc)


def _euler_normal(rho, u, p, E, n):
    return np.einsum("...ij,...j->...i", model.euler_flux(rho, u, p, E), n)


def g_face_average(j_nodes, rho_f, u_f, theta_f, face_nodes, n, params):
    """Thermal-impulse flux averaged over the two endpoint nodes, (n_faces, 4)."""
    out = 0.0
    for end in (0, 1):
        jp = j_nodes[face_nodes[:, end]]
        g = model.thermal_flux(rho_f, u_f, theta_f, jp, params)
        out = out + 0.5 * np.einsum("...ij,...j->...i", g, n)
    return out


def reflect_velocity(u, n):
    return u - 2.0 * np.einsum("fi,fi->f", u, n)[:, None] * n


def alpha_factor(hhat, pc, pd, hc, hd, fsc, fsd):
    """Correction factor making the face flux entropy compatible (0 if the jump of the
    entropy variables vanishes)."""
    dp = pd - pc
    den = np.einsum("fi,fi->f", dp, dp)
    num = (fsd - fsc + np.einsum("fi,fi->f", hhat, dp)
           - (np.einsum("fi,fi->f", pd, hd) - np.einsum("fi,fi->f", pc, hc)))
    guard = den <= 1e-12 * (np.einsum("fi,fi->f", pc, pc) + np.einsum("fi,fi->f", pd, pd) + 1e-30)
    return np.where(guard, 0.0, num / np.where(guard, 1.0, den))


def entropy_flux_face(htilde, pc, pd, hc, hd, fsc, fsd):
    """Compatible entropy flux through a face (normal component)."""
    return 0.5 * ((np.einsum("fi,fi->f", pc, htilde) + fsc - np.einsum("fi,fi->f", pc, hc))
                  + (np.einsum("fi,fi->f", pd, htilde) + fsd - np.einsum("fi,fi->f", pd, hd)))


def smooth_faces(pc, pd, rc, rd, threshold=None):
    """False on faces whose relative pressure or density jump exceeds the threshold."""
    if threshold is None:
        threshold = DETECTOR_THRESHOLD
    return ((np.abs(pd - pc) <= threshold * (pc + pd))
            & (np.abs(rd - rc) <= threshold * (rc + rd)))


def face_fluxes(cells, j_nodes, H_impulse, mesh, params, alpha_correction=True):
    """Assemble normal face fluxes of the 6-row stack.

    ``H_impulse`` is the integrated virtual impulse flux per face (out of
    ``face_cells[:, 0]``), used as the impulse rows of the uncorrected flux.
    """
    pr = cells.prim
    n = mesh.face_normal
    c = mesh.face_cells[:, 0]
    d = np.where(mesh.face_is_boundary, c, mesh.face_cells[:, 1])
    wall = mesh.face_is_boundary

    rho_c, rho_d = pr.rho[c], pr.rho[d]
    u_c, u_d = pr.u[c], pr.u[d].copy()
    u_d[wall] = reflect_velocity(u_c[wall], n[wall])
    p_c, p_d = pr.p[c], pr.p[d]
    E_c, E_d = cells.U[c, 3], cells.U[d, 3]
    th_c, th_d = pr.theta[c], pr.theta[d]

    qc = np.column_stack([rho_c, rho_c[:, None] * u_c, E_c])
    qd = np.column_stack([rho_d, rho_d[:, None] * u_d, E_d])
    z = np.maximum(cells.speed[c], cells.speed[d])
    f = rusanov(_euler_normal(rho_c, u_c, p_c, E_c, n), _euler_normal(rho_d, u_d, p_d, E_d, n),
                qc, qd, z)
    g = g_face_average(j_nodes, 0.5 * (rho_c + rho_d), 0.5 * (u_c + u_d), 0.5 * (th_c + th_d),
                       mesh.face_nodes, n, params)

    hhat = np.zeros((mesh.n_faces, 6))
    hhat[:, ROWS_EVOLVED] = f + g
    hhat[:, 3:5] = H_impulse / mesh.face_length[:, None]

    hc = np.einsum("fij,fj->fi", stacked_flux(rho_c, u_c, p_c, th_c, E_c, cells.j[c], params), n)
    hd = np.einsum("fij,fj->fi", stacked_flux(rho_d, pr.u[d], p_d, th_d, E_d, cells.j[d], params), n)
    pc, pd = cells.dual[c], cells.dual[d]
    fs = model.entropy_flux_physical(pr.rho, pr.u, cells.s, cells.j, params)
    fsc = np.einsum("fi,fi->f", fs[c], n)
    fsd = np.einsum("fi,fi->f", fs[d], n)

    alpha = np.zeros(mesh.n_faces)
    if alpha_correction:
        ok = ~wall & smooth_faces(p_c, p_d, rho_c, rho_d)
        alpha[ok] = alpha_factor(hhat[ok], pc[ok], pd[ok], hc[ok], hd[ok], fsc[ok], fsd[ok])
    htilde = hhat - alpha[:, None] * (pd - pc)
    entropy = entropy_flux_face(htilde, pc, pd, hc, hd, fsc, fsd)
    entropy[wall] = 0.0
    return FaceFlux(hhat=hhat, htilde=htilde, alpha=alpha, entropy=entropy)


def divergence(face_values, mesh):
    """(1/|w_c|) sum_f |f| h_f . n_fc for per-unit-length face values of any trailing shape."""
    v = face_values * mesh.face_length.reshape((-1,) + (1,) * (face_values.ndim - 1))
    out = np.zeros((mesh.n_cells,) + face_values.shape[1:])
    np.add.at(out, mesh.face_cells[:, 0], v)
    inner = ~mesh.face_is_boundary
    np.subtract.at(out, mesh.face_cells[inner, 1], v[inner])
    return out / mesh.cell_volume.reshape((-1,) + (1,) * (face_values.ndim - 1))


def primal_rhs(flux, mesh):
    """Semi-discrete rate of (rho, m1, m2, E) from the corrected face fluxes."""
    return -divergence(flux.htilde[:, ROWS_EVOLVED], mesh)


def entropy_source(cells, tau_c, params, energy_source=None):
    """Entropy production rate alpha |j|^2 / (theta tau) (+ S_E / theta if a source acts)."""
    pr = cells.prim
    alpha = params.kappa ** 2 / pr.rho
    src = alpha * np.einsum("ci,ci->c", cells.j, cells.j) / (pr.theta * tau_c)
    if energy_source is not None:
        src = src + energy_source / pr.theta
    return src


def entropy_residual(s_old, s_new, dt, flux, source, mesh):
    """Cell residual of the discrete entropy balance with a forward time difference."""
    return (s_new - s_old) / dt + divergence(flux.entropy, mesh) - source


def semi_discrete_entropy_residual(cells, flux, rate6, source, mesh):
    """Residual p . dq/dt + div F^s - source evaluated at one time level."""
    return np.einsum("ci,ci->c", cells.dual, rate6) + divergence(flux.entropy, mesh) - source
