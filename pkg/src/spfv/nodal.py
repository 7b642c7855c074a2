"""Staggered update of the nodal thermal impulse.

A cell solver recovers a cell value ``j_c`` (and the cell potential
``phi_c = j_c . u_c + theta_c``) from the surrounding nodal values with an upwind
corner viscosity.  The nodal residual is then the dual-cell gradient of ``phi_c``
plus the curl coupling term, and the stiff relaxation is integrated implicitly.
"""

from dataclasses import dataclass

import numpy as np

from .operators import curl_cell


class DegenerateCellError(ValueError):
    pass


@dataclass
class CellClosure:
    j_c: np.ndarray       # (n_cells, 2)
    phi_c: np.ndarray     # (n_cells,)
    phi_p: np.ndarray     # (n_nodes,)
    z_p: np.ndarray       # (n_nodes,)
    u_p: np.ndarray       # (n_nodes, 2)
    theta_p: np.ndarray   # (n_nodes,)
    rho_p: np.ndarray     # (n_nodes,)


def node_speed(cell_speed, mesh):
    """Largest cell wave-speed bound among the cells around each node."""
    z = np.zeros(mesh.n_nodes)
    np.maximum.at(z, mesh.corner_node, np.asarray(cell_speed, dtype=float)[mesh.corner_cell])
    return z


def node_values(field, mesh):
    """Subcell-area weighted average of a cell field at the nodes."""
    return mesh.node_average @ np.asarray(field, dtype=float)


def cell_values(field, mesh):
    """Subcell-area weighted average of a nodal field in the cells."""
    return mesh.cell_average @ np.asarray(field, dtype=float)


def corner_viscosity(z_p, mesh):
    """Corner matrices M_cp = z_p (l- n- n-^T + l+ n+ n+^T), shape (n_corners, 2, 2)."""
    return z_p[mesh.corner_node, None, None] * mesh.corner_visc


def cell_solver(j, rho_c, u_c, theta_c, cell_speed, mesh):
    """Solve sum_p M_cp j_c = sum_p (M_cp j_p + l_cp n_cp phi_p) in every cell."""
    j = np.asarray(j, dtype=float)
    z = node_speed(cell_speed, mesh)
    u_p = node_values(u_c, mesh)
    theta_p = node_values(theta_c, mesh)
    rho_p = node_values(rho_c, mesh)
    phi_p = np.einsum("pi,pi->p", j, u_p) + theta_p
    M = corner_viscosity(z, mesh)
    kn, kc = mesh.corner_node, mesh.corner_cell
    rhs_k = np.einsum("kij,kj->ki", M, j[kn]) + mesh.corner_normal * phi_p[kn, None]
    Msum = np.zeros((mesh.n_cells, 2, 2))
    np.add.at(Msum, kc, M)
    rhs = np.zeros((mesh.n_cells, 2))
    np.add.at(rhs, kc, rhs_k)
    det = Msum[:, 0, 0] * Msum[:, 1, 1] - Msum[:, 0, 1] * Msum[:, 1, 0]
    scale = np.einsum("cii->c", Msum) ** 2
    bad = np.flatnonzero(~(det > 1e-14 * scale))
    if bad.size:
        raise DegenerateCellError(f"singular corner viscosity sum in cell {bad[0]}")
    j_c = np.linalg.solve(Msum, rhs[..., None])[..., 0]
    phi_c = np.einsum("ci,ci->c", j_c, u_c) + theta_c
    return CellClosure(j_c=j_c, phi_c=phi_c, phi_p=phi_p, z_p=z, u_p=u_p,
                       theta_p=theta_p, rho_p=rho_p)


def nodal_rhs(j, phi_c, u_c, mesh, cell_curl=None):
    """Semi-discrete residual Phi_p of the nodal impulse equation.

    Phi_p = -(1/|w_p|) sum_c l_cp n_cp phi_c - (1/|w_p|) sum_c |w_cp| C_c (-u2, u1)_c
    """
    Gx, Gy = mesh.grad_matrices
    grad = np.column_stack([Gx @ phi_c, Gy @ phi_c])
    if cell_curl is None:
        cell_curl = curl_cell(j, mesh)
    cross = cell_curl[:, None] * np.column_stack([-u_c[:, 1], u_c[:, 0]])
    return -grad - mesh.node_average @ cross


def imex_update(j, Phi, dt, tau_p, active=None):
    """Explicit transport, implicit relaxation: (j + dt Phi) / (1 + dt/tau).

    Only rows flagged in ``active`` are advanced; the others are copied.
    """
    j = np.asarray(j, dtype=float)
    tau_p = np.broadcast_to(np.asarray(tau_p, dtype=float), j.shape[:1])
    new = (j + dt * Phi) / (1.0 + dt / tau_p)[:, None]
    if active is None:
        return new
    out = j.copy()
    out[active] = new[active]
    return out


def nodal_entropy_production(j, closure, mesh, kappa):
    """Entropy production per node by the corner viscosity of the cell solver.

    (1/|w_p|) sum_c (alpha_p / 2 theta_p) (j_c - j_p)^T M_cp (j_c - j_p), which is
    non-negative because every M_cp is positive semi-definite.
    """
    M = corner_viscosity(closure.z_p, mesh)
    kn, kc = mesh.corner_node, mesh.corner_cell
    d = closure.j_c[kc] - np.asarray(j)[kn]
    q = np.einsum("ki,kij,kj->k", d, M, d)
    w = 0.5 * kappa ** 2 / (closure.rho_p * closure.theta_p)
    return w * np.bincount(kn, weights=q, minlength=mesh.n_nodes) / mesh.node_volume


def nodal_entropy_rate(j, closure, mesh, kappa):
    """Node-centred rate -beta_p . sum_c l_cp n_cp (phi_c - phi_p) / |w_p| with
    beta_p = -alpha_p j_p / theta_p.  Unlike :func:`nodal_entropy_production` this
    expression has no definite sign."""
    kn, kc = mesh.corner_node, mesh.corner_cell
    dphi = closure.phi_c[kc] - closure.phi_p[kn]
    s = np.zeros((mesh.n_nodes, 2))
    np.add.at(s, kn, mesh.corner_normal * dphi[:, None])
    beta = -(kappa ** 2 / (closure.rho_p * closure.theta_p))[:, None] * np.asarray(j)
    return -np.einsum("pi,pi->p", beta, s) / mesh.node_volume
