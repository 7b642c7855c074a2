"""Transfer of the nodal impulse residual to primal faces.

Each interior dual cell is split into one subcell per surrounding primal cell.
Neighbouring subcells share a subface lying on a primal face.  Given the nodal
residual and the boundary fluxes ``l_cp n_cp phi_c`` of the subcells, the internal
subfluxes follow from a graph-Laplacian pseudo-inverse; summed over both endpoints
of a primal face they give the face flux of the virtual cell-centred impulse.
"""

import numpy as np

from .mesh import rot_cw


class SubfluxConsistencyError(RuntimeError):
    pass


def ring_adjacency(K):
    """Subcell/subface incidence for a ring of ``K`` subcells.

    Subface ``r`` joins subcells ``r`` and ``(r + 1) % K``; the entry is +1 for the
    lower-numbered subcell and -1 for the other.
    """
    A = np.zeros((K, K))
    for r in range(K):
        a, b = r, (r + 1) % K
        A[a, r] = 1.0 if a < b else -1.0
        A[b, r] = 1.0 if b < a else -1.0
    return A


def laplacian_pinv(A, nu=1.0):
    """Pseudo-inverse of L = A A^T through (L + nu P)^-1 - P / nu, P the mean projector."""
    L = A @ A.T
    n = L.shape[0]
    P = np.full((n, n), 1.0 / n)
    return np.linalg.inv(L + nu * P) - P / nu


def reconstruct_subfluxes(Phi, D, B, A, nu=1.0):
    """Internal subfluxes F with -(A F + B) = D Phi per subcell (least squares).

    ``Phi`` has shape (..., 2), ``D`` (..., K) and ``B`` (..., K, 2); returns (..., K, 2).
    """
    T = -A.T @ laplacian_pinv(A, nu)
    rhs = D[..., :, None] * np.asarray(Phi)[..., None, :] + B
    return np.einsum("rm,...mi->...ri", T, rhs)


class SubgridTopology:
    """Degree-grouped index tables for vectorised reconstruction on a mesh."""

    def __init__(self, mesh, nu=1.0):
        self.nu = nu
        face_of = {}
        for f, (c, d) in enumerate(mesh.face_cells):
            if d >= 0:
                face_of.setdefault((min(c, d), max(c, d)), []).append(f)
        self.groups = []
        interior = ~mesh.node_on_boundary
        for K in np.unique(mesh.node_degree[interior]):
            nodes = np.flatnonzero(interior & (mesh.node_degree == K))
            corners = mesh.node_corner_ptr[nodes][:, None] + np.arange(K)
            cells = mesh.corner_cell[corners]
            faces = np.empty((len(nodes), K), dtype=np.int64)
            signs = np.empty((len(nodes), K))
            for i, p in enumerate(nodes):
                for r in range(K):
                    c, d = cells[i, r], cells[i, (r + 1) % K]
                    cand = [f for f in face_of.get((min(c, d), max(c, d)), ())
                            if p in mesh.face_nodes[f]]
                    if len(cand) != 1:
                        raise SubfluxConsistencyError(
                            f"no unique face between cells {c}, {d} at node {p}")
                    f = cand[0]
                    src = c if r < (r + 1) % K else d
                    faces[i, r] = f
                    signs[i, r] = 1.0 if mesh.face_cells[f, 0] == src else -1.0
            # integrated normals of the subfaces x_p -> midpoint(x_c_r, x_c_r+1), oriented
            # as outflow from the lower-numbered subcell
            g = mesh.generators
            mid = 0.5 * (g[cells] + g[np.roll(cells, -1, axis=1)])
            S = rot_cw(mesh.node_xy[nodes][:, None, :] - mid)
            S[:, -1] *= -1.0
            A = ring_adjacency(int(K))
            T = -A.T @ laplacian_pinv(A, nu)
            self.groups.append(dict(K=int(K), nodes=nodes, corners=corners, faces=faces,
                                    signs=signs, A=A, T=T, S=S))


def topology(mesh, nu=1.0):
    key = ("_subgrid", nu)
    topo = mesh.__dict__.get(key)
    if topo is None:
        topo = SubgridTopology(mesh, nu)
        mesh.__dict__[key] = topo
    return topo


def face_impulse_flux(Phi, phi_c, mesh, phi_p=None, nu=1.0):
    """Integrated virtual impulse flux through each primal face, oriented out of
    ``face_cells[:, 0]``; shape (n_faces, 2).  Wall faces carry no flux.

    Without ``phi_p`` the subfluxes are the minimum-norm solution.  With a nodal
    potential ``phi_p`` the solve is anchored on the physical subface flux
    ``phi_p S_r`` instead: the subfluxes are that reference plus the minimum-norm
    correction, so a uniform potential gives exactly the physical face flux.
    """
    H = np.zeros((mesh.n_faces, 2))
    for g in topology(mesh, nu).groups:
        k = g["corners"]
        D = mesh.corner_area[k]
        B = mesh.corner_normal[k] * phi_c[mesh.corner_cell[k]][..., None]
        rhs = D[..., None] * Phi[g["nodes"]][:, None, :] + B
        if phi_p is None:
            F = np.einsum("rm,nmi->nri", g["T"], rhs)
        else:
            F_ref = np.asarray(phi_p)[g["nodes"], None, None] * g["S"]
            F = F_ref + np.einsum("rm,nmi->nri", g["T"],
                                  rhs + np.einsum("mr,nri->nmi", g["A"], F_ref))
        np.add.at(H, g["faces"].ravel(), (F * g["signs"][..., None]).reshape(-1, 2))
    return H


def virtual_cell_rhs(H, j_cell, tau_c, mesh):
    """Virtual cell evolution of the impulse: face-flux divergence and relaxation.

    ``H`` holds integrated face fluxes (n_faces, 2) oriented out of ``face_cells[:, 0]``.
    """
    div = np.zeros((mesh.n_cells, 2))
    inner = ~mesh.face_is_boundary
    c, d = mesh.face_cells[inner, 0], mesh.face_cells[inner, 1]
    np.add.at(div, c, H[inner])
    np.subtract.at(div, d, H[inner])
    tau_c = np.broadcast_to(np.asarray(tau_c, dtype=float), (mesh.n_cells,))
    return -div / mesh.cell_volume[:, None] - j_cell / tau_c[:, None]
