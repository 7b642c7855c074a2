"""Compatible gradient (on dual cells) and curl (on primal cells and nodes).

The gradient of a cell field lives on the nodes, the curl of a nodal field lives on
the cells, and ``curl_cell(grad_node(phi)) == 0`` to round-off for every ``phi``.
Nodes on the walls are not owned by a dual finite volume; their values come from
:func:`boundary_closure`, which fixes the normal component and chooses the
tangential one so that every boundary cell stays curl free.
"""

import numpy as np

from .mesh import rot_ccw


class ClosureConfigError(ValueError):
    pass


def grad_node(phi, mesh, jn=None):
    """Dual-cell gradient of a cell field, boundary nodes rebuilt by the closure.

    ``jn`` is the prescribed normal component at boundary nodes (default 0).
    """
    phi = np.asarray(phi, dtype=float)
    Gx, Gy = mesh.grad_matrices
    g = np.column_stack([Gx @ phi, Gy @ phi])
    return boundary_closure(g, mesh, jn)


def grad_node_raw(phi, mesh):
    """Dual-cell gradient without boundary treatment (boundary rows use the
    even reflection of ``phi`` across the wall)."""
    Gx, Gy = mesh.grad_matrices
    phi = np.asarray(phi, dtype=float)
    return np.column_stack([Gx @ phi, Gy @ phi])


def curl_cell(psi, mesh):
    """Scalar curl per primal cell of a nodal vector field."""
    Cx, Cy = mesh.curl_matrices
    psi = np.asarray(psi, dtype=float)
    return Cx @ psi[:, 0] + Cy @ psi[:, 1]


def curl_node(psi, mesh, cell_curl=None):
    """Subcell-area weighted average of the surrounding cell curls."""
    if cell_curl is None:
        cell_curl = curl_cell(psi, mesh)
    return mesh.node_average @ cell_curl


class _Closure:
    """Precomputed least-squares solve for the tangential boundary unknowns."""

    def __init__(self, mesh):
        bnd = mesh.node_on_boundary
        self.wall_nodes = np.flatnonzero(bnd & ~mesh.node_is_corner)
        self.corner_nodes = np.flatnonzero(mesh.node_is_corner)
        normal = mesh.node_wall_normal
        self.normal = normal
        self.tangent = rot_ccw(normal)
        # cells whose curl involves boundary nodes
        kb = np.flatnonzero(bnd[mesh.corner_node])
        cells = np.unique(mesh.corner_cell[kb])
        for c in cells:
            if bnd[mesh.cell_nodes[c]].all():
                raise ClosureConfigError(f"cell {c} has all its nodes on the boundary")
        self.cells = cells
        row = {c: i for i, c in enumerate(cells)}
        col = {p: i for i, p in enumerate(self.wall_nodes)}
        M = np.zeros((len(cells), len(self.wall_nodes)))
        for k in kb:
            p = mesh.corner_node[k]
            if p in col:
                c = mesh.corner_cell[k]
                M[row[c], col[p]] += (-mesh.corner_tangent[k] @ self.tangent[p]
                                      / mesh.cell_volume[c])
        self.matrix = M
        self.pinv = np.linalg.pinv(M, rcond=1e-12) if M.size else M.T

    def apply(self, psi, mesh, jn):
        out = np.array(psi, dtype=float, copy=True)
        bnd = mesh.node_on_boundary
        jn = np.zeros(mesh.n_nodes) if jn is None else np.broadcast_to(
            np.asarray(jn, dtype=float), (mesh.n_nodes,))
        out[bnd] = jn[bnd, None] * self.normal[bnd]
        if self.wall_nodes.size:
            for _ in range(2):  # second pass: one step of iterative refinement
                t = self.pinv @ -curl_cell(out, mesh)[self.cells]
                out[self.wall_nodes] += t[:, None] * self.tangent[self.wall_nodes]
        return out


def _closure(mesh):
    cl = mesh.__dict__.get("_boundary_closure")
    if cl is None:
        cl = _Closure(mesh)
        mesh.__dict__["_boundary_closure"] = cl
    return cl


def boundary_closure(psi, mesh, jn=None):
    """Rebuild the boundary-node values of a nodal field.

    Each wall node gets the prescribed normal component ``jn`` (default 0) and a
    tangential component; the tangential unknowns are the minimum-norm least-squares
    solution of "curl vanishes on every cell touching the boundary".  Rectangle
    corners get ``jn`` times the sum of both wall normals.  Interior nodes are
    returned unchanged.
    """
    return _closure(mesh).apply(psi, mesh, jn)


def init_from_potential(phi_fn, mesh, jn=None):
    """Curl-free nodal field from a scalar potential sampled at the generators."""
    g = mesh.generators
    phi = np.asarray(phi_fn(g[:, 0], g[:, 1]), dtype=float) * np.ones(mesh.n_cells)
    return grad_node(phi, mesh, jn)
