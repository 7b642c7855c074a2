"""Voronoi primal cells, Delaunay dual nodes and the corner geometry tying them together.

The rectangle is handled by reflecting generators across the walls: the clipped
Voronoi cells are then ordinary Voronoi cells of the extended point set, and a
node lying on a wall owns a dual polygon that is symmetric about that wall.  Only
the half (or quarter, at a rectangle corner) inside the domain is kept as its
volume, but the full polygon is used for the corner vectors so that the discrete
Gauss identities hold for boundary cells too.
"""

from functools import cached_property

import numpy as np
import shapely
from scipy import sparse
from scipy.spatial import Voronoi, cKDTree

WALL_LEFT, WALL_RIGHT, WALL_BOTTOM, WALL_TOP = 1, 2, 4, 8
_WALLS = (WALL_LEFT, WALL_RIGHT, WALL_BOTTOM, WALL_TOP)


class MeshError(ValueError):
    pass


class DegenerateSeedsError(MeshError):
    pass


class MeshConnectivityError(MeshError):
    pass


def rot_cw(v):
    v = np.asarray(v, dtype=float)
    return np.stack([v[..., 1], -v[..., 0]], axis=-1)


def rot_ccw(v):
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def polygon_area(xy):
    """Signed shoelace area of a closed polygon given as an (n, 2) array."""
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(xy):
    x, y = xy[:, 0], xy[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * cross.sum()
    return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * a)


def _polygon_array(rings):
    """Vectorised construction of shapely polygons with varying vertex counts."""
    counts = np.array([len(r) for r in rings])
    coords = np.vstack(rings)
    rings_ = shapely.linearrings(coords, indices=np.repeat(np.arange(len(rings)), counts))
    return shapely.polygons(rings_)


def _check_domain(domain):
    x0, y0, x1, y1 = map(float, domain)
    if not (np.isfinite([x0, y0, x1, y1]).all() and x1 > x0 and y1 > y0):
        raise MeshError(f"degenerate domain {domain!r}")
    return x0, y0, x1, y1


def _reflect(xy, wall, domain):
    x0, y0, x1, y1 = domain
    out = np.array(xy, dtype=float, copy=True)
    if wall == WALL_LEFT:
        out[..., 0] = 2 * x0 - out[..., 0]
    elif wall == WALL_RIGHT:
        out[..., 0] = 2 * x1 - out[..., 0]
    elif wall == WALL_BOTTOM:
        out[..., 1] = 2 * y0 - out[..., 1]
    else:
        out[..., 1] = 2 * y1 - out[..., 1]
    return out


def _wall_normal(wall):
    return {
        WALL_LEFT: np.array([-1.0, 0.0]),
        WALL_RIGHT: np.array([1.0, 0.0]),
        WALL_BOTTOM: np.array([0.0, -1.0]),
        WALL_TOP: np.array([0.0, 1.0]),
    }[wall]


def _walls_of(mask):
    return [w for w in _WALLS if mask & w]


class DualMesh:
    """Immutable primal/dual mesh pair.

    Parameters
    ----------
    domain : (x0, y0, x1, y1)
    generators : (n_cells, 2) array of cell generators.
    node_xy : (n_nodes, 2) array of Voronoi vertices.
    cell_nodes : sequence of node-id lists, one polygon per cell (any orientation).

    Corners are stored node-major: ``corner_cell[k]`` and ``corner_node[k]`` with
    ``node_corner_ptr`` delimiting each node's corners in counterclockwise order.
    ``cell_corner_ptr`` / ``cell_corner_idx`` give the cell-major view.
    """

    def __init__(self, domain, generators, node_xy, cell_nodes, check_voronoi=True):
        self.domain = _check_domain(domain)
        self.generators = np.array(generators, dtype=float).reshape(-1, 2)
        self.node_xy = np.array(node_xy, dtype=float).reshape(-1, 2)
        self.n_cells = len(self.generators)
        self.n_nodes = len(self.node_xy)
        if len(cell_nodes) != self.n_cells:
            raise MeshConnectivityError("one node list per cell required")
        x0, y0, x1, y1 = self.domain
        self.length_scale = max(x1 - x0, y1 - y0)
        self._tol = 1e-9 * self.length_scale

        self.cell_nodes = []
        self.cell_volume = np.empty(self.n_cells)
        for c, nodes in enumerate(cell_nodes):
            nodes = [int(p) for p in nodes]
            if len(nodes) < 3 or min(nodes) < 0 or max(nodes) >= self.n_nodes:
                raise MeshConnectivityError(f"cell {c} references invalid nodes {nodes}")
            xy = self.node_xy[nodes]
            a = polygon_area(xy - xy.mean(axis=0))
            if a < 0:
                nodes = nodes[::-1]
                a = -a
            if a <= 0:
                raise MeshError(f"cell {c} has zero volume")
            self.cell_nodes.append(np.array(nodes, dtype=np.int64))
            self.cell_volume[c] = a
        self.h = float(np.sqrt(self.cell_volume.sum() / self.n_cells))

        self._classify_nodes()
        self._build_faces()
        self._build_dual()
        self._build_subcells()
        if check_voronoi:
            self._check_voronoi()

    # ------------------------------------------------------------------ setup

    def _classify_nodes(self):
        x0, y0, x1, y1 = self.domain
        x, y = self.node_xy[:, 0], self.node_xy[:, 1]
        t = self._tol
        walls = np.zeros(self.n_nodes, dtype=np.int64)
        walls[np.abs(x - x0) <= t] |= WALL_LEFT
        walls[np.abs(x - x1) <= t] |= WALL_RIGHT
        walls[np.abs(y - y0) <= t] |= WALL_BOTTOM
        walls[np.abs(y - y1) <= t] |= WALL_TOP
        if ((x < x0 - t) | (x > x1 + t) | (y < y0 - t) | (y > y1 + t)).any():
            raise MeshError("nodes outside the domain")
        self.node_walls = walls
        self.node_on_boundary = walls != 0
        self.node_is_corner = np.array([len(_walls_of(m)) == 2 for m in walls])

    def _build_faces(self):
        edges = {}
        for c, nodes in enumerate(self.cell_nodes):
            for a, b in zip(nodes, np.roll(nodes, -1)):
                if a == b:
                    raise MeshError(f"cell {c} has a repeated node {a}")
                edges.setdefault((min(a, b), max(a, b)), []).append((c, int(a), int(b)))
        cells, fnodes, walls = [], [], []
        for key in sorted(edges):
            owners = edges[key]
            if len(owners) == 2:
                (c, a, b), (d, _, _) = sorted(owners)
                cells.append((c, d))
                fnodes.append((a, b))
                walls.append(0)
            elif len(owners) == 1:
                c, a, b = owners[0]
                common = self.node_walls[a] & self.node_walls[b]
                if not common:
                    raise MeshConnectivityError(
                        f"face ({a}, {b}) of cell {c} is unshared but not on a wall")
                cells.append((c, -1))
                fnodes.append((a, b))
                walls.append(_walls_of(common)[0])
            else:
                raise MeshConnectivityError(f"face {key} shared by more than two cells")
        self.face_cells = np.array(cells, dtype=np.int64)
        self.face_nodes = np.array(fnodes, dtype=np.int64)
        self.face_wall = np.array(walls, dtype=np.int64)
        self.n_faces = len(self.face_cells)
        d = self.node_xy[self.face_nodes[:, 1]] - self.node_xy[self.face_nodes[:, 0]]
        self.face_length = np.hypot(d[:, 0], d[:, 1])
        if (self.face_length <= self._tol * 1e-3).any():
            f = int(np.argmin(self.face_length))
            raise MeshError(f"face {f} has zero length")
        # nodes of a face are listed counterclockwise for its first cell
        self.face_normal = rot_cw(d) / self.face_length[:, None]
        self.face_is_boundary = self.face_cells[:, 1] < 0
        self.cell_faces = [[] for _ in range(self.n_cells)]
        for f, (c, d_) in enumerate(self.face_cells):
            self.cell_faces[c].append(f)
            if d_ >= 0:
                self.cell_faces[d_].append(f)
        self.cell_is_boundary = np.zeros(self.n_cells, dtype=bool)
        self.cell_is_boundary[self.face_cells[self.face_is_boundary, 0]] = True

    def _build_dual(self):
        node_cells = [[] for _ in range(self.n_nodes)]
        for c, nodes in enumerate(self.cell_nodes):
            for p in nodes:
                node_cells[p].append(c)
        self.node_cells = []
        self.node_volume = np.empty(self.n_nodes)
        self.node_polygons = []  # clipped dual polygons (coordinates)
        kc, kp, a_vec, lm, lp, nm, np_ = [], [], [], [], [], [], []
        ptr = [0]
        for p in range(self.n_nodes):
            cs = node_cells[p]
            if not cs:
                raise MeshConnectivityError(f"node {p} belongs to no cell")
            xp = self.node_xy[p]
            pts = [(self.generators[c], c) for c in cs]
            walls = _walls_of(self.node_walls[p])
            for w in walls:
                pts = pts + [(_reflect(x, w, self.domain), -1) for x, _ in pts]
            ang = [np.arctan2(x[1] - xp[1], x[0] - xp[0]) for x, _ in pts]
            order = np.argsort(ang, kind="stable")
            ring = np.array([pts[i][0] for i in order])
            tags = [pts[i][1] for i in order]
            n = len(ring)
            if n < 3:
                raise MeshConnectivityError(f"node {p} has a degenerate dual ({n} vertices)")
            area_full = polygon_area(ring - xp)
            self.node_volume[p] = area_full / 2 ** len(walls)
            real = [i for i in range(n) if tags[i] >= 0]
            self.node_cells.append([tags[i] for i in real])
            for i in real:
                c = tags[i]
                xc, xplus, xminus = ring[i], ring[(i + 1) % n], ring[i - 1]
                ep, em = xplus - xc, xc - xminus
                lpl, lmi = 0.5 * np.hypot(*ep), 0.5 * np.hypot(*em)
                if min(lpl, lmi) <= self._tol * 1e-3:
                    raise MeshError(
                        f"zero-length half-edge at node {p}, cell {c} "
                        f"(generator on the boundary or coincident generators)")
                kc.append(c)
                kp.append(p)
                lp.append(lpl)
                lm.append(lmi)
                np_.append(rot_cw(ep) / (2 * lpl))
                nm.append(rot_cw(em) / (2 * lmi))
                a_vec.append(0.5 * rot_cw(xplus - xminus))
            ptr.append(len(kc))
            self.node_polygons.append(ring)
        self.corner_cell = np.array(kc, dtype=np.int64)
        self.corner_node = np.array(kp, dtype=np.int64)
        self.corner_normal = np.array(a_vec)
        self.corner_tangent = rot_ccw(self.corner_normal)
        self.corner_lm = np.array(lm)
        self.corner_lp = np.array(lp)
        self.corner_nm = np.array(nm)
        self.corner_np = np.array(np_)
        self.node_corner_ptr = np.array(ptr, dtype=np.int64)
        self.n_corners = len(kc)
        self.node_degree = np.diff(self.node_corner_ptr)
        # cell-major view
        order = np.lexsort((self.corner_node, self.corner_cell))
        self.cell_corner_idx = order
        counts = np.bincount(self.corner_cell, minlength=self.n_cells)
        self.cell_corner_ptr = np.concatenate([[0], np.cumsum(counts)])
        self._corner_lookup = {(int(c), int(p)): k for k, (c, p)
                               in enumerate(zip(self.corner_cell, self.corner_node))}
        g = (self.corner_lm[:, None, None] * np.einsum("ki,kj->kij", self.corner_nm, self.corner_nm)
             + self.corner_lp[:, None, None] * np.einsum("ki,kj->kij", self.corner_np, self.corner_np))
        self.corner_visc = g

    def _build_subcells(self):
        x0, y0, x1, y1 = self.domain
        box = shapely.box(x0, y0, x1, y1)
        dual_polys = _polygon_array(self.node_polygons)
        dual_polys = np.where(self.node_on_boundary, shapely.intersection(dual_polys, box), dual_polys)
        # kite (x_c, mid(prev, p), x_p, mid(p, next)) of cell c at node p
        kites = np.empty((self.n_corners, 4, 2))
        for c, nodes in enumerate(self.cell_nodes):
            xy = self.node_xy[nodes]
            mid_prev = 0.5 * (xy + np.roll(xy, 1, axis=0))
            mid_next = 0.5 * (xy + np.roll(xy, -1, axis=0))
            for i, p in enumerate(nodes):
                k = self._corner_lookup[(c, int(p))]
                kites[k] = (self.generators[c], mid_prev[i], xy[i], mid_next[i])
        kite_polys = shapely.polygons(kites)
        inter = shapely.intersection(kite_polys, dual_polys[self.corner_node])
        raw = shapely.area(inter)
        self.corner_area_raw = raw
        sums = np.bincount(self.corner_node, weights=raw, minlength=self.n_nodes)
        if (sums <= 0).any():
            p = int(np.argmin(sums))
            raise MeshError(f"node {p} has no overlap with its cells")
        self.corner_area = raw * (self.node_volume / sums)[self.corner_node]

    def _check_voronoi(self):
        g = self.generators
        inner = ~self.face_is_boundary
        c, d = self.face_cells[inner, 0], self.face_cells[inner, 1]
        for end in (0, 1):
            x = self.node_xy[self.face_nodes[inner, end]]
            r1 = np.hypot(*(x - g[c]).T)
            r2 = np.hypot(*(x - g[d]).T)
            bad = np.abs(r1 - r2) > 1e-8 * self.length_scale
            if bad.any():
                f = int(np.flatnonzero(inner)[np.argmax(bad)])
                raise MeshError(f"face {f} violates the Voronoi property")

    # ------------------------------------------------------------ accessors

    def corner_index(self, c, p):
        return self._corner_lookup[(int(c), int(p))]

    def node_corners(self, p):
        return np.arange(self.node_corner_ptr[p], self.node_corner_ptr[p + 1])

    def cell_corners(self, c):
        return self.cell_corner_idx[self.cell_corner_ptr[c]:self.cell_corner_ptr[c + 1]]

    @property
    def area(self):
        x0, y0, x1, y1 = self.domain
        return (x1 - x0) * (y1 - y0)

    @cached_property
    def interior_nodes(self):
        return np.flatnonzero(~self.node_on_boundary)

    @cached_property
    def interior_cells(self):
        """Cells none of whose nodes lie on the boundary."""
        touch = np.zeros(self.n_cells, dtype=bool)
        touch[self.corner_cell[self.node_on_boundary[self.corner_node]]] = True
        return np.flatnonzero(~touch)

    @cached_property
    def boundary_cells(self):
        touch = np.zeros(self.n_cells, dtype=bool)
        touch[self.corner_cell[self.node_on_boundary[self.corner_node]]] = True
        return np.flatnonzero(touch)

    @cached_property
    def node_wall_normal(self):
        """Outward unit normal per boundary node (sum of wall normals at corners)."""
        out = np.zeros((self.n_nodes, 2))
        for w in _WALLS:
            out[(self.node_walls & w) != 0] += _wall_normal(w)
        return out

    # ------------------------------------------------------ sparse operators

    def _corner_matrix(self, rows, cols, vals, shape):
        return sparse.csr_matrix((vals, (rows, cols)), shape=shape)

    @cached_property
    def grad_matrices(self):
        """(Gx, Gy), node x cell, raw dual-cell gradient without boundary closure."""
        w = self.corner_normal / self.node_volume[self.corner_node, None]
        shape = (self.n_nodes, self.n_cells)
        return tuple(self._corner_matrix(self.corner_node, self.corner_cell, w[:, i], shape)
                     for i in range(2))

    @cached_property
    def curl_matrices(self):
        """(Cx, Cy), cell x node: curl = Cx @ psi_x + Cy @ psi_y."""
        w = -self.corner_tangent / self.cell_volume[self.corner_cell, None]
        shape = (self.n_cells, self.n_nodes)
        return tuple(self._corner_matrix(self.corner_cell, self.corner_node, w[:, i], shape)
                     for i in range(2))

    @cached_property
    def node_average(self):
        """Node x cell matrix of subcell-area weights |w_cp|/|w_p| (rows sum to 1)."""
        w = self.corner_area / self.node_volume[self.corner_node]
        return self._corner_matrix(self.corner_node, self.corner_cell, w,
                                   (self.n_nodes, self.n_cells))

    @cached_property
    def cell_average(self):
        """Cell x node matrix of subcell-area weights normalised per cell."""
        s = np.bincount(self.corner_cell, weights=self.corner_area, minlength=self.n_cells)
        w = self.corner_area / s[self.corner_cell]
        return self._corner_matrix(self.corner_cell, self.corner_node, w,
                                   (self.n_cells, self.n_nodes))

    # ---------------------------------------------------------- diagnostics

    def gauss_residuals(self):
        """Max norms of the node-wise and cell-wise corner-vector sums."""
        sn = np.zeros((self.n_nodes, 2))
        np.add.at(sn, self.corner_node, self.corner_normal)
        sc = np.zeros((self.n_cells, 2))
        np.add.at(sc, self.corner_cell, self.corner_normal)
        st = np.zeros((self.n_cells, 2))
        np.add.at(st, self.corner_cell, self.corner_tangent)
        node_res = np.hypot(*sn[self.interior_nodes].T).max(initial=0.0)
        cell_res = max(np.hypot(*sc.T).max(), np.hypot(*st.T).max())
        return node_res, cell_res

    def rotated(self, quarter_turns=1):
        """Copy rotated by 90 degrees about the domain centre (square domains only)."""
        x0, y0, x1, y1 = self.domain
        if not np.isclose(x1 - x0, y1 - y0):
            raise MeshError("rotation needs a square domain")
        ctr = np.array([(x0 + x1) / 2, (y0 + y1) / 2])
        g, xy = self.generators - ctr, self.node_xy - ctr
        for _ in range(quarter_turns % 4):
            g, xy = rot_ccw(g), rot_ccw(xy)
        return DualMesh(self.domain, g + ctr, xy + ctr, self.cell_nodes)

    def __repr__(self):
        return (f"DualMesh(cells={self.n_cells}, nodes={self.n_nodes}, faces={self.n_faces}, "
                f"h={self.h:.4g})")


# ---------------------------------------------------------------- generation

def clipped_voronoi_cells(seeds, domain):
    """Voronoi cells of ``seeds`` clipped to the rectangle.

    Returns (vertices, regions): vertex coordinates and, per seed, the list of
    vertex indices of its counterclockwise polygon.
    """
    domain = _check_domain(domain)
    x0, y0, x1, y1 = domain
    seeds = np.asarray(seeds, dtype=float).reshape(-1, 2)
    n = len(seeds)
    if n < 4:
        raise DegenerateSeedsError("at least 4 seeds are required")
    L = max(x1 - x0, y1 - y0)
    tol = 1e-9 * L
    x, y = seeds[:, 0], seeds[:, 1]
    if ((x <= x0 + tol) | (x >= x1 - tol) | (y <= y0 + tol) | (y >= y1 - tol)).any():
        raise DegenerateSeedsError("seeds must lie strictly inside the domain")
    pairs = cKDTree(seeds).query_pairs(1e-10 * L)
    if pairs:
        i, j = sorted(pairs)[0]
        raise DegenerateSeedsError(f"coincident seeds {i} and {j}")
    copies = [seeds]
    for w in _WALLS:
        copies.append(_reflect(seeds, w, domain))
    for wa, wb in ((WALL_LEFT, WALL_BOTTOM), (WALL_LEFT, WALL_TOP),
                   (WALL_RIGHT, WALL_BOTTOM), (WALL_RIGHT, WALL_TOP)):
        copies.append(_reflect(_reflect(seeds, wa, domain), wb, domain))
    vor = Voronoi(np.vstack(copies))
    regions = []
    for i in range(n):
        reg = vor.regions[vor.point_region[i]]
        if -1 in reg or len(reg) < 3:
            raise DegenerateSeedsError(f"seed {i} has an unbounded cell")
        regions.append(list(reg))
    return vor.vertices, regions


def _merge_vertices(vertices, regions, domain, tol):
    x0, y0, x1, y1 = domain
    used = np.unique(np.concatenate([np.asarray(r) for r in regions]))
    xy = vertices[used].copy()
    for col, lo, hi in ((0, x0, x1), (1, y0, y1)):
        xy[np.abs(xy[:, col] - lo) <= tol, col] = lo
        xy[np.abs(xy[:, col] - hi) <= tol, col] = hi
    parent = np.arange(len(used))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in cKDTree(xy).query_pairs(tol):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    roots = np.array([find(i) for i in range(len(used))])
    uniq, new_id = np.unique(roots, return_inverse=True)
    merged = np.zeros((len(uniq), 2))
    np.add.at(merged, new_id, xy)
    merged /= np.bincount(new_id)[:, None]
    for col, lo, hi in ((0, x0, x1), (1, y0, y1)):
        merged[np.abs(merged[:, col] - lo) <= tol, col] = lo
        merged[np.abs(merged[:, col] - hi) <= tol, col] = hi
    lookup = dict(zip(used.tolist(), new_id.tolist()))
    out = []
    for reg in regions:
        ids = [lookup[v] for v in reg]
        clean = [v for k, v in enumerate(ids) if v != ids[k - 1]]
        out.append(clean)
    return merged, out


def voronoi_from_seeds(domain, seeds):
    """Build the clipped Voronoi :class:`DualMesh` of the given generators."""
    domain = _check_domain(domain)
    seeds = np.asarray(seeds, dtype=float).reshape(-1, 2)
    vertices, regions = clipped_voronoi_cells(seeds, domain)
    x0, y0, x1, y1 = domain
    tol = 1e-9 * np.sqrt((x1 - x0) * (y1 - y0) / len(seeds))
    node_xy, cell_nodes = _merge_vertices(vertices, regions, domain, tol)
    return DualMesh(domain, seeds, node_xy, cell_nodes)


def lattice_seeds(domain, n_seeds, rng, jitter=0.25):
    """Jittered rectangular lattice with exactly ``n_seeds`` points."""
    x0, y0, x1, y1 = _check_domain(domain)
    W, H = x1 - x0, y1 - y0
    nx = max(2, int(np.ceil(np.sqrt(n_seeds * W / H))))
    ny = max(2, int(np.ceil(n_seeds / nx)))
    dx, dy = W / nx, H / ny
    gx, gy = np.meshgrid(x0 + (np.arange(nx) + 0.5) * dx, y0 + (np.arange(ny) + 0.5) * dy)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    pts += rng.uniform(-jitter, jitter, pts.shape) * np.array([dx, dy])
    if len(pts) > n_seeds:
        keep = np.sort(rng.choice(len(pts), n_seeds, replace=False))
        pts = pts[keep]
    return pts


def generate_voronoi(domain, n_seeds, lloyd_iters=3, seed=0, jitter=0.25):
    """Jittered-lattice Voronoi mesh of a rectangle with Lloyd relaxation.

    The result is reproducible for a fixed ``seed``.
    """
    domain = _check_domain(domain)
    if n_seeds < 4:
        raise DegenerateSeedsError("at least 4 seeds are required")
    if lloyd_iters < 0:
        raise ValueError("lloyd_iters must be >= 0")
    rng = np.random.default_rng(seed)
    pts = lattice_seeds(domain, int(n_seeds), rng, jitter)
    for _ in range(lloyd_iters):
        vertices, regions = clipped_voronoi_cells(pts, domain)
        pts = np.array([polygon_centroid(vertices[r]) for r in regions])
    return voronoi_from_seeds(domain, pts)


def n_seeds_for_h(domain, h):
    """Seed count giving a mean cell size of about ``h``."""
    x0, y0, x1, y1 = _check_domain(domain)
    return max(4, int(round((x1 - x0) * (y1 - y0) / h ** 2)))


# ---------------------------------------------------------------------- I/O

def save_mesh(mesh, path):
    """Write the documented ``VORONOI2D`` text format (17 significant digits)."""
    r = "{:.17g}".format
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"VORONOI2D {mesh.n_cells} {mesh.n_nodes} {mesh.n_faces}\n")
        fh.write("DOMAIN " + " ".join(r(v) for v in mesh.domain) + "\n")
        for p, (x, y) in enumerate(mesh.node_xy):
            fh.write(f"N {p} {r(x)} {r(y)}\n")
        for c, nodes in enumerate(mesh.cell_nodes):
            gx, gy = mesh.generators[c]
            fh.write(f"C {c} {r(gx)} {r(gy)} {len(nodes)} " + " ".join(map(str, nodes)) + "\n")
        for f in range(mesh.n_faces):
            c, d = mesh.face_cells[f]
            a, b = mesh.face_nodes[f]
            fh.write(f"F {f} {c} {d} {a} {b}\n")


def load_mesh(path):
    """Read a ``VORONOI2D`` file, rebuilding and cross-checking all geometry."""
    with open(path, encoding="ascii") as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    try:
        head = lines[0]
        if head[0] != "VORONOI2D":
            raise MeshError(f"{path}: not a VORONOI2D file")
        nc, nn, nf = map(int, head[1:4])
        if lines[1][0] != "DOMAIN":
            raise MeshError(f"{path}: missing DOMAIN line")
        domain = tuple(float(v) for v in lines[1][1:5])
        body = lines[2:]
        nodes = np.full((nn, 2), np.nan)
        gens = np.full((nc, 2), np.nan)
        cell_nodes = [None] * nc
        faces = []
        for tok in body:
            kind, i = tok[0], int(tok[1])
            if kind == "N":
                nodes[i] = float(tok[2]), float(tok[3])
            elif kind == "C":
                gens[i] = float(tok[2]), float(tok[3])
                k = int(tok[4])
                cell_nodes[i] = [int(v) for v in tok[5:5 + k]]
                if len(cell_nodes[i]) != k:
                    raise MeshError(f"{path}: truncated cell line {i}")
            elif kind == "F":
                faces.append(tuple(int(v) for v in tok[2:6]))
            else:
                raise MeshError(f"{path}: unknown record {kind!r}")
    except (IndexError, ValueError) as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"{path}: malformed mesh file ({exc})") from exc
    if np.isnan(nodes).any() or np.isnan(gens).any() or any(n is None for n in cell_nodes):
        raise MeshError(f"{path}: missing node or cell records")
    if len(faces) != nf:
        raise MeshConnectivityError(f"{path}: expected {nf} faces, found {len(faces)}")
    for c, d, a, b in faces:
        if not (0 <= c < nc) or not (d == -1 or 0 <= d < nc):
            raise MeshConnectivityError(f"{path}: face references missing cell ({c}, {d})")
        if not (0 <= a < nn and 0 <= b < nn):
            raise MeshConnectivityError(f"{path}: face references missing node ({a}, {b})")
    mesh = DualMesh(domain, gens, nodes, cell_nodes)
    got = {(c, d, min(a, b), max(a, b)) for (c, d), (a, b) in zip(mesh.face_cells.tolist(),
                                                                    mesh.face_nodes.tolist())}
    want = {(c, d, min(a, b), max(a, b)) for c, d, a, b in faces}
    if got != want:
        raise MeshConnectivityError(f"{path}: face list does not match cell connectivity")
    return mesh
