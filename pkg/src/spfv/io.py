"""File formats: legacy VTK snapshots, CSV tables and YAML run configurations.

All numbers are written with 17 significant digits through ``repr``-free
``format`` calls, so output does not depend on the locale.
"""

import csv
import dataclasses
import math
from pathlib import Path

import numpy as np
import yaml

from .cases import canonical_case, case_setup
from .driver import DIAGNOSTIC_COLUMNS, RunConfig
from .model import GasParams
from .oracles import CUT_FIELDS

CUT_COLUMNS = ("x",) + CUT_FIELDS


def _fmt(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


# ----------------------------------------------------------------------- VTK

def _write_polydata(path, title, points, polygons, cell_fields):
    path = Path(path)
    n_cells = len(polygons)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(title.replace("\n", " ")[:250] + "\n")
        fh.write("ASCII\nDATASET POLYDATA\n")
        fh.write(f"POINTS {len(points)} double\n")
        for x, y in points:
            fh.write(f"{_fmt(x)} {_fmt(y)} 0\n")
        size = sum(len(p) + 1 for p in polygons)
        fh.write(f"POLYGONS {n_cells} {size}\n")
        for poly in polygons:
            fh.write(" ".join(str(int(i)) for i in (len(poly), *poly)) + "\n")
        if cell_fields:
            fh.write(f"CELL_DATA {n_cells}\n")
        for name, values in cell_fields.items():
            values = np.asarray(values, dtype=float)
            if values.shape[0] != n_cells:
                raise ValueError(f"field {name!r} has {values.shape[0]} values, "
                                 f"expected {n_cells}")
            if values.ndim == 1:
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                fh.writelines(_fmt(v) + "\n" for v in values)
            elif values.ndim == 2 and values.shape[1] == 2:
                fh.write(f"VECTORS {name} double\n")
                fh.writelines(f"{_fmt(a)} {_fmt(b)} 0\n" for a, b in values)
            else:
                raise ValueError(f"field {name!r} must be scalar or 2-vector per cell")


def dual_polygons(mesh):
    """Polygons of the dual mesh over the point list ``generators + node_xy``.

    Interior dual cells connect the generators around a node; at boundary nodes the
    node itself closes the polygon.
    """
    polys = []
    for p in range(mesh.n_nodes):
        ring = list(mesh.node_cells[p])
        if mesh.node_on_boundary[p]:
            ring.append(mesh.n_cells + p)
        polys.append(ring)
    return polys


def write_vtk(mesh, cell_fields, path, node_fields=None):
    """Write cell fields on the primal polygons; node fields (if any) go to a second
    file ``<stem>_nodes.vtk`` over the dual polygons.  Returns the written paths."""
    path = Path(path)
    _write_polydata(path, "spfv primal cells", mesh.node_xy, mesh.cell_nodes, cell_fields)
    written = [path]
    if node_fields:
        npath = path.with_name(path.stem + "_nodes" + path.suffix)
        points = np.vstack([mesh.generators, mesh.node_xy])
        _write_polydata(npath, "spfv dual cells", points, dual_polygons(mesh), node_fields)
        written.append(npath)
    return written


def read_vtk(path):
    """Parse a legacy ASCII POLYDATA file written by :func:`write_vtk`.

    Returns ``dict(points, polygons, cell_data)``.
    """
    tokens = Path(path).read_text(encoding="ascii").split("\n")
    if not tokens[0].startswith("# vtk DataFile"):
        raise ValueError(f"{path}: not a legacy VTK file")
    body = " ".join(tokens[2:]).split()
    pos = 0

    def take(n):
        nonlocal pos
        out = body[pos:pos + n]
        pos += n
        return out

    if take(3) != ["ASCII", "DATASET", "POLYDATA"]:
        raise ValueError(f"{path}: expected ASCII POLYDATA")
    _, n_pts, _ = take(3)
    points = np.array(take(3 * int(n_pts)), dtype=float).reshape(-1, 3)[:, :2]
    _, n_poly, size = take(3)
    flat = [int(v) for v in take(int(size))]
    polygons, i = [], 0
    while i < len(flat):
        polygons.append(flat[i + 1:i + 1 + flat[i]])
        i += flat[i] + 1
    data = {}
    if pos < len(body):
        key, n = take(2)
        if key != "CELL_DATA":
            raise ValueError(f"{path}: unexpected section {key}")
        n = int(n)
        while pos < len(body):
            kind = take(1)[0]
            if kind == "SCALARS":
                name, _, _ = take(3)
                take(2)  # LOOKUP_TABLE default
                data[name] = np.array(take(n), dtype=float)
            elif kind == "VECTORS":
                name, _ = take(2)
                data[name] = np.array(take(3 * n), dtype=float).reshape(n, 3)[:, :2]
            else:
                raise ValueError(f"{path}: unexpected section {kind}")
    return dict(points=points, polygons=polygons, cell_data=data)


def snapshot_fields(sim):
    """Cell and node fields of a simulation snapshot."""
    f = sim.fields()
    cells = {k: f[k] for k in ("rho", "p", "theta", "eta", "curl")}
    cells["u"] = np.column_stack([f["u1"], f["u2"]])
    cells["j"] = np.column_stack([f["j1"], f["j2"]])
    return cells, {"j": sim.j}


# ----------------------------------------------------------------------- CSV

def write_table(path, columns, rows):
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_table(path):
    """Read a numeric CSV written by this module into ``{column: array}``."""
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))
    return {name: data[:, i] for i, name in enumerate(header)}


def write_diagnostics(diagnostics, path):
    write_table(path, DIAGNOSTIC_COLUMNS, diagnostics.as_array())


def write_cut(cut, path):
    cols = [c for c in CUT_COLUMNS if c in cut]
    write_table(path, cols, np.column_stack([cut[c] for c in cols]))


def write_convergence(rows, path):
    cols = ("h", "n_cells", "err_rho", "err_u", "err_j1", "curl")
    write_table(path, cols, [[getattr(r, c) for c in cols] for r in rows])


# -------------------------------------------------------------------- config

class ConfigError(ValueError):
    pass


_RUN_KEYS = {f.name: f for f in dataclasses.fields(RunConfig) if f.name != "params"}
_PARAM_KEYS = {f.name: f for f in dataclasses.fields(GasParams)}
_MESH_KEYS = {"file": "mesh_file", "h": "h", "seed": "seed", "lloyd_iters": "lloyd_iters"}
_FLOAT = {"t_final", "cfl", "h", "gamma", "cv", "kappa", "K", "tau0"}
_INT = {"max_steps", "output_every", "seed", "lloyd_iters"}
_BOOL = {"alpha_correction", "source_on"}


def _coerce(key_path, name, value):
    try:
        if name in _FLOAT:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if name in _INT:
            if isinstance(value, bool) or float(value) != int(float(value)):
                raise TypeError
            return int(float(value))
        if name in _BOOL:
            if isinstance(value, str):
                low = value.lower()
                if low not in ("true", "false", "1", "0", "yes", "no"):
                    raise TypeError
                return low in ("true", "1", "yes")
            if not isinstance(value, (bool, int)):
                raise TypeError
            return bool(value)
        if value is None:
            return None
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key_path}: invalid value {value!r}") from None


def default_config(case):
    """Nested configuration dictionary with the defaults of a named case."""
    setup = case_setup(case)
    return {
        "case": setup.name,
        "t_final": setup.t_final,
        "cfl": 0.45,
        "alpha_correction": setup.alpha_correction,
        "source_on": True,
        "params": dataclasses.asdict(setup.params),
        "mesh": {"h": setup.h, "seed": 0, "lloyd_iters": 3},
    }


def _set_dotted(tree, dotted, value):
    keys = dotted.split(".")
    node = tree
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"{dotted}: {k} is not a section")
    node[keys[-1]] = value


def load_config_tree(source):
    if source is None:
        return {}
    if isinstance(source, dict):
        return dict(source)
    try:
        tree = yaml.safe_load(Path(source).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if tree is None:
        return {}
    if not isinstance(tree, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    return tree


def parse_config(source=None, overrides=None):
    """Validated RunConfig from a YAML file or dictionary plus dotted-key overrides.

    Overrides (e.g. ``{"params.kappa": 0.5, "t_final": 1}``) win over file values.
    Parameters not given fall back to the defaults of the named case.  Unknown keys
    and missing ``case`` / ``t_final`` are errors.
    """
    tree = load_config_tree(source)
    for k, v in (overrides or {}).items():
        _set_dotted(tree, k, v)
    if "case" not in tree:
        raise ConfigError("case: missing required key")
    try:
        case = canonical_case(tree["case"])
    except ValueError as exc:
        raise ConfigError(f"case: {exc}") from None
    if "t_final" not in tree:
        raise ConfigError("t_final: missing required key")

    run = {"case": case}
    params = dataclasses.asdict(case_setup(case).params)
    for key, value in tree.items():
        if key == "case":
            continue
        if key == "params":
            if not isinstance(value, dict):
                raise ConfigError("params: must be a mapping")
            for pk, pv in value.items():
                if pk not in _PARAM_KEYS:
                    raise ConfigError(f"params.{pk}: unknown key")
                params[pk] = _coerce(f"params.{pk}", pk, pv)
        elif key == "mesh":
            if not isinstance(value, dict):
                raise ConfigError("mesh: must be a mapping")
            for mk, mv in value.items():
                if mk not in _MESH_KEYS:
                    raise ConfigError(f"mesh.{mk}: unknown key")
                run[_MESH_KEYS[mk]] = _coerce(f"mesh.{mk}", _MESH_KEYS[mk], mv)
        elif key in _RUN_KEYS and key not in ("mesh_file", "h", "seed", "lloyd_iters"):
            run[key] = _coerce(key, key, value)
        else:
            raise ConfigError(f"{key}: unknown key")
    if "alpha_correction" not in run:
        run["alpha_correction"] = case_setup(case).alpha_correction
    try:
        return RunConfig(params=GasParams(**params), **run)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def config_to_dict(config):
    """Nested dictionary that :func:`parse_config` maps back to the same RunConfig."""
    out = {"case": config.case}
    for name in _RUN_KEYS:
        if name in ("case", "mesh_file", "h", "seed", "lloyd_iters"):
            continue
        out[name] = getattr(config, name)
    out["params"] = dataclasses.asdict(config.params)
    mesh = {"seed": config.seed, "lloyd_iters": config.lloyd_iters}
    if config.mesh_file is not None:
        mesh["file"] = config.mesh_file
    if config.h is not None:
        mesh["h"] = config.h
    out["mesh"] = mesh
    return out


def dump_config(config, path=None):
    text = yaml.safe_dump(config_to_dict(config), sort_keys=False)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
