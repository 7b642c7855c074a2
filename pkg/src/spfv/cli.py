"""Command-line interface: ``spfv mesh|run|converge|oracle|cut``."""

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import io, oracles
from .cases import RP1, RP2, case_setup, canonical_case
from .driver import REFERENCE_LEVELS, AdmissibilityError, convergence_study, simulation_from_config
from .mesh import MeshError, generate_voronoi, load_mesh, n_seeds_for_h, save_mesh


def _parse_sets(items):
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise io.ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = yaml.safe_load(value)
    return out


def _error(kind, **fields):
    """Machine-readable error line on stderr."""
    print("ERROR " + json.dumps({"error": kind, **fields}, sort_keys=True), file=sys.stderr)


# ------------------------------------------------------------------ commands

def cmd_mesh(args):
    if args.action == "gen":
        if not (args.case or args.domain):
            raise io.ConfigError("mesh: give --case or --domain")
        setup = case_setup(args.case) if args.case else None
        domain = tuple(args.domain) if args.domain else setup.domain
        h = args.h or (setup.h if setup else 0.1)
        n = args.n or n_seeds_for_h(domain, h)
        mesh = generate_voronoi(domain, n, lloyd_iters=args.lloyd, seed=args.seed)
        save_mesh(mesh, args.out)
        print(f"wrote {args.out}: {mesh.n_cells} cells, {mesh.n_nodes} nodes, h={mesh.h:.4g}")
    else:
        mesh = load_mesh(args.file)
        print(f"{args.file}: {mesh.n_cells} cells, {mesh.n_nodes} nodes, {mesh.n_faces} faces, "
              f"h={mesh.h:.6g}, domain={tuple(mesh.domain)}")
    return 0


def run_overrides(args):
    over = {}
    if args.case:
        over["case"] = args.case
    if args.tf is not None:
        over["t_final"] = args.tf
    if args.cfl is not None:
        over["cfl"] = args.cfl
    if args.mesh:
        over["mesh.file"] = args.mesh
    if args.h is not None:
        over["mesh.h"] = args.h
    if args.seed is not None:
        over["mesh.seed"] = args.seed
    if args.alpha is not None:
        over["alpha_correction"] = args.alpha
    if args.output_every is not None:
        over["output_every"] = args.output_every
    over.update(_parse_sets(args.set))
    return over


def cmd_run(args):
    over = run_overrides(args)
    if args.config:
        tree = io.load_config_tree(args.config)
    else:
        if "case" not in over:
            raise io.ConfigError("case: give --case or --config")
        tree = io.default_config(over["case"])
        if "mesh.file" in over:
            tree["mesh"].pop("h", None)
    config = io.parse_config(tree, over)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.dump_config(config, out / "config.yaml")
    sim = simulation_from_config(config)

    def snapshot(s, tag):
        cells, nodes = io.snapshot_fields(s)
        io.write_vtk(s.mesh, cells, out / f"{tag}.vtk", node_fields=nodes)

    every = config.output_every

    def callback(s):
        if every and s.steps % every == 0:
            snapshot(s, f"snapshot_{s.steps:06d}")

    if every:
        snapshot(sim, "snapshot_000000")
    try:
        sim.run(callback)
    except AdmissibilityError as exc:
        io.write_diagnostics(sim.diagnostics, out / "diagnostics.csv")
        _error("admissibility", step=exc.step, t=exc.t, cells=exc.cells[:20].tolist(),
               message=str(exc))
        return 3
    io.write_diagnostics(sim.diagnostics, out / "diagnostics.csv")
    snapshot(sim, "final")
    if config.case in (RP1, RP2):
        io.write_cut(oracles.cut_line(sim.mesh, sim.fields()), out / "cut.csv")
    print(f"{config.case}: t={sim.t:.6g} after {sim.steps} steps on {sim.mesh.n_cells} cells; "
          f"output in {out}")
    return 0


def cmd_converge(args):
    if canonical_case(args.case) != "convergence":  # the only case with an exact reference
        raise io.ConfigError("case: converge supports the manufactured case only")
    if args.levels < 3:
        raise io.ConfigError("levels: need at least 3 mesh levels")
    if args.h0 is None and args.levels <= len(REFERENCE_LEVELS):
        levels = REFERENCE_LEVELS[:args.levels]
    else:
        h0 = args.h0 or REFERENCE_LEVELS[0]
        levels = [h0 * args.ratio ** k for k in range(args.levels)]
    rows, orders = convergence_study(levels, seed=args.seed, alpha_correction=args.alpha,
                                     progress=lambda r: print(
                                         f"h={r.h:.4g} cells={r.n_cells} rho={r.err_rho:.3e} "
                                         f"u={r.err_u:.3e} j1={r.err_j1:.3e} "
                                         f"curl={r.curl:.2e}"))
    for k, v in orders.items():
        print(f"order {k}: " + " ".join(f"{o:.2f}" for o in v))
    if args.out:
        io.write_convergence(rows, args.out)
    return 0


def cmd_oracle(args):
    case = canonical_case(args.case)
    if case not in (RP1, RP2):
        raise io.ConfigError("case: the 1D oracle covers rp1 and rp2")
    prof = oracles.riemann_1d(case, n_cells=args.n, t_final=args.tf or case_setup(case).t_final)
    out = args.out or f"{case}_oracle.csv"
    io.write_cut({"x": prof.x, "rho": prof.rho, "u1": prof.u1, "u2": np.zeros_like(prof.x),
                  "p": prof.p, "theta": prof.theta, "j1": prof.j1, "j2": np.zeros_like(prof.x)},
                 out)
    print(f"wrote {out} ({args.n} cells)")
    return 0


def cmd_cut(args):
    """Cut line of a VTK snapshot written by ``run``."""
    data = io.read_vtk(args.vtk)
    pts = data["points"]
    cells = [np.asarray(p) for p in data["polygons"]]
    centroids = np.array([pts[c].mean(axis=0) for c in cells])

    class _Stub:
        generators = centroids
        domain = (pts[:, 0].min(), pts[:, 1].min(), pts[:, 0].max(), pts[:, 1].max())

    cd = data["cell_data"]
    fields = {k: v for k, v in cd.items() if v.ndim == 1}
    for vec, (a, b) in (("u", ("u1", "u2")), ("j", ("j1", "j2"))):
        if vec in cd:
            fields[a], fields[b] = cd[vec][:, 0], cd[vec][:, 1]
    cut = oracles.cut_line(_Stub, fields, y=args.y, n_points=args.n)
    io.write_cut(cut, args.out)
    print(f"wrote {args.out} ({args.n} points at y={args.y})")
    return 0


# -------------------------------------------------------------------- parser

def build_parser():
    p = argparse.ArgumentParser(prog="spfv", description="Staggered finite volume solver for "
                                "heat-conducting gas on Voronoi meshes.")
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("mesh", help="generate or inspect Voronoi meshes")
    msub = m.add_subparsers(dest="action", required=True)
    g = msub.add_parser("gen", help="generate a mesh file")
    g.add_argument("--case", help="take domain and default h from a case")
    g.add_argument("--domain", type=float, nargs=4, metavar=("X0", "Y0", "X1", "Y1"))
    g.add_argument("--h", type=float, help="target cell size")
    g.add_argument("--n", type=int, help="number of cells (overrides --h)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--lloyd", type=int, default=3, help="Lloyd iterations")
    g.add_argument("--out", required=True)
    i = msub.add_parser("info", help="summarise a mesh file")
    i.add_argument("file")

    r = sub.add_parser("run", help="run a case")
    r.add_argument("--config", help="YAML run configuration")
    r.add_argument("--case")
    r.add_argument("--mesh", help="mesh file (otherwise a mesh is generated)")
    r.add_argument("--tf", type=float, help="final time")
    r.add_argument("--cfl", type=float)
    r.add_argument("--h", type=float, help="cell size of the generated mesh")
    r.add_argument("--seed", type=int)
    r.add_argument("--alpha", action=argparse.BooleanOptionalAction, default=None,
                   help="entropy-compatible flux correction")
    r.add_argument("--output-every", type=int, help="VTK snapshot every N steps")
    r.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any configuration key, e.g. params.kappa=0.5")
    r.add_argument("--out", default="results")

    c = sub.add_parser("converge", help="mesh convergence study of the manufactured case")
    c.add_argument("--case", default="manufactured")
    c.add_argument("--levels", type=int, default=4)
    c.add_argument("--h0", type=float, help="coarsest h (default: the reference levels)")
    c.add_argument("--ratio", type=float, default=0.75, help="h ratio between levels")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--alpha", action=argparse.BooleanOptionalAction, default=None)
    c.add_argument("--out", help="CSV table")

    o = sub.add_parser("oracle", help="1D reference solution of a Riemann problem")
    o.add_argument("case")
    o.add_argument("--n", type=int, default=5000)
    o.add_argument("--tf", type=float)
    o.add_argument("--out")

    k = sub.add_parser("cut", help="extract a horizontal cut line from a VTK snapshot")
    k.add_argument("vtk")
    k.add_argument("--y", type=float, default=0.05)
    k.add_argument("--n", type=int, default=200)
    k.add_argument("--out", default="cut.csv")
    return p


COMMANDS = {"mesh": cmd_mesh, "run": cmd_run, "converge": cmd_converge, "oracle": cmd_oracle,
            "cut": cmd_cut}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except io.ConfigError as exc:
        _error("config", message=str(exc))
        return 2
    except (MeshError, OSError, ValueError) as exc:
        _error(type(exc).__name__, message=str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
