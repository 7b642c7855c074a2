"""Riemann problem on a thin Voronoi strip against the 1D reference solver.

Runs RP1 (or RP2) on [0, 1] x [0, 0.1] with walls, extracts the cut y = 0.05 and
compares it with a 5000-cell second-order solution of the one-dimensional system.
Prints the wave positions and plateau errors per field and writes both profiles to
``riemann_strip_<case>.csv`` for plotting.

    python demos/riemann_strip.py [rp1|rp2] [h]
"""

import sys

import numpy as np

from spfv import io
from spfv.cases import case_setup
from spfv.driver import build_simulation
from spfv.oracles import compare_cut, cut_line, riemann_1d, strip_spread


def main(case="rp1", h=1 / 75):
    sim = build_simulation(case, h=h)
    print(f"{case}: {sim.mesh.n_cells} cells, h = {sim.mesh.h:.4f}")
    sim.run()
    print(f"reached t = {sim.t:.3f} in {sim.steps} steps, max |curl j| = {sim.curl_inf():.1e}")

    ref = riemann_1d(case, t_final=case_setup(case).t_final)
    fields = sim.fields()
    cut = cut_line(sim.mesh, fields)
    print(f"{'field':>6} {'waves':>6} {'pos err / h':>12} {'L1 away':>8} {'spread':>7}")
    for name in ("rho", "u1", "p", "theta", "j1"):
        cmp = compare_cut(cut, ref, name, sim.mesh.h)
        spread = strip_spread(sim.mesh, fields[name], cmp.amplitude)
        print(f"{name:>6} {len(cmp.position_errors):6d} "
              f"{cmp.max_position_error() / sim.mesh.h:12.1f} {100 * cmp.l1_away:7.2f}% "
              f"{100 * spread:6.2f}%")

    out = {"x": cut["x"]}
    for name in ("rho", "u1", "p", "theta", "j1"):
        out[name] = cut[name]
        out[name + "_ref"] = ref.sample(cut["x"], name)
    path = f"riemann_strip_{case}.csv"
    io.write_table(path, list(out), np.column_stack(list(out.values())))
    print(f"wrote {path}")


if __name__ == "__main__":
    args = sys.argv[1:]
    main(args[0] if args else "rp1", float(args[1]) if len(args) > 1 else 1 / 75)
