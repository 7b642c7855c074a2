"""Staggered finite volume solver for a hyperbolic model of
heat-conducting gas on Voronoi meshes."""

from .cases import case_setup
from .driver import RunConfig, Simulation, build_simulation, convergence_study
from .mesh import DualMesh, generate_voronoi, load_mesh, save_mesh
from .model import GasParams

__all__ = ["DualMesh", "GasParams", "RunConfig", "Simulation", "build_simulation",
           "case_setup", "convergence_study", "generate_voronoi", "load_mesh", "save_mesh"]
__version__ = "0.1.0"
