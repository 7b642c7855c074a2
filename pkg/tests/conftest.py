import numpy as np
import pytest

from spfv.mesh import generate_voronoi, voronoi_from_seeds

# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split(":")[0]):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def unit_mesh():
    """Small Lloyd-relaxed Voronoi mesh of the unit square."""
    return generate_voronoi((0.0, 0.0, 1.0, 1.0), 150, lloyd_iters=3, seed=1)


@pytest.fixture(scope="session")
def rough_mesh():
    """Voronoi mesh without Lloyd relaxation (irregular cells)."""
    return generate_voronoi((0.0, 0.0, 2.0, 1.0), 120, lloyd_iters=0, seed=5, jitter=0.45)


@pytest.fixture(scope="session")
def square_lattice():
    """Cartesian 12 x 12 lattice seeds: every node is shared by four cells."""
    g = (np.arange(12) + 0.5) / 12
    x, y = np.meshgrid(g, g)
    return voronoi_from_seeds((0.0, 0.0, 1.0, 1.0), np.column_stack([x.ravel(), y.ravel()]))
