"""Initial data and parameters of the benchmark problems."""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import model
from .model import GasParams

CONVERGENCE = "convergence"
RP1 = "rp1"
RP2 = "rp2"
VORTEX = "vortex"
EXPLOSION = "explosion"
CUSTOM = "custom"
CASES = (CONVERGENCE, RP1, RP2, VORTEX, EXPLOSION, CUSTOM)
ALIASES = {"manufactured": CONVERGENCE}


class UnknownCaseError(ValueError):
    pass


def canonical_case(name):
    key = str(name).lower()
    key = ALIASES.get(key, key)
    if key not in CASES:
        raise UnknownCaseError(f"unknown case {name!r}; expected one of {', '.join(CASES)}")
    return key


@dataclass
class CaseSetup:
    """Everything needed to start a run besides the mesh."""

    name: str
    domain: tuple
    params: GasParams
    t_final: float
    h: float
    primitive: Callable         # (x, y) -> (rho, u (n,2), p)
    potential: Callable         # (x, y) -> phi
    energy_source: Optional[Callable] = None
    alpha_correction: bool = False
    extra: dict = field(default_factory=dict)


def _gauss(x, y, x0=5.0, y0=5.0):
    r2 = (x - x0) ** 2 + (y - y0) ** 2
    return r2, np.exp(0.5 * (1.0 - r2))


def manufactured_source(x, y):
    """Energy source that balances the steady manufactured state."""
    r2, e = _gauss(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return -e * (r2 - 2.0) / (2.0 * np.pi)


def manufactured_impulse(x, y):
    """Exact impulse j = grad(phi) of the manufactured potential, shape (n, 2)."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    e = _gauss(x, y)[1] / (2 * np.pi)
    return np.column_stack([e * (x - 5.0), e * (y - 5.0)])


def _convergence():
    def prim(x, y):
        r2, e = _gauss(x, y)
        u = e[:, None] / (2 * np.pi) * np.column_stack([-(y - 5.0), x - 5.0])
        return np.ones_like(x), u, np.ones_like(x)

    def pot(x, y):
        return -_gauss(x, y)[1] / (2 * np.pi)

    return CaseSetup(CONVERGENCE, (0.0, 0.0, 10.0, 10.0), GasParams(), 0.1, 0.2,
                     prim, pot, energy_source=manufactured_source, alpha_correction=False)


RP_LEFT = (0.8, -0.25 * np.sqrt(1 - np.sqrt(13) / 8), 0.0, 0.75 + np.sqrt(13) / 20,
           0.25 * np.sqrt((11 + np.sqrt(13)) / 15), 0.0)
RP_RIGHT = (1.0, 0.0, 0.0, 1.0, 0.0, 0.0)


def riemann_states(case):
    """(left, right, x_d) as (rho, u1, u2, p, j1, j2) tuples."""
    if case == RP1:
        return RP_LEFT, RP_RIGHT, 0.5
    if case == RP2:
        return RP_RIGHT, RP_LEFT, 0.2
    raise UnknownCaseError(case)


def _riemann(case):
    left, right, xd = riemann_states(case)
    L, R = np.array(left), np.array(right)

    def prim(x, y):
        v = np.where((x < xd)[:, None], L, R)
        return v[:, 0], v[:, 1:3], v[:, 3]

    def pot(x, y):
        return np.where(x < xd, L[4], R[4]) * (x - xd)

    return CaseSetup(case, (0.0, 0.0, 1.0, 0.1), GasParams(kappa=0.8), 0.5, 1.0 / 150,
                     prim, pot, alpha_correction=False, extra=dict(x_d=xd))


def vortex_state(x, y, gamma):
    r2 = (x - 5.0) ** 2 + (y - 5.0) ** 2
    dT = -25.0 * (gamma - 1) / (8 * gamma * np.pi ** 2) * np.exp(1 - r2)
    rho = (1 + dT) ** (1 / (gamma - 1))
    u = 5 / (2 * np.pi) * np.exp(0.5 * (1 - r2))[:, None] * np.column_stack([5.0 - y, x - 5.0])
    return rho, u, rho ** gamma


def _vortex():
    K, kappa = 1e-3, 1e-2
    params = GasParams(kappa=kappa, K=K, tau_mode=model.CONSTANT, tau0=K / kappa ** 2)
    return CaseSetup(VORTEX, (0.0, 0.0, 10.0, 10.0), params, 0.5, 0.1,
                     lambda x, y: vortex_state(x, y, params.gamma),
                     lambda x, y: np.zeros_like(x), alpha_correction=True)


def explosion_state(x, y):
    inner = x ** 2 + y ** 2 < 0.2 ** 2
    rho = np.where(inner, 1.0, 0.1)
    return rho, np.zeros((len(x), 2)), rho.copy()


def _explosion():
    params = GasParams(gamma=5 / 3, cv=1.5, kappa=0.1, K=1e-3, tau_mode=model.FOURIER)
    return CaseSetup(EXPLOSION, (-1.0, -1.0, 1.0, 1.0), params, 0.2, 1.0 / 30,
                     explosion_state, lambda x, y: np.zeros_like(x), alpha_correction=False)


def _custom():
    def prim(x, y):
        return np.ones_like(x), np.zeros((len(x), 2)), np.ones_like(x)

    return CaseSetup(CUSTOM, (0.0, 0.0, 1.0, 1.0), GasParams(), 0.1, 0.05,
                     prim, lambda x, y: np.zeros_like(x))


_BUILDERS = {
    CONVERGENCE: _convergence,
    RP1: lambda: _riemann(RP1),
    RP2: lambda: _riemann(RP2),
    VORTEX: _vortex,
    EXPLOSION: _explosion,
    CUSTOM: _custom,
}


def case_setup(name):
    """Default setup of a named case (parameters, domain, final time, mesh size)."""
    return _BUILDERS[canonical_case(name)]()
