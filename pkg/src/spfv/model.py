"""Ideal-gas thermodynamics of the hyperbolic heat-conduction model.

All functions are vectorised: scalar fields have shape ``(n,)`` and vector fields
``(n, 2)``.  The thermal coupling coefficient is ``alpha = kappa**2 / rho``.
"""

from dataclasses import dataclass

import numpy as np

RHO_MIN = 1e-12
RHOEPS_MIN = 1e-14

CONSTANT = "constant"
FOURIER = "fourier"


class StateError(ValueError):
    """Inadmissible thermodynamic state; ``cells`` lists offending indices."""

    def __init__(self, message, cells=()):
        super().__init__(message)
        self.cells = np.atleast_1d(np.asarray(cells, dtype=np.int64))


@dataclass(frozen=True)
class GasParams:
    gamma: float = 2.0
    cv: float = 1.0
    kappa: float = 1.0
    K: float = 0.0
    tau_mode: str = CONSTANT
    tau0: float = np.inf

    def __post_init__(self):
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")
        if not self.cv > 0:
            raise ValueError("cv must be positive")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if self.K < 0:
            raise ValueError("K must be non-negative")
        if self.tau_mode not in (CONSTANT, FOURIER):
            raise ValueError(f"unknown tau_mode {self.tau_mode!r}")
        if self.tau_mode == CONSTANT and not self.tau0 > 0:
            raise ValueError("tau0 must be positive (use inf for no relaxation)")
        if self.tau_mode == FOURIER and not self.K > 0:
            raise ValueError("Fourier relaxation needs K > 0")


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def eos_from_rho_eta(rho, eta, params):
    """Specific internal energy, pressure and temperature from (rho, eta)."""
    g, cv = params.gamma, params.cv
    rho = np.asarray(rho, dtype=float)
    ex = np.exp(np.asarray(eta, dtype=float) / cv)
    eps = rho ** (g - 1) * ex / (g - 1)
    p = rho ** g * ex
    theta = rho ** (g - 1) * ex / (cv * (g - 1))
    return eps, p, theta


def internal_energy(rho, mom, E, j, params):
    """Volumetric internal energy rho*eps with kinetic and thermal parts removed."""
    rho = np.asarray(rho, dtype=float)
    return E - 0.5 * _dot(mom, mom) / rho - 0.5 * params.kappa ** 2 * _dot(j, j) / rho


def check_admissible(rho, rhoeps):
    bad = np.flatnonzero(~(rho > RHO_MIN))
    if bad.size:
        raise StateError(f"density below {RHO_MIN} in {bad.size} cell(s), first {bad[0]}", bad)
    bad = np.flatnonzero(~(rhoeps > RHOEPS_MIN))
    if bad.size:
        raise StateError(
            f"internal energy below {RHOEPS_MIN} in {bad.size} cell(s), first {bad[0]}", bad)


def eta_from_conserved(rho, mom, E, j, params):
    """Specific entropy from the conserved variables and the local thermal impulse."""
    rho = np.asarray(rho, dtype=float)
    rhoeps = internal_energy(rho, mom, E, j, params)
    check_admissible(np.atleast_1d(rho), np.atleast_1d(rhoeps))
    g = params.gamma
    return params.cv * np.log((g - 1) * rhoeps / rho ** g)


def conserved_from_primitive(rho, u, p, j, params):
    """(rho, rho u, E) from density, velocity, pressure and thermal impulse."""
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    E = (0.5 * rho * _dot(u, u) + np.asarray(p, dtype=float) / (params.gamma - 1)
         + 0.5 * params.kappa ** 2 * _dot(j, j) / rho)
    return rho, rho[..., None] * u, E


def pressure_to_eta(rho, p, params):
    g = params.gamma
    return params.cv * np.log(np.asarray(p, dtype=float) / np.asarray(rho, dtype=float) ** g)


@dataclass
class Primitive:
    rho: np.ndarray
    u: np.ndarray
    p: np.ndarray
    theta: np.ndarray
    eta: np.ndarray

    @property
    def s(self):
        return self.rho * self.eta


def primitives(rho, mom, E, j, params):
    """Primitive fields from conserved ones; raises StateError if inadmissible."""
    rho = np.asarray(rho, dtype=float)
    eta = eta_from_conserved(rho, mom, E, j, params)
    _, p, theta = eos_from_rho_eta(rho, eta, params)
    return Primitive(rho=rho, u=np.asarray(mom) / rho[..., None], p=p, theta=theta, eta=eta)


def wave_speeds_x(rho, u, p, theta, j, params):
    """The four non-trivial characteristic speeds in the x direction.

    Returns an array ``(..., 4)`` ordered u1 - sqrt(Z1+Z2), u1 - sqrt(Z1-Z2),
    u1 + sqrt(Z1-Z2), u1 + sqrt(Z1+Z2).
    """
    z1, z2 = _z_terms(rho, p, theta, np.asarray(j)[..., 1] ** 2, params)
    fast, slow = np.sqrt(z1 + z2), np.sqrt(np.maximum(z1 - z2, 0.0))
    u1 = np.asarray(u)[..., 0]
    return np.stack([u1 - fast, u1 - slow, u1 + slow, u1 + fast], axis=-1)


def _z_terms(rho, p, theta, jt2, params):
    g, cv, k2 = params.gamma, params.cv, params.kappa ** 2
    a = g * p / rho
    b = k2 * theta / (rho ** 2 * cv)
    z1 = 0.5 * (a + b + 2 * k2 / rho ** 2 * jt2)
    z2 = np.sqrt((params.kappa * p / (cv * rho ** 2)) ** 2 + 0.25 * (a - b) ** 2)
    return z1, z2


def max_wave_speed(rho, u, p, theta, j, params):
    """Direction-independent upper bound |u| + sqrt(Z1 + Z2) with |j|^2 as transverse term."""
    rho = np.asarray(rho, dtype=float)
    z1, z2 = _z_terms(rho, p, theta, _dot(j, j), params)
    rad = z1 + z2
    bad = np.flatnonzero(~(np.atleast_1d(rad) > 0))
    if bad.size:
        raise StateError("negative radicand in wave speed", bad)
    return np.sqrt(_dot(u, u)) + np.sqrt(rad)


def sound_bound(prim, j, params):
    return max_wave_speed(prim.rho, prim.u, prim.p, prim.theta, j, params)


@dataclass
class DualVars:
    """Entropy-conjugate variables (w_rho, w_mom, w_j, w_E) = (-r, -u, -b, 1) / theta."""

    w_rho: np.ndarray
    w_mom: np.ndarray
    w_j: np.ndarray
    w_E: np.ndarray

    def stack(self):
        """(..., 6) array ordered (rho, m1, m2, j1, j2, E)."""
        return np.concatenate([self.w_rho[..., None], self.w_mom, self.w_j,
                               self.w_E[..., None]], axis=-1)


def dual_vars(rho, mom, E, j, params):
    """Partial derivatives of the total energy E(rho, rho u, j, rho eta) turned into
    entropy variables."""
    prim = primitives(rho, mom, E, j, params)
    return dual_vars_from_primitive(prim, j, params)


def dual_vars_from_primitive(prim, j, params):
    g, k2 = params.gamma, params.kappa ** 2
    rho, u, p, theta, eta = prim.rho, prim.u, prim.p, prim.theta, prim.eta
    bad = np.flatnonzero(~(np.atleast_1d(theta) > 0))
    if bad.size:
        raise StateError("non-positive temperature", bad)
    j = np.asarray(j, dtype=float)
    b = k2 * j / rho[..., None]
    r = (g * p / ((g - 1) * rho) - eta * theta - 0.5 * _dot(u, u)
         - 0.5 * k2 * _dot(j, j) / rho ** 2)
    inv = 1.0 / theta
    return DualVars(w_rho=-r * inv, w_mom=-u * inv[..., None], w_j=-b * inv[..., None], w_E=inv)


def relaxation_time(rho, theta, params):
    """Relaxation time per cell: constant, or K rho / (kappa^2 theta) in the Fourier mode."""
    rho = np.asarray(rho, dtype=float)
    if params.tau_mode == FOURIER:
        return params.K * rho / (params.kappa ** 2 * np.asarray(theta, dtype=float))
    return np.full(np.shape(rho), float(params.tau0))


def entropy_flux_physical(rho, u, s, j, params):
    """Physical entropy flux s u + alpha j."""
    rho = np.asarray(rho, dtype=float)
    return np.asarray(s)[..., None] * u + (params.kappa ** 2 / rho)[..., None] * j


def euler_flux(rho, u, p, E):
    """Euler part of the flux, shape (..., 4, 2) for rows (rho, m1, m2, E)."""
    rho = np.asarray(rho, dtype=float)
    out = np.empty(rho.shape + (4, 2))
    out[..., 0, :] = rho[..., None] * u
    out[..., 1:3, :] = rho[..., None, None] * np.einsum("...i,...j->...ij", u, u)
    out[..., 1, 0] += p
    out[..., 2, 1] += p
    out[..., 3, :] = (E + p)[..., None] * u
    return out


def thermal_flux(rho, u, theta, j, params):
    """Thermal-impulse part of the flux, shape (..., 4, 2) for rows (rho, m1, m2, E).

    The energy row carries both the work term g^m u and the heat flux alpha theta j,
    so that euler_flux + thermal_flux equals the full physical flux.
    """
    rho = np.asarray(rho, dtype=float)
    alpha = params.kappa ** 2 / rho
    out = np.zeros(rho.shape + (4, 2))
    jj = np.einsum("...i,...j->...ij", j, j)
    gm = alpha[..., None, None] * (jj - _dot(j, j)[..., None, None] * np.eye(2))
    out[..., 1:3, :] = gm
    out[..., 3, :] = np.einsum("...ij,...j->...i", gm, u) + (alpha * theta)[..., None] * j
    return out


def impulse_flux(u, theta, j):
    """Conservative part of the j flux, (j.u + theta) I, as (..., 2, 2)."""
    phi = _dot(j, u) + theta
    return phi[..., None, None] * np.eye(2)


def total_flux(rho, u, p, theta, E, j, params):
    """Full flux of (rho, m1, m2, E) written directly from the model, (..., 4, 2)."""
    rho = np.asarray(rho, dtype=float)
    alpha = params.kappa ** 2 / rho
    jj = np.einsum("...i,...j->...ij", j, j)
    uu = np.einsum("...i,...j->...ij", u, u)
    j2 = _dot(j, j)
    out = np.empty(rho.shape + (4, 2))
    out[..., 0, :] = rho[..., None] * u
    out[..., 1:3, :] = (rho[..., None, None] * uu + (p - alpha * j2)[..., None, None] * np.eye(2)
                        + alpha[..., None, None] * jj)
    out[..., 3, :] = ((E + p - alpha * j2)[..., None] * u
                      + (alpha * _dot(j, u))[..., None] * j + (alpha * theta)[..., None] * j)
    return out
