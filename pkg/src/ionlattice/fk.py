"""Frenkel-Kontorova reference chain with periodic boundaries.

Energy per configuration (particle ``i`` couples to ``i+1``, with
``x_N = x_0 + N a`` closing the ring):

    H = sum_i [k_s / 2 (x_{i+1} - x_i - a)**2 + K cos(2 pi x_i / lam)]

A ring of ``N`` particles over ``M`` lattice wells, ``a / lam = M / N``,
with ``M / N`` a ratio of consecutive Fibonacci numbers mimics the
incommensurate golden-mean chain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .statics import minimize

GOLDEN_MEAN = (np.sqrt(5) - 1) / 2
# K_c for the golden mean with V = K_std / (2 pi)^2 (1 - cos 2 pi x), k_s = 1, lam = 1
AUBRY_KC_STANDARD = 0.971635


def fibonacci_convergent(n_particles: int) -> tuple[int, int]:
    """(particles, wells) for the Fibonacci pair whose larger member is ``n_particles``."""
    a, b = 1, 1
    while b < n_particles:
        a, b = b, a + b
    if b != n_particles:
        raise ValueError(f"{n_particles} is not a Fibonacci number")
    return b, a


@dataclass(frozen=True)
class FKChainParams:
    ion_count: int = 34
    wells: int = 21
    mass: float = 1.0
    spring_constant: float = 1.0
    lattice_period: float = 1.0

    def __post_init__(self):
        if self.ion_count < 2 or self.wells < 1:
            raise ValueError("need at least two particles and one well")

    @property
    def natural_length(self) -> float:
        return self.wells * self.lattice_period / self.ion_count

    @property
    def winding_ratio(self) -> float:
        return self.wells / self.ion_count

    def standard_strength(self, k: float) -> float:
        """Convert a lattice amplitude ``K`` to the conventional ``K_std = (2 pi / lam)^2 K / k_s``."""
        return (2 * np.pi / self.lattice_period) ** 2 * k / self.spring_constant

    def from_standard(self, k_std: float) -> float:
        return k_std * self.spring_constant / (2 * np.pi / self.lattice_period) ** 2


def _bonds(x, p: FKChainParams):
    nxt = np.roll(x, -1)
    nxt[-1] += p.ion_count * p.natural_length
    return nxt - x - p.natural_length


def fk_energy(x, p: FKChainParams, k: float) -> float:
    b = _bonds(x, p)
    q = 2 * np.pi / p.lattice_period
    return float(0.5 * p.spring_constant * np.dot(b, b) + k * np.sum(np.cos(q * x)))


def fk_gradient(x, p: FKChainParams, k: float) -> np.ndarray:
    b = p.spring_constant * _bonds(x, p)
    q = 2 * np.pi / p.lattice_period
    return np.roll(b, 1) - b - k * q * np.sin(q * x)


def fk_hessian(x, p: FKChainParams, k: float) -> np.ndarray:
    n = p.ion_count
    q = 2 * np.pi / p.lattice_period
    eye = np.eye(n)
    h = p.spring_constant * (2 * eye - np.roll(eye, 1, axis=0) - np.roll(eye, -1, axis=0))
    h[np.diag_indices(n)] -= k * q * q * np.cos(q * x)
    return h


@dataclass(frozen=True)
class FKSweep:
    strengths: np.ndarray  # K values
    omega0: np.ndarray  # lowest phonon frequency magnitude
    imaginary: np.ndarray  # True where the lowest curvature is negative
    positions: np.ndarray  # relaxed configuration per K
    params: FKChainParams

    def critical_strength(self, floor: float = 1e-6) -> float:
        """Smallest K on the grid beyond which omega0 stays above ``floor``."""
        above = self.omega0 >= floor
        if not above.any():
            return float("nan")
        if above.all():
            return float(self.strengths[0])
        last_below = np.nonzero(~above)[0][-1]
        if last_below == len(above) - 1:
            return float("nan")
        return float(self.strengths[last_below + 1])


def _relax(x, p, k, tol):
    res = minimize(
        x,
        lambda y: fk_energy(y, p, k),
        lambda y: fk_gradient(y, p, k),
        lambda y: fk_hessian(y, p, k),
        tol=tol,
        max_step=p.lattice_period / 4,
    )
    return res


def fk_reference(params: FKChainParams, strengths, tol: float = 1e-11) -> FKSweep:
    """Relax the ring along ascending ``strengths`` and record its lowest phonon frequency.

    The sweep starts from the uniform chain in each of the two mirror-symmetric
    registries (a particle on a well bottom, or two particles straddling it)
    and keeps the lower-energy branch.
    """
    ks = np.asarray(strengths, dtype=float)
    if np.any(np.diff(ks) < 0):
        raise ValueError("strengths must be ascending")
    a = params.natural_length
    well = params.lattice_period / 2  # cos has its minimum here
    base = np.arange(params.ion_count) * a
    branches = [base + well - base[params.ion_count // 2], base + well - base[params.ion_count // 2] + a / 2]
    best = None
    for x in branches:
        xs, energies = [], 0.0
        for k in ks:
            res = _relax(x, params, k, tol)
            if not res.converged:
                raise ConvergenceError(f"FK relaxation failed at K = {k:g}", "K", k)
            x = res.x
            xs.append(x)
            energies += res.energies[-1]
        if best is None or energies < best[0] - 1e-12 * abs(energies):
            best = (energies, np.array(xs))
    xs = best[1]
    lowest = np.array([np.linalg.eigvalsh(fk_hessian(x, params, k))[0] for x, k in zip(xs, ks)])
    omega = np.sqrt(np.abs(lowest) / params.mass)
    return FKSweep(ks, omega, lowest < 0, xs, params)
