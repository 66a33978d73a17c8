"""Quantum diagnostics: single-well bound states and Gaussian-state spin interferometry.

Gaussian states live in natural quadratures ``q = x / sqrt(hbar_c)``,
``p = v / sqrt(hbar_c)``, where ``hbar_c`` is the reduced Planck constant in
chain units. In these coordinates the effective Planck constant is 1 and the
vacuum of a unit-frequency oscillator has covariance ``I / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import GridConvergenceError, NotPureError, UnstableModeError
from .model import HBAR, ChainModel, ChainState, IonSpecies, gradient, hessian
from .modes import ModeSpectrum
from .statics import EquilibriumResult

PURITY_TOL = 1e-6

# --- bound states of one lattice well ------------------------------------------


@dataclass(frozen=True)
class BoundStateResult:
    """Levels localized in one well of ``K cos(2 pi x / lam)``.

    ``energies`` (J, measured from the well bottom) lists every
    well-localized level below the barrier top ``2K``. ``count`` is the number
    of those lying below the lattice depth ``K``; ``barrier_count`` counts all
    of them.
    """

    energies: np.ndarray
    count: int
    barrier_count: int
    depth: float  # J
    hbar_omega: float  # J, harmonic quantum at the well bottom
    truncated: bool = False

    @property
    def anharmonic_shift(self) -> float:
        """``1 - (E_2 - E_1) / (hbar omega)`` for the two lowest levels."""
        if self.energies.size < 2:
            return float("nan")
        return float(1 - (self.energies[1] - self.energies[0]) / self.hbar_omega)

    @property
    def second_level_shift(self) -> float:
        """Relative deviation of the second level from the harmonic value ``3/2 hbar omega``."""
        if self.energies.size < 2:
            return float("nan")
        return float(1 - self.energies[1] / (1.5 * self.hbar_omega))

    @property
    def levels_in_quanta(self) -> np.ndarray:
        return self.energies / self.hbar_omega


RESOLUTION = 0.03  # grid spacing times the largest wavenumber below the barrier top
WINDOW = 64  # eigenpairs per batch, bounds memory on fine grids


def _grid_points(top, period, mass):
    k_max = np.sqrt(2 * mass * top) / HBAR
    return max(500, int(np.ceil(k_max * period / RESOLUTION)))


def _localized_levels(depth, period, mass, points_per_period, cluster_gap, n_eig=None):
    """Central-well levels (units of hbar*omega above the well bottom) on a three-period hard-wall box."""
    w = 2 * np.pi / period * np.sqrt(depth / mass)
    hw = HBAR * w
    npts = 3 * points_per_period
    # walls sit on the barrier tops at -lam/2 and 5 lam/2; wells at 0, lam, 2 lam
    x = np.linspace(-0.5 * period, 2.5 * period, npts + 2)[1:-1]
    dx = x[1] - x[0]
    kin = HBAR**2 / (2 * mass * dx**2) / hw
    diag = (-depth * np.cos(2 * np.pi * x / period) + depth) / hw + 2 * kin
    off = -kin * np.ones(npts - 1)
    barrier = 2 * depth / hw
    if n_eig is None:
        e = eigh_tridiagonal(diag, off, eigvals_only=True, select="v", select_range=(-np.inf, barrier))
    else:
        e = eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=(0, n_eig - 1))
        e = e[e < barrier]
    central = (x >= 0.5 * period) & (x < 1.5 * period)

    # split into clusters of near-degenerate levels, then batch clusters into windows
    bounds = [0] + [i for i in range(1, e.size) if e[i] - e[i - 1] >= cluster_gap] + [e.size]
    clusters = list(zip(bounds[:-1], bounds[1:]))
    levels = []
    k = 0
    while k < len(clusters):
        j = k
        while j + 1 < len(clusters) and clusters[j + 1][1] - clusters[k][0] <= WINDOW:
            j += 1
        lo, hi = clusters[k][0], clusters[j][1]
        _, vec = eigh_tridiagonal(diag, off, select="i", select_range=(lo, hi - 1))
        vc = vec[central]
        for a, b in clusters[k : j + 1]:
            block = vc[:, a - lo : b - lo]
            weight, rot = np.linalg.eigh(block.T @ block)
            if weight[-1] > 0.5:
                r = rot[:, -1]
                levels.append(float(np.dot(r * r, e[a:b])))
        k = j + 1
    return np.array(levels), hw, depth / hw


def bound_states(
    depth: float,
    period: float,
    species: IonSpecies,
    points_per_period: int | None = None,
    rel_tol: float = 1e-4,
    cluster_gap: float = 0.05,
    levels: int | None = None,
) -> BoundStateResult:
    """Finite-difference levels of one lattice well of depth ``depth`` (J) and period ``period`` (m).

    Near-degenerate levels (gap below ``cluster_gap`` quanta) are rotated
    into the combination with the largest weight in the central period;
    those with more than half their weight there count as localized. The
    grid (by default fine enough for the fastest oscillating level below the
    barrier) is doubled once; a change in the bound count, or any bound level
    moving by more than ``rel_tol``, raises :class:`GridConvergenceError`.

    ``levels`` limits the search to roughly that many of the lowest levels,
    which keeps deep wells cheap; the result is then marked ``truncated``
    and ``count`` only covers the levels found.
    """
    if not depth > 0:
        raise ValueError("depth must be positive")
    hw = HBAR * 2 * np.pi / period * np.sqrt(depth / species.mass)
    top = 2 * depth if levels is None else min(2 * depth, 1.5 * (levels + 1) * hw)
    if points_per_period is None:
        points_per_period = _grid_points(top, period, species.mass)
    n_eig = None if levels is None else 3 * levels
    coarse, hw, k_q = _localized_levels(depth, period, species.mass, points_per_period, cluster_gap, n_eig)
    fine, _, _ = _localized_levels(depth, period, species.mass, 2 * points_per_period, cluster_gap, n_eig)
    if levels is not None:
        keep = min(coarse.size, fine.size, levels)
        coarse, fine = coarse[:keep], fine[:keep]
    # levels near the barrier top belong to a band and may flip their localization flag; only check the bound ones
    nc, nf = int(np.sum(coarse < k_q)), int(np.sum(fine < k_q))
    if nc != nf:
        raise GridConvergenceError("bound-state count changed under grid refinement", "points_per_period", points_per_period)
    if nf and np.max(np.abs(fine[:nf] - coarse[:nf]) / fine[:nf]) > rel_tol:
        raise GridConvergenceError("levels not converged under grid refinement", "points_per_period", points_per_period)
    return BoundStateResult(
        energies=fine * hw,
        count=nf,
        barrier_count=int(fine.size),
        depth=depth,
        hbar_omega=hw,
        truncated=levels is not None,
    )


# --- Gaussian states -----------------------------------------------------------


def _omega_form(n):
    return np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])


def symplectic_eigenvalues(cov) -> np.ndarray:
    """Symplectic spectrum (ascending, one value per mode) of a ``2N x 2N`` covariance."""
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0] // 2
    ev = np.abs(np.linalg.eigvals(1j * _omega_form(n) @ cov))
    return np.sort(ev)[::2]


@dataclass(frozen=True)
class GaussianState:
    mean: np.ndarray  # (q_1..q_N, p_1..p_N)
    covariance: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.covariance, dtype=float)
        if mu.ndim != 1 or mu.size % 2 or cov.shape != (mu.size, mu.size):
            raise ValueError("mean must have length 2N and covariance shape (2N, 2N)")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(np.max(np.abs(cov)), 1)):
            raise ValueError("covariance must be symmetric")
        object.__setattr__(self, "mean", mu)
        object.__setattr__(self, "covariance", 0.5 * (cov + cov.T))

    @property
    def modes(self) -> int:
        return self.mean.size // 2

    def is_pure(self, tol: float = PURITY_TOL) -> bool:
        return bool(np.all(np.abs(symplectic_eigenvalues(self.covariance) - 0.5) < tol))


def _frequencies(a):
    w2, vec = np.linalg.eigh(np.asarray(a, dtype=float))
    if np.any(w2 <= 0):
        raise UnstableModeError("quadratic Hamiltonian has a non-positive curvature")
    return np.sqrt(w2), vec


def ground_state(spectrum: ModeSpectrum | np.ndarray) -> GaussianState:
    """Ground state of ``H = p.p / 2 + q.A.q / 2`` (``A`` from a spectrum or given directly)."""
    a = spectrum.coupling if isinstance(spectrum, ModeSpectrum) else np.asarray(spectrum, dtype=float)
    w, vec = _frequencies(a)
    n = w.size
    cov = np.zeros((2 * n, 2 * n))
    cov[:n, :n] = (vec / (2 * w)) @ vec.T
    cov[n:, n:] = (vec * (w / 2)) @ vec.T
    return GaussianState(np.zeros(2 * n), cov)


def propagator(a, t: float) -> np.ndarray:
    """Symplectic matrix of ``H = p.p / 2 + q.A.q / 2`` over time ``t``."""
    w, vec = _frequencies(a)
    c, s = np.cos(w * t), np.sin(w * t)
    n = w.size
    m = np.empty((2 * n, 2 * n))
    m[:n, :n] = (vec * c) @ vec.T
    m[:n, n:] = (vec * (s / w)) @ vec.T
    m[n:, :n] = -(vec * (w * s)) @ vec.T
    m[n:, n:] = m[:n, :n]
    return m


def evolve_gaussian(g: GaussianState, a, force, t: float) -> GaussianState:
    """Evolve ``g`` for time ``t`` under ``H = p.p / 2 + q.A.q / 2 - force.q``.

    The mean oscillates about the shifted equilibrium ``A^-1 force``; the
    covariance is conjugated by the symplectic propagator.
    """
    a = np.asarray(a, dtype=float)
    n = g.modes
    f = np.zeros(n) if force is None else np.asarray(force, dtype=float)
    s = propagator(a, t)
    shift = np.concatenate([np.linalg.solve(a, f), np.zeros(n)])
    mean = shift + s @ (g.mean - shift)
    return GaussianState(mean, s @ g.covariance @ s.T)


def overlap_magnitude(g1: GaussianState, g2: GaussianState) -> float:
    """``|<psi_1|psi_2>|`` for two pure Gaussian states."""
    for g in (g1, g2):
        if not g.is_pure():
            raise NotPureError("overlap formula needs pure states")
    total = g1.covariance + g2.covariance
    d = g1.mean - g2.mean
    _, logdet = np.linalg.slogdet(total)
    quad = float(d @ np.linalg.solve(total, d))
    return float(np.exp(-0.25 * logdet - 0.25 * quad))


# --- spin-dependent perturbation -----------------------------------------------


@dataclass(frozen=True)
class SpinPerturbation:
    """Lattice depth ``K (1 + eps)`` on ``ion_index`` (or on every ion) when the spin is up."""

    ion_index: int
    relative_depth_change: float
    all_ions: bool = False

    def __post_init__(self):
        if not abs(self.relative_depth_change) < 1:
            raise ValueError("|relative_depth_change| must be below 1")

    def depth_scale(self, n: int) -> np.ndarray:
        s = np.ones(n)
        if self.all_ions:
            s[:] += self.relative_depth_change
        else:
            if not -n <= self.ion_index < n:
                raise IndexError(f"ion {self.ion_index} out of range for {n} ions")
            s[self.ion_index] += self.relative_depth_change
        return s


@dataclass(frozen=True)
class QuadraticBranches:
    """Both spin Hamiltonians linearized at the spin-down equilibrium, in quadrature units."""

    down: np.ndarray
    up: np.ndarray
    up_force: np.ndarray
    hbar: float  # chain-unit Planck constant used for the quadrature scaling


def spin_branches(state: EquilibriumResult | ChainState, model: ChainModel, pert: SpinPerturbation) -> QuadraticBranches:
    st = state.state if isinstance(state, EquilibriumResult) else state
    scale = pert.depth_scale(st.ion_count)
    hb = model.scales.hbar
    down = hessian(st, model)
    up = hessian(st, model, depth_scale=scale)
    force = -gradient(st, model, depth_scale=scale) + gradient(st, model)
    return QuadraticBranches(down, up, force / np.sqrt(hb), hb)


@dataclass(frozen=True)
class FidelityScan:
    times: np.ndarray  # units of 1/omega_a
    contrast: np.ndarray


def fidelity_scan(state: EquilibriumResult | ChainState, model: ChainModel, pert: SpinPerturbation, times) -> FidelityScan:
    """Fringe contrast ``|<psi_up(t)|psi_down(t)>|`` starting from the spin-down motional ground state.

    Raises :class:`UnstableModeError` if either branch has a non-positive
    curvature at the spin-down equilibrium.
    """
    br = spin_branches(state, model, pert)
    g0 = ground_state(br.down)
    _frequencies(br.up)
    t = np.asarray(times, dtype=float)
    c = np.empty(t.size)
    for k, tk in enumerate(t):
        gd = evolve_gaussian(g0, br.down, None, tk)
        gu = evolve_gaussian(g0, br.up, br.up_force, tk)
        c[k] = overlap_magnitude(gu, gd)
    return FidelityScan(t, c)


def quench_contrast(w0: float, w1: float, t) -> np.ndarray:
    """Overlap magnitude after a sudden frequency change ``w0 -> w1`` of one oscillator, from its ground state."""
    a = (w0**2 + w1**2) / (2 * w0 * w1)
    t = np.asarray(t, dtype=float)
    return (np.cos(w1 * t) ** 2 + a * a * np.sin(w1 * t) ** 2) ** -0.25 * np.ones_like(t)


def p_up(contrast, phase, phi):
    """Ramsey signal ``(1 + Re(i e^{i phi} C e^{i theta})) / 2 = (1 - C sin(phi + theta)) / 2``."""
    c = np.asarray(contrast, dtype=float)
    if np.any((c < 0) | (c > 1)):
        raise ValueError("contrast must lie in [0, 1]")
    return 0.5 * (1 - c * np.sin(np.asarray(phi) + phase))
