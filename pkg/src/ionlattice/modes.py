"""Normal modes of the linearized chain."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotRelaxedError
from .model import ChainModel, ChainState, gradient, hessian
from .statics import ContinuationSweep, EquilibriumResult

EVEN, ODD, NONE = "even", "odd", "none"

RELAXED_TOL = 1e-7
PARITY_TOL = 1e-8
CLUSTER_GAP = 1e-9


@dataclass(frozen=True)
class ModeSpectrum:
    """Eigen-decomposition of the coupling matrix.

    ``eigenvalues`` are the dimensionless squared frequencies (units of
    ``omega_a**2``), ascending, and may be negative for an unstable
    configuration; ``imaginary`` flags those modes. ``frequencies`` holds
    ``omega_a * sqrt(|eigenvalue|)`` in rad/s. Column ``n`` of ``vectors`` is
    the unit eigenvector of mode ``n``.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    parities: tuple[str, ...]
    axial_frequency: float
    coupling: np.ndarray  # the coupling matrix itself (dimensionless)

    @property
    def omega(self) -> np.ndarray:
        """Mode frequencies in units of omega_a (magnitude)."""
        return np.sqrt(np.abs(self.eigenvalues))

    @property
    def frequencies(self) -> np.ndarray:
        return self.axial_frequency * self.omega

    @property
    def imaginary(self) -> np.ndarray:
        return self.eigenvalues < 0

    @property
    def stable(self) -> bool:
        return bool(np.all(self.eigenvalues > 0))

    @property
    def curvatures(self) -> np.ndarray:
        """Diagonal of the coupling matrix: local squared frequency of each ion with the others frozen."""
        return np.diag(self.coupling).copy()

    def __len__(self):
        return self.eigenvalues.size


def parity_of(vector, tol: float = PARITY_TOL) -> str:
    """``'even'`` if reversing the ion order leaves ``vector`` unchanged, ``'odd'`` if it flips sign."""
    v = np.asarray(vector, dtype=float)
    scale = max(np.max(np.abs(v)), 1e-300)
    if np.max(np.abs(v[::-1] - v)) <= tol * scale:
        return EVEN
    if np.max(np.abs(v[::-1] + v)) <= tol * scale:
        return ODD
    return NONE


def _parity_adapted(w, v):
    """Rotate eigenvectors inside near-degenerate clusters onto the mirror eigenbasis."""
    v = v.copy()
    n = w.size
    scale = max(np.max(np.abs(w)), 1e-300)
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and abs(w[stop] - w[stop - 1]) <= CLUSTER_GAP * scale:
            stop += 1
        if stop - start > 1:
            block = v[:, start:stop]
            mirror = block.T @ block[::-1, :]
            _, rot = np.linalg.eigh(0.5 * (mirror + mirror.T))
            v[:, start:stop] = block @ rot
        start = stop
    return v


def _canonical_sign(v):
    # largest-magnitude component (lowest index on ties) made positive
    idx = np.argmax(np.abs(v) > (1 - 1e-9) * np.max(np.abs(v), axis=0), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1
    return v * signs


def normal_modes(state: ChainState | EquilibriumResult, model: ChainModel, relaxed_tol: float = RELAXED_TOL) -> ModeSpectrum:
    """Linearize the chain around ``state`` and diagonalize the coupling matrix.

    Raises :class:`NotRelaxedError` when the largest force exceeds
    ``relaxed_tol``. Negative curvatures are kept and flagged, not clamped.
    """
    st = state.state if isinstance(state, EquilibriumResult) else state
    g = gradient(st, model)
    if np.max(np.abs(g)) > relaxed_tol:
        raise NotRelaxedError(f"largest residual force {np.max(np.abs(g)):.3g} exceeds {relaxed_tol:g}")
    a = hessian(st, model)
    w, v = np.linalg.eigh(a)
    v = _canonical_sign(_parity_adapted(w, v))
    parities = tuple(parity_of(v[:, k]) for k in range(w.size))
    return ModeSpectrum(w, v, parities, model.trap.axial_frequency, a)


@dataclass(frozen=True)
class SpectrumTable:
    powers: np.ndarray
    eigenvalues: np.ndarray  # (P, N) dimensionless squared frequencies
    axial_frequency: float

    @property
    def omega(self) -> np.ndarray:
        return np.sqrt(np.abs(self.eigenvalues))

    @property
    def frequencies(self) -> np.ndarray:
        return self.axial_frequency * self.omega

    @property
    def imaginary(self) -> np.ndarray:
        return self.eigenvalues < 0

    def lowest(self) -> np.ndarray:
        """Signed lowest frequency per power (negative marks an imaginary frequency), units of omega_a."""
        w = self.eigenvalues[:, 0]
        return np.sign(w) * np.sqrt(np.abs(w))


def spectrum_sweep(sweep: ContinuationSweep, model: ChainModel) -> SpectrumTable:
    """Mode spectrum at every power of a continuation sweep."""
    eig = np.array([normal_modes(r, model).eigenvalues for r in sweep.states])
    return SpectrumTable(sweep.powers.copy(), eig, model.trap.axial_frequency)
