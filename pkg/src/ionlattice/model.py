"""Physical parameters, unit scaling and the ion-chain potential.

All chain computations use dimensionless units: lengths in ``l0`` where
``l0**3 = e**2 / (4 pi eps0 m omega_a**2)``, times in ``1/omega_a`` and
energies in ``m omega_a**2 l0**2``. In these units the axial potential reads

    V(x) = sum_i [x_i**2 / 2 + K cos(2 pi (x_i - x0) / lam)] + sum_{i<j} 1 / |x_j - x_i|

so the trap frequency, the ion mass and the Coulomb prefactor are all 1.
Conversion to SI happens only at the API boundary (``UnitScales``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError, OrderingError

# CODATA 2018; e, h and k_B are exact in the 2019 SI.
ELEMENTARY_CHARGE = 1.602176634e-19  # C
PLANCK = 6.62607015e-34  # J s
HBAR = PLANCK / (2 * np.pi)
VACUUM_PERMITTIVITY = 8.8541878128e-12  # F/m
ATOMIC_MASS_UNIT = 1.66053906660e-27  # kg
BOLTZMANN = 1.380649e-23  # J/K

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class IonSpecies:
    """Mass and cooling-transition data of the trapped ion."""

    mass: float  # kg
    cooling_wavelength: float  # m
    natural_linewidth: float  # rad/s

    def __post_init__(self):
        for name in ("mass", "cooling_wavelength", "natural_linewidth"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def calcium40(cls) -> IonSpecies:
        return cls(
            mass=40 * ATOMIC_MASS_UNIT,
            cooling_wavelength=397e-9,
            natural_linewidth=TWO_PI * 21.6e6,
        )

    @property
    def cooling_wavenumber(self) -> float:
        return TWO_PI / self.cooling_wavelength


@dataclass(frozen=True)
class TrapConfig:
    axial_frequency: float  # rad/s
    ion_count: int

    def __post_init__(self):
        if not self.axial_frequency > 0:
            raise ValueError("axial_frequency must be positive")
        if int(self.ion_count) != self.ion_count or self.ion_count < 1:
            raise ValueError("ion_count must be an integer >= 1")


@dataclass(frozen=True)
class LatticeConfig:
    """Optical lattice ``K cos(2 pi (x - phase_origin) / period)`` with ``K = depth_per_watt * power``.

    ``phase_origin`` is the position of a lattice maximum. The default puts a
    maximum at the trap centre. ``laser_wavelength`` is the optical
    wavelength of the lattice beam (twice the period for a standing wave) and
    only enters the recoil estimates.
    """

    period: float  # m
    depth_per_watt: float  # J/W
    power: float = 0.0  # W
    phase_origin: float = 0.0  # m
    laser_wavelength: float | None = None  # m

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("period must be positive")
        if self.depth_per_watt < 0:
            raise ValueError("depth_per_watt must be non-negative")
        if self.power < 0:
            raise ValueError("power must be non-negative")

    @classmethod
    def reference(cls, power: float = 0.0) -> LatticeConfig:
        # K/h = 6.9 MHz at 1.5 W, linear in power
        return cls(period=202.5e-9, depth_per_watt=PLANCK * 4.6e6, power=power)

    @property
    def optical_wavelength(self) -> float:
        return self.laser_wavelength if self.laser_wavelength is not None else 2 * self.period


@dataclass(frozen=True)
class UnitScales:
    length_unit: float  # m
    time_unit: float  # s
    energy_unit: float  # J

    @property
    def hbar(self) -> float:
        """Reduced Planck constant in chain units."""
        return HBAR / (self.energy_unit * self.time_unit)

    @property
    def force_unit(self) -> float:
        return self.energy_unit / self.length_unit


def scales_from(species: IonSpecies, trap: TrapConfig) -> UnitScales:
    """Length, time and energy units of the dimensionless chain."""
    m, w = species.mass, trap.axial_frequency
    coulomb = ELEMENTARY_CHARGE**2 / (4 * np.pi * VACUUM_PERMITTIVITY)
    length = (coulomb / (m * w**2)) ** (1 / 3)
    return UnitScales(length_unit=length, time_unit=1 / w, energy_unit=m * w**2 * length**2)


def depth_from_power(lattice: LatticeConfig, power: float | None = None) -> float:
    """Lattice depth K in joules."""
    p = lattice.power if power is None else power
    if p < 0:
        raise ValueError("power must be non-negative")
    return lattice.depth_per_watt * p


def local_frequency(depth: float, lattice: LatticeConfig, species: IonSpecies) -> float:
    """Angular frequency at a lattice minimum, ``(2 pi / period) sqrt(K / m)``."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    return TWO_PI / lattice.period * np.sqrt(depth / species.mass)


@dataclass(frozen=True)
class ChainState:
    """Dimensionless ion positions (ascending) at a given lattice power."""

    positions: np.ndarray
    power: float = 0.0

    def __post_init__(self):
        x = np.array(self.positions, dtype=float)
        if x.ndim != 1 or x.size == 0:
            raise ValueError("positions must be a non-empty 1-d array")
        gaps = np.diff(x)
        if np.any(gaps == 0):
            raise DomainError("two ions share the same position")
        if np.any(gaps < 0):
            raise OrderingError("ion positions must be strictly increasing")
        x.setflags(write=False)
        object.__setattr__(self, "positions", x)

    @property
    def ion_count(self) -> int:
        return self.positions.size


@dataclass(frozen=True)
class ChainModel:
    """Species, trap and lattice bundled with their dimensionless parameters."""

    species: IonSpecies
    trap: TrapConfig
    lattice: LatticeConfig
    scales: UnitScales = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "scales", scales_from(self.species, self.trap))

    @classmethod
    def reference(cls, ion_count: int = 35, power: float = 0.0) -> ChainModel:
        return cls(
            species=IonSpecies.calcium40(),
            trap=TrapConfig(axial_frequency=TWO_PI * 100e3, ion_count=ion_count),
            lattice=LatticeConfig.reference(power),
        )

    @cached_property
    def period(self) -> float:
        """Lattice period in units of l0."""
        return self.lattice.period / self.scales.length_unit

    @cached_property
    def origin(self) -> float:
        """Position of a lattice maximum in units of l0."""
        return self.lattice.phase_origin / self.scales.length_unit

    @property
    def wavenumber(self) -> float:
        return TWO_PI / self.period

    def depth(self, power: float) -> float:
        """Dimensionless lattice depth at ``power`` watts."""
        return depth_from_power(self.lattice, power) / self.scales.energy_unit

    def power_for_depth(self, depth: float) -> float:
        """Inverse of :meth:`depth`."""
        return depth * self.scales.energy_unit / self.lattice.depth_per_watt

    @cached_property
    def lattice_symmetric(self) -> bool:
        """True if the lattice is even about the trap centre."""
        r = np.mod(self.origin, self.period / 2)
        return bool(min(r, self.period / 2 - r) < 1e-12 * self.period)

    def state(self, positions, power: float | None = None) -> ChainState:
        return ChainState(np.asarray(positions, dtype=float), self.lattice.power if power is None else power)

    def to_meters(self, x):
        return np.asarray(x) * self.scales.length_unit

    def with_power(self, power: float) -> ChainModel:
        lat = LatticeConfig(
            period=self.lattice.period,
            depth_per_watt=self.lattice.depth_per_watt,
            power=power,
            phase_origin=self.lattice.phase_origin,
            laser_wavelength=self.lattice.laser_wavelength,
        )
        return ChainModel(self.species, self.trap, lat)

    def with_ion_count(self, n: int) -> ChainModel:
        return ChainModel(self.species, TrapConfig(self.trap.axial_frequency, n), self.lattice)


# --- potential and derivatives -------------------------------------------------


def _separations(x):
    d = x[:, None] - x[None, :]
    np.fill_diagonal(d, np.inf)
    if np.any(d == 0):
        raise DomainError("two ions share the same position")
    return d


def _depths(model: ChainModel, power: float, depth_scale):
    k = model.depth(power)
    return k if depth_scale is None else k * np.asarray(depth_scale, dtype=float)


def lattice_terms(x, model: ChainModel, power: float, depth_scale=None):
    """Per-ion lattice potential and its first two derivatives (dimensionless)."""
    x = np.asarray(x, dtype=float)
    k = _depths(model, power, depth_scale)
    q = model.wavenumber
    phase = q * (x - model.origin)
    c, s = np.cos(phase), np.sin(phase)
    return k * c, -k * q * s, -k * q * q * c


def _positions(state):
    return state.positions if isinstance(state, ChainState) else np.asarray(state, dtype=float)


def _power(state, power):
    if power is not None:
        return power
    if isinstance(state, ChainState):
        return state.power
    raise ValueError("power must be given when passing a bare position array")


def total_energy(state, model: ChainModel, *, power=None, force=0.0, depth_scale=None) -> float:
    """Dimensionless potential energy.

    ``state`` may be a :class:`ChainState` or a raw position array (any ion
    order). ``force`` is a uniform dimensionless force applied to every ion
    and ``depth_scale`` optionally rescales the lattice depth per ion.
    """
    x = _positions(state)
    p = _power(state, power)
    if x.size > 1:
        d = np.abs(_separations(x))
        coulomb = 0.5 * np.sum(1.0 / d)
    else:
        coulomb = 0.0
    lat, _, _ = lattice_terms(x, model, p, depth_scale)
    return float(0.5 * np.dot(x, x) + np.sum(lat) + coulomb - force * np.sum(x))


def gradient(state, model: ChainModel, *, power=None, force=0.0, depth_scale=None) -> np.ndarray:
    """Analytic gradient of :func:`total_energy`."""
    x = _positions(state)
    p = _power(state, power)
    _, dlat, _ = lattice_terms(x, model, p, depth_scale)
    g = x + dlat - force
    if x.size > 1:
        d = _separations(x)
        g = g - np.sum(np.sign(d) / d**2, axis=1)
    return g


def hessian(state, model: ChainModel, *, power=None, depth_scale=None) -> np.ndarray:
    """Analytic coupling matrix ``A_ij = d2V / dx_i dx_j`` (dimensionless)."""
    x = _positions(state)
    p = _power(state, power)
    _, _, d2lat = lattice_terms(x, model, p, depth_scale)
    n = x.size
    h = np.zeros((n, n))
    if n > 1:
        c = 2.0 / np.abs(_separations(x)) ** 3  # zero on the diagonal
        h = -c
        np.fill_diagonal(h, np.sum(c, axis=1))
    h[np.diag_indices(n)] += 1.0 + d2lat
    return h
