"""Heating estimates: resonant laser pulses and lattice intensity noise / photon scattering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import HBAR, ChainModel, IonSpecies, local_frequency

# Momentum diffusion from spontaneous emission per half trap cycle, in quanta.
# Literature order-of-magnitude estimate; its geometry factor is not modelled.
MOMENTUM_DIFFUSION_QUANTA_PER_HALF_CYCLE = 2.0

# Lattice-photon scattering events per watt of lattice power per second.
SCATTERING_PER_WATT = 40.0


@dataclass(frozen=True)
class PulseHeating:
    x_eq: float  # m, displacement by the constant radiation-pressure force
    e0_quanta: float  # energy after one half-period pulse, units of hbar*omega
    energies_quanta: np.ndarray  # E_n = n^2 E_0 for n = 0 .. n_pulses
    force: float  # N
    diffusion_quanta_per_half_cycle: float = MOMENTUM_DIFFUSION_QUANTA_PER_HALF_CYCLE


def pulse_heating_energy(species: IonSpecies, omega: float, n_pulses: int, beam_angle_deg: float = 45.0) -> PulseHeating:
    """Energy pumped into a mode of angular frequency ``omega`` by pulses synchronised to its motion.

    Saturated scattering gives the constant force ``F0 = hbar k_z Gamma / 2``
    with ``k_z`` the wavevector component along the mode axis. A pulse lasting
    half a period moves the ion by ``2 x_eq``; ``n`` such pulses leave
    ``n^2`` times the single-pulse energy.
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    if n_pulses < 0:
        raise ValueError("n_pulses must be non-negative")
    k_z = species.cooling_wavenumber * np.cos(np.radians(beam_angle_deg))
    f0 = HBAR * k_z * species.natural_linewidth / 2
    x_eq = f0 / (species.mass * omega**2)
    e0 = 0.5 * species.mass * omega**2 * (2 * x_eq) ** 2 / (HBAR * omega)
    n = np.arange(n_pulses + 1)
    return PulseHeating(float(x_eq), float(e0), n**2 * float(e0), float(f0))


@dataclass(frozen=True)
class HeatingEstimate:
    lamb_dicke: float  # eta = k_z z0
    ground_size: float  # m, z0 = sqrt(hbar / 2 m omega_loc)
    parametric_rate: float  # quanta/ms
    gradient_rate: float  # quanta/ms
    scattering_rate: float  # quanta/s
    trap_frequency: float  # Hz, nu used for the intensity-noise rates
    depth: float  # J


def heating_rates(
    power: float,
    model: ChainModel,
    intensity_noise: float,
    nu: float | None = None,
    beam_angle_deg: float = 0.0,
) -> HeatingEstimate:
    """Heating of an ion held in a lattice well at ``power`` watts.

    ``intensity_noise`` is the one-sided relative intensity noise S (1/Hz),
    taken flat so that ``S(nu) = S(2 nu)``. ``nu`` defaults to the lattice
    frequency at the well bottom. Recoil uses the lattice photon's wavevector
    projected on the trap axis at ``beam_angle_deg``.
    """
    if power < 0 or intensity_noise < 0:
        raise ValueError("power and intensity noise must be non-negative")
    sp, lat = model.species, model.lattice
    k = lat.depth_per_watt * power
    w_loc = local_frequency(k, lat, sp)
    if nu is None:
        nu = w_loc / (2 * np.pi)
    # Gamma_heat = pi^2 nu^2 S(2 nu) is the fractional energy growth rate; from n = 0 the mean energy is hbar w / 2
    parametric = np.pi**2 * nu**2 * intensity_noise * 0.5 if nu > 0 else 0.0
    if nu > 0:
        gradient = 2 * np.pi**3 * k**2 * intensity_noise / (HBAR * nu * sp.mass * lat.period**2)
    else:
        gradient = 0.0
    if w_loc > 0:
        z0 = np.sqrt(HBAR / (2 * sp.mass * w_loc))
        k_z = 2 * np.pi / lat.optical_wavelength * np.cos(np.radians(beam_angle_deg))
        eta = k_z * z0
    else:
        z0, eta = np.inf, np.inf
    scattering = SCATTERING_PER_WATT * power * eta**2 if power > 0 else 0.0
    return HeatingEstimate(
        lamb_dicke=float(eta),
        ground_size=float(z0),
        parametric_rate=float(parametric) * 1e-3,
        gradient_rate=float(gradient) * 1e-3,
        scattering_rate=float(scattering),
        trap_frequency=float(nu),
        depth=float(k),
    )
