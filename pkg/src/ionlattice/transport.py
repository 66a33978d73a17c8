"""Phonon transport along the chain.

Linear (mode-sum) evolution of a localized kick, localized-energy and arrival
diagnostics, a velocity-Verlet integrator of the full anharmonic forces, and
Langevin baths on selected ions. Times are in units of ``1/omega_a``,
displacements in ``l0``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import find_peaks

from .errors import IonCrossingError, UnstableModeError
from .model import BOLTZMANN, ChainModel, ChainState, gradient, hessian, total_energy
from .modes import ModeSpectrum
from .statics import EquilibriumResult

SAMPLES_PER_PERIOD = 50
CHUNK = 4096


@dataclass(frozen=True)
class ExcitationDecomposition:
    amplitudes: np.ndarray  # c_n
    source_index: int

    def reconstruct(self, spectrum: ModeSpectrum) -> np.ndarray:
        return spectrum.vectors @ self.amplitudes


def decompose(spectrum: ModeSpectrum, source: int) -> ExcitationDecomposition:
    """Mode amplitudes ``c_n = v_n . e_source`` of a unit displacement of ion ``source``."""
    n = len(spectrum)
    if not -n <= source < n:
        raise IndexError(f"source ion {source} out of range for {n} ions")
    source %= n
    return ExcitationDecomposition(spectrum.vectors[source, :].copy(), source)


@dataclass(frozen=True)
class Trajectory:
    """Sampled motion of selected ions.

    ``positions`` and ``velocities`` have shape ``(len(times), len(ions))``.
    Positions are displacements from ``reference`` (the linearization point),
    so mode-sum and nonlinear runs are directly comparable.
    """

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    ions: np.ndarray
    reference: np.ndarray | None = None
    energies: np.ndarray | None = None  # total dimensionless energy per sample (nonlinear runs)

    def column(self, ion: int) -> int:
        hits = np.nonzero(self.ions == ion)[0]
        if hits.size == 0:
            raise KeyError(f"ion {ion} not recorded in this trajectory")
        return int(hits[0])

    @property
    def energy_drift(self) -> float:
        """Largest relative deviation of the total energy from its initial value."""
        if self.energies is None:
            raise ValueError("trajectory carries no energy record")
        e0 = self.energies[0]
        return float(np.max(np.abs(self.energies - e0)) / abs(e0))


def _ion_index(ions, n):
    idx = np.arange(n) if ions is None else np.atleast_1d(np.asarray(ions, dtype=int)) % n
    return idx


def evolve_modesum(
    decomp: ExcitationDecomposition,
    spectrum: ModeSpectrum,
    times,
    amplitude: float = 1.0,
    ions: Sequence[int] | None = None,
) -> Trajectory:
    """Linear evolution of the kicked ion released from rest.

    ``x(t) = amplitude * sum_n c_n v_n cos(omega_n t)``; a zero-frequency mode
    simply keeps its initial displacement. Imaginary-frequency modes raise
    :class:`UnstableModeError`.
    """
    if np.any(spectrum.imaginary):
        raise UnstableModeError("spectrum has imaginary-frequency modes")
    t = np.asarray(times, dtype=float)
    w = spectrum.omega
    idx = _ion_index(ions, len(spectrum))
    weights = amplitude * decomp.amplitudes[:, None] * spectrum.vectors[idx, :].T  # (modes, ions)
    pos = np.empty((t.size, idx.size))
    vel = np.empty_like(pos)
    for s in range(0, t.size, CHUNK):
        phase = np.outer(t[s : s + CHUNK], w)
        pos[s : s + CHUNK] = np.cos(phase) @ weights
        vel[s : s + CHUNK] = -(np.sin(phase) * w) @ weights
    return Trajectory(t, pos, vel, idx)


def modesum_energy(decomp: ExcitationDecomposition, spectrum: ModeSpectrum, amplitude: float = 1.0) -> float:
    """Conserved harmonic energy ``sum_n c_n^2 omega_n^2 / 2`` of the linear evolution."""
    return float(0.5 * amplitude**2 * np.sum(decomp.amplitudes**2 * spectrum.eigenvalues))


def linear_energy(traj: Trajectory, spectrum: ModeSpectrum) -> np.ndarray:
    """Harmonic energy ``v.v/2 + x.A.x/2`` per sample; needs every ion recorded."""
    if traj.ions.size != len(spectrum):
        raise ValueError("linear energy needs all ions in the trajectory")
    x = traj.positions[:, np.argsort(traj.ions)]
    v = traj.velocities[:, np.argsort(traj.ions)]
    return 0.5 * np.sum(v * v, axis=1) + 0.5 * np.einsum("ti,ij,tj->t", x, spectrum.coupling, x)


def local_energy(traj: Trajectory, ion: int, curvatures, source: int) -> np.ndarray:
    """Localized energy of ``ion`` relative to the initial localized energy of ``source``.

    ``E_loc = A_ii u_i^2 / 2 + v_i^2 / 2`` with ``A_ii`` the diagonal of the
    coupling matrix (the other ions held fixed). The trajectory must record
    ``source`` and start at ``t = 0``.
    """
    a = np.asarray(curvatures, dtype=float)
    if traj.times[0] != 0:
        raise ValueError("trajectory must start at t = 0 for normalization")
    n = a.size
    ion, source = ion % n, source % n

    def eloc(i):
        c = traj.column(i)
        return 0.5 * a[i] * traj.positions[:, c] ** 2 + 0.5 * traj.velocities[:, c] ** 2

    e0 = eloc(source)[0]
    if e0 <= 0:
        raise ValueError("source ion carries no initial energy")
    return eloc(ion) / e0


@dataclass(frozen=True)
class ArrivalMetrics:
    first_peak_time: float | None
    threshold_time: float | None
    peak_value: float


def arrival_metrics(times, series, fraction: float = 0.5, floor: float = 1e-3) -> ArrivalMetrics:
    """First prominent local maximum above ``floor`` and the first crossing of ``fraction`` of the global maximum.

    Crossing times are linearly interpolated between samples. Quantities are
    ``None`` when the series never rises above ``floor``.
    """
    t = np.asarray(times, dtype=float)
    e = np.asarray(series, dtype=float)
    if e.size == 0:
        raise ValueError("empty series")
    top = float(np.max(e))
    if top <= floor:
        return ArrivalMetrics(None, None, top)
    peaks, _ = find_peaks(e, height=floor, prominence=floor)
    first_peak = float(t[peaks[0]]) if peaks.size else float(t[np.argmax(e)])
    level = fraction * top
    k = int(np.argmax(e >= level))
    if k == 0:
        crossing = float(t[0])
    else:
        frac = (level - e[k - 1]) / (e[k] - e[k - 1])
        crossing = float(t[k - 1] + frac * (t[k] - t[k - 1]))
    return ArrivalMetrics(first_peak, crossing, top)


def transport_curve(spectrum: ModeSpectrum, times, source: int = 0, target: int = -1) -> np.ndarray:
    """Relative localized energy of ion ``target`` after kicking ion ``source``."""
    d = decompose(spectrum, source)
    n = len(spectrum)
    traj = evolve_modesum(d, spectrum, times, ions=[source % n, target % n])
    return local_energy(traj, target, spectrum.curvatures, source)


# --- nonlinear integration -----------------------------------------------------


def max_stable_step(state: ChainState, model: ChainModel, *, depth_scale=None) -> float:
    """Largest allowed time step: the shortest linearized period over ``SAMPLES_PER_PERIOD``."""
    w = np.linalg.eigvalsh(hessian(state, model, depth_scale=depth_scale))
    wmax = np.sqrt(np.max(np.abs(w)))
    return 2 * np.pi / wmax / SAMPLES_PER_PERIOD


def _run(x, v, accel, dt, n_steps, sample_every, ions, t0=0.0, thermostat=None, energy=None):
    """Shared BAB (velocity Verlet) loop with an optional half-step velocity map on either side.

    ``thermostat(v)`` is applied before the first and after the last half
    kick of every step. With no thermostat the loop is plain velocity Verlet,
    which keeps the zero-friction Langevin path bit-identical.
    """
    n_samples = n_steps // sample_every + 1
    pos = np.empty((n_samples, ions.size))
    vel = np.empty_like(pos)
    times = np.empty(n_samples)
    ens = np.empty(n_samples) if energy is not None else None
    pos[0], vel[0], times[0] = x[ions], v[ions], t0
    if ens is not None:
        ens[0] = energy(x, v)
    a = accel(x)
    half = 0.5 * dt
    s = 1
    for step in range(1, n_steps + 1):
        if thermostat is not None:
            v = thermostat(v)
        v = v + half * a
        x = x + dt * v
        if np.any(np.diff(x) <= 0):
            raise IonCrossingError(f"ions crossed at t = {t0 + step * dt:.6g}", t0 + step * dt)
        a = accel(x)
        v = v + half * a
        if thermostat is not None:
            v = thermostat(v)
        if step % sample_every == 0:
            pos[s], vel[s], times[s] = x[ions], v[ions], t0 + step * dt
            if ens is not None:
                ens[s] = energy(x, v)
            s += 1
    return times, pos, vel, ens, x, v


def integrate_nonlinear(
    state: EquilibriumResult | ChainState,
    model: ChainModel,
    u0=None,
    v0=None,
    *,
    dt: float | None = None,
    t_end: float,
    sample_every: int = 1,
    ions: Sequence[int] | None = None,
    depth_scale=None,
    record_energy: bool = True,
) -> Trajectory:
    """Velocity-Verlet evolution under the full potential, starting at ``state`` + ``u0`` with velocity ``v0``.

    ``dt`` defaults to, and may not exceed, a fiftieth of the shortest
    linearized period at ``state``. Displacements in the returned trajectory
    are measured from ``state``. Ions changing order raises
    :class:`IonCrossingError` carrying the time.
    """
    st = state.state if isinstance(state, EquilibriumResult) else state
    n = st.ion_count
    limit = max_stable_step(st, model, depth_scale=depth_scale)
    if dt is None:
        dt = limit
    elif dt > limit * (1 + 1e-12):
        raise ValueError(f"dt = {dt:g} exceeds the stability limit {limit:g} (T_min / {SAMPLES_PER_PERIOD})")
    if dt <= 0 or t_end < 0:
        raise ValueError("dt must be positive and t_end non-negative")
    ref = st.positions
    x = ref + (np.zeros(n) if u0 is None else np.asarray(u0, dtype=float))
    v = np.zeros(n) if v0 is None else np.asarray(v0, dtype=float).copy()
    power = st.power

    def accel(y):
        return -gradient(y, model, power=power, depth_scale=depth_scale)

    def energy(y, w):
        return total_energy(y, model, power=power, depth_scale=depth_scale) + 0.5 * float(np.dot(w, w))

    idx = _ion_index(ions, n)
    n_steps = int(round(t_end / dt))
    times, pos, vel, ens, _, _ = _run(
        x, v, accel, dt, n_steps, sample_every, idx, energy=energy if record_energy else None
    )
    return Trajectory(times, pos - ref[idx], vel, idx, ref.copy(), ens)


# --- Langevin baths ------------------------------------------------------------


@dataclass(frozen=True)
class BathSpec:
    ion_index: int
    temperature: float  # K
    coupling_rate: float  # 1/s

    def __post_init__(self):
        if self.temperature < 0 or self.coupling_rate < 0:
            raise ValueError("bath temperature and coupling rate must be non-negative")


@dataclass(frozen=True)
class BathResult:
    trajectory: Trajectory
    temperatures: np.ndarray  # K, kinetic temperature per ion after burn-in
    errors: np.ndarray  # K, block-averaged standard error
    burn_in: float  # dimensionless time discarded before averaging
    seed: int


def _ou_map(baths: Sequence[BathSpec], model: ChainModel, n: int, dt_half: float, rng: np.random.Generator):
    """Exact Ornstein-Uhlenbeck velocity update over ``dt_half`` on the bath ions."""
    gamma = np.zeros(n)
    kt = np.zeros(n)
    for b in baths:
        i = b.ion_index % n
        gamma[i] += b.coupling_rate * model.scales.time_unit
        kt[i] = BOLTZMANN * b.temperature / model.scales.energy_unit
    active = np.nonzero(gamma > 0)[0]
    if active.size == 0:
        return None
    c = np.exp(-gamma[active] * dt_half)
    sigma = np.sqrt(kt[active] * (1 - c * c))

    def apply(v):
        v = v.copy()
        v[active] = c * v[active] + sigma * rng.standard_normal(active.size)
        return v

    return apply


def _block_error(samples, n_blocks):
    usable = samples.shape[0] - samples.shape[0] % n_blocks
    if usable < n_blocks:
        return np.full(samples.shape[1], np.nan)
    means = samples[:usable].reshape(n_blocks, -1, samples.shape[1]).mean(axis=1)
    return means.std(axis=0, ddof=1) / np.sqrt(n_blocks)


def langevin_bath(
    state: EquilibriumResult | ChainState,
    model: ChainModel,
    baths: Sequence[BathSpec],
    *,
    dt: float | None = None,
    t_end: float,
    seed: int,
    sample_every: int = 1,
    burn_in: float | None = None,
    n_blocks: int = 20,
) -> BathResult:
    """Chain with friction and noise on the bath ions (OBABO splitting).

    The friction/noise half steps are exact OU updates, so the bath
    temperature is reproduced without time-step bias on a free particle.
    Kinetic temperatures ``m <v_i^2> / k_B`` are averaged after ``burn_in``
    (default ten damping times of the weakest bath) with block-averaged
    standard errors. The RNG is a Philox stream keyed by ``seed``.
    """
    st = state.state if isinstance(state, EquilibriumResult) else state
    n = st.ion_count
    limit = max_stable_step(st, model)
    if dt is None:
        dt = limit
    elif dt > limit * (1 + 1e-12):
        raise ValueError(f"dt = {dt:g} exceeds the stability limit {limit:g}")
    rates = [b.coupling_rate * model.scales.time_unit for b in baths if b.coupling_rate > 0]
    if rates and max(rates) * dt > 0.1:
        raise ValueError("gamma * dt must be small; reduce dt or the coupling rate")
    if burn_in is None:
        burn_in = 10 / min(rates) if rates else 0.0
    rng = np.random.Generator(np.random.Philox(seed))
    thermostat = _ou_map(baths, model, n, 0.5 * dt, rng)
    power = st.power

    def accel(y):
        return -gradient(y, model, power=power)

    n_steps = int(round(t_end / dt))
    idx = np.arange(n)
    times, pos, vel, _, _, _ = _run(
        st.positions.copy(), np.zeros(n), accel, dt, n_steps, sample_every, idx, thermostat=thermostat
    )
    traj = Trajectory(times, pos - st.positions, vel, idx, st.positions.copy())
    keep = times >= burn_in
    to_kelvin = model.scales.energy_unit / BOLTZMANN
    v2 = vel[keep] ** 2
    temps = v2.mean(axis=0) * to_kelvin if v2.size else np.full(n, np.nan)
    errs = _block_error(v2, n_blocks) * to_kelvin
    return BathResult(traj, temps, errs, burn_in, seed)


def thread_count() -> int:
    """Worker threads for ensembles, from ``IONLATTICE_THREADS`` (default 1)."""
    raw = os.environ.get("IONLATTICE_THREADS", "1")
    try:
        count = int(raw)
    except ValueError:
        raise ValueError(f"IONLATTICE_THREADS must be an integer, got {raw!r}") from None
    return max(count, 1)


def langevin_ensemble(state, model, baths, *, runs: int, seed: int, threads: int | None = None, **kwargs) -> list[BathResult]:
    """Independent bath trajectories with per-run seeds ``seed, seed + 1, ...``; order follows the seed."""
    threads = thread_count() if threads is None else threads
    seeds = [seed + k for k in range(runs)]

    def one(s):
        return langevin_bath(state, model, baths, seed=s, **kwargs)

    if threads == 1:
        return [one(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, seeds))
