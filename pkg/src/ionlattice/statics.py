"""Equilibria, lattice-power continuation and pinning diagnostics."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError, HopError, NoTransitionError, OrderingError
from .model import ChainModel, ChainState, gradient, hessian, total_energy

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class MinimizeResult:
    x: np.ndarray
    gradient_norm: float
    converged: bool
    iterations: int
    energies: np.ndarray  # energy after every accepted iteration


def minimize(
    x0: np.ndarray,
    energy: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    hess: Callable[[np.ndarray], np.ndarray],
    *,
    tol: float = DEFAULT_TOL,
    max_step: float,
    max_iter: int = 20000,
    project: Callable[[np.ndarray], np.ndarray] | None = None,
    escape_saddles: bool = True,
    check: Callable[[np.ndarray], None] | None = None,
) -> MinimizeResult:
    """Damped modified-Newton descent with a hard per-coordinate step cap.

    Each step is the Newton step in the Hessian eigenbasis with curvatures
    replaced by their magnitudes, so it is always a descent direction. The
    step is scaled so no coordinate moves more than ``max_step`` and halved
    while the energy increases. If the gradient has converged at a saddle the
    iterate is pushed along the most negative curvature direction.

    ``project`` restricts the iteration to a linear subspace (it must be an
    orthogonal projector applied to both iterates and steps).
    """
    x = np.array(x0, dtype=float)
    if project is not None:
        x = project(x)
    e = energy(x)
    energies = [e]
    g = grad(x)
    if project is not None:
        g = project(g)
    gnorm = float(np.max(np.abs(g)))
    it = 0
    while it < max_iter:
        h = hess(x)
        w, v = np.linalg.eigh(h)
        if gnorm < tol:
            if not escape_saddles or w[0] >= -1e-9 * max(1.0, abs(w[-1])):
                return MinimizeResult(x, gnorm, True, it, np.array(energies))
            direction = v[:, 0]
            # deterministic sign: largest component positive
            step = 0.25 * max_step * direction * np.sign(direction[np.argmax(np.abs(direction))])
        else:
            floor = 1e-12 * max(1.0, abs(w[-1]))
            step = -v @ ((v.T @ g) / np.maximum(np.abs(w), floor))
        if project is not None:
            step = project(step)
        biggest = np.max(np.abs(step))
        if biggest > max_step:
            step *= max_step / biggest
        # backtrack on energy increase; allow round-off level noise
        slack = 1e-14 * max(1.0, abs(e))
        for _ in range(60):
            trial = x + step
            try:
                if check is not None:
                    check(trial)
                e_trial = energy(trial)
            except (OrderingError, ValueError):
                e_trial = np.inf
            if e_trial <= e + slack:
                break
            step *= 0.5
        else:
            log.debug("line search failed at iteration %d", it)
            return MinimizeResult(x, gnorm, gnorm < tol, it, np.array(energies))
        x, e = trial, e_trial
        energies.append(e)
        g = grad(x)
        if project is not None:
            g = project(g)
        gnorm = float(np.max(np.abs(g)))
        it += 1
    return MinimizeResult(x, gnorm, False, it, np.array(energies))


# --- ion chain equilibria ------------------------------------------------------


@dataclass(frozen=True)
class EquilibriumResult:
    state: ChainState
    gradient_norm: float
    converged: bool
    iterations: int
    energy: float


def _check_order(x):
    if np.any(np.diff(x) <= 0):
        raise OrderingError("ions crossed during relaxation")


def _mirror(x):
    return 0.5 * (x - x[::-1])


def initial_positions(n: int) -> np.ndarray:
    """Rough equilibrium guess for ``n`` ions in a harmonic trap (units of l0)."""
    if n == 1:
        return np.zeros(1)
    # the large-N density profile is an inverted parabola of half-length (3 N ln N)^(1/3)
    half = (3 * n * max(np.log(n), 0.5)) ** (1 / 3) * 0.75
    u = np.linspace(-1, 1, n)
    return half * np.sin(np.pi * u / 2)


def relax(
    initial: ChainState,
    model: ChainModel,
    tol: float = DEFAULT_TOL,
    max_step: float | None = None,
    *,
    force: float = 0.0,
    symmetric: bool = False,
    max_iter: int = 20000,
) -> EquilibriumResult:
    """Relax the chain to a local energy minimum at ``initial.power``.

    No ion moves by more than ``max_step`` (default a quarter of the lattice
    period) per iteration, so ions cannot hop lattice sites. With
    ``symmetric=True`` the iteration stays in the mirror-symmetric subspace
    ``x_i = -x_{N+1-i}``; this tracks the symmetric branch through and past
    its instability instead of breaking the symmetry.

    A result that hits ``max_iter`` is returned with ``converged=False``.
    Ions crossing raises :class:`OrderingError`.
    """
    if max_step is None:
        max_step = model.period / 4
    power = initial.power

    def energy(x):
        return total_energy(x, model, power=power, force=force)

    def grad(x):
        return gradient(x, model, power=power, force=force)

    def hess(x):
        return hessian(x, model, power=power)

    if symmetric and not model.lattice_symmetric:
        raise ValueError("symmetric relaxation needs a lattice that is even about the trap centre")
    res = minimize(
        initial.positions,
        energy,
        grad,
        hess,
        tol=tol,
        max_step=max_step,
        max_iter=max_iter,
        project=_mirror if symmetric else None,
        escape_saddles=not symmetric,
        check=_check_order,
    )
    _check_order(res.x)
    return EquilibriumResult(
        state=ChainState(res.x, power),
        gradient_norm=res.gradient_norm,
        converged=res.converged,
        iterations=res.iterations,
        energy=res.energies[-1],
    )


def relax_from_scratch(model: ChainModel, power: float = 0.0, tol: float = DEFAULT_TOL) -> EquilibriumResult:
    """Relax ``model.trap.ion_count`` ions starting from a symmetric guess."""
    guess = ChainState(initial_positions(model.trap.ion_count), power)
    res = relax(guess, model, tol)
    if not res.converged:
        raise ConvergenceError("relaxation did not converge", "power", power)
    return res


@dataclass(frozen=True)
class ContinuationSweep:
    powers: np.ndarray
    states: tuple[EquilibriumResult, ...]

    def __len__(self):
        return len(self.states)

    def positions(self) -> np.ndarray:
        return np.array([r.state.positions for r in self.states])


def sweep_power(
    base: EquilibriumResult | ChainState,
    model: ChainModel,
    p_grid,
    tol: float = DEFAULT_TOL,
    *,
    symmetric: bool = False,
    max_halvings: int = 12,
) -> ContinuationSweep:
    """Relax the chain at each power of ``p_grid``, each from the previous solution.

    A step whose largest ion displacement exceeds an eighth of the lattice
    period is retried in halves; a displacement of half a period or more
    (an ion hopping to the next site) raises :class:`HopError`.
    """
    powers = np.asarray(p_grid, dtype=float)
    if powers.size == 0:
        raise ValueError("empty power grid")
    if np.any(np.diff(powers) <= 0):
        raise ValueError("power grid must be strictly ascending")
    current = base.state if isinstance(base, EquilibriumResult) else base
    results = []
    for i, target in enumerate(powers):
        if i == 0 and target == current.power and isinstance(base, EquilibriumResult):
            res = base
        else:
            res = _continue_to(current, current.power, target, model, tol, symmetric, max_halvings, model.period)
        results.append(res)
        current = res.state
    return ContinuationSweep(powers, tuple(results))


def _continue_to(state, p0, p1, model, tol, symmetric, max_halvings, lam):
    """Relax from ``state`` (at power ``p0``) to power ``p1`` with adaptive sub-steps."""
    x, p = state.positions, p0
    full = p1 - p0
    step = full
    min_step = abs(full) / 2**max_halvings
    while True:
        nxt = p1 if abs(step) >= abs(p1 - p) else p + step
        res = relax(ChainState(x, nxt), model, tol, symmetric=symmetric)
        if not res.converged:
            raise ConvergenceError(f"relaxation did not converge at P = {nxt:g} W", "power", nxt)
        moved = np.max(np.abs(res.state.positions - x))
        if moved > lam / 8 and abs(step) / 2 >= min_step:
            step /= 2
            continue
        if moved >= lam / 2:
            raise HopError(f"an ion hopped a lattice site near P = {nxt:g} W", "power", nxt)
        x, p = res.state.positions, nxt
        if p == p1:
            return res
        step = step * 2 if abs(step * 2) <= abs(full) else full


# --- pinning diagnostics -------------------------------------------------------


@dataclass(frozen=True)
class HullFunction:
    phases: np.ndarray  # m, in [0, period), measured from a lattice maximum
    reference_positions: np.ndarray  # m, P = 0 equilibrium
    period: float  # m

    def distance_to_maximum(self) -> np.ndarray:
        """Distance of every ion from its nearest lattice maximum (m)."""
        return np.minimum(self.phases, self.period - self.phases)

    def exclusion_halfwidth(self) -> float:
        """Half-width of the empty window around the lattice maximum (m)."""
        return float(np.min(self.distance_to_maximum()))

    def largest_gap(self) -> float:
        """Largest empty arc of the folded phases (m)."""
        ph = np.sort(self.phases)
        gaps = np.diff(np.concatenate([ph, [ph[0] + self.period]]))
        return float(np.max(gaps))


def hull(result: EquilibriumResult | ChainState, reference: EquilibriumResult | ChainState, model: ChainModel) -> HullFunction:
    """Ion positions folded into one lattice period, with the P = 0 reference.

    Folding ``x(P) - x(0) + x(0)`` is the position itself, so the phase is
    simply the position modulo the period measured from a lattice maximum.
    """
    state = result.state if isinstance(result, EquilibriumResult) else result
    ref = reference.state if isinstance(reference, EquilibriumResult) else reference
    lam = model.lattice.period
    x = model.to_meters(state.positions) - model.lattice.phase_origin
    phases = np.mod(x, lam)
    phases[phases >= lam] = 0.0
    return HullFunction(phases=phases, reference_positions=model.to_meters(ref.positions), period=lam)


def order_parameter_delta(state: EquilibriumResult | ChainState, model: ChainModel) -> float:
    """Distance of the centre ion from the nearest lattice maximum, in metres."""
    st = state.state if isinstance(state, EquilibriumResult) else state
    n = st.ion_count
    if n % 2 == 0:
        raise ValueError("order parameter needs an odd number of ions")
    lam = model.period
    u = st.positions[n // 2] - model.origin
    folded = u - lam * np.round(u / lam)
    if folded <= -lam / 2:
        folded += lam
    return float(abs(folded) * model.scales.length_unit)


@dataclass(frozen=True)
class DepinningResult:
    force: float  # N, per ion
    displacement: float  # m, centre-of-mass shift reached at that force
    converged: bool
    relaxations: int


def depinning_force(
    result: EquilibriumResult,
    model: ChainModel,
    delta_x: float,
    *,
    rel_resolution: float = 1e-3,
    max_force: float | None = None,
    tol: float = DEFAULT_TOL,
) -> DepinningResult:
    """Smallest uniform per-ion force that shifts the chain's centre of mass by ``delta_x`` metres.

    The force is ramped from zero with continuation (each relaxation starts
    from the previous one, step doubling while the response stays short of
    the target), then bracketed by bisection to ``rel_resolution``.
    """
    target = delta_x / model.scales.length_unit
    if target <= 0:
        raise ValueError("delta_x must be positive")
    x0 = result.state.positions
    power = result.state.power
    com0 = np.mean(x0)
    if max_force is None:
        # force needed to shift a free harmonic chain by 100 periods plus the steepest lattice slope
        max_force = 100 * model.period + model.depth(power) * model.wavenumber * 4 + 10 * target
    count = 0

    def respond(f, start):
        nonlocal count
        count += 1
        r = relax(ChainState(start, power), model, tol, force=f)
        return r, float(np.mean(r.state.positions) - com0)

    f_lo, x_lo = 0.0, x0
    step = target / 4  # free chain needs exactly f = target
    f_hi = None
    while f_hi is None:
        f = f_lo + step
        if f > max_force:
            return DepinningResult(f_lo * model.scales.force_unit, 0.0, False, count)
        r, shift = respond(f, x_lo)
        if not r.converged:
            return DepinningResult(f * model.scales.force_unit, shift * model.scales.length_unit, False, count)
        if shift >= target:
            f_hi, reached = f, shift
        else:
            f_lo, x_lo = f, r.state.positions
            step *= 2 if shift < 0.5 * target else 1
    while (f_hi - f_lo) > rel_resolution * f_hi:
        f = 0.5 * (f_lo + f_hi)
        r, shift = respond(f, x_lo)
        if shift >= target:
            f_hi, reached = f, shift
        else:
            f_lo, x_lo = f, r.state.positions
    return DepinningResult(f_hi * model.scales.force_unit, reached * model.scales.length_unit, True, count)


def lowest_eigenvalue(state: ChainState, model: ChainModel) -> float:
    return float(np.linalg.eigvalsh(hessian(state, model))[0])


def critical_power(
    sweep: ContinuationSweep,
    model: ChainModel,
    resolution: float = 1e-4,
    lowest_mode: Callable[[ChainState], float] | None = None,
) -> float:
    """Lattice power at which the lowest mode frequency reaches its minimum.

    ``lowest_mode`` maps a state to a monotone measure of its lowest mode
    (default: the signed lowest eigenvalue of the coupling matrix, i.e. the
    squared frequency). Its minimum over the sweep brackets the transition. If the mirror-symmetric branch loses
    stability inside the bracket, the crossing is located by bisection on the
    sign of its lowest curvature; otherwise the minimum is refined by
    golden-section search along the continuation.
    """
    if lowest_mode is None:
        lowest_mode = lambda st: lowest_eigenvalue(st, model)  # noqa: E731
    powers = sweep.powers
    values = np.array([lowest_mode(r.state) for r in sweep.states])
    k = int(np.argmin(values))
    crossing = np.any(values < 0)
    if not crossing and (k == 0 or k == len(values) - 1):
        raise NoTransitionError("lowest mode frequency has no interior minimum in the sweep")
    lo = powers[max(k - 1, 0)]
    hi = powers[min(k + 1, len(powers) - 1)]
    start = sweep.states[max(k - 1, 0)].state

    if model.lattice_symmetric:
        sym = ChainState(_mirror(start.positions), lo)

        def sym_curv(p):
            r = _continue_to(sym, lo, p, model, DEFAULT_TOL, True, 12, model.period)
            return lowest_eigenvalue(r.state, model)

        c_lo, c_hi = sym_curv(lo), sym_curv(hi)
        if c_lo > 0 > c_hi:
            a, b = lo, hi
            while b - a > resolution:
                m = 0.5 * (a + b)
                if sym_curv(m) > 0:
                    a = m
                else:
                    b = m
            return 0.5 * (a + b)

    def along(p):
        r = _continue_to(start, lo, p, model, DEFAULT_TOL, False, 12, model.period)
        return lowest_mode(r.state)

    invphi = (np.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = along(c), along(d)
    while b - a > resolution:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = along(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = along(d)
    return 0.5 * (a + b)
