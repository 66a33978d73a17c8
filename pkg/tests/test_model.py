import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ionlattice.errors import DomainError, OrderingError
from ionlattice.model import (
    ATOMIC_MASS_UNIT,
    PLANCK,
    TWO_PI,
    ChainModel,
    ChainState,
    IonSpecies,
    LatticeConfig,
    TrapConfig,
    depth_from_power,
    gradient,
    hessian,
    local_frequency,
    scales_from,
    total_energy,
)

CA = IonSpecies.calcium40()


def model(n=5, power=0.0, **lat):
    lattice = LatticeConfig(period=202.5e-9, depth_per_watt=PLANCK * 4.6e6, power=power, **lat)
    return ChainModel(CA, TrapConfig(TWO_PI * 100e3, n), lattice)


def length_oracle(mass, omega):
    # e^2 / (4 pi eps0) written out from the CODATA constants
    coulomb = 1.602176634e-19**2 / (4 * np.pi * 8.8541878128e-12)
    return (coulomb / (mass * omega**2)) ** (1 / 3)


@pytest.mark.parametrize("freq, expected", [(100e3, 2.07e-5), (1e6, 4.45e-6)])
def test_length_unit(freq, expected):
    s = scales_from(CA, TrapConfig(TWO_PI * freq, 1))
    assert s.length_unit == pytest.approx(length_oracle(40 * ATOMIC_MASS_UNIT, TWO_PI * freq), rel=1e-12)
    assert s.length_unit == pytest.approx(expected, rel=5e-3)
    assert s.time_unit == pytest.approx(1 / (TWO_PI * freq))
    assert s.energy_unit == pytest.approx(CA.mass * (TWO_PI * freq) ** 2 * s.length_unit**2)


def test_length_scaling_law():
    a = scales_from(CA, TrapConfig(TWO_PI * 100e3, 1)).length_unit
    b = scales_from(CA, TrapConfig(TWO_PI * 1e6, 1)).length_unit
    assert a / b == pytest.approx(10 ** (2 / 3), rel=1e-12)


@pytest.mark.parametrize("power, mhz", [(1.5, 6.9), (0.0, 0.0), (0.75, 3.45)])
def test_depth_from_power(power, mhz):
    lat = LatticeConfig.reference(power)
    assert depth_from_power(lat) == pytest.approx(PLANCK * mhz * 1e6, rel=1e-12, abs=1e-40)


def test_depth_linear_and_frequency_sqrt():
    lat = LatticeConfig.reference()
    powers = np.linspace(0, 3, 13)
    depths = np.array([depth_from_power(lat, p) for p in powers])
    assert np.allclose(depths, powers * lat.depth_per_watt, rtol=1e-14)
    w = np.array([local_frequency(k, lat, CA) for k in depths])
    assert np.allclose(w**2, w[-1] ** 2 * depths / depths[-1], rtol=1e-12)
    assert local_frequency(4 * depths[3], lat, CA) == pytest.approx(2 * w[3])
    assert local_frequency(0.0, lat, CA) == 0.0


def test_operating_point_frequency():
    nu = local_frequency(PLANCK * 6.9e6, LatticeConfig.reference(), CA) / TWO_PI
    assert 1.2e6 <= nu <= 1.35e6


def test_negative_inputs_rejected():
    with pytest.raises(ValueError):
        depth_from_power(LatticeConfig.reference(), -1.0)
    with pytest.raises(ValueError):
        LatticeConfig(period=-1, depth_per_watt=1)
    with pytest.raises(ValueError):
        IonSpecies(mass=0, cooling_wavelength=1, natural_linewidth=1)
    with pytest.raises(ValueError):
        TrapConfig(axial_frequency=1.0, ion_count=0)


def test_state_validation():
    with pytest.raises(OrderingError):
        ChainState(np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        ChainState(np.array([0.0, 0.0]))
    s = ChainState(np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        s.positions[0] = 3.0


def test_coincident_ions_in_raw_array():
    with pytest.raises(DomainError):
        total_energy(np.array([0.5, 0.5]), model(2), power=0.0)


def test_single_ion_trivia():
    m = model(1)
    assert total_energy(ChainState(np.zeros(1)), m) == 0.0
    assert gradient(ChainState(np.array([0.3])), m)[0] == pytest.approx(0.3)
    assert hessian(ChainState(np.zeros(1)), m) == pytest.approx(np.ones((1, 1)))


def test_two_and_three_ion_stationary():
    m2, m3 = model(2), model(3)
    u = 0.25 ** (1 / 3)  # trap force u balances Coulomb 1 / (2u)^2
    assert u == pytest.approx(0.62996, abs=1e-5)
    assert np.max(np.abs(gradient(ChainState(np.array([-u, u])), m2))) < 1e-10
    x3 = (5 / 4) ** (1 / 3)
    assert np.max(np.abs(gradient(ChainState(np.array([-x3, 0, x3])), m3))) < 1e-10


def test_two_ion_mode_frequencies():
    u = 0.25 ** (1 / 3)
    w2 = np.linalg.eigvalsh(hessian(ChainState(np.array([-u, u])), model(2)))
    assert np.sqrt(w2) == pytest.approx([1.0, np.sqrt(3)], rel=1e-12)


def random_state(rng, n):
    return np.sort(rng.uniform(-4, 4, n)) + 0.3 * np.arange(n)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 10), seed=st.integers(0, 2**32 - 1), power=st.floats(0, 2))
def test_gradient_matches_finite_difference(n, seed, power):
    rng = np.random.default_rng(seed)
    x = random_state(rng, n)
    m = model(n, phase_origin=rng.uniform(0, 202.5e-9))
    g = gradient(x, m, power=power)
    h = 1e-6
    fd = np.array(
        [(total_energy(x + h * e, m, power=power) - total_energy(x - h * e, m, power=power)) / (2 * h) for e in np.eye(n)]
    )
    assert np.max(np.abs(fd - g)) <= 1e-6 * max(1.0, np.max(np.abs(g)))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 10), seed=st.integers(0, 2**32 - 1), power=st.floats(0, 2))
def test_hessian_matches_finite_difference(n, seed, power):
    rng = np.random.default_rng(seed)
    x = random_state(rng, n)
    m = model(n)
    a = hessian(x, m, power=power)
    assert np.allclose(a, a.T)
    h = 1e-6
    fd = np.array([(gradient(x + h * e, m, power=power) - gradient(x - h * e, m, power=power)) / (2 * h) for e in np.eye(n)])
    assert np.max(np.abs(fd - a)) <= 1e-6 * max(1.0, np.max(np.abs(a)))


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 8), seed=st.integers(0, 2**32 - 1))
def test_energy_permutation_invariant(n, seed):
    rng = np.random.default_rng(seed)
    x = random_state(rng, n)
    m = model(n)
    perm = rng.permutation(n)
    assert total_energy(x[perm], m, power=1.0) == pytest.approx(total_energy(x, m, power=1.0), rel=1e-13)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 8), seed=st.integers(0, 2**32 - 1))
def test_parity_without_lattice(n, seed):
    rng = np.random.default_rng(seed)
    x = random_state(rng, n)
    m = model(n)
    assert total_energy(-x, m, power=0.0) == pytest.approx(total_energy(x, m, power=0.0), rel=1e-13)
    assert np.allclose(gradient(-x, m, power=0.0), -gradient(x, m, power=0.0), rtol=1e-12, atol=1e-12)


def test_depth_scale_only_changes_lattice():
    m = model(3, power=1.0)
    x = np.array([-1.0, 0.1, 1.2])
    base = total_energy(x, m, power=1.0)
    same = total_energy(x, m, power=1.0, depth_scale=np.ones(3))
    assert same == base
    assert total_energy(x, m, power=0.0, depth_scale=np.array([2.0, 2.0, 2.0])) == total_energy(x, m, power=0.0)


def test_lattice_max_at_trap_centre():
    m = model(1, power=1.0)
    g = gradient(np.array([0.0]), m, power=1.0)
    assert g[0] == pytest.approx(0.0, abs=1e-15)
    assert hessian(np.array([0.0]), m, power=1.0)[0, 0] < 1.0
    assert m.lattice_symmetric
    assert not model(1, phase_origin=50e-9).lattice_symmetric
