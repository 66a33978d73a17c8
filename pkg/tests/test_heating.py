import numpy as np
import pytest
from scipy.integrate import solve_ivp

from ionlattice.heating import (
    MOMENTUM_DIFFUSION_QUANTA_PER_HALF_CYCLE,
    heating_rates,
    pulse_heating_energy,
)
from ionlattice.model import HBAR, PLANCK, ChainModel, IonSpecies, local_frequency

CA = IonSpecies.calcium40()
W1 = 2 * np.pi * 1e6


def test_pulse_displacement_and_energy_closed_form():
    r = pulse_heating_energy(CA, W1, 3)
    k_z = 2 * np.pi / 397e-9 / np.sqrt(2)
    f0 = HBAR * k_z * CA.natural_linewidth / 2
    assert r.force == pytest.approx(f0, rel=1e-12)
    assert r.x_eq == pytest.approx(f0 / (CA.mass * W1**2), rel=1e-12)
    e0 = 2 * CA.mass * W1**2 * r.x_eq**2 / (HBAR * W1)
    assert r.e0_quanta == pytest.approx(e0, rel=1e-12)
    assert r.diffusion_quanta_per_half_cycle == MOMENTUM_DIFFUSION_QUANTA_PER_HALF_CYCLE


@pytest.mark.parametrize("n", [0, 1, 2, 5])
def test_energy_grows_quadratically(n):
    r = pulse_heating_energy(CA, W1, n)
    assert np.array_equal(r.energies_quanta, np.arange(n + 1) ** 2 * r.e0_quanta)


def test_synchronised_pulses_match_driven_oscillator():
    # unit mass and frequency; force F0 = 1 switched on while the ion moves along it
    def rhs(t, y):
        x, v = y
        on = t % (2 * np.pi) < np.pi
        return [v, -x + (1.0 if on else 0.0)]

    n = 4
    sol = solve_ivp(rhs, (0, (2 * n - 1) * np.pi), [0.0, 0.0], rtol=1e-10, atol=1e-12, max_step=0.01)
    x, v = sol.y[:, -1]
    energy = 0.5 * (x * x + v * v)
    single = 0.5 * 2.0**2  # E0 = (2 x_eq)^2 / 2 with x_eq = 1
    assert energy / single == pytest.approx(n**2, rel=1e-6)


def test_pulse_inputs_validated():
    with pytest.raises(ValueError):
        pulse_heating_energy(CA, 0.0, 1)
    with pytest.raises(ValueError):
        pulse_heating_energy(CA, W1, -1)


def test_beam_along_axis_doubles_single_pulse_energy():
    on_axis = pulse_heating_energy(CA, W1, 1, beam_angle_deg=0.0)
    tilted = pulse_heating_energy(CA, W1, 1)
    assert on_axis.e0_quanta == pytest.approx(2 * tilted.e0_quanta, rel=1e-12)


@pytest.fixture(scope="module")
def model():
    return ChainModel.reference(1)


def test_parametric_and_gradient_formulas(model):
    s, nu = 1e-14, 1.2e6
    h = heating_rates(1.5, model, s, nu=nu)
    k = PLANCK * 6.9e6
    assert h.depth == pytest.approx(k, rel=1e-12)
    assert h.parametric_rate == pytest.approx(np.pi**2 * nu**2 * s / 2 * 1e-3, rel=1e-12)
    grad = 2 * np.pi**3 * k**2 * s / (HBAR * nu * CA.mass * (202.5e-9) ** 2) * 1e-3
    assert h.gradient_rate == pytest.approx(grad, rel=1e-12)


def test_default_trap_frequency_is_local_frequency(model):
    h = heating_rates(1.5, model, 1e-14)
    w = local_frequency(PLANCK * 6.9e6, model.lattice, CA)
    assert h.trap_frequency == pytest.approx(w / (2 * np.pi))
    assert 1.2e6 <= h.trap_frequency <= 1.35e6


def test_lamb_dicke_parameter(model):
    h = heating_rates(1.5, model, 1e-14)
    w = 2 * np.pi * h.trap_frequency
    z0 = np.sqrt(HBAR / (2 * CA.mass * w))
    assert h.ground_size == pytest.approx(z0, rel=1e-12)
    assert h.lamb_dicke == pytest.approx(2 * np.pi / 405e-9 * z0, rel=1e-12)
    assert h.scattering_rate == pytest.approx(40 * 1.5 * h.lamb_dicke**2, rel=1e-12)


def test_scattering_scales_as_root_power(model):
    a = heating_rates(0.5, model, 0.0)
    b = heating_rates(2.0, model, 0.0)
    assert b.scattering_rate / a.scattering_rate == pytest.approx(2.0, rel=1e-12)
    assert a.parametric_rate == 0.0 and a.gradient_rate == 0.0


def test_no_lattice_no_heating(model):
    h = heating_rates(0.0, model, 1e-14)
    assert h.scattering_rate == 0.0 and h.gradient_rate == 0.0


def test_negative_inputs_rejected(model):
    with pytest.raises(ValueError):
        heating_rates(-1.0, model, 1e-14)
    with pytest.raises(ValueError):
        heating_rates(1.0, model, -1e-14)
