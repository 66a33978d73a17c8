import numpy as np
import pytest

from ionlattice.errors import NotRelaxedError
from ionlattice.model import ChainState
from ionlattice.modes import normal_modes, parity_of, spectrum_sweep
from ionlattice.statics import relax_from_scratch, sweep_power

from .conftest import power_index
from .test_statics import chain


@pytest.mark.parametrize(
    "n, expected",
    [(1, [1.0]), (2, [1.0, 3.0]), (3, [1.0, 3.0, 29 / 5])],
)
def test_small_chain_spectra(n, expected):
    spec = normal_modes(relax_from_scratch(chain(n)), chain(n))
    assert np.allclose(spec.eigenvalues, expected, rtol=1e-10)
    assert np.allclose(spec.omega, np.sqrt(expected), rtol=1e-10)
    assert spec.stable


@pytest.mark.parametrize("n", [1, 2, 4, 9, 20, 35])
def test_centre_of_mass_and_breathing_modes(n):
    m = chain(n)
    spec = normal_modes(relax_from_scratch(m), m)
    assert spec.eigenvalues[0] == pytest.approx(1.0, abs=1e-10)
    assert np.allclose(spec.vectors[:, 0], 1 / np.sqrt(n), atol=1e-8)
    if n > 1:
        assert spec.eigenvalues[1] == pytest.approx(3.0, abs=1e-9)


def test_decomposition_reconstructs_coupling_matrix(ref_sweep, ref_model):
    for p in (0.0, 0.5, 1.5):
        spec = normal_modes(ref_sweep.states[power_index(ref_sweep, p)], ref_model)
        v = spec.vectors
        assert np.allclose(v.T @ v, np.eye(len(spec)), atol=1e-10)
        assert np.allclose(v @ np.diag(spec.eigenvalues) @ v.T, spec.coupling, atol=1e-8)
        assert np.all(np.diff(spec.eigenvalues) >= 0)


def test_parity_alternates_in_bare_chain(ref_base, ref_model):
    spec = normal_modes(ref_base, ref_model)
    expected = tuple("even" if k % 2 == 0 else "odd" for k in range(len(spec)))
    assert spec.parities == expected


def test_symmetric_pinned_chain_keeps_parity(ref_sweep, ref_model):
    # below the transition the lattice-dressed chain is still mirror symmetric
    spec = normal_modes(ref_sweep.states[power_index(ref_sweep, 0.5)], ref_model)
    assert "none" not in spec.parities


def test_canonical_sign_is_deterministic(ref_base, ref_model):
    spec = normal_modes(ref_base, ref_model)
    for k in range(len(spec)):
        v = spec.vectors[:, k]
        first_largest = np.argmax(np.abs(v) > (1 - 1e-9) * np.max(np.abs(v)))
        assert v[first_largest] > 0


def test_unrelaxed_state_rejected(ref_base, ref_model):
    x = ref_base.state.positions.copy()
    x[3] += 1e-3
    with pytest.raises(NotRelaxedError):
        normal_modes(ChainState(x), ref_model)


def test_mirror_image_has_same_spectrum(ref_sweep, ref_model):
    r = ref_sweep.states[power_index(ref_sweep, 1.5)]
    mirrored = ChainState(-r.state.positions[::-1], r.state.power)
    a = normal_modes(r, ref_model)
    b = normal_modes(mirrored, ref_model)
    assert np.allclose(a.eigenvalues, b.eigenvalues, rtol=1e-10, atol=1e-12)


def test_unstable_configuration_flagged():
    # a single ion held on a lattice maximum past the softening point
    m = chain(1, power=2.0)
    spec = normal_modes(ChainState(np.zeros(1), 2.0), m)
    assert spec.imaginary[0] and not spec.stable
    assert spec.eigenvalues[0] < 0 and spec.omega[0] > 0


@pytest.mark.parametrize(
    "v, expected",
    [([1, 2, 1], "even"), ([1, 0, -1], "odd"), ([1, 2, 3], "none"), ([0.5, -0.5], "odd")],
)
def test_parity_classifier(v, expected):
    assert parity_of(v) == expected


def test_spectrum_sweep_signed_lowest(ref_sweep, ref_model):
    table = spectrum_sweep(ref_sweep, ref_model)
    assert table.eigenvalues.shape == (len(ref_sweep), 35)
    assert table.lowest()[0] == pytest.approx(1.0, abs=1e-10)
    assert np.all(table.lowest() > 0)  # continuation stays on stable branches
    assert np.allclose(table.frequencies, ref_model.trap.axial_frequency * table.omega)
