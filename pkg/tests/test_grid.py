import numpy as np
import pytest

from ionlattice.errors import GridConvergenceError
from ionlattice.grid import exact_overlap_grid
from ionlattice.model import PLANCK, TWO_PI, ChainModel, ChainState, IonSpecies, LatticeConfig, TrapConfig
from ionlattice.quantum import SpinPerturbation, fidelity_scan, spin_branches
from ionlattice.statics import relax, relax_from_scratch

CA = IonSpecies.calcium40()


def stiff_well(phase_origin=101.25e-9, power=1.5, trap_hz=100e3, n=1, depth_factor=1000):
    # a deeper lattice keeps the ground state small against the period (near-harmonic regime)
    lat = LatticeConfig(202.5e-9, PLANCK * 4.6e6 * depth_factor, power, phase_origin)
    return ChainModel(CA, TrapConfig(TWO_PI * trap_hz, n), lat)


def test_single_ion_grid_matches_gaussian_quench():
    m = stiff_well()
    r = relax(ChainState(np.zeros(1), 1.5), m)
    pert = SpinPerturbation(0, 0.5)
    br = spin_branches(r, m, pert)
    t = np.pi / (2 * np.sqrt(br.up[0, 0]))  # deepest point of the quench dip
    grid = exact_overlap_grid(r, m, pert, t)
    gauss = fidelity_scan(r, m, pert, [t]).contrast[0]
    assert gauss < 0.995
    assert grid.magnitude == pytest.approx(gauss, abs=1e-4)


def test_single_ion_off_minimum_matches_displaced_gaussian():
    # a stiff trap holds the ion on the lattice slope, so the perturbation also pushes it
    m = stiff_well(phase_origin=60e-9, trap_hz=3e6, depth_factor=100)
    r = relax(ChainState(np.zeros(1), 1.5), m)
    pert = SpinPerturbation(0, 0.1)
    br = spin_branches(r, m, pert)
    assert abs(br.up_force[0]) > 0.1
    t = np.pi / np.sqrt(br.up[0, 0])
    grid = exact_overlap_grid(r, m, pert, t)
    gauss = fidelity_scan(r, m, pert, [t]).contrast[0]
    assert gauss < 0.999 - 1e-4
    assert grid.magnitude == pytest.approx(gauss, abs=1e-4)


def test_two_ion_grid_matches_gaussian():
    lat = LatticeConfig(202.5e-9, PLANCK * 4.6e6, 0.5, 0.0)
    m = ChainModel(CA, TrapConfig(TWO_PI * 1e6, 2), lat)
    r = relax_from_scratch(m, 0.5)
    pert = SpinPerturbation(0, 0.1)
    grid = exact_overlap_grid(r, m, pert, 0.5)
    gauss = fidelity_scan(r, m, pert, [0.5]).contrast[0]
    assert grid.magnitude == pytest.approx(gauss, abs=1e-4)


def test_zero_time_overlap_is_one():
    m = stiff_well()
    r = relax(ChainState(np.zeros(1), 1.5), m)
    g = exact_overlap_grid(r, m, SpinPerturbation(0, 0.3), 0.0)
    assert g.magnitude == pytest.approx(1.0, abs=1e-10)
    assert g.steps >= 1


def test_coarse_grid_flags_nonconvergence():
    m = stiff_well()
    r = relax(ChainState(np.zeros(1), 1.5), m)
    with pytest.raises(GridConvergenceError):
        exact_overlap_grid(r, m, SpinPerturbation(0, 0.5), 0.3, points=8, steps=1)


def test_grid_rejects_large_chains_and_negative_time():
    m = stiff_well(n=3)
    r = relax_from_scratch(m, 1.5)
    with pytest.raises(ValueError):
        exact_overlap_grid(r, m, SpinPerturbation(0, 0.1), 1.0)
    m1 = stiff_well()
    r1 = relax(ChainState(np.zeros(1), 1.5), m1)
    with pytest.raises(ValueError):
        exact_overlap_grid(r1, m1, SpinPerturbation(0, 0.1), -1.0)
