"""Simulation of a trapped-ion chain in an optical lattice."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConvergenceError,
    DomainError,
    GridConvergenceError,
    HopError,
    IonCrossingError,
    IonLatticeError,
    NoTransitionError,
    NotPureError,
    NotRelaxedError,
    OrderingError,
    UnstableModeError,
)
from .model import ChainModel, ChainState, IonSpecies, LatticeConfig, TrapConfig, UnitScales  # noqa: F401
