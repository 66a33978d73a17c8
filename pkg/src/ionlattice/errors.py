"""Exception hierarchy shared by all ionlattice modules."""


class IonLatticeError(Exception):
    """Base class for all package errors."""


class DomainError(IonLatticeError, ValueError):
    """Two ions coincide, so the Coulomb energy is undefined."""


class OrderingError(IonLatticeError, ValueError):
    """Ion positions are not strictly increasing."""


class ConvergenceError(IonLatticeError):
    """A numerical procedure did not converge.

    ``parameter`` names the offending control value (for example the lattice
    power at which a continuation step failed) so batch drivers can report it.
    """

    def __init__(self, message, parameter=None, value=None):
        super().__init__(message)
        self.parameter = parameter
        self.value = value


class HopError(ConvergenceError):
    """An ion moved to a neighbouring lattice site between continuation steps."""


class NotRelaxedError(IonLatticeError, ValueError):
    """Linearization requested around a configuration that is not an equilibrium."""


class UnstableModeError(IonLatticeError):
    """A quadratic Hamiltonian has a non-positive curvature direction."""


class NoTransitionError(IonLatticeError):
    """A sweep shows no sign of the sliding-to-pinned transition."""


class GridConvergenceError(ConvergenceError):
    """A grid-based calculation changed by more than its tolerance under refinement."""


class IonCrossingError(IonLatticeError):
    """Two ions swapped order during time integration."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class NotPureError(IonLatticeError, ValueError):
    """A Gaussian state expected to be pure has symplectic eigenvalues above 1/2."""
