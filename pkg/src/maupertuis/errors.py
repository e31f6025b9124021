"""Exceptions raised by the numerical routines."""


class NonConvergent(RuntimeError):
    """Quadrature node doubling stalled before reaching the tolerance."""


class StepTooLarge(ValueError):
    """Integrator step does not resolve the fast scale of the forcing."""


class RootNotBracketed(RuntimeError):
    """A monotone inversion lost its bracket (indicates an internal bug)."""


class NoRoot(ValueError):
    """No admissible level-set point exists for the requested energy."""


class BracketFailure(RuntimeError):
    """Energy bracket expansion underflowed while searching for a root."""


class FlatPiece(ValueError):
    """Momentum lies on the flat piece of the effective Hamiltonian."""


class NoDescent(RuntimeError):
    """Line search could not decrease the objective above tolerance."""


class DegenerateSegment(ValueError):
    """A curve has coincident consecutive nodes."""
