"""Exception hierarchy shared by all engines."""


class FieldTheoryError(Exception):
    """Base class for every error raised by fluctfield."""


class GridError(FieldTheoryError, ValueError):
    """Malformed grid, parameters or wave-function shape."""


class SupportError(GridError):
    """Initial state does not fit inside the phase-space grid."""


class FeasibilityError(FieldTheoryError):
    """Requested phase-space grid exceeds the supported number of sites."""


class NormError(FieldTheoryError, ValueError):
    """Wave function with zero (or non-finite) norm."""


class DivergenceError(FieldTheoryError, FloatingPointError):
    """Non-finite field values produced during time evolution."""

    def __init__(self, message, step=None, member=None):
        super().__init__(message)
        self.step = step
        self.member = member


class StabilityError(FieldTheoryError, ValueError):
    """Time step outside the linear stability region of the automaton."""


class BoundaryLeakError(FieldTheoryError):
    """Probability mass reached the edge of the phase-space grid."""


class RepresentationError(FieldTheoryError):
    """Complex wave function violates the reality selection rule."""


class ResolutionError(FieldTheoryError):
    """Grid too coarse: independent numerical routes disagree."""


class BandLimitError(FieldTheoryError):
    """State has too much weight near the grid edges or spectral cutoff."""


class HermiticityError(FieldTheoryError):
    """Expectation value of a Hermitian operator came out complex."""


class IdentityViolation(FieldTheoryError):
    """An exact identity between observables failed beyond tolerance."""


class ConvergenceError(FieldTheoryError):
    """Iterative solver did not converge."""


class ConfigError(FieldTheoryError, ValueError):
    """Invalid experiment configuration.

    ``errors`` holds every problem found, as ``(path, message)`` pairs.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        lines = [f"{path}: {msg}" if path else msg for path, msg in self.errors]
        super().__init__("; ".join(lines))
