"""Exception and warning types shared across the simulator suite."""


class StructuralError(ValueError):
    """Array shapes or grids do not match the operation's contract."""


class InvalidModeError(ValueError):
    """A mode index lies outside the lattice / excitation is impossible."""


class ParameterError(ValueError):
    """A scalar parameter is outside its admissible range."""


class UnsupportedNormError(ValueError):
    """Weighted-sequence norm requested with p not in {1, 2}."""


class InvalidExponentError(ValueError):
    """Growth exponent violates 1 - 2*ell*lambda > 0."""


class RegimeError(ValueError):
    """Regime parameters violate the small-dispersion window."""


class DomainError(ValueError):
    """Argument outside the domain of an asymptotic formula."""


class BlowupError(RuntimeError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class DealiasingError(RuntimeError):
    """Spectral content violates the configured aliasing guard."""


class CFLWarning(UserWarning):
    """Time step is large relative to the fastest linear frequency."""


class HorizonWarning(UserWarning):
    """Evaluation time lies beyond the validity horizon of the approximation."""
