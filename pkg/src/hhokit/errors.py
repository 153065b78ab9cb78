"""Exception hierarchy for the engine."""


class HhoError(Exception):
    """Base class for all engine errors."""


class ExpressionError(HhoError):
    """Parse or print failure; carries a position when one is known."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)


class OddDegreeError(HhoError):
    """Product of two odd-degree factors: odd degree overflow."""


class JetCapError(HhoError):
    """A reduction produced a jet order above the configured cap."""


class NonlinearAnsatzError(HhoError):
    """A parameter occurs nonlinearly where an affine expression is required."""


class ParameterInDenominatorError(HhoError):
    """A formal parameter survived into the denominator of a rational function."""


class UnregisteredNonlocalError(HhoError):
    """A nonlocal odd variable was used without a registered slot."""


class DegenerateMetricError(HhoError):
    """det g = 0; the non-degenerate machinery does not apply."""


class NotASymmetryError(HhoError):
    """Rejected symmetry registration; carries the nonzero residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InputError(HhoError):
    """Malformed user input: wrong shape, bad tag, unparsable field."""
