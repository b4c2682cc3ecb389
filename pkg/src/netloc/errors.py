"""Exception hierarchy for the localization package."""


class LocalizationError(Exception):
    """Base class for every error raised by netloc."""


class ShapeError(LocalizationError, ValueError):
    pass


class ConstraintIndexError(LocalizationError, IndexError):
    pass


class InvalidNetworkError(LocalizationError, ValueError):
    pass


class DegenerateNetworkError(LocalizationError, ValueError):
    pass


class ParameterError(LocalizationError, ValueError):
    pass


class NumericError(LocalizationError, ArithmeticError):
    pass


class DirectionError(LocalizationError, ValueError):
    """Raised when a line search is given a non-descent direction."""


class SolverError(LocalizationError):
    pass


class NoBracketError(LocalizationError):
    """Bracket expansion hit its cap without a sign change."""


class GenerationError(LocalizationError):
    pass


class ParseError(LocalizationError, ValueError):
    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
        self.path = path
        self.line = line
