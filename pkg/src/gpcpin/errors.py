"""Exception hierarchy shared by the library and the command line."""


class GpcError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ArgumentError(GpcError, ValueError):
    exit_code = 2


class UnsupportedSettingError(GpcError):
    """Raised when no constraint catalog exists for a setting."""

    exit_code = 3

    def __init__(self, message, nearest=None):
        super().__init__(message)
        self.nearest = nearest


class UnsupportedTruncationError(UnsupportedSettingError):
    """No truncation into a supported setting stays under the threshold.

    ``achievable`` lists (setting, epsilon) pairs that were reachable.
    """

    def __init__(self, message, achievable=()):
        super().__init__(message)
        self.achievable = list(achievable)


class NumericError(GpcError, ArithmeticError):
    exit_code = 4

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class PreconditionError(GpcError):
    """A theorem hypothesis needed for a bound does not hold."""

    exit_code = 4
