"""Exception hierarchy.

Every error carries the process exit code the CLI reports for it:
2 for bad input or configuration, 3 for template incompatibility and
4 for statistical degeneracy.
"""


class SwdError(Exception):
    exit_code = 1


class InputError(SwdError, ValueError):
    exit_code = 2


class RaggedRows(InputError):
    pass


class EmptyRecording(InputError):
    pass


class NonPositiveRate(InputError):
    pass


class LengthMismatch(InputError):
    pass


class TooShort(InputError):
    pass


class WindowLongerThanSignal(InputError):
    pass


class EventOutOfBounds(InputError):
    pass


class OverlappingEvents(InputError):
    pass


class ConfigError(InputError):
    pass


class ParseError(InputError):
    pass


class NoCompatibleTemplate(SwdError):
    exit_code = 3


class DegeneracyError(SwdError, ArithmeticError):
    exit_code = 4


class AllTied(DegeneracyError):
    """Every pair is tied in one of the variables, so tau-b is undefined."""


class DegenerateClass(DegeneracyError):
    pass


class UndefinedMetric(DegeneracyError):
    pass


class SingleClass(DegeneracyError):
    pass
