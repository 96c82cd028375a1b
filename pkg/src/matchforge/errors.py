"""Exception hierarchy shared across matchforge."""


class MatchForgeError(Exception):
    """Base class for all errors raised by matchforge."""


# sample validation
class EmptyGroup(MatchForgeError, ValueError):
    pass


class NonFinite(MatchForgeError, ValueError):
    pass


class BadTreatment(MatchForgeError, ValueError):
    pass


class DimensionMismatch(MatchForgeError, ValueError):
    pass


# numerics
class RankDeficient(MatchForgeError, ArithmeticError):
    pass


class OneClass(MatchForgeError, ValueError):
    pass


class NotSymmetric(MatchForgeError, ValueError):
    pass


class CovarianceNotPSD(MatchForgeError, ValueError):
    pass


class TooFew(MatchForgeError, ValueError):
    pass


class NegativeWeight(MatchForgeError, ValueError):
    pass


# matching / estimation
class NoControls(MatchForgeError, ValueError):
    pass


class KTooLarge(MatchForgeError, ValueError):
    pass


class EmptyPairs(MatchForgeError, ValueError):
    pass


class UnmatchedTreated(MatchForgeError, ValueError):
    pass


class AllReplicationsFailed(MatchForgeError, RuntimeError):
    pass


class SweepRunError(MatchForgeError, RuntimeError):
    """A sweep run failed; the message names the scenario, run and method."""


# config / IO
class ConfigError(MatchForgeError, ValueError):
    """Problem with a run configuration; ``line`` is 1-based when known."""

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ParseError(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


class MissingRequired(ConfigError):
    pass


class UnknownScenario(ConfigError):
    pass


class SchemaError(MatchForgeError, ValueError):
    pass


class BadCell(MatchForgeError, ValueError):
    def __init__(self, row, column, value):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"non-numeric cell {value!r} at row {row}, column {column!r}")


class DataIOError(MatchForgeError, OSError):
    pass
