"""Exception hierarchy.

Every error raised by the package derives from :class:`PolarFuseError` and
carries a short ``category`` string that the CLI prints and maps to an exit
code.
"""


class PolarFuseError(Exception):
    category = "error"
    exit_code = 1


class ConfigurationError(PolarFuseError, ValueError):
    category = "config"
    exit_code = 2


class InvalidOutputError(PolarFuseError, ValueError):
    category = "invalid-output"
    exit_code = 3


class InvalidWeightsError(ConfigurationError):
    category = "invalid-weights"


class DataError(PolarFuseError, ValueError):
    category = "data"
    exit_code = 4


class MissingPredictionError(DataError, KeyError):
    category = "missing-prediction"

    def __str__(self) -> str:  # KeyError would otherwise repr() the message
        return str(self.args[0]) if self.args else ""


class DegenerateDataError(DataError):
    category = "degenerate-data"


class SchemaError(PolarFuseError, ValueError):
    category = "schema"
    exit_code = 5


class StateError(PolarFuseError, RuntimeError):
    category = "state"
    exit_code = 6


class CompatibilityError(PolarFuseError, ValueError):
    category = "compatibility"
    exit_code = 7


class UndefinedCurveError(PolarFuseError, ValueError):
    category = "undefined-curve"
    exit_code = 8
