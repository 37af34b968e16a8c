"""Exception hierarchy.

Every error carries a short machine-readable ``category`` string which the
command line front end prints alongside the message.
"""


class TrgcError(Exception):
    category = "error"


class ModelError(TrgcError, ValueError):
    category = "invalid-model"


class UnstableModelError(TrgcError):
    category = "unstable-model"


class SingularMatrixError(TrgcError):
    category = "singular-matrix"

    def __init__(self, message, condition=None):
        if condition is not None:
            message = f"{message} (condition number {condition:.3g})"
        super().__init__(message)
        self.condition = condition


class InsufficientDataError(TrgcError, ValueError):
    category = "insufficient-data"


class RankDeficientError(TrgcError):
    category = "rank-deficient"


class ConsistencyError(TrgcError):
    """A result violated a property that holds mathematically."""

    category = "internal-consistency"


class MissingInputError(TrgcError, ValueError):
    category = "missing-input"


class SchemaError(TrgcError, ValueError):
    category = "schema"


class ConfigError(TrgcError, ValueError):
    category = "config"


class GenerationError(TrgcError):
    category = "generation-failed"
