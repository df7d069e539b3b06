# errors.py
#
# Exception hierarchy for the classification pipeline. Every error raised on purpose by
# the library derives from MobGcnError so the command line can map it to an exit code.

class MobGcnError(Exception):
    """Base class for all pipeline errors."""


class FormatError(MobGcnError):
    """A file header or sidecar could not be parsed."""


class DataError(MobGcnError):
    """Array contents violate a data invariant (NaN, size mismatch, negative labels)."""


class ConfigError(MobGcnError):
    """A configuration value is out of range or inconsistent."""


class ShapeError(MobGcnError):
    """Operand shapes are incompatible for a matrix primitive or model layer."""


class ContractError(MobGcnError):
    """A caller broke an API contract (e.g. differentiating a non-scalar)."""


class DegenerateGraphError(MobGcnError):
    """The superpixel graph cannot be built (fewer than two nodes)."""


class DivergenceError(MobGcnError):
    """Training produced a non-finite loss."""


class StageError(MobGcnError):
    """Wraps any failure inside a named pipeline stage."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")
