"""Exception hierarchy. The CLI maps these onto exit codes."""


class MSDGRError(Exception):
    """Base class for all library errors."""


class ShapeError(MSDGRError, ValueError):
    """Array dimensions do not match what a layer or operation expects."""

    def __init__(self, message, layer=None):
        if layer is not None:
            message = f"layer {layer!r}: {message}"
        super().__init__(message)
        self.layer = layer


class OutOfBoundsError(MSDGRError, IndexError):
    pass


class MissingWeightsError(MSDGRError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "missing weights"


class InfeasibleError(MSDGRError, ValueError):
    pass


class ParameterError(MSDGRError, ValueError):
    pass


class UndefinedSimilarityError(MSDGRError, ValueError):
    pass


class EmptyMatchError(MSDGRError, ValueError):
    pass


class MetricError(MSDGRError, ValueError):
    pass


class ProtocolError(MSDGRError, ValueError):
    pass


class FormatError(MSDGRError, ValueError):
    """Malformed file contents (container, CSV, PGM, config)."""


class DataError(MSDGRError):
    """Dataset-level problem: unreadable inputs, impossible sampling."""
