"""
Exception types raised by the GSSC library
"""


class GsscError(Exception):
    """Base class for every error the library raises on purpose"""


class GraphFormatError(GsscError):
    """A dataset file could not be parsed"""

    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}: {message} at line {line}")


class GraphInvariantError(GsscError):
    """A graph violates symmetry, self-loop, label or split invariants"""


class NoiseSpecError(GsscError):
    """A corruption request does not fit the operation it was passed to"""


class ShapeError(GsscError):
    """Tensor shapes do not line up"""


class NonFiniteError(GsscError):
    """NaN or infinity where only finite values are allowed"""


class GradCheckError(GsscError):
    """The function under gradient check is not deterministic"""


class DegenerateSubgraphError(GsscError):
    """The sparsified subgraph has no edges left to learn from"""


class TrainingError(GsscError):
    """Training had to stop; `dump` holds the offending state"""

    def __init__(self, message: str, dump: dict | None = None):
        self.dump = dump or {}
        super().__init__(message)


class CheckpointError(GsscError):
    """A checkpoint file is unreadable or has the wrong format tag"""
