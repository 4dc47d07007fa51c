"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataFormatError -> 3,
everything else raised by the pipeline -> 4.
"""


class TnkernelError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(TnkernelError):
    """Invalid run configuration (bad key, malformed value, bad shard spec)."""


class DataFormatError(TnkernelError):
    """Malformed input file (IDX payload, kernel container, model JSON)."""


class CapacityError(TnkernelError):
    """A resource guard refused the operation (state width, tensor memory)."""


class StructuralError(TnkernelError):
    """Path, expression, or shape inconsistent with the network it targets."""


class RebindError(StructuralError):
    """Operand rebinding attempted against an incompatible network."""


class ShardMergeError(StructuralError):
    """Shard partials overlap or leave gaps in the pair enumeration."""


class SliceInfeasibleError(TnkernelError):
    """No slice set can bring the contraction under the memory cap."""


class ConvergenceError(TnkernelError):
    """Solver hit its iteration cap; carries the best iterate found."""

    def __init__(self, message, alphas=None, bias=None, kkt_residual=None):
        super().__init__(message)
        self.alphas = alphas
        self.bias = bias
        self.kkt_residual = kkt_residual
