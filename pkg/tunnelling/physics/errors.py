class TunnellingError(Exception):
    """Base class for every error raised by the simulator"""


class DomainError(TunnellingError, ValueError):
    """An operation was called outside the region where it is defined"""


class NodeError(TunnellingError):
    """Evaluation at a wavefunction node, where R is below the node threshold"""

    def __init__(self, message: str, x: float | None = None):
        super().__init__(message)
        self.x = x


class TailUnderflowError(TunnellingError):
    """|psi_a|^2 + |psi_m|^2 underflowed to zero deep in the evanescent tail"""


class DegenerateFitError(TunnellingError):
    """A least-squares speed fit had no usable signal"""


class ConvergenceError(TunnellingError):
    """A refinement sequence did not settle within tolerance"""


class NumericalConsistencyError(TunnellingError):
    """A computed quantity violated an identity it must satisfy exactly"""


class OutputError(TunnellingError, OSError):
    """A result file could not be written"""

    def __init__(self, path: str, reason: str):
        super().__init__(f"cannot write {path}: {reason}")
        self.path = path
