"""Exception hierarchy shared by all modules."""


class PPPRError(Exception):
    """Base class for every error raised by this package."""


# geometry
class DegenerateGradientError(PPPRError):
    pass


class ProjectionError(PPPRError):
    """Projection left the tube neighbourhood or did not converge."""


class PreconditionError(PPPRError):
    pass


# mesh
class MeshError(PPPRError):
    pass


class NonManifoldEdgeError(MeshError):
    pass


class OrientationError(MeshError):
    pass


class DegenerateTriangleError(MeshError):
    pass


class RayMissError(MeshError):
    pass


class ClosureOverflowError(MeshError):
    pass


class MeshParseError(MeshError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownFormatError(MeshError):
    pass


# fem
class FieldMismatchError(PPPRError):
    """A nodal or face field does not belong to the mesh it is used with."""


class SolverConvergenceError(PPPRError):
    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


# recovery
class RecoveryError(PPPRError):
    """Failure while recovering the gradient at one vertex."""

    def __init__(self, message, vertex=None):
        self.vertex = vertex
        if vertex is not None:
            message = f"vertex {vertex}: {message}"
        super().__init__(message)


class DegenerateNormalError(RecoveryError):
    pass


class PatchGrowthError(RecoveryError):
    pass


class RankDeficiencyError(RecoveryError):
    pass


# harness
class ConfigError(PPPRError):
    pass


class StageError(PPPRError):
    """An error raised inside one level or iteration of an experiment."""

    def __init__(self, message, stage=None, cause=None):
        self.stage = stage
        self.cause = cause
        super().__init__(message)
