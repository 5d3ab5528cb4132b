"""Exception hierarchy shared by all subpackages."""


class ThinLayerError(Exception):
    """Base class for every error raised by the package."""


class GeometryError(ThinLayerError):
    pass


class MeshError(ThinLayerError):
    pass


class ProfileError(ThinLayerError):
    pass


class AssemblyError(ThinLayerError):
    pass


class SolverError(ThinLayerError):
    """Eigen or linear solve failed.

    ``residuals`` carries the best residuals seen when the failure is a
    non-convergence.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class OracleError(ThinLayerError):
    pass


class AsymptoticsError(ThinLayerError):
    pass


class ConfigError(ThinLayerError):
    pass
