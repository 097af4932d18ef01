class KacLabError(Exception):
    """Base class for every error raised by kac_lab."""

    exit_code = 1
    kind = "error"


class ConfigError(KacLabError, ValueError):
    exit_code = 2
    kind = "invalid-config"


class GeometryError(KacLabError, ValueError):
    exit_code = 3
    kind = "geometry"


class SolverConvergenceError(KacLabError, RuntimeError):
    exit_code = 4
    kind = "solver-non-convergence"


class NotLocallyIntegrableError(KacLabError, ValueError):
    """Raised when a potential's singularity is too strong for the heat kernel probe."""

    exit_code = 5
    kind = "not-locally-integrable"
