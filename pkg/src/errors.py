class VvTwinError(Exception):
    """Base class for every error raised by the toolkit."""

    exit_code: int = 1


class ConfigError(VvTwinError):
    """Invalid input: configuration, scenario schema, mesh file, bundle layout."""

    exit_code = 2


class MeshError(ConfigError):
    pass


class ScenarioError(ConfigError):
    pass


class BundleMismatchError(ConfigError):
    """An artifact was built for another mesh or tolerance set."""


class NumericalError(VvTwinError):
    """A numerical procedure failed (Krylov, factorization, non-finite state)."""

    exit_code = 3


class RomConvergenceError(NumericalError):
    def __init__(self, message: str, max_error: float):
        super().__init__(message)
        self.max_error = max_error


class ValidationFailure(VvTwinError):
    """FOM-vs-ROM deviations exceeded the acceptance threshold."""

    exit_code = 4
