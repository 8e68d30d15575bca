class LabError(Exception):
    """Base error carrying a human readable detail and a process exit code."""

    exit_code = 3

    def __init__(self, detail: str, exit_code: int | None = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class ConfigError(LabError):
    exit_code = 2


class ResourceError(LabError):
    exit_code = 2


class DomainError(LabError):
    """Input outside the region where the requested quantity is defined."""


class RangeError(LabError):
    """Flowed coordinates left the representable range."""


class NumericError(LabError):
    """Root finding or quadrature did not converge."""
