"""
Error categories of the harness. Each category maps to the exit status the
command line interface returns when a stage fails with it.
"""

from .yaml_format import StatusCode


class HarnessError(Exception):
    status_code: int = StatusCode.UNKNOWN_ERROR


class ConfigurationError(HarnessError, ValueError):
    """Invalid run configuration, detected before any work is done"""

    status_code = StatusCode.CONFIG_ERROR


class DataError(HarnessError, ValueError):
    """Malformed input files or stale/missing upstream artifacts"""

    status_code = StatusCode.DATA_ERROR


class ParseError(DataError):
    """Model output that does not follow the requested format (retryable)"""


class TransportError(HarnessError, RuntimeError):
    """Backend could not be reached or returned an unusable payload"""

    status_code = StatusCode.TRANSPORT_ERROR


class RejectedPersonaError(ParseError):
    """Generated persona that parsed but failed the catalog validation"""

    def __init__(self, message: str, violations=()):
        super().__init__(message)
        self.violations = list(violations)
