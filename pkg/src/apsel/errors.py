"""Exception hierarchy with process exit codes for the CLI layer."""


class ApselError(Exception):
    """Base error; ``exit_code`` backs the CLI exit-code contract."""

    exit_code = 1


class ConfigError(ApselError, ValueError):
    """A parameter or configuration value is invalid."""

    exit_code = 2


class DataError(ApselError, ValueError):
    """A dataset is missing, malformed, or statistically unusable."""

    exit_code = 3


class SolverError(ApselError, RuntimeError):
    """A solver cannot produce a result for the given instance."""

    exit_code = 4
