"""Exception types mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Invalid run configuration (exit code 2)."""


class DataError(ValueError):
    """Unreadable or inconsistent input data (exit code 3)."""


class DataCoverageError(DataError):
    """Query point outside the region covered by sampled data."""
