"""Exception types shared across the package, mapped to CLI exit codes."""


class FockloopError(Exception):
    """Base class for package-specific failures."""


class ConfigError(FockloopError):
    """Invalid, contradictory, or unknown configuration input (exit code 2)."""


class NumericsError(FockloopError):
    """Violated numerical invariant, e.g. lost positivity or a zero-probability
    branch taken (exit code 3)."""


class TruncationWarning(UserWarning):
    """States carrying non-negligible probability near the Fock-space cutoff."""
