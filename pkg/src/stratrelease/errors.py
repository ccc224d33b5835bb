"""Exception hierarchy.  The CLI maps these onto exit codes."""


class StratReleaseError(ValueError):
    """Base class for validation failures raised by this package."""


class EmptyReleaseError(StratReleaseError):
    """The released set carries no prior mass."""


class DeployedExcludedError(StratReleaseError):
    """The released set omits the deployed classifier (release would not be truthful)."""


class SupportTooLargeError(StratReleaseError):
    """An exhaustive routine was asked to enumerate more subsets than allowed."""


class DegenerateClassError(StratReleaseError):
    """A conditional error rate was requested for a class with zero mass."""


class NonUniformPriorError(StratReleaseError):
    """A routine that requires a uniform prior got something else."""


class ConfigError(StratReleaseError):
    """Inconsistent generator or solver configuration."""


class SchemaError(StratReleaseError):
    """Malformed instance document."""
