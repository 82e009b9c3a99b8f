"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter or input violates its documented precondition."""


class ConfigError(ParameterError):
    """A run-configuration file is malformed or contains unknown keys."""


class NumericalError(RuntimeError):
    """A numerical procedure failed beyond its tolerance (e.g. singular solve)."""


class BaseUnstableError(RuntimeError):
    """The base configuration is unstable without any trigger.

    Raised by the metastable-failure estimator when the empty state (0, 0)
    itself is classified non-stationary, so no trigger is needed to fail.
    """
