"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid scenario parameter or malformed config file."""


class OutOfRegion(ValueError):
    """A user position lies outside the service region."""


class EmptyActivation(ValueError):
    """An operation that needs at least one active position got none."""


class ZeroGain(ValueError):
    """A user has exactly zero effective channel gain."""


class NonPositiveBeta(ValueError):
    """The Dinkelbach parameter must be strictly positive."""


class Infeasible(ValueError):
    """The QoS targets cannot all be met within the power budget."""


class SearchSpaceTooLarge(ValueError):
    """Exhaustive subset enumeration would exceed the size guard."""


class InitializationInfeasible(RuntimeError):
    """No single-position activation satisfies the QoS targets."""


class ConvergenceFailure(RuntimeError):
    """An iterative routine exceeded its hard iteration cap."""
