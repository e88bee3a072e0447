"""Exception types shared across the package."""


class WettingLabError(Exception):
    pass


class CapacityError(WettingLabError):
    """A region or edge set is too large for exhaustive treatment."""


class ConfigurationError(WettingLabError):
    """A spin/edge configuration or boundary condition is inconsistent."""


class ConditioningError(WettingLabError):
    """A conditional distribution has empty support (e.g. a cluster touching
    both +1 and -1 boundary spins)."""


class ScheduleError(WettingLabError):
    """Invalid Monte Carlo schedule (sweeps, burn-in, thinning)."""
