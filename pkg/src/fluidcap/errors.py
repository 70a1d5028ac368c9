"""Exception types shared across the package."""


class FluidcapError(Exception):
    """Base class for all package errors."""


class ContractViolation(FluidcapError):
    """An argument violates a documented precondition."""


class DomainError(FluidcapError):
    """Input lies outside the mathematical domain of the operation."""


class DegeneratePathError(DomainError):
    """Two-path machinery invoked with coincident departure angles."""


class ConfigError(FluidcapError):
    """Invalid scenario, sweep, or CLI configuration."""


class BudgetError(ConfigError):
    """A combinatorial search would exceed its size guard."""


class InfeasibleMappingError(FluidcapError):
    """Not enough free grid points left to place the remaining antennas."""


class NonconvergenceError(FluidcapError):
    """Iteration cap reached before the requested tolerance.

    The best iterate seen so far is attached as ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
