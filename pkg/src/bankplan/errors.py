"""Exception types shared across the package."""


class BankplanError(Exception):
    """Base class for all package-specific errors."""


class CouplingInfeasible(BankplanError):
    """The nested default coupling cannot match the requested marginals."""


class CalibrationInfeasible(BankplanError):
    """No risk-neutral default probability in (0, 1) exists for a loan."""


class DomainError(BankplanError):
    """An input lies outside the mathematical domain of a formula."""


class Infeasible(BankplanError):
    """No feasible point was found, even after the grid-seeded fallback."""


class BudgetExceeded(BankplanError):
    """A grid search would exceed its configured evaluation budget."""


class ConfigError(BankplanError):
    """A run configuration failed validation."""
