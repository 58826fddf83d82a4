"""Exception hierarchy. Each maps to one CLI exit code."""


class PricingError(Exception):
    exit_code = 1


class ConfigurationError(PricingError, ValueError):
    exit_code = 2


class DomainError(ConfigurationError):
    """Input outside the domain of a transformation or formula."""


class SolverError(PricingError, RuntimeError):
    exit_code = 3


class AdaptivityError(SolverError):
    """Step size fell below the configured floor."""
