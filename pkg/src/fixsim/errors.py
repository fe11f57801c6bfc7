"""Exception hierarchy shared by all fixsim modules."""


class FixsimError(Exception):
    """Base class for all package errors."""

    exit_code = 4


class DomainError(FixsimError, ValueError):
    """Input lies outside the region where a result is defined."""

    exit_code = 3


class InvalidPopulation(DomainError):
    pass


class DominanceViolated(DomainError):
    """The game does not make strategy A strictly dominant (or w == 0)."""

    def __init__(self, message, failed=None):
        super().__init__(message)
        self.failed = failed


class BelowN0(DomainError):
    def __init__(self, N, N0):
        super().__init__(f"population size N={N} is below N0={N0}")
        self.N = N
        self.N0 = N0


class DomainExit(DomainError):
    """A finite-difference perturbation leaves the admissible parameter set."""


class Subcritical(DomainError):
    pass


class NotPD(DomainError):
    pass


class DegenerateInput(DomainError):
    pass


class NumericalError(FixsimError):
    exit_code = 4


class SingularSystem(NumericalError):
    pass


class CapExceeded(DomainError):
    pass


class ConfigError(FixsimError):
    exit_code = 2
