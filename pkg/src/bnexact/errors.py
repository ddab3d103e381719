"""Exception hierarchy shared by every module."""


class BnExactError(Exception):
    """Base class for all errors raised by bnexact."""


class InputError(BnExactError, ValueError):
    """Bad user input (data, feature file, configuration)."""


class CompleteDataViolation(InputError):
    pass


class SchemaError(InputError):
    pass


class InvalidFamily(InputError):
    pass


class ConfigError(InputError):
    pass


class InvalidFeature(InputError):
    pass


class InfeasibleFeatureUnderBound(InputError):
    pass


class NumericalBreakdown(BnExactError, ArithmeticError):
    """The inclusion-exclusion sums lost too much precision to be trusted."""


class CapExceeded(BnExactError):
    """Problem size beyond what the requested routine is allowed to handle."""
