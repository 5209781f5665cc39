"""Exception types shared across the package."""


class RobustRateError(Exception):
    """Base class for package errors."""


class CurveDomainError(RobustRateError, ValueError):
    """Evaluation time outside the curve's domain [0, T]."""


class InvalidModelError(RobustRateError, ValueError):
    """Model violates construction invariants.

    Carries the list of Violation records, one per broken invariant.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"invalid market model: {lines}")


class GridMismatchError(RobustRateError, ValueError):
    """Curves that must share a time grid were solved on different grids."""


class SingularCoefficientError(RobustRateError, ArithmeticError):
    """Volatility matrix too close to singular at some time."""


class DegenerateParameterError(RobustRateError, ValueError):
    """Parameter value makes a closed-form expression degenerate."""


class BudgetExceededError(RobustRateError, RuntimeError):
    """Requested simulation exceeds the configured paths*steps budget."""


class ConfigError(RobustRateError, ValueError):
    """Malformed run-configuration file."""
