"""Exception hierarchy for cutoff_lab."""


class CutoffLabError(Exception):
    """Base class for all library errors."""


class ConfigError(CutoffLabError, ValueError):
    """A walk configuration failed validation.

    ``violations`` holds ``(code, message)`` pairs for every failed check,
    not only the one that determined the exception type.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(f"{code}: {msg}" for code, msg in self.violations))


class EvenModulus(ConfigError):
    pass


class BadProbabilities(ConfigError):
    pass


class ReducibleStepSet(ConfigError):
    pass


class MultiplierNotInvertible(ConfigError):
    pass


class DegenerateVariance(CutoffLabError, ArithmeticError):
    """sigma^2 of the inter-jump displacement is zero, so T_n is undefined."""


class NoJumps(CutoffLabError, ValueError):
    """The jump probability is zero; the subsampled chain does not exist."""


class TooLarge(CutoffLabError, ValueError):
    pass


class InfeasibleExact(CutoffLabError, RuntimeError):
    pass


class NearSingular(CutoffLabError, ArithmeticError):
    pass


class NonNegligibleImaginary(CutoffLabError, ArithmeticError):
    pass


class WindowTooWide(CutoffLabError, ValueError):
    pass


class VacuousBound(CutoffLabError, ValueError):
    pass


class SandwichViolation(CutoffLabError, AssertionError):
    pass


class MonotonicityViolation(CutoffLabError, AssertionError):
    pass
