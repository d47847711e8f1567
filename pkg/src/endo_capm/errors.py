"""Exception hierarchy.

Input problems derive from ``MarketError`` (a ``ValueError``); failures of the
numerics on valid input derive from ``NumericalError``. The CLI maps the two
families to distinct exit codes.
"""


class MarketError(ValueError):
    """Invalid market description or malformed input."""


class NegativeWeight(MarketError):
    pass


class WeightsNotNormalized(MarketError):
    pass


class BetaConstraintViolated(MarketError):
    pass


class NonFiniteInput(MarketError):
    pass


class LengthMismatch(MarketError):
    pass


class InfeasibleBounds(MarketError):
    pass


class UndefinedForSingleAsset(MarketError):
    pass


class NumericalError(ArithmeticError):
    """Valid input on which a numerical step could not be carried out."""


class RankDeficiencyBeyondOne(NumericalError):
    pass


class SingularGram(NumericalError):
    pass


class ZeroBetaVector(NumericalError):
    pass


class PerturbationInfeasible(NumericalError):
    pass


class NoFeasibleStart(NumericalError):
    pass
