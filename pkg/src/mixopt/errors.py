"""Exception types raised across the package.

Every error derives from :class:`MixoptError` (itself a ``ValueError``) so
callers can catch the whole family at once. The CLI maps families onto exit
codes through the ``exit_code`` class attribute.
"""


class MixoptError(ValueError):
    exit_code = 2


# validation / input errors
class DimensionMismatch(MixoptError):
    pass


class AsymmetryTooLarge(MixoptError):
    pass


class NonFiniteEntry(MixoptError):
    pass


class BoundViolation(MixoptError):
    pass


class InvalidTaskId(MixoptError):
    pass


class MalformedRecord(MixoptError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateKey(MalformedRecord):
    pass


class DistributionNotNormalized(MalformedRecord):
    pass


class LengthMismatch(MixoptError):
    pass


class NotPsd(MixoptError):
    pass


class EmptySupport(MixoptError):
    pass


class BudgetOutOfRange(MixoptError):
    pass


class DegenerateDenominator(MixoptError):
    pass


class NonDisjointSets(MixoptError):
    pass


class BudgetExceedsCapacity(MixoptError):
    pass


class InvalidMixture(MixoptError):
    pass


class CountBudgetMismatch(MixoptError):
    pass


class CountExceedsCapacity(MixoptError):
    pass


# incomplete data
class MissingCounterpart(MixoptError):
    exit_code = 3


class EmptyEvaluationSet(MixoptError):
    exit_code = 3


class IncompletePair(MixoptError):
    exit_code = 3

    def __init__(self, pairs):
        self.pairs = list(pairs)
        listing = ", ".join(f"({a}, {b})" for a, b in self.pairs)
        super().__init__(f"{len(self.pairs)} task pair(s) cannot be computed: {listing}")


# solver failures
class SingularPairwise(MixoptError):
    exit_code = 4


class SolverDiverged(MixoptError):
    exit_code = 4


class CoverageWarning(UserWarning):
    """Emitted when two models share only part of an evaluation set."""
