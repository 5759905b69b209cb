"""Exception hierarchy. Every library error derives from CutoffLabError."""


class CutoffLabError(Exception):
    pass


class NonPositiveChildrenCount(CutoffLabError):
    pass


class DegenerateTree(CutoffLabError):
    pass


class OracleTooLarge(CutoffLabError):
    pass


class InvalidPair(CutoffLabError):
    pass


class DimensionMismatch(CutoffLabError):
    pass


class EigensolveFailure(CutoffLabError):
    pass


class DecompositionMismatch(CutoffLabError):
    pass


class InvalidStart(CutoffLabError):
    pass


class ConstantTestFunction(CutoffLabError):
    pass


class NonConvergence(CutoffLabError):
    pass


class SingularSystem(CutoffLabError):
    pass


class NoBranching(CutoffLabError):
    pass


class PreconditionViolated(CutoffLabError):
    pass


class UsageError(CutoffLabError):
    pass
