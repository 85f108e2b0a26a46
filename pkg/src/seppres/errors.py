"""Exception hierarchy.

``HypothesisFailure`` subclasses mean a precondition of a structural check
could not be established (the CLI maps them to exit code 3). ``ViolationWitnessed``
subclasses carry a concrete counterexample (exit code 2).
"""


class SepPresError(Exception):
    pass


class ShapeError(SepPresError, ValueError):
    pass


class HypothesisFailure(SepPresError):
    pass


class InvertibilityUnknown(HypothesisFailure):
    def __init__(self, cond, bound):
        super().__init__(
            f"condition number {cond:.3g} exceeds bound {bound:.3g}; "
            "invertibility hypothesis cannot be relied on"
        )
        self.cond = cond
        self.bound = bound


class NotCompletelyPositive(HypothesisFailure):
    def __init__(self, cp_defect, kraus=None):
        super().__init__(f"Choi matrix has negative eigenvalue {cp_defect:.3g}")
        self.cp_defect = cp_defect
        self.kraus = kraus


class AmbiguousSubsystem(HypothesisFailure):
    pass


class ViolationWitnessed(SepPresError):
    def __init__(self, message, witness=None, **details):
        super().__init__(message)
        self.witness = witness
        self.details = details


class MultipleKrausDirections(ViolationWitnessed):
    pass


class NotIsometry(ViolationWitnessed):
    pass


class NotSeparabilityPreserving(ViolationWitnessed):
    pass
