"""Exception hierarchy shared by every layer of the engine."""


class TBMError(Exception):
    """Base class for all engine errors."""


# temporal network
class InvalidGrain(TBMError, ValueError):
    pass


class NoOverlay(TBMError, ValueError):
    pass


class UnknownOverlay(TBMError, KeyError):
    pass


class UnknownPoint(TBMError, KeyError):
    pass


class UnknownInterval(TBMError, KeyError):
    pass


class UnknownConstraint(TBMError, KeyError):
    pass


class ProtectedConstraint(TBMError):
    pass


class NotInOverlay(TBMError):
    pass


class Inconsistent(TBMError):
    """A constraint would empty some derived distance range."""


# belief store
class NotGround(TBMError, ValueError):
    pass


class TimeNotInOverlay(TBMError):
    pass


class DuplicateAssessor(TBMError):
    pass


class NoAssessor(TBMError, LookupError):
    pass


class UnknownMonitor(TBMError, KeyError):
    pass


class UnknownBelief(TBMError, KeyError):
    pass


class CyclicDependency(TBMError):
    pass


class NestedTransaction(TBMError):
    pass


# rule engine
class VariableRestriction(TBMError, ValueError):
    def __init__(self, variable, where="precondition"):
        super().__init__(f"variable {variable} in {where} does not occur in the trigger")
        self.variable = variable


class InvalidDuration(TBMError, ValueError):
    pass


# calculus
class TotalConflict(TBMError, ArithmeticError):
    """Dempster combination of completely contradictory evidence."""


class NegativeElapsed(TBMError, ValueError):
    pass


class InvalidStrength(TBMError, ValueError):
    pass


# scenario files
class ScenarioError(TBMError):
    def __init__(self, message, line=None, col=None):
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.line = line
        self.col = col


class ParseError(ScenarioError):
    pass


class DuplicateName(ScenarioError):
    pass


class UndefinedName(ScenarioError):
    pass
