"""Exception types shared by all modules."""


class PPAError(Exception):
    """Base class for every error raised by the toolkit."""


class ParseError(PPAError):
    def __init__(self, source, line, expected, found=""):
        self.source = source
        self.line = line
        self.expected = expected
        self.found = found
        where = f"{source}:{line}" if line else str(source)
        msg = f"{where}: expected {expected}"
        if found:
            msg += f", found {found!r}"
        super().__init__(msg)


class MissingParameter(PPAError):
    pass


class InvalidModel(PPAError):
    """Structural problem with a pPA; subclasses name the violation."""


class DanglingSuccessor(InvalidModel):
    pass


class NoInitialState(InvalidModel):
    pass


class LabelOutsideAlphabet(InvalidModel):
    pass


class ActionAlphabetClash(PPAError):
    pass


class AlphabetNotContained(PPAError):
    pass


class InvalidDFA(PPAError):
    pass


class HorizonTooSmall(PPAError):
    pass


class NotMemoryless(PPAError):
    pass


class NotComplete(PPAError):
    pass


class InvalidStrategy(PPAError):
    pass


class NegativeReward(PPAError):
    pass


class SingularSystem(PPAError):
    pass


class RegionNotWellDefined(PPAError):
    pass


class RegionNotGraphPreserving(PPAError):
    pass


class AlphabetSideConditionViolated(PPAError):
    pass


class ComponentsNotDisjoint(PPAError):
    pass


class FairnessSideConditionViolated(PPAError):
    pass


class NotSafeQuery(PPAError):
    """A safety rule variant was given an objective that is not a safety objective."""
