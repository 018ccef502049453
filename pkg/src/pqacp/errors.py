"""Exception hierarchy shared by all modules."""


class PqacpError(Exception):
    """Base class for library errors."""


class ParseError(PqacpError):
    def __init__(self, msg, line=None, col=None):
        self.line, self.col = line, col
        where = f" at line {line}, column {col}" if line is not None else ""
        super().__init__(f"{msg}{where}")


# public alias; shadows the builtin only inside this package
SyntaxError = ParseError


class UnboundVariable(PqacpError):
    pass


class UnguardedRecursion(PqacpError):
    pass


class BadProbability(PqacpError):
    pass


class UnknownRegister(PqacpError):
    pass


class NonUnitary(PqacpError):
    pass


class NonProjector(PqacpError):
    pass


class ZeroProbabilityBranch(PqacpError):
    pass


class RegisterNameClash(PqacpError):
    pass


class RegisterMismatch(PqacpError):
    pass


class InvalidState(PqacpError):
    pass


class RegistryError(PqacpError):
    """Malformed registry file or unknown action."""


class NotStatic(PqacpError):
    pass


class NotDynamic(PqacpError):
    pass


class IncompatibleRegistries(PqacpError):
    pass


class DivergenceWithoutExit(PqacpError):
    pass


class NotClosed(PqacpError):
    pass


class RecursionPresent(PqacpError):
    pass


class StuckTerm(PqacpError):
    def __init__(self, msg, redex=None):
        self.redex = redex
        super().__init__(msg)


class OpenProblem(StuckTerm):
    """Abstraction over a term mixing + and ⊞: no axiomatization exists."""


class NoMatch(PqacpError):
    pass


class SideConditionFailed(PqacpError):
    pass


class OutOfRange(PqacpError):
    pass
