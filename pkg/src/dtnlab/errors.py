"""Exception types shared across the package."""


class DtnLabError(Exception):
    """Base class for all package errors."""


class DomainError(DtnLabError, ValueError):
    """Invalid grid domain, labeling or partition."""


class Disconnected(DomainError):
    pass


class SigmaTouchesBoundary(DomainError):
    pass


class SignChangeWithoutSeparator(DomainError):
    pass


class FaceAlreadyLabeled(DomainError):
    pass


class UnlabeledBoundary(DomainError):
    pass


class EmptyInterface(DomainError):
    pass


class NumericError(DtnLabError, ArithmeticError):
    """A numerical precondition failed."""


class ASingular(NumericError):
    """A block that must be eliminated (or inverted) has a kernel."""


class Singular(NumericError):
    pass


class Indeterminate(NumericError):
    """A pivot or eigenvalue sits too close to the zero threshold to classify."""


class EigenFailure(NumericError):
    pass


class NotSimple(NumericError):
    pass


class ConfigError(DtnLabError, ValueError):
    pass
