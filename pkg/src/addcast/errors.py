"""Exception hierarchy. Every domain failure raises an AddcastError subclass."""


class AddcastError(Exception):
    """Base class for all addcast errors."""


class ParseError(AddcastError):
    pass


class DuplicateTimestamp(AddcastError):
    pass


class EmptySeries(AddcastError):
    pass


class DomainError(AddcastError):
    pass


class LeadingMissing(AddcastError):
    pass


class CutoffOutOfRange(AddcastError):
    pass


class MissingRegressorValue(AddcastError):
    pass


class NonFiniteObjective(AddcastError):
    pass


class NonFiniteGradient(AddcastError):
    pass


class ConvergenceFailure(AddcastError):
    pass


class UnderdeterminedModel(AddcastError):
    pass


class TooFewResiduals(AddcastError):
    pass


class LengthMismatch(AddcastError):
    pass


class EmptyInput(AddcastError):
    pass


class InvertedBounds(AddcastError):
    pass


class SpanTooShort(AddcastError):
    pass


class TooShort(AddcastError):
    pass


class SeriesShorterThanPeriod(AddcastError):
    pass


class InsufficientHistory(AddcastError):
    pass


class SingularSystem(AddcastError):
    pass


class UnsupportedVersion(AddcastError):
    pass


class SchemaError(AddcastError):
    pass
