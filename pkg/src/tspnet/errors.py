"""Exception hierarchy shared by every module."""


class TSPError(Exception):
    """Base class for all library errors."""


class ComplexError(TSPError, ValueError):
    """Invalid simplicial complex input."""


class DuplicateSimplex(ComplexError):
    pass


class DuplicateVertex(ComplexError):
    pass


class EmptyComplex(ComplexError):
    pass


class InvalidSimplex(ComplexError):
    """Negative vertex id, or cardinality that disagrees with the declared order."""


class OrderOutOfRange(TSPError, IndexError):
    pass


class DimensionMismatch(TSPError, ValueError):
    pass


class ConvergenceFailure(TSPError, RuntimeError):
    pass


class EmptyMask(TSPError, ValueError):
    pass


class LabelOutOfRange(TSPError, ValueError):
    pass


class StaleTape(TSPError, RuntimeError):
    """Backward called on a tape that no longer matches the model parameters."""


class RateOutOfRange(TSPError, ValueError):
    pass


class ParseError(TSPError, ValueError):
    """Malformed input file; the message carries the offending field or line."""


class SchemaVersionMismatch(ParseError):
    pass


class TrainingError(TSPError, RuntimeError):
    """Training failed; the message names the simplicial order involved."""
