"""Exception hierarchy."""


class TrilemmaError(Exception):
    """Base class for all library errors."""


class InvalidInput(TrilemmaError, ValueError):
    """Malformed arguments: wrong shapes, non-finite entries, bad parameters."""


class NotPositiveSemidefinite(InvalidInput):
    pass


class NotCompletelyPositive(InvalidInput):
    pass


class MalformedInstrument(InvalidInput):
    pass


class MalformedProcess(InvalidInput):
    pass


class ThirdLawObstruction(InvalidInput):
    """A requested construction needs a strictly positive ingredient that is not."""


class AmbiguousClassification(TrilemmaError):
    """Independent classification tests disagree; no tag is guessed."""


class InternalInconsistency(TrilemmaError, RuntimeError):
    """Two computation routes for the same quantity disagree beyond tolerance."""
