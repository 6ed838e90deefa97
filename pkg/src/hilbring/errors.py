"""Error types raised across the package."""


class HilbError(Exception):
    """Base class. `code` is the CLI exit status for this failure."""

    code = 2


class SchemaError(HilbError):
    pass


class IoError(HilbError):
    pass


class DegeneratePairing(HilbError):
    pass


class NonAssociative(HilbError):
    pass


class GradingViolation(HilbError):
    pass


class UnknownName(HilbError):
    pass


class ArityMismatch(HilbError):
    pass


class OddClassRejected(HilbError):
    pass


class OddCohomologyUnsupported(HilbError):
    pass


class PreconditionFailed(HilbError):
    pass


class DegreeMismatch(HilbError):
    pass


class InvalidBetti(HilbError):
    pass


class SpanFailure(HilbError):
    code = 1


class GenerationFailure(HilbError):
    code = 1


class InterpolationInconsistent(HilbError):
    code = 1


class ResourceLimit(HilbError):
    code = 1
