"""Exception and warning classes shared by all modules."""


class MixBesovError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(MixBesovError, ValueError):
    """Invalid argument or precondition violation."""


class NonPowerOfTwo(ValidationError):
    pass


class NonPositiveWindow(ValidationError):
    pass


class EvaluatorReturnedNonFinite(ValidationError):
    pass


class GridMismatch(ValidationError):
    pass


class ExponentOutOfRange(ValidationError):
    pass


class DomainExceedsWindow(ValidationError):
    pass


class LagExceedsWindow(ValidationError):
    pass


class ResolutionTooCoarse(ValidationError):
    pass


class CovarianceNotPSD(ValidationError):
    pass


class GridTooLargeForDense(ValidationError):
    pass


class ModeCountExceedsGrid(ValidationError):
    pass


class ExponentOrderingViolated(ValidationError):
    pass


class InsufficientLagLevels(ValidationError):
    pass


class FieldFormatError(MixBesovError):
    """Malformed field file."""


class BadMagic(FieldFormatError):
    pass


class UnsupportedVersion(FieldFormatError):
    pass


class TruncatedPayload(FieldFormatError):
    pass


class FieldIOError(MixBesovError, OSError):
    pass


class SupportMarginViolated(UserWarning):
    """Field does not vanish near the x1 window edge; periodic wrap may pollute results."""


class TruncatedBlock(UserWarning):
    """A dyadic annulus extends beyond the Nyquist frequency of the grid."""
