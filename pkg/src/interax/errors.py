"""Exception types shared across the package."""


class InteraxError(Exception):
    """Base class for all package errors."""


class ValidationError(InteraxError):
    """An argument violates a documented precondition."""


class InvalidMaskError(InteraxError):
    """A mask does not match the player space it is evaluated under."""


class SpaceMismatchError(InteraxError):
    """Two objects built over different player spaces were combined."""


class EnumerationGuardError(InteraxError):
    """The player space is too large for an exact/enumerating code path."""


class TransportError(InteraxError):
    """A remote oracle could not be reached or dropped the connection.

    ``batch_index`` identifies the request batch that failed, when known.
    """

    def __init__(self, message, batch_index=None):
        super().__init__(message)
        self.batch_index = batch_index


class ProtocolError(InteraxError):
    """A remote oracle sent a malformed or inconsistent message."""


class IllPosedFitError(InteraxError):
    """The regression design is rank deficient.

    ``deficiency`` is the number of missing directions (basis size minus
    numerical rank of the design).
    """

    def __init__(self, message, deficiency):
        super().__init__(message)
        self.deficiency = deficiency


class UnsupportedConversionError(InteraxError):
    """A first-order conversion was requested for an unsupported kernel."""


class UndefinedMetricError(InteraxError):
    """A metric is undefined for the given inputs (e.g. zero variance)."""


class DegenerateNormalizationError(InteraxError):
    """Curve normalization is impossible because the anchors coincide.

    ``curves`` carries the raw (unnormalized) curve set so callers can still
    inspect it.
    """

    def __init__(self, message, curves=None):
        super().__init__(message)
        self.curves = curves
