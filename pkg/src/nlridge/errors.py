"""Exception types raised across the package."""


class NLRidgeError(Exception):
    """Base class for every error raised by nlridge."""


class NotPositiveDefinite(NLRidgeError):
    pass


class DimensionMismatch(NLRidgeError, ValueError):
    pass


class NegativeIntensity(NLRidgeError, ValueError):
    pass


class MissingNoisemap(NLRidgeError, ValueError):
    pass


class ImageTooSmall(NLRidgeError, ValueError):
    pass


class TooLarge(NLRidgeError, ValueError):
    pass


class OutOfCalibratedRange(NLRidgeError, ValueError):
    pass


class ConfigurationError(NLRidgeError, ValueError):
    pass


class UnsupportedFormat(NLRidgeError):
    pass


class CorruptHeader(NLRidgeError):
    pass


class IoFailure(NLRidgeError, OSError):
    pass


class ShapeMismatch(NLRidgeError, ValueError):
    pass
