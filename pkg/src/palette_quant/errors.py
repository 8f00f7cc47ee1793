class QuantError(Exception):
    """Base class for every failure the quantizer reports to its caller."""


class ImageReadError(QuantError):
    pass


class UnsupportedFormatError(ImageReadError):
    pass


class TruncatedImageError(ImageReadError):
    pass


class ImageWriteError(QuantError):
    pass


class EmptyInputError(QuantError):
    pass


class InvalidParameterError(QuantError):
    pass
