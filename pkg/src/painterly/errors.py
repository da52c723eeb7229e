"""Exception types raised across the painterly engine."""


class PainterlyError(Exception):
    """Base class for all engine errors."""


class MissingFile(PainterlyError, FileNotFoundError):
    """A required input file does not exist."""


class BadMagic(PainterlyError):
    """A recording file does not start with the PDR1 magic."""


class TruncatedFile(PainterlyError):
    """A recording declares more frames than its payload holds."""


class BadHeader(PainterlyError):
    """A PGM fixture has a malformed header or raster."""


class ValueOutOfRange(PainterlyError):
    """A depth sample or maxval exceeds the 16-bit millimeter range."""


class EmptyPalette(PainterlyError):
    """Cannot sample an object kind from an empty palette."""


class SchemaError(PainterlyError):
    """A scene descriptor is missing required keys or carries unknown ones."""


class ValidationError(PainterlyError):
    """A scene descriptor parses but violates a scene invariant."""


class MissingAsset(PainterlyError, FileNotFoundError):
    """A texture or sprite referenced by a scene descriptor does not exist."""


class BadConfig(PainterlyError):
    """A session config file or flag set is invalid."""


class MalformedControl(PainterlyError):
    """A control message is not valid JSON or carries ill-typed fields."""
