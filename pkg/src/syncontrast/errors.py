"""Exception types raised across the package."""


class SynContrastError(Exception):
    """Base class for all package-specific errors."""


class ZeroNormError(SynContrastError, ValueError):
    """A vector with norm at or below the zero threshold where a direction is required."""


class ShapeMismatchError(SynContrastError, ValueError):
    """Operands whose shapes or dimensions do not agree."""


class KTooLargeError(SynContrastError, ValueError):
    """A top-k request exceeding the number of available candidates."""


class BadRangeError(SynContrastError, ValueError):
    """An invalid interval or scale parameter for a random draw."""


class NotNormalizedError(SynContrastError, ValueError):
    """An embedding whose norm deviates from 1 beyond tolerance."""


class EmptyQueueError(SynContrastError, ValueError):
    """Read access to a negative queue with no entries."""


class EmptyInputError(SynContrastError, ValueError):
    """An aggregate requested over zero rows."""


class NoNegativesError(SynContrastError, ValueError):
    """Contrastive loss requested with no negatives while cold start is disabled."""


class BadConfigError(SynContrastError, ValueError):
    """Configuration values violating an invariant."""


class UnlabeledError(SynContrastError, ValueError):
    """Labels required but absent from a dataset."""


class BadLabelsError(SynContrastError, ValueError):
    """Label values outside the declared class range."""


class FileFormatError(SynContrastError, IOError):
    """Base class for malformed on-disk artifacts."""


class BadMagicError(FileFormatError):
    """File does not start with the expected magic bytes."""


class UnsupportedVersionError(FileFormatError):
    """File declares a format version this build cannot read."""


class TruncatedFileError(FileFormatError):
    """File ends before its declared payload."""


class ChecksumError(FileFormatError):
    """Stored checksum does not match the file contents."""
