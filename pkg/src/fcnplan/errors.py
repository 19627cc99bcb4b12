"""Exception types shared across the toolkit."""


class FormatError(Exception):
    """A serialized file violates its documented layout (bad magic, version,
    truncation, or malformed field)."""


class ChecksumError(FormatError):
    """Payload CRC32 does not match the trailing checksum."""


class ShapeError(Exception):
    """Tensor dimensions are internally inconsistent or violate the
    strict-architecture contract."""


class SizeMismatch(Exception):
    """Input maps do not share a common grid size."""


class Unsatisfiable(Exception):
    """No valid planning problem exists within the configured attempt budget."""


class LengthMismatch(Exception):
    """Parallel input sequences have different lengths."""


class InsufficientSamples(Exception):
    """Too few samples for a statistically meaningful fit."""


class DegenerateFit(Exception):
    """Polynomial fit is rank deficient (fewer distinct abscissae than
    coefficients)."""
