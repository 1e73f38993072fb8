class RamanCnnError(Exception):
    """Base class for every error raised by tiny_raman_cnn."""


class DimensionError(RamanCnnError, ValueError):
    """Array shapes or counts do not agree."""


class DataError(RamanCnnError, ValueError):
    """Malformed spectra, labels or files."""


class CheckpointError(DataError):
    """A checkpoint file is corrupt or has an unsupported format version."""


class NumericError(RamanCnnError, ArithmeticError):
    """Training produced a non-finite value."""
