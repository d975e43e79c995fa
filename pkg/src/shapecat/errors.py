"""Exception hierarchy.

Everything raised on purpose derives from :class:`ShapecatError`.  Errors
caused by bad input data (as opposed to bad arguments) also derive from
:class:`DataError`; the CLI maps those to exit code 2.
"""


class ShapecatError(Exception):
    pass


class DataError(ShapecatError):
    pass


# dataset_io
class ImageNotFound(DataError, FileNotFoundError):
    pass


class UnsupportedFormat(DataError):
    pass


class CorruptImage(DataError):
    pass


class EmptyDataset(DataError):
    def __init__(self, message, skipped=()):
        super().__init__(message)
        self.skipped = list(skipped)


class AmbiguousLayout(DataError):
    pass


class UnknownSubcategory(ShapecatError, ValueError):
    pass


class ZeroDimension(ShapecatError, ValueError):
    pass


class DegenerateSpec(ShapecatError, ValueError):
    pass


# descriptors
class OutOfRange(ShapecatError, ValueError):
    pass


class EmptyVector(ShapecatError, ValueError):
    pass


class MixedNormalization(ShapecatError, ValueError):
    pass


class WrongDimensions(DataError, ValueError):
    pass


# metrics / learners
class LengthMismatch(ShapecatError, ValueError):
    pass


class EmptyInput(ShapecatError, ValueError):
    pass


class EmptyCounts(ShapecatError, ValueError):
    pass


class DimensionMismatch(ShapecatError, ValueError):
    pass


class KTooLarge(ShapecatError, ValueError):
    pass


class SingleClass(DataError, ValueError):
    pass


class TooFewSamples(DataError, ValueError):
    pass


class ZeroUnits(ShapecatError, ValueError):
    pass


class EmptyBatch(ShapecatError, ValueError):
    pass


class TooLarge(ShapecatError, ValueError):
    pass


class StageError(ShapecatError):
    """Wraps an upstream failure with the pipeline stage it occurred in."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
