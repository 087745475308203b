"""Exception hierarchy.

Two families exist so the CLI can map them to exit codes: :class:`DataError`
(bad input, malformed files; exit 3) and :class:`NumericError` (a numerical
procedure could not produce a result; exit 4).
"""


class RamanDenoiseError(Exception):
    """Base class for every error raised by this package."""


class DataError(RamanDenoiseError, ValueError):
    pass


class NumericError(RamanDenoiseError, ArithmeticError):
    pass


class EmptyInput(DataError):
    pass


class NonFiniteValue(DataError):
    def __init__(self, index, message=None):
        self.index = int(index)
        super().__init__(message or f"non-finite value at index {self.index}")


class LengthMismatch(DataError):
    pass


class ParseFailure(DataError):
    def __init__(self, line, message=""):
        self.line = line
        text = f"parse failure at line {line}"
        if message:
            text += f": {message}"
        super().__init__(text)


class DuplicateId(DataError):
    pass


class IoFailure(DataError, OSError):
    pass


class InvalidConfig(DataError):
    pass


class EmptyDataset(DataError):
    pass


class MissingCheckpoint(DataError):
    pass


class BadMagic(DataError):
    pass


class VersionMismatch(DataError):
    pass


class CountMismatch(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class MissingForwardCache(RamanDenoiseError, RuntimeError):
    pass


class LengthTooShort(DataError):
    pass


class TooManyLevels(DataError):
    pass


class BookkeepingMismatch(DataError):
    pass


class EmptyLevel(DataError):
    pass


class AllPointsExcluded(DataError):
    pass


class ZeroPowerSignal(NumericError):
    pass


class SingularSystem(NumericError):
    pass
