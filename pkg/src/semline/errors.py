"""Exception types raised across the package."""


class SemlineError(ValueError):
    """Base class for validation failures (CLI exit code 1)."""


class NoIntersection(SemlineError):
    pass


class TooManyLines(SemlineError):
    pass


class EmptyUnion(SemlineError):
    pass


class IndexOutOfRange(SemlineError, IndexError):
    pass


class NoCandidates(SemlineError):
    pass


class GridTooSmall(SemlineError):
    pass


class ParseError(SemlineError):
    pass


class DimensionMismatch(SemlineError):
    pass


class FrameMismatch(SemlineError):
    pass
