"""Exception hierarchy.

Every error raised on bad input derives from :class:`SBLSError`, so callers
(the CLI in particular) can separate validation failures from bugs.
"""

from __future__ import annotations


class SBLSError(ValueError):
    """Base class for all structured input/evaluation errors.

    ``location`` is a free-form ``path:line`` string when the error can be
    traced to a place in an input file.
    """

    def __init__(self, message: str, location: str | None = None):
        self.message = message
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


# -- data model --------------------------------------------------------------

class ParseError(SBLSError):
    pass


class DuplicateAttribute(SBLSError):
    pass


class DuplicateClass(SBLSError):
    pass


class DegenerateAttribute(SBLSError):
    pass


class DuplicateSegment(SBLSError):
    pass


class WidthMismatch(SBLSError):
    pass


class UnknownClass(SBLSError):
    pass


class UnknownAttribute(SBLSError):
    pass


class NonFiniteScore(SBLSError):
    pass


class NoJoinedRows(SBLSError):
    pass


class ConfigError(SBLSError):
    pass


class WeightSumViolation(ConfigError):
    pass


# -- metrics -----------------------------------------------------------------

class AllOneClass(SBLSError):
    pass


class NoRows(SBLSError):
    pass


class EmptyAttributeSet(SBLSError):
    pass


class EmptyMatrix(SBLSError):
    pass


class UnknownField(SBLSError):
    pass


class NoScoreableAttribute(SBLSError):
    pass


class NoValidSubgroup(SBLSError):
    pass


# -- reports / synthesis -----------------------------------------------------

class SchemaVersionError(SBLSError):
    pass


class SynthSpecError(SBLSError):
    pass
