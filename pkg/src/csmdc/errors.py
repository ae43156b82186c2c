"""Exception taxonomy shared across the toolkit."""


class CsmdcError(Exception):
    """Base class for all toolkit errors."""


class InvalidConfigError(CsmdcError, ValueError):
    """Parameters violate an operation's contract (bad sizes, rates, ranges)."""


class DimensionMismatchError(CsmdcError, ValueError):
    """Array shapes are inconsistent with each other."""


class DegenerateMatrixError(CsmdcError, ValueError):
    """A matrix lacks the structure an operation requires (e.g. zero column)."""


class UnusedIndexError(CsmdcError, KeyError):
    """A side index does not appear in the index-assignment map."""


class InvalidPairError(CsmdcError, KeyError):
    """An (i, j) side-index pair addresses an unoccupied central cell."""


class SolverInputError(CsmdcError, ValueError):
    """Solver inputs contain NaN/Inf or inconsistent dimensions."""


class DescriptionParseError(CsmdcError, ValueError):
    """Base class for wire-format parse failures."""


class BadMagicError(DescriptionParseError):
    """Byte stream does not start with the description magic."""


class VersionMismatchError(DescriptionParseError):
    """Unknown wire-format version."""


class TruncatedPayloadError(DescriptionParseError):
    """Byte stream ends before the declared payload does."""


class MalformedHeaderError(DescriptionParseError):
    """Header fields are internally inconsistent (lengths, flags, ranges)."""
