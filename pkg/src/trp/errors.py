"""Exception types raised by the allocator and its helpers."""


class TrpError(Exception):
    """Base class for every error raised by this package."""


class MissingFile(TrpError, FileNotFoundError):
    pass


class ParseError(TrpError, ValueError):
    def __init__(self, message: str, row: int | None = None, col: int | None = None):
        self.row = row
        self.col = col
        where = ""
        if row is not None:
            where = f" (row {row}" + (f", col {col})" if col is not None else ")")
        super().__init__(message + where)


class NonFiniteValue(TrpError, ValueError):
    pass


class LookbackExceedsHistory(TrpError, ValueError):
    pass


class EmptyActiveSet(TrpError):
    """No asset passes the activity filter; there is nothing to allocate."""


class FixedIndexNotActive(TrpError, ValueError):
    pass


class NoSectorEtfs(TrpError):
    """Sector anchoring requested but no active ticker starts with ``XL``."""


class UniverseTooLarge(TrpError, ValueError):
    pass


class InconsistentLabels(TrpError, ValueError):
    pass


class DegenerateTiers(TrpError):
    """Population correlation tiers are not strictly ordered."""
