"""Exception hierarchy.

Every error raised by the library derives from :class:`DepvecError`.  The CLI
maps :class:`UsageError` to exit code 1 and :class:`DataError` to exit code 2;
anything else escaping a command is treated as an internal failure (code 3).
"""


class DepvecError(Exception):
    pass


class UsageError(DepvecError):
    """Invalid parameters supplied by the caller."""


class DataError(DepvecError):
    """Input data is malformed or cannot support the requested operation."""


# reqparse
class EmptyName(DataError):
    pass


class InvalidName(DataError):
    pass


# corpus
class MissingRoot(DataError):
    pass


class MalformedLayout(DataError):
    pass


class MalformedRecord(DataError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class DuplicateSnapshot(DataError):
    pass


class EmptyCorpus(DataError):
    pass


class EmptyScope(DataError):
    pass


# embed
class RankTooLarge(UsageError):
    pass


class EmptyMatrix(DataError):
    pass


class UnknownLibraries(DataError):
    def __init__(self, names):
        self.names = sorted(names)
        shown = ", ".join(self.names[:20])
        more = f" (+{len(self.names) - 20} more)" if len(self.names) > 20 else ""
        super().__init__(f"no known libraries among: {shown}{more}")


class ZeroVector(DataError):
    pass


class VersionMismatch(DataError):
    pass


class MalformedModel(DataError):
    pass


# cluster
class TooFewPoints(UsageError):
    pass


class InvalidRefs(UsageError):
    pass


class TooFewItems(UsageError):
    pass


# recommend
class EmptySlice(DataError):
    pass


class NoCandidates(DataError):
    pass


class BothEmpty(DataError):
    pass


# bench
class EmptyTargets(DataError):
    pass


class NoConsecutivePairs(DataError):
    pass
