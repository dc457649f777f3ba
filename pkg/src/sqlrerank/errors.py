"""Exception types shared across the package."""


class SqlRerankError(Exception):
    """Base class for all errors raised by this package."""


class FileUnreadable(SqlRerankError):
    """A database or input file could not be opened or read."""


class MalformedDatabase(SqlRerankError):
    """A database file violates structural assumptions (dangling FKs, bad pragma output)."""


class CyclicForeignKeys(SqlRerankError):
    """The foreign-key graph over tables contains a cycle (self references excluded)."""


class TargetIsForeignKey(SqlRerankError):
    """A column selected for value constraining is a foreign-key endpoint."""


class UnknownColumn(SqlRerankError):
    """A referenced table or column does not exist in the schema."""


class SqlParseError(SqlRerankError):
    """A SQL string could not be tokenized or analyzed."""


class ParseFailure(SqlRerankError):
    """A model reply could not be parsed into an execution result."""


class CacheIo(SqlRerankError):
    """The prediction cache file could not be read or written."""


class ManifestError(SqlRerankError):
    """A corpus manifest is missing, malformed, or internally inconsistent."""
