"""Exception types shared across the toolkit."""


class KDetectorError(Exception):
    """Base class for all toolkit errors."""


class MissingSection(KDetectorError):
    """A required dump section (e.g. [CRASH_STACK]) is absent."""


class MalformedHeader(KDetectorError):
    """The dump has no [HEADER] block or lacks a required header field."""


class EmptyStack(KDetectorError):
    """A crash stack yielded no usable frames."""


class ManifestSyntaxError(KDetectorError):
    """A SET_COMPONENT directive could not be parsed."""

    def __init__(self, message: str, path: str = "", line: int = 0):
        super().__init__(f"{path}:{line}: {message}" if path else message)
        self.path = path
        self.line = line


class EmptyCorpus(KDetectorError):
    """An operation that needs at least one dump received none."""


class ComponentMismatch(KDetectorError):
    """Two occurrences of different components were compared."""


class DegenerateSet(KDetectorError):
    """A labeled set is missing one of the two classes."""


class DuplicateDumpId(KDetectorError):
    """A dump with this id is already in the store."""


class StoreWriteError(KDetectorError):
    """The failure store could not be written."""
