"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class RevkitError(Exception):
    """Base class for all toolkit errors."""


class TagError(RevkitError):
    """Base for annotation grammar violations; carries the offset into the tagged string."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class UnknownTag(TagError):
    pass


class UnbalancedTag(TagError):
    pass


class NestedTag(TagError):
    pass


class OverlappingSpans(RevkitError):
    pass


class LengthMismatch(RevkitError):
    pass


class OverlappingEdits(RevkitError):
    pass


class RangeOutOfBounds(RevkitError):
    pass


class EmptyBefore(RevkitError):
    """Length ratio is undefined when the before text is empty."""


class MalformedRecord(RevkitError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ParseError(RevkitError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class BackendUnavailable(RevkitError):
    pass


class ProtocolError(RevkitError):
    pass


class EmptyCorpus(RevkitError):
    pass


class EmptyReference(RevkitError):
    pass


class ShapeMismatch(RevkitError):
    pass
