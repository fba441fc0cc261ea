"""Exception types shared across the engine.

Every error raised by the library derives from :class:`ZeusError`, so the
CLI can map any domain failure onto a machine-readable stderr line without
enumerating modules.
"""


class ZeusError(Exception):
    """Base class for all engine errors."""


class InvalidInput(ZeusError):
    """A precondition on an operation's inputs was violated."""


class InvalidGrid(ZeusError):
    """A tile grid violates its invariants (origins, ids, bounds)."""


class InvalidSpec(ZeusError):
    """A phantom spec is unusable (e.g. near-collinear prototypes)."""


class InvalidPromptSpec(ZeusError):
    """A prompt spec violates its schema (placeholders, dense ids)."""


class DegeneratePrototype(ZeusError):
    """Prompt embeddings cancelled out; the ensemble has no direction."""


class DegenerateVector(ZeusError):
    """A vector with (near-)zero norm reached a cosine computation."""


class DimMismatch(ZeusError):
    """Embedding and prototype dimensions disagree."""


class FormatError(ZeusError):
    """A file does not carry the expected magic/version/schema."""


class TruncatedError(ZeusError):
    """A binary file ended before its declared payload."""


class CorruptError(ZeusError):
    """A well-framed file carries invalid content (ids, floats, trailing bytes)."""


class IoError(ZeusError):
    """An underlying OS-level read/write failed."""
