"""Adapter failure taxonomy."""


class AdapterError(Exception):
    """Base class for all adapter domain errors."""


class FormatError(AdapterError):
    """An input file is not what its schema or magic claims."""


class InvalidPromptSpec(AdapterError):
    """A prompt spec is structurally valid JSON but semantically broken."""


class MissingTile(AdapterError):
    """One or more manifest tiles have no retrievable pixels."""

    def __init__(self, tile_ids, message: str = ""):
        self.tile_ids = sorted(int(t) for t in tile_ids)
        shown = ", ".join(str(t) for t in self.tile_ids[:20])
        if len(self.tile_ids) > 20:
            shown += ", ..."
        super().__init__(
            message or f"{len(self.tile_ids)} tile(s) without pixels: {shown}"
        )


class ModelError(AdapterError):
    """The checkpoint cannot be loaded or does not satisfy the contract."""


class IoError(AdapterError):
    """The operating system refused a read or write."""
