"""Checkpoint bridge emitting the segmentation engine's embedding files."""

from . import checkpoints, cli, encode, formats
from .encode import AdapterJob, encode_patches, encode_prompts
from .errors import (
    AdapterError,
    FormatError,
    InvalidPromptSpec,
    IoError,
    MissingTile,
    ModelError,
)

__version__ = "0.1.0"

__all__ = [
    "AdapterError",
    "AdapterJob",
    "FormatError",
    "InvalidPromptSpec",
    "IoError",
    "MissingTile",
    "ModelError",
    "checkpoints",
    "cli",
    "encode",
    "encode_patches",
    "encode_prompts",
    "formats",
]
