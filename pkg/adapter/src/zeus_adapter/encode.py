"""Batched tile and prompt encoding into the engine's binary files."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from . import checkpoints, formats
from .errors import FormatError, IoError, MissingTile, ModelError

log = logging.getLogger("zeus_adapter")


@dataclass
class AdapterJob:
    """Everything one encoding run needs; model_ref lands verbatim in the
    emitted files' model_id field."""

    model_ref: str
    grid_manifest_path: str | None = None
    slide_source: str | None = None  # slide image file or tile directory
    prompt_spec_path: str | None = None
    patches_out: str | None = None
    prompts_out: str | None = None
    batch_size: int = 16

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise FormatError(f"batch_size must be >= 1, got {self.batch_size}")


def _preprocess(tile_rgb: np.ndarray, image_size: int) -> torch.Tensor:
    """uint8 HxWx3 -> float32 [0,1] CHW at the model's input edge."""
    img = Image.fromarray(tile_rgb, mode="RGB")
    if img.size != (image_size, image_size):
        img = img.resize((image_size, image_size), Image.BILINEAR)
    arr = np.asarray(img, dtype=np.float32) / 255.0
    return torch.from_numpy(arr).permute(2, 0, 1)


class _SlideImageSource:
    """Tile pixels cropped from one plain image file."""

    def __init__(self, path: Path, patch_size: int):
        try:
            with Image.open(path) as img:
                self._pixels = np.asarray(img.convert("RGB"))
        except OSError as exc:
            raise IoError(f"cannot read slide image {path}: {exc}") from exc
        self._patch = patch_size

    def missing(self, tiles: np.ndarray) -> list[int]:
        h, w = self._pixels.shape[:2]
        bad = (tiles[:, 1] + self._patch > w) | (tiles[:, 2] + self._patch > h)
        return [int(t) for t in tiles[bad, 0]]

    def fetch_tile(self, tile_id: int, x: int, y: int) -> np.ndarray:
        return self._pixels[y:y + self._patch, x:x + self._patch]


class _TileDirectorySource:
    """Tile pixels from {tile_id}.png files in a directory."""

    def __init__(self, root: Path, patch_size: int):
        self._root = root
        self._patch = patch_size

    def missing(self, tiles: np.ndarray) -> list[int]:
        return [
            int(t) for t in tiles[:, 0]
            if not (self._root / f"{int(t)}.png").is_file()
        ]

    def fetch_tile(self, tile_id: int, x: int, y: int) -> np.ndarray:
        path = self._root / f"{tile_id}.png"
        try:
            with Image.open(path) as img:
                return np.asarray(img.convert("RGB"))
        except OSError as exc:
            raise IoError(f"cannot read tile {path}: {exc}") from exc


def encode_patches(job: AdapterJob) -> Path:
    """Embed every manifest tile, ascending tile_id, into a ZEUSEMB1 file."""
    if not (job.grid_manifest_path and job.slide_source and job.patches_out):
        raise FormatError(
            "encode_patches needs grid_manifest_path, slide_source, patches_out"
        )
    model = checkpoints.load_checkpoint(job.model_ref)
    manifest = formats.read_grid_manifest(job.grid_manifest_path)
    tiles = manifest.tiles[np.argsort(manifest.tiles[:, 0], kind="stable")]
    ids = tiles[:, 0]
    if len(ids) > 1 and np.any(np.diff(ids) == 0):
        raise FormatError("grid manifest repeats a tile_id")

    source_path = Path(job.slide_source)
    dim = int(model.embed_dim)
    size = int(model.image_size)
    if source_path.is_dir():
        source = _TileDirectorySource(source_path, manifest.patch_size)
    else:
        source = _SlideImageSource(source_path, manifest.patch_size)
    lost = source.missing(tiles)
    if lost:
        raise MissingTile(lost)

    vectors = np.zeros((len(tiles), dim), dtype=np.float32)
    with torch.no_grad():
        for lo in range(0, len(tiles), job.batch_size):
            chunk = tiles[lo:lo + job.batch_size]
            batch = torch.stack([
                _preprocess(source.fetch_tile(int(tid), int(x), int(y)), size)
                for tid, x, y in chunk
            ])
            out = model.encode_image(batch)
            vectors[lo:lo + len(chunk)] = out.to(torch.float32).cpu().numpy()
    if vectors.size and not np.all(np.isfinite(vectors)):
        raise ModelError("image encoder produced non-finite features")

    formats.write_patch_embeddings(
        slide_id=manifest.slide_id,
        model_id=job.model_ref,
        tile_ids=ids,
        vectors=vectors,
        destination=job.patches_out,
    )
    log.info("encoded %d tiles (dim %d) -> %s", len(tiles), dim, job.patches_out)
    return Path(job.patches_out)


def encode_prompts(job: AdapterJob) -> Path:
    """Embed every expanded prompt, one record each, into a ZEUSTXT1 file.

    Records follow the canonical order (classes ascending, template-major
    within a class) and are never averaged here; prototype ensembling is
    the engine's job.
    """
    if not (job.prompt_spec_path and job.prompts_out):
        raise FormatError("encode_prompts needs prompt_spec_path, prompts_out")
    model = checkpoints.load_checkpoint(job.model_ref)
    spec = formats.load_prompt_spec(job.prompt_spec_path)
    pairs = formats.expand_all(spec)
    ctx = int(model.context_length)
    dim = int(model.embed_dim)

    vectors = np.zeros((len(pairs), dim), dtype=np.float32)
    with torch.no_grad():
        for lo in range(0, len(pairs), job.batch_size):
            chunk = pairs[lo:lo + job.batch_size]
            tokens = checkpoints.tokenize_batch([t for _, t in chunk], ctx)
            out = model.encode_text(tokens)
            vectors[lo:lo + len(chunk)] = out.to(torch.float32).cpu().numpy()
    if vectors.size and not np.all(np.isfinite(vectors)):
        raise ModelError("text encoder produced non-finite features")

    formats.write_text_embeddings(
        tag=formats.spec_hash(spec),
        model_id=job.model_ref,
        class_ids=np.array([cid for cid, _ in pairs], dtype=np.uint64),
        vectors=vectors,
        destination=job.prompts_out,
    )
    log.info("encoded %d prompts (dim %d) -> %s", len(pairs), dim, job.prompts_out)
    return Path(job.prompts_out)
