"""Wire formats shared with the segmentation engine.

The engine and this adapter communicate only through files, so the three
formats are implemented here against their byte-level contracts rather
than imported: the JSON grid manifest (schema "zeus-grid/1"), the JSON
prompt spec (schema "zeus-prompts/1") with its canonical sha256 tag, and
the little-endian binary embedding containers.

Binary container, all little-endian:

    magic     8 bytes  ("ZEUSEMB1" patch vectors, "ZEUSTXT1" text vectors)
    version   u32      (1)
    dim       u32
    count     u64
    model_id  u16 length + UTF-8 bytes
    tag       u16 length + UTF-8 bytes
    records   count x (u64 key, dim x f32)

Patch files key by tile_id (strictly increasing); text files key by
class_id (non-decreasing, repeated for multiple prompts per class).
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, InvalidPromptSpec, IoError

GRID_SCHEMA = "zeus-grid/1"
PROMPT_SCHEMA = "zeus-prompts/1"
MAGIC_PATCH = b"ZEUSEMB1"
MAGIC_TEXT = b"ZEUSTXT1"
PLACEHOLDER = "{}"


# ---------------------------------------------------------------------------
# grid manifest

@dataclass(frozen=True)
class GridManifest:
    slide_id: str
    width_px: int
    height_px: int
    magnification: float
    patch_size: int
    stride: int
    tiles: np.ndarray  # (K, 3) int64 rows [tile_id, x, y]


def read_grid_manifest(path) -> GridManifest:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read grid manifest: {exc}") from exc
    try:
        doc = json.loads(data)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"grid manifest is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("schema") != GRID_SCHEMA:
        raise FormatError(f"expected schema {GRID_SCHEMA!r}")
    try:
        slide = doc["slide"]
        tiles = np.asarray(doc["tiles"], dtype=np.int64).reshape(-1, 3)
        manifest = GridManifest(
            slide_id=str(slide["id"]),
            width_px=int(slide["width_px"]),
            height_px=int(slide["height_px"]),
            magnification=float(slide.get("magnification", 10.0)),
            patch_size=int(doc["patch_size"]),
            stride=int(doc["stride"]),
            tiles=tiles,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"grid manifest field invalid: {exc}") from exc
    if manifest.patch_size < 1 or manifest.stride < 1:
        raise FormatError("patch_size and stride must be >= 1")
    if len(manifest.tiles) and np.any(manifest.tiles[:, 1:] < 0):
        raise FormatError("tile origins must be nonnegative")
    return manifest


# ---------------------------------------------------------------------------
# prompt spec

@dataclass(frozen=True)
class PromptSpec:
    classes: tuple  # (class_id, display_name, classnames tuple) triples
    templates: tuple


def load_prompt_spec(path) -> PromptSpec:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read prompt spec: {exc}") from exc
    try:
        doc = json.loads(data)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"prompt spec is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("schema") != PROMPT_SCHEMA:
        raise FormatError(f"expected schema {PROMPT_SCHEMA!r}")
    try:
        classes = tuple(
            (
                int(c["class_id"]),
                str(c["display_name"]),
                tuple(str(n) for n in c["classnames"]),
            )
            for c in doc["classes"]
        )
        templates = tuple(str(t) for t in doc["templates"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"prompt spec field invalid: {exc}") from exc
    spec = PromptSpec(classes=classes, templates=templates)
    validate_spec(spec)
    return spec


def validate_spec(spec: PromptSpec) -> None:
    if [c[0] for c in spec.classes] != list(range(len(spec.classes))):
        raise InvalidPromptSpec("class ids must be dense 0..C-1, ascending")
    if not spec.classes:
        raise InvalidPromptSpec("at least one class is required")
    for cid, _, names in spec.classes:
        if not names:
            raise InvalidPromptSpec(f"class {cid} has no classnames")
    if not spec.templates:
        raise InvalidPromptSpec("at least one template is required")
    for t in spec.templates:
        if t.count(PLACEHOLDER) != 1:
            raise InvalidPromptSpec(
                f"template {t!r} must contain the placeholder {PLACEHOLDER!r} "
                "exactly once"
            )


def expand_prompts(spec: PromptSpec, class_id: int) -> list[str]:
    """Template-major expansion: all classnames under the first template,
    then the second, and so on."""
    names = spec.classes[class_id][2]
    return [t.replace(PLACEHOLDER, n, 1) for t in spec.templates for n in names]


def expand_all(spec: PromptSpec) -> list[tuple[int, str]]:
    """(class_id, prompt) pairs: classes ascending, template-major within."""
    return [
        (cid, text)
        for cid, _, _ in spec.classes
        for text in expand_prompts(spec, cid)
    ]


def spec_hash(spec: PromptSpec) -> str:
    """Canonical sha256 over the prompt-spec content; must match the
    engine's tag for the same document or prototype building there will
    refuse the file."""
    payload = {
        "schema": PROMPT_SCHEMA,
        "classes": [
            {"class_id": cid, "display_name": name, "classnames": list(names)}
            for cid, name, names in spec.classes
        ],
        "templates": list(spec.templates),
    }
    canon = json.dumps(
        payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True
    )
    return hashlib.sha256(canon.encode("ascii")).hexdigest()


# ---------------------------------------------------------------------------
# binary writers

def _assemble(
    magic: bytes,
    dim: int,
    model_id: str,
    tag: str,
    keys: np.ndarray,
    vectors: np.ndarray,
    strict_keys: bool,
) -> bytes:
    if dim < 1:
        raise FormatError(f"dim must be >= 1, got {dim}")
    keys = np.asarray(keys, dtype=np.uint64)
    vectors = np.asarray(vectors, dtype=np.float32).reshape(len(keys), dim)
    if len(keys) > 1:
        diffs = np.diff(keys.astype(np.int64))
        if strict_keys and np.any(diffs <= 0):
            raise FormatError("keys must be strictly increasing")
        if not strict_keys and np.any(diffs < 0):
            raise FormatError("keys must be non-decreasing")
    if vectors.size and not np.all(np.isfinite(vectors)):
        raise FormatError("vectors must be finite")
    mid = model_id.encode("utf-8")
    tg = tag.encode("utf-8")
    if len(mid) > 0xFFFF or len(tg) > 0xFFFF:
        raise FormatError("model_id/tag longer than a u16 length field")
    head = b"".join(
        (
            magic,
            struct.pack("<I", 1),
            struct.pack("<I", dim),
            struct.pack("<Q", len(keys)),
            struct.pack("<H", len(mid)),
            mid,
            struct.pack("<H", len(tg)),
            tg,
        )
    )
    record = np.dtype([("key", "<u8"), ("vec", "<f4", (dim,))])
    body = np.zeros(len(keys), dtype=record)
    body["key"] = keys
    body["vec"] = vectors
    return head + body.tobytes()


def _emit(data: bytes, destination) -> int:
    try:
        if hasattr(destination, "write"):
            destination.write(data)
        else:
            with open(destination, "wb") as fh:
                fh.write(data)
    except OSError as exc:
        raise IoError(f"cannot write embedding file: {exc}") from exc
    return len(data)


def write_patch_embeddings(
    slide_id: str, model_id: str, tile_ids, vectors, destination
) -> int:
    """ZEUSEMB1 file: one record per tile, keys strictly increasing."""
    vectors = np.asarray(vectors, dtype=np.float32)
    dim = vectors.shape[1] if vectors.ndim == 2 else 0
    data = _assemble(
        MAGIC_PATCH, dim, model_id, slide_id, tile_ids, vectors, strict_keys=True
    )
    return _emit(data, destination)


def write_text_embeddings(
    tag: str, model_id: str, class_ids, vectors, destination
) -> int:
    """ZEUSTXT1 file: one record per prompt, keyed by class_id."""
    vectors = np.asarray(vectors, dtype=np.float32)
    dim = vectors.shape[1] if vectors.ndim == 2 else 0
    data = _assemble(
        MAGIC_TEXT, dim, model_id, tag, class_ids, vectors, strict_keys=False
    )
    return _emit(data, destination)
