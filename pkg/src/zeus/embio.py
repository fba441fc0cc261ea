"""Bit-exact embedding interchange.

Two little-endian binary containers share one frame:

    magic (8 bytes)  "ZEUSEMB1" for patch embeddings, "ZEUSTXT1" for text
    u32 version      currently 1
    u32 dim          vector dimensionality D, >= 1
    u64 count        number of records
    u16 + UTF-8      model identifier
    u16 + UTF-8      tag: slide_id (EMB) or prompt-spec hash (TXT)
    count records    u64 key | dim * f32

Patch files key records by tile_id (strictly increasing).  Text files key
by class_id; per-prompt files may repeat a class (keys non-decreasing),
prototype files hold one record per class.

The mock encoder uses a counter-based generator so any record can be
produced independently in any order.  The mixing function is the splitmix64
finalizer over 64-bit unsigned wraparound arithmetic:

    mix64(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
              z ^= z >> 27; z *= 0x94D049BB133111EB;
              z ^= z >> 31

    key     = mix64(mix64(seed + GAMMA) ^ mix64(key_id + KEY_TWEAK))
    word_i  = mix64(key + i * GAMMA)          GAMMA = 0x9E3779B97F4A7C15
    value_i = (word_i >> 11) * 2**-53 * 2 - 1          in [-1, 1)

KEY_TWEAK = 0xC2B2AE3D27D4EB4F.  Golden values are pinned in the tests
against an independent pure-integer reimplementation.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    CorruptError,
    FormatError,
    InvalidInput,
    IoError,
    TruncatedError,
)

MAGIC_PATCH = b"ZEUSEMB1"
MAGIC_TEXT = b"ZEUSTXT1"
VERSION = 1

_HEAD = struct.Struct("<IIQ")  # version, dim, count
_U16 = struct.Struct("<H")

GAMMA = 0x9E3779B97F4A7C15
KEY_TWEAK = 0xC2B2AE3D27D4EB4F
_MASK64 = 0xFFFFFFFFFFFFFFFF


# ---------------------------------------------------------------------------
# deterministic counter-based stream

def _mix64(z: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; z is uint64, arithmetic wraps mod 2**64
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return z


def stream_key(seed: int, key_id: int) -> int:
    """Collapse (seed, key_id) into one 64-bit stream key."""
    a = np.uint64((seed + GAMMA) & _MASK64)
    b = np.uint64((key_id + KEY_TWEAK) & _MASK64)
    mixed = _mix64(np.array([a], dtype=np.uint64)) ^ _mix64(
        np.array([b], dtype=np.uint64)
    )
    return int(_mix64(mixed)[0])


def uniform_stream(seed: int, key_id: int, n: int, offset: int = 0) -> np.ndarray:
    """n float64 values in [-1, 1) from the (seed, key_id) stream."""
    if n < 0:
        raise InvalidInput(f"stream length must be nonnegative, got {n}")
    key = np.uint64(stream_key(seed, key_id))
    idx = (np.arange(offset, offset + n, dtype=np.uint64)) * np.uint64(GAMMA)
    words = _mix64(key + idx)
    u01 = (words >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return u01 * 2.0 - 1.0


def mock_encode(tile_id: int, seed: int, dim: int) -> np.ndarray:
    """Deterministic unit-norm float32 vector standing in for an encoder."""
    if dim < 1:
        raise InvalidInput(f"dim must be >= 1, got {dim}")
    raw = uniform_stream(seed, tile_id, dim)
    norm = float(np.linalg.norm(raw))
    if norm < 1e-9:
        vec = np.zeros(dim, dtype=np.float64)
        vec[0] = 1.0
    else:
        vec = raw / norm
    return vec.astype(np.float32)


def mock_encode_text(text: str, seed: int, dim: int) -> np.ndarray:
    """mock_encode keyed by a 64-bit digest of the text instead of a tile id."""
    key = int.from_bytes(
        hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "little"
    )
    return mock_encode(key, seed, dim)


# ---------------------------------------------------------------------------
# containers

@dataclass
class EmbeddingSet:
    """Per-tile feature vectors for one slide, float32, keyed by tile_id."""

    slide_id: str
    model_id: str
    dim: int
    tile_ids: np.ndarray  # uint64, strictly increasing
    vectors: np.ndarray  # float32, shape (count, dim)

    def __post_init__(self) -> None:
        self.tile_ids = np.asarray(self.tile_ids, dtype=np.uint64).reshape(-1)
        self.vectors = np.asarray(self.vectors, dtype=np.float32).reshape(
            len(self.tile_ids), self.dim
        )

    @property
    def count(self) -> int:
        return len(self.tile_ids)


@dataclass
class TextEmbeddingSet:
    """Text-side vectors keyed by class_id; tag carries the prompt-spec hash."""

    spec_hash: str
    model_id: str
    dim: int
    class_ids: np.ndarray  # uint64, non-decreasing
    vectors: np.ndarray  # float32, shape (count, dim)

    def __post_init__(self) -> None:
        self.class_ids = np.asarray(self.class_ids, dtype=np.uint64).reshape(-1)
        self.vectors = np.asarray(self.vectors, dtype=np.float32).reshape(
            len(self.class_ids), self.dim
        )

    @property
    def count(self) -> int:
        return len(self.class_ids)


def header_size(model_id: str, tag: str) -> int:
    """Byte length of a record-free file with the given string fields."""
    return (
        8
        + _HEAD.size
        + _U16.size
        + len(model_id.encode("utf-8"))
        + _U16.size
        + len(tag.encode("utf-8"))
    )


# ---------------------------------------------------------------------------
# framing helpers

def _record_dtype(dim: int) -> np.dtype:
    return np.dtype([("key", "<u8"), ("vec", "<f4", (dim,))])


def _encode_str(value: str, field: str) -> bytes:
    raw = value.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise InvalidInput(f"{field} exceeds 65535 UTF-8 bytes")
    return _U16.pack(len(raw)) + raw


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
        raise InvalidInput(f"dim must be >= 1, got {dim}")
    keys = np.asarray(keys, dtype=np.uint64).reshape(-1)
    vectors = np.asarray(vectors, dtype=np.float32)
    if vectors.shape != (len(keys), dim):
        raise InvalidInput(
            f"vector block shape {vectors.shape} does not match "
            f"{len(keys)} records of dim {dim}"
        )
    if not np.isfinite(vectors).all():
        raise InvalidInput("vectors contain NaN or Inf")
    if len(keys) > 1:
        diffs_ok = (
            np.all(keys[1:] > keys[:-1])
            if strict_keys
            else np.all(keys[1:] >= keys[:-1])
        )
        if not diffs_ok:
            kind = "strictly increasing" if strict_keys else "non-decreasing"
            raise InvalidInput(f"record keys must be {kind}")
    records = np.zeros(len(keys), dtype=_record_dtype(dim))
    records["key"] = keys
    records["vec"] = vectors
    return (
        magic
        + _HEAD.pack(VERSION, dim, len(keys))
        + _encode_str(model_id, "model_id")
        + _encode_str(tag, "tag")
        + records.tobytes()
    )


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


def _slurp(source) -> bytes:
    try:
        if hasattr(source, "read"):
            return source.read()
        with open(source, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise IoError(f"cannot read embedding file: {exc}") from exc


def _parse(data: bytes, expect_magic: bytes, strict_keys: bool):
    if len(data) < 8:
        raise TruncatedError(f"file holds {len(data)} bytes, magic needs 8")
    magic = data[:8]
    if magic != expect_magic:
        raise FormatError(
            f"bad magic {magic!r}, expected {expect_magic.decode('ascii')}"
        )
    off = 8
    if len(data) < off + _HEAD.size:
        raise TruncatedError("header cut short before version/dim/count")
    version, dim, count = _HEAD.unpack_from(data, off)
    off += _HEAD.size
    if version != VERSION:
        raise FormatError(f"unsupported version {version}, expected {VERSION}")
    if dim == 0:
        raise CorruptError("dim field is zero")

    strings = []
    for field in ("model_id", "tag"):
        if len(data) < off + _U16.size:
            raise TruncatedError(f"header cut short before {field} length")
        (slen,) = _U16.unpack_from(data, off)
        off += _U16.size
        if len(data) < off + slen:
            raise TruncatedError(f"header cut short inside {field}")
        try:
            strings.append(data[off : off + slen].decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise CorruptError(f"{field} is not valid UTF-8") from exc
        off += slen
    model_id, tag = strings

    rec_size = 8 + 4 * dim
    expected = count * rec_size
    remaining = len(data) - off
    if remaining < expected:
        raise TruncatedError(
            f"payload holds {remaining} bytes, {count} records need {expected}"
        )
    if remaining > expected:
        raise CorruptError(f"{remaining - expected} trailing bytes after records")

    records = np.frombuffer(data, dtype=_record_dtype(dim), count=count, offset=off)
    keys = records["key"].astype(np.uint64)
    vectors = np.array(records["vec"], dtype=np.float32).reshape(count, dim)
    if count > 1:
        if strict_keys and not np.all(keys[1:] > keys[:-1]):
            raise CorruptError("record keys are not strictly increasing")
        if not strict_keys and not np.all(keys[1:] >= keys[:-1]):
            raise CorruptError("record keys are not non-decreasing")
    if not np.isfinite(vectors).all():
        raise CorruptError("vectors contain NaN or Inf")
    return model_id, tag, dim, keys, vectors


# ---------------------------------------------------------------------------
# public read/write surface

def write_embeddings(embs: EmbeddingSet, destination) -> int:
    """Serialize a patch-embedding set; returns the byte count written."""
    data = _assemble(
        MAGIC_PATCH,
        embs.dim,
        embs.model_id,
        embs.slide_id,
        embs.tile_ids,
        embs.vectors,
        strict_keys=True,
    )
    return _emit(data, destination)


def read_embeddings(source) -> EmbeddingSet:
    """Parse and validate a patch-embedding file."""
    model_id, slide_id, dim, keys, vectors = _parse(
        _slurp(source), MAGIC_PATCH, strict_keys=True
    )
    return EmbeddingSet(
        slide_id=slide_id, model_id=model_id, dim=dim, tile_ids=keys, vectors=vectors
    )


def write_text_embeddings(embs: TextEmbeddingSet, destination) -> int:
    """Serialize text-side vectors (per-prompt or one-per-class prototypes)."""
    data = _assemble(
        MAGIC_TEXT,
        embs.dim,
        embs.model_id,
        embs.spec_hash,
        embs.class_ids,
        embs.vectors,
        strict_keys=False,
    )
    return _emit(data, destination)


def read_text_embeddings(source) -> TextEmbeddingSet:
    """Parse and validate a text-embedding file."""
    model_id, spec_hash, dim, keys, vectors = _parse(
        _slurp(source), MAGIC_TEXT, strict_keys=False
    )
    return TextEmbeddingSet(
        spec_hash=spec_hash,
        model_id=model_id,
        dim=dim,
        class_ids=keys,
        vectors=vectors,
    )
