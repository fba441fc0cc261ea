"""Prompt expansion and class-prototype construction.

A prompt spec lists C classes (dense ids, class 0 = background/normal), each
with N classnames, plus M templates carrying exactly one "{}" placeholder.
Expansion is template-major (template outer, classname inner) so encoded
prompt files are reproducible byte-for-byte.  The N*M encoded vectors of a
class are reduced to one prototype by componentwise mean, either over the
raw vectors or after unit-normalizing each one; the prototype itself is
deliberately left unnormalized because the cosine downstream divides by its
norm anyway.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from . import embio
from .errors import (
    CorruptError,
    DegeneratePrototype,
    DegenerateVector,
    FormatError,
    InvalidInput,
    InvalidPromptSpec,
    IoError,
)

PROMPT_SCHEMA = "zeus-prompts/1"
PLACEHOLDER = "{}"
POLICIES = ("raw_mean", "normalize_each_then_mean")


@dataclass(frozen=True)
class PromptClass:
    class_id: int
    display_name: str
    classnames: tuple[str, ...]


@dataclass(frozen=True)
class PromptSpec:
    classes: tuple[PromptClass, ...]
    templates: tuple[str, ...]

    def class_by_id(self, class_id: int) -> PromptClass:
        for cls in self.classes:
            if cls.class_id == class_id:
                return cls
        raise InvalidInput(f"class_id {class_id} not in prompt spec")

    @property
    def num_classes(self) -> int:
        return len(self.classes)


@dataclass
class PromptEmbeddingSet:
    """Encoded vectors for one class's expanded prompts."""

    class_id: int
    dim: int
    vectors: np.ndarray  # (N*M, dim)

    def __post_init__(self) -> None:
        self.vectors = np.asarray(self.vectors, dtype=np.float64).reshape(-1, self.dim)


@dataclass
class ClassPrototype:
    """One averaged text embedding per class; norm_policy is None when the
    provenance is a prototype file rather than an in-process ensemble."""

    class_id: int
    dim: int
    vector: np.ndarray
    norm_policy: str | None

    def __post_init__(self) -> None:
        self.vector = np.asarray(self.vector, dtype=np.float64).reshape(self.dim)


# ---------------------------------------------------------------------------
# validation / expansion

def _check_template(template: str) -> None:
    n = template.count(PLACEHOLDER)
    if n != 1:
        raise InvalidPromptSpec(
            f"template {template!r} contains {n} placeholders, expected exactly 1"
        )


def validate_spec(spec: PromptSpec) -> None:
    if not spec.classes:
        raise InvalidPromptSpec("prompt spec has no classes")
    if not spec.templates:
        raise InvalidPromptSpec("prompt spec has no templates")
    ids = [cls.class_id for cls in spec.classes]
    if ids != list(range(len(ids))):
        raise InvalidPromptSpec(f"class ids must be dense 0..C-1, got {ids}")
    for cls in spec.classes:
        if not cls.classnames:
            raise InvalidPromptSpec(f"class {cls.class_id} has no classnames")
    for template in spec.templates:
        _check_template(template)


def expand_prompts(spec: PromptSpec, class_id: int) -> list[str]:
    """All N*M prompts for a class, template-major (m outer, n inner)."""
    cls = spec.class_by_id(class_id)
    out = []
    for template in spec.templates:
        _check_template(template)
        for name in cls.classnames:
            out.append(template.replace(PLACEHOLDER, name, 1))
    return out


def expand_all(spec: PromptSpec) -> list[tuple[int, str]]:
    """(class_id, prompt) pairs, classes ascending, template-major within."""
    pairs = []
    for cls in spec.classes:
        for prompt in expand_prompts(spec, cls.class_id):
            pairs.append((cls.class_id, prompt))
    return pairs


# ---------------------------------------------------------------------------
# ensembling

def ensemble(embs: PromptEmbeddingSet, policy: str = "raw_mean") -> ClassPrototype:
    """Reduce one class's prompt vectors to a single prototype.

    Summation runs in float64 over rows taken in canonical lexicographic
    order, so any permutation of the input vectors yields bit-identical
    prototypes.  The result is not re-normalized.
    """
    if policy not in POLICIES:
        raise InvalidInput(f"unknown norm policy {policy!r}")
    vectors = np.asarray(embs.vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] < 1:
        raise InvalidInput("ensemble needs at least one vector")
    if vectors.shape[1] != embs.dim:
        raise InvalidInput(
            f"vector dim {vectors.shape[1]} != declared dim {embs.dim}"
        )
    if policy == "normalize_each_then_mean":
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(norms < 1e-12):
            raise DegenerateVector(
                f"class {embs.class_id}: prompt vector with near-zero norm"
            )
        vectors = vectors / norms[:, None]
    order = np.lexsort(vectors.T[::-1])
    mean = vectors[order].sum(axis=0) / vectors.shape[0]
    if float(np.linalg.norm(mean)) < 1e-12:
        raise DegeneratePrototype(
            f"class {embs.class_id}: prompt embeddings cancel to zero"
        )
    return ClassPrototype(
        class_id=embs.class_id, dim=embs.dim, vector=mean, norm_policy=policy
    )


# ---------------------------------------------------------------------------
# prompt-spec file format

def _spec_payload(spec: PromptSpec) -> dict:
    return {
        "schema": PROMPT_SCHEMA,
        "classes": [
            {
                "class_id": cls.class_id,
                "display_name": cls.display_name,
                "classnames": list(cls.classnames),
            }
            for cls in spec.classes
        ],
        "templates": list(spec.templates),
    }


def spec_hash(spec: PromptSpec) -> str:
    """Canonical sha256 of a prompt spec; tags every text-embedding file."""
    canon = json.dumps(
        _spec_payload(spec), sort_keys=True, separators=(",", ":"), ensure_ascii=True
    )
    return hashlib.sha256(canon.encode("ascii")).hexdigest()


def load_prompt_spec(source) -> PromptSpec:
    try:
        if hasattr(source, "read"):
            data = source.read()
        else:
            with open(source, "rb") as fh:
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
            PromptClass(
                class_id=int(c["class_id"]),
                display_name=str(c["display_name"]),
                classnames=tuple(str(n) for n in c["classnames"]),
            )
            for c in doc["classes"]
        )
        templates = tuple(str(t) for t in doc["templates"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptError(f"prompt spec field invalid: {exc}") from exc
    spec = PromptSpec(classes=classes, templates=templates)
    validate_spec(spec)
    return spec


# ---------------------------------------------------------------------------
# prototype files (ZEUSTXT1 keyed by class_id, one record per class)

def build_prototypes(
    spec: PromptSpec, encoded: embio.TextEmbeddingSet, policy: str = "raw_mean"
) -> list[ClassPrototype]:
    """Group a per-prompt text-embedding file by class and ensemble each.

    The file must contain exactly N*M records per class in spec order; a
    nonempty hash tag must match this spec.
    """
    validate_spec(spec)
    own_hash = spec_hash(spec)
    if encoded.spec_hash and encoded.spec_hash != own_hash:
        raise InvalidInput(
            f"text embeddings were encoded for spec {encoded.spec_hash[:12]}..., "
            f"this spec hashes to {own_hash[:12]}..."
        )
    protos = []
    keys = encoded.class_ids.astype(np.int64)
    for cls in spec.classes:
        rows = encoded.vectors[keys == cls.class_id]
        expected = len(cls.classnames) * len(spec.templates)
        if len(rows) != expected:
            raise InvalidInput(
                f"class {cls.class_id}: file holds {len(rows)} prompt vectors, "
                f"spec expands to {expected}"
            )
        protos.append(
            ensemble(
                PromptEmbeddingSet(
                    class_id=cls.class_id, dim=encoded.dim, vectors=rows
                ),
                policy,
            )
        )
    extras = set(int(k) for k in keys) - {cls.class_id for cls in spec.classes}
    if extras:
        raise InvalidInput(f"text embeddings carry unknown class ids {sorted(extras)}")
    return protos


def prototypes_to_text_set(
    protos: list[ClassPrototype], model_id: str, tag: str
) -> embio.TextEmbeddingSet:
    if not protos:
        raise InvalidInput("no prototypes to serialize")
    protos = sorted(protos, key=lambda p: p.class_id)
    ids = [p.class_id for p in protos]
    if ids != list(range(len(ids))):
        raise InvalidInput(f"prototype class ids must be dense 0..C-1, got {ids}")
    dim = protos[0].dim
    if any(p.dim != dim for p in protos):
        raise InvalidInput("prototype dims disagree")
    vectors = np.stack([p.vector for p in protos]).astype(np.float32)
    return embio.TextEmbeddingSet(
        spec_hash=tag, model_id=model_id, dim=dim, class_ids=ids, vectors=vectors
    )


def load_prototypes(source) -> tuple[list[ClassPrototype], embio.TextEmbeddingSet]:
    """Read a prototype file; requires one record per class, ids dense."""
    encoded = embio.read_text_embeddings(source)
    ids = encoded.class_ids.astype(np.int64)
    if list(ids) != list(range(len(ids))):
        raise InvalidInput(
            "prototype file must hold exactly one record per class, ids dense 0..C-1"
        )
    protos = [
        ClassPrototype(
            class_id=int(i),
            dim=encoded.dim,
            vector=encoded.vectors[int(i)].astype(np.float64),
            norm_policy=None,
        )
        for i in ids
    ]
    return protos, encoded
