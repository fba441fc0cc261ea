"""Synthetic end-to-end fixtures with an analytically known answer.

A phantom plants a rectangular "tumor" on a fake slide and synthesizes each
tile's embedding as a normalized mix of two prototypes weighted by the
tile's exact area fraction inside the rectangle, plus optional seeded
noise.  Because the mixing is linear and the prototypes are not collinear,
the expected argmax of every stride cell follows from geometry alone, which
gives the whole pipeline a known-answer test with no encoder anywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import embio, simcore
from .errors import InvalidSpec
from .prompts import ClassPrototype
from .tiling import SlideGeometry, TileGrid, write_grid_manifest

PROTO_KEY_BASE = 2**63  # mock-encode key space reserved for prototypes


@dataclass
class PhantomSpec:
    geometry: SlideGeometry
    tumor_rect: tuple[int, int, int, int]  # x0, y0, x1, y1 (exclusive)
    prototypes: tuple[ClassPrototype, ClassPrototype]  # (normal, tumor)
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        x0, y0, x1, y1 = self.tumor_rect
        if not (0 <= x0 < x1 <= self.geometry.width_px):
            raise InvalidSpec(f"tumor_rect x range [{x0}, {x1}) outside slide")
        if not (0 <= y0 < y1 <= self.geometry.height_px):
            raise InvalidSpec(f"tumor_rect y range [{y0}, {y1}) outside slide")
        if self.noise_sigma < 0:
            raise InvalidSpec(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        normal, tumor = self.prototypes
        if normal.dim != tumor.dim:
            raise InvalidSpec("prototype dims differ")
        if simcore.cosine(normal.vector, tumor.vector) >= 0.99:
            raise InvalidSpec("prototypes are collinear; argmax would be degenerate")


def make_phantom_prototypes(seed: int, dim: int) -> tuple[ClassPrototype, ClassPrototype]:
    """Two deterministic unit prototypes from a reserved key range."""
    protos = tuple(
        ClassPrototype(
            class_id=c,
            dim=dim,
            vector=embio.mock_encode(PROTO_KEY_BASE + c, seed, dim).astype(np.float64),
            norm_policy=None,
        )
        for c in (0, 1)
    )
    return protos


def tumor_fractions(spec: PhantomSpec, grid: TileGrid) -> np.ndarray:
    """Exact fraction of each tile's area inside the tumor rectangle."""
    x0, y0, x1, y1 = spec.tumor_rect
    p = grid.patch_size
    x = grid.tiles[:, 1].astype(np.float64)
    y = grid.tiles[:, 2].astype(np.float64)
    wx = np.clip(np.minimum(x + p, x1) - np.maximum(x, x0), 0.0, None)
    wy = np.clip(np.minimum(y + p, y1) - np.maximum(y, y0), 0.0, None)
    return (wx * wy) / float(p * p)


def generate_phantom(spec: PhantomSpec, grid: TileGrid) -> embio.EmbeddingSet:
    """Tile embeddings: normalize((1-f) w_normal + f w_tumor + noise)."""
    normal, tumor = spec.prototypes
    dim = normal.dim
    frac = tumor_fractions(spec, grid)
    w_n = normal.vector.astype(np.float64)
    w_t = tumor.vector.astype(np.float64)
    vectors = np.empty((grid.num_tiles, dim), dtype=np.float32)
    # uniform [-1, 1) noise scaled so each component's std is noise_sigma;
    # integer-only stream keeps this reproducible across platforms
    amp = spec.noise_sigma * np.sqrt(3.0)
    for row, (tile_id, f) in enumerate(zip(grid.tiles[:, 0], frac)):
        vec = (1.0 - f) * w_n + f * w_t
        if amp > 0.0:
            vec = vec + amp * embio.uniform_stream(spec.seed, int(tile_id), dim)
        norm = float(np.linalg.norm(vec))
        if norm < 1e-9:
            vec = np.zeros(dim)
            vec[0] = 1.0
            norm = 1.0
        vectors[row] = (vec / norm).astype(np.float32)
    return embio.EmbeddingSet(
        slide_id=spec.geometry.slide_id,
        model_id="phantom-mixer",
        dim=dim,
        tile_ids=grid.tiles[:, 0].astype(np.uint64),
        vectors=vectors,
    )


def oracle_cells(spec: PhantomSpec, grid: TileGrid) -> np.ndarray:
    """Ground-truth stride-cell raster: 1 iff >= half of the cell's on-slide
    area lies inside the tumor rectangle."""
    x0, y0, x1, y1 = spec.tumor_rect
    s = grid.stride
    w, h = spec.geometry.width_px, spec.geometry.height_px
    qs = np.arange(grid.grid_cols, dtype=np.float64) * s
    rs = np.arange(grid.grid_rows, dtype=np.float64) * s
    cx0, cy0 = np.meshgrid(qs, rs)
    cx1 = np.minimum(cx0 + s, w)
    cy1 = np.minimum(cy0 + s, h)
    cell_area = np.clip(cx1 - cx0, 0, None) * np.clip(cy1 - cy0, 0, None)
    tx = np.clip(np.minimum(cx1, x1) - np.maximum(cx0, x0), 0.0, None)
    ty = np.clip(np.minimum(cy1, y1) - np.maximum(cy0, y0), 0.0, None)
    inside = tx * ty
    return ((cell_area > 0) & (inside >= 0.5 * cell_area)).astype(np.uint8)


def write_fixture(
    spec: PhantomSpec, grid: TileGrid, out_dir, prototype_tag: str = "phantom"
) -> dict[str, Path]:
    """Emit the standard artifact bundle for one phantom."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "grid": out_dir / "grid.json",
        "embeddings": out_dir / "embeddings.zemb",
        "prototypes": out_dir / "prototypes.ztxt",
        "oracle_mask": out_dir / "oracle_mask.png",
        "oracle": out_dir / "oracle.json",
    }
    write_grid_manifest(spec.geometry, grid, paths["grid"])
    embio.write_embeddings(generate_phantom(spec, grid), paths["embeddings"])
    normal, tumor = spec.prototypes
    proto_set = embio.TextEmbeddingSet(
        spec_hash=prototype_tag,
        model_id="phantom-mixer",
        dim=normal.dim,
        class_ids=[0, 1],
        vectors=np.stack([normal.vector, tumor.vector]).astype(np.float32),
    )
    embio.write_text_embeddings(proto_set, paths["prototypes"])
    cells = oracle_cells(spec, grid)
    oracle_mask = simcore.SegmentationMask(
        grid_cols=grid.grid_cols,
        grid_rows=grid.grid_rows,
        stride=grid.stride,
        patch_size=grid.patch_size,
        labels=cells,
    )
    simcore.export_mask(oracle_mask, paths["oracle_mask"])
    doc = {
        "tumor_rect": list(spec.tumor_rect),
        "expected_mask_path": paths["oracle_mask"].name,
        "noise_sigma": spec.noise_sigma,
        "seed": spec.seed,
    }
    paths["oracle"].write_bytes(
        json.dumps(doc, separators=(",", ":"), ensure_ascii=True).encode("ascii")
    )
    return paths
