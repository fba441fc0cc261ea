"""Cosine scoring, overlap-averaged similarity grids, and argmax masks.

Scores are reconstructed at stride-cell resolution: because every tile
origin sits on the stride lattice, the per-pixel overlap-average map is
constant inside each stride-aligned cell, so sampling one pixel per cell
loses nothing and shrinks memory by stride^2.

Determinism contract: each cell's scores are summed over its covering tiles
in ascending tile_id order in float64.  The parallel path partitions the
raster into disjoint row bands and replays the same ascending-tile sweep in
each band, so any thread count reproduces the single-thread bytes exactly.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import imgio
from .embio import EmbeddingSet
from .errors import (
    CorruptError,
    DegenerateVector,
    DimMismatch,
    InvalidGrid,
    InvalidInput,
)
from .prompts import ClassPrototype
from .tiling import TileGrid

SENTINEL = -2.0  # cell value when no tile covers the cell
NO_LABEL = 255  # mask label for uncovered cells


@dataclass
class TileScores:
    """K x C cosine scores, rows following ascending tile_id."""

    num_tiles: int
    num_classes: int
    scores: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.scores = np.asarray(self.scores, dtype=np.float64).reshape(
            self.num_tiles, self.num_classes
        )


@dataclass
class SimilarityGrid:
    """Per-class stride-cell rasters plus per-cell covering-tile counts."""

    grid_cols: int
    grid_rows: int
    stride: int
    patch_size: int
    per_class: np.ndarray = field(repr=False)  # (C, rows, cols) float64
    coverage: np.ndarray = field(repr=False)  # (rows, cols) int64

    @property
    def num_classes(self) -> int:
        return self.per_class.shape[0]


@dataclass
class SegmentationMask:
    """Stride-cell class labels; 255 marks cells no tile covers."""

    grid_cols: int
    grid_rows: int
    stride: int
    patch_size: int
    labels: np.ndarray = field(repr=False)  # (rows, cols) uint8

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=np.uint8).reshape(
            self.grid_rows, self.grid_cols
        )


# ---------------------------------------------------------------------------
# scoring

def cosine(v, w) -> float:
    """dot(v, w) / (|v| |w|) in float64, clamped into [-1, 1]."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if v.shape != w.shape:
        raise DimMismatch(f"vector dims differ: {v.shape[0]} vs {w.shape[0]}")
    nv = float(np.linalg.norm(v))
    nw = float(np.linalg.norm(w))
    if nv < 1e-12 or nw < 1e-12:
        raise DegenerateVector("cosine of a near-zero vector is undefined")
    return float(np.clip(np.dot(v, w) / (nv * nw), -1.0, 1.0))


def score_tiles(embs: EmbeddingSet, prototypes: list[ClassPrototype]) -> TileScores:
    """Cosine of every tile vector against every class prototype."""
    if not prototypes:
        raise InvalidInput("no class prototypes given")
    protos = sorted(prototypes, key=lambda p: p.class_id)
    ids = [p.class_id for p in protos]
    if ids != list(range(len(ids))):
        raise InvalidInput(f"prototype class ids must be dense 0..C-1, got {ids}")
    for p in protos:
        if p.dim != embs.dim:
            raise DimMismatch(
                f"class {p.class_id} prototype dim {p.dim} != embedding dim {embs.dim}"
            )
    v = embs.vectors.astype(np.float64)
    w = np.stack([p.vector for p in protos]).astype(np.float64)
    v_norm = np.linalg.norm(v, axis=1)
    w_norm = np.linalg.norm(w, axis=1)
    if embs.count and float(v_norm.min()) < 1e-12:
        raise DegenerateVector("embedding set contains a near-zero vector")
    if float(w_norm.min()) < 1e-12:
        raise DegenerateVector("prototype with near-zero norm")
    scores = (v / v_norm[:, None]) @ (w / w_norm[:, None]).T if embs.count else (
        np.zeros((0, len(protos)))
    )
    np.clip(scores, -1.0, 1.0, out=scores)
    return TileScores(num_tiles=embs.count, num_classes=len(protos), scores=scores)


# ---------------------------------------------------------------------------
# grid accumulation

def _tile_cell_spans(grid: TileGrid, cols: int, rows: int):
    """Per-tile inclusive cell ranges [q_lo, q_hi] x [r_lo, r_hi]."""
    x = grid.tiles[:, 1]
    y = grid.tiles[:, 2]
    s = grid.stride
    p = grid.patch_size
    if np.any(x % s) or np.any(y % s):
        raise InvalidGrid("tile origin not a multiple of stride")
    q_lo = x // s
    r_lo = y // s
    q_hi = np.minimum((x + p - 1) // s, cols - 1)
    r_hi = np.minimum((y + p - 1) // s, rows - 1)
    return q_lo, q_hi, r_lo, r_hi


def accumulate_grid(
    grid: TileGrid, scores: TileScores, threads: int = 1
) -> SimilarityGrid:
    """Average each stride cell's covering-tile scores (ascending tile_id).

    A cell's covering tiles are those whose patch contains the cell's origin
    pixel.  Cells with no covering tile carry the sentinel -2.0 and
    coverage 0.  Output bytes are independent of the thread count.
    """
    if scores.num_tiles != grid.num_tiles:
        raise InvalidInput(
            f"score rows {scores.num_tiles} != planned tiles {grid.num_tiles}"
        )
    if threads < 1:
        raise InvalidInput(f"threads must be >= 1, got {threads}")
    cols, rows = grid.grid_cols, grid.grid_rows
    n_classes = scores.num_classes
    acc = np.zeros((rows, cols, n_classes), dtype=np.float64)
    cov = np.zeros((rows, cols), dtype=np.int64)
    q_lo, q_hi, r_lo, r_hi = _tile_cell_spans(grid, cols, rows)
    sc = scores.scores

    def sweep(band_lo: int, band_hi: int) -> None:
        # ascending tile_id sweep restricted to rows [band_lo, band_hi)
        for j in range(grid.num_tiles):
            rl = max(int(r_lo[j]), band_lo)
            rh = min(int(r_hi[j]) + 1, band_hi)
            if rl >= rh:
                continue
            ql, qh = int(q_lo[j]), int(q_hi[j]) + 1
            acc[rl:rh, ql:qh, :] += sc[j]
            cov[rl:rh, ql:qh] += 1

    if threads == 1 or rows == 1:
        sweep(0, rows)
    else:
        bounds = np.linspace(0, rows, min(threads, rows) + 1, dtype=np.int64)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(sweep, int(lo), int(hi))
                for lo, hi in zip(bounds[:-1], bounds[1:])
            ]
            for fut in futures:
                fut.result()

    covered = cov > 0
    per_class = np.full((rows, cols, n_classes), SENTINEL, dtype=np.float64)
    np.divide(acc, cov[:, :, None], out=per_class, where=covered[:, :, None])
    return SimilarityGrid(
        grid_cols=cols,
        grid_rows=rows,
        stride=grid.stride,
        patch_size=grid.patch_size,
        per_class=np.moveaxis(per_class, 2, 0).copy(),
        coverage=cov,
    )


def argmax_mask(sim: SimilarityGrid) -> SegmentationMask:
    """Label each covered cell with its best class; ties pick the lowest id."""
    n_classes = sim.num_classes
    if n_classes < 1:
        raise InvalidInput("similarity grid has no classes")
    if n_classes > NO_LABEL:
        raise InvalidInput(f"cannot encode {n_classes} classes in 8-bit labels")
    labels = np.argmax(sim.per_class, axis=0).astype(np.uint8)
    labels[sim.coverage == 0] = NO_LABEL
    return SegmentationMask(
        grid_cols=sim.grid_cols,
        grid_rows=sim.grid_rows,
        stride=sim.stride,
        patch_size=sim.patch_size,
        labels=labels,
    )


# ---------------------------------------------------------------------------
# artifact export

def _sidecar(stride: int, patch_size: int, class_ids: list[int] | None) -> bytes:
    doc = {"stride": stride, "patch_size": patch_size}
    if class_ids is not None:
        doc["class_ids"] = class_ids
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=True).encode("ascii")


def export_similarity(sim: SimilarityGrid, out_dir, stem: str = "similarity") -> list:
    """One float32 TIFF per class plus a JSON sidecar; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    class_ids = list(range(sim.num_classes))
    paths = []
    for c in class_ids:
        path = out_dir / f"{stem}_class{c}.tif"
        imgio.write_f32_tiff(sim.per_class[c].astype(np.float32), path)
        paths.append(path)
    sidecar = out_dir / f"{stem}.json"
    sidecar.write_bytes(_sidecar(sim.stride, sim.patch_size, class_ids))
    paths.append(sidecar)
    return paths


def export_mask(mask: SegmentationMask, path) -> list:
    """8-bit PNG of labels plus a JSON sidecar next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    imgio.write_png(mask.labels, path)
    sidecar = path.with_suffix(".json")
    sidecar.write_bytes(_sidecar(mask.stride, mask.patch_size, None))
    return [path, sidecar]


def load_mask(path) -> SegmentationMask:
    """Read a mask PNG and its sidecar back into a SegmentationMask."""
    path = Path(path)
    labels = imgio.read_gray(path)
    sidecar = path.with_suffix(".json")
    try:
        doc = json.loads(sidecar.read_bytes())
        stride = int(doc["stride"])
        patch_size = int(doc["patch_size"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CorruptError(f"mask sidecar {sidecar} invalid: {exc}") from exc
    return SegmentationMask(
        grid_cols=labels.shape[1],
        grid_rows=labels.shape[0],
        stride=stride,
        patch_size=patch_size,
        labels=labels,
    )
