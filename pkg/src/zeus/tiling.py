"""Tissue detection and overlapping tile-lattice planning.

A slide is tiled with square patches on a stride-aligned lattice: candidate
origins are the multiples of the stride at which the whole patch still fits.
Candidates are optionally filtered by the fraction of tissue they cover,
measured exactly on the nearest-neighbor-upsampled thumbnail mask.  Kept
tiles get dense row-major ids; those ids key every downstream artifact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ._area import UpsampledMaskArea
from .errors import CorruptError, FormatError, InvalidInput, IoError

GRID_SCHEMA = "zeus-grid/1"
DEFAULT_SAT_THRESHOLD = 25


@dataclass(frozen=True)
class SlideGeometry:
    """Slide dimensions at working magnification; mpp is informational."""

    slide_id: str
    width_px: int
    height_px: int
    magnification: float = 10.0
    mpp: float | None = None

    def __post_init__(self) -> None:
        if self.width_px < 1 or self.height_px < 1:
            raise InvalidInput(
                f"slide dims must be >= 1, got {self.width_px}x{self.height_px}"
            )
        if self.magnification is not None and self.magnification <= 0:
            raise InvalidInput(f"magnification must be > 0, got {self.magnification}")


@dataclass
class TissueMask:
    """Binary tissue raster at thumbnail resolution (1 = tissue)."""

    width: int
    height: int
    downsample: int
    bits: np.ndarray

    def __post_init__(self) -> None:
        if self.downsample < 1:
            raise InvalidInput(f"downsample must be >= 1, got {self.downsample}")
        self.bits = (np.asarray(self.bits) != 0).astype(np.uint8)
        if self.bits.shape != (self.height, self.width):
            raise InvalidInput(
                f"mask raster shape {self.bits.shape} does not match "
                f"{self.height}x{self.width}"
            )

    def covers(self, geom: SlideGeometry) -> bool:
        return (
            self.width * self.downsample >= geom.width_px - self.downsample
            and self.height * self.downsample >= geom.height_px - self.downsample
        )


@dataclass
class TileGrid:
    """Planned patch lattice plus the stride-cell raster dimensions."""

    patch_size: int
    stride: int
    tiles: np.ndarray = field(repr=False)  # (K, 3) int64 rows [tile_id, x, y]
    grid_cols: int
    grid_rows: int

    def __post_init__(self) -> None:
        self.tiles = np.asarray(self.tiles, dtype=np.int64).reshape(-1, 3)

    @property
    def num_tiles(self) -> int:
        return len(self.tiles)


def stride_for(patch_size: int, overlap_frac: float) -> int:
    """Tile stride for a patch size and overlap fraction (round half up)."""
    if not 0 <= overlap_frac < 1:
        raise InvalidInput(f"overlap_frac must be in [0, 1), got {overlap_frac}")
    return max(1, int(math.floor(patch_size * (1.0 - overlap_frac) + 0.5)))


def grid_cells(extent_px: int, patch_size: int, stride: int) -> int:
    """Stride-cell raster length along one axis: ceil((extent-patch)/stride)+1."""
    return (extent_px - patch_size + stride - 1) // stride + 1


# ---------------------------------------------------------------------------
# tissue detection

def _saturation(rgb: np.ndarray) -> np.ndarray:
    # integer HSV saturation: (max-min)*255 // max, 0 where max == 0
    mx = rgb.max(axis=2).astype(np.int64)
    mn = rgb.min(axis=2).astype(np.int64)
    sat = np.zeros_like(mx)
    nz = mx > 0
    sat[nz] = (mx[nz] - mn[nz]) * 255 // mx[nz]
    return sat.astype(np.uint8)


def _otsu_threshold(values: np.ndarray) -> int:
    hist = np.bincount(values.reshape(-1), minlength=256).astype(np.float64)
    if np.count_nonzero(hist) < 2:
        return DEFAULT_SAT_THRESHOLD
    total = hist.sum()
    levels = np.arange(256, dtype=np.float64)
    w0 = hist.cumsum()
    w1 = total - w0
    mass0 = (hist * levels).cumsum()
    mass_total = mass0[-1]
    valid = (w0 > 0) & (w1 > 0)
    mu0 = np.where(valid, mass0 / np.where(w0 > 0, w0, 1), 0.0)
    mu1 = np.where(valid, (mass_total - mass0) / np.where(w1 > 0, w1, 1), 0.0)
    between = np.where(valid, w0 * w1 * (mu0 - mu1) ** 2, -1.0)
    return int(np.argmax(between))


def detect_tissue(
    thumbnail: np.ndarray,
    downsample: int,
    median_radius: int = 2,
    sat_threshold: int | str = "auto",
    min_region_px: int = 16,
) -> TissueMask:
    """Threshold the median-filtered saturation channel into a tissue mask.

    With sat_threshold="auto" the cut is chosen by Otsu's method; a flat
    histogram (single occupied bin) falls back to a fixed default so blank
    and fully stained thumbnails both resolve sensibly.  Connected regions
    (8-connectivity) smaller than min_region_px are dropped.
    """
    thumbnail = np.asarray(thumbnail)
    if thumbnail.size == 0:
        raise InvalidInput("thumbnail is empty")
    if thumbnail.ndim != 3 or thumbnail.shape[2] < 3:
        raise InvalidInput(f"thumbnail must be HxWx3 RGB, got shape {thumbnail.shape}")
    sat = _saturation(thumbnail[:, :, :3].astype(np.uint8))
    if median_radius > 0:
        sat = ndimage.median_filter(sat, size=2 * median_radius + 1)
    if sat_threshold == "auto":
        threshold = _otsu_threshold(sat)
    else:
        threshold = int(sat_threshold)
    bits = sat > threshold
    if min_region_px > 1 and bits.any():
        labels, n = ndimage.label(bits, structure=np.ones((3, 3), dtype=np.uint8))
        sizes = np.bincount(labels.reshape(-1), minlength=n + 1)
        keep = sizes >= min_region_px
        keep[0] = False
        bits = keep[labels]
    h, w = bits.shape
    return TissueMask(width=w, height=h, downsample=downsample, bits=bits)


# ---------------------------------------------------------------------------
# lattice planning

def plan_tiles(
    geom: SlideGeometry,
    patch_size: int,
    overlap_frac: float | None = None,
    tissue: TissueMask | None = None,
    min_tissue_frac: float = 0.25,
    stride: int | None = None,
) -> TileGrid:
    """Plan the stride-aligned lattice of fully contained patches.

    Exactly one of overlap_frac / stride selects the spacing.  With a tissue
    mask, a candidate survives iff the exact tissue area under it (on the
    upsampled mask) is at least min_tissue_frac of the patch area.
    """
    if patch_size < 1:
        raise InvalidInput(f"patch_size must be >= 1, got {patch_size}")
    if patch_size > min(geom.width_px, geom.height_px):
        raise InvalidInput(
            f"patch_size {patch_size} exceeds slide "
            f"{geom.width_px}x{geom.height_px}"
        )
    if (overlap_frac is None) == (stride is None):
        raise InvalidInput("exactly one of overlap_frac and stride must be given")
    if stride is None:
        stride = stride_for(patch_size, overlap_frac)
    elif not 1 <= stride <= patch_size:
        raise InvalidInput(f"stride must be in [1, patch_size], got {stride}")

    xs = np.arange(0, geom.width_px - patch_size + 1, stride, dtype=np.int64)
    ys = np.arange(0, geom.height_px - patch_size + 1, stride, dtype=np.int64)
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    xx = xx.reshape(-1)
    yy = yy.reshape(-1)

    if tissue is not None:
        if not tissue.covers(geom):
            raise InvalidInput(
                f"tissue mask {tissue.width}x{tissue.height} at downsample "
                f"{tissue.downsample} does not cover slide "
                f"{geom.width_px}x{geom.height_px}"
            )
        area = UpsampledMaskArea(tissue.bits, float(tissue.downsample))
        covered = area.rect(xx, yy, xx + patch_size, yy + patch_size)
        keep = covered >= min_tissue_frac * float(patch_size) ** 2
        xx = xx[keep]
        yy = yy[keep]

    ids = np.arange(len(xx), dtype=np.int64)
    tiles = np.stack([ids, xx, yy], axis=1)
    return TileGrid(
        patch_size=patch_size,
        stride=stride,
        tiles=tiles,
        grid_cols=grid_cells(geom.width_px, patch_size, stride),
        grid_rows=grid_cells(geom.height_px, patch_size, stride),
    )


# ---------------------------------------------------------------------------
# manifest

def grid_manifest_bytes(geom: SlideGeometry, grid: TileGrid) -> bytes:
    """Canonical manifest encoding; identical inputs give identical bytes."""
    doc = {
        "schema": GRID_SCHEMA,
        "slide": {
            "id": geom.slide_id,
            "width_px": geom.width_px,
            "height_px": geom.height_px,
            "magnification": geom.magnification,
        },
        "patch_size": grid.patch_size,
        "stride": grid.stride,
        "tiles": [[int(t), int(x), int(y)] for t, x, y in grid.tiles],
    }
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=True).encode("ascii")


def write_grid_manifest(geom: SlideGeometry, grid: TileGrid, destination) -> int:
    data = grid_manifest_bytes(geom, grid)
    try:
        if hasattr(destination, "write"):
            destination.write(data)
        else:
            with open(destination, "wb") as fh:
                fh.write(data)
    except OSError as exc:
        raise IoError(f"cannot write grid manifest: {exc}") from exc
    return len(data)


def read_grid_manifest(source) -> tuple[SlideGeometry, TileGrid]:
    try:
        if hasattr(source, "read"):
            data = source.read()
        else:
            with open(source, "rb") as fh:
                data = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read grid manifest: {exc}") from exc
    try:
        doc = json.loads(data)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"grid manifest is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("schema") != GRID_SCHEMA:
        raise FormatError(
            f"expected schema {GRID_SCHEMA!r}, got {doc.get('schema')!r}"
            if isinstance(doc, dict)
            else "grid manifest is not a JSON object"
        )
    try:
        slide = doc["slide"]
        geom = SlideGeometry(
            slide_id=str(slide["id"]),
            width_px=int(slide["width_px"]),
            height_px=int(slide["height_px"]),
            magnification=float(slide["magnification"]),
        )
        patch_size = int(doc["patch_size"])
        stride = int(doc["stride"])
        raw_tiles = doc["tiles"]
        tiles = np.asarray(raw_tiles, dtype=np.int64).reshape(-1, 3)
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptError(f"grid manifest field invalid: {exc}") from exc
    grid = TileGrid(
        patch_size=patch_size,
        stride=stride,
        tiles=tiles,
        grid_cols=grid_cells(geom.width_px, patch_size, stride),
        grid_rows=grid_cells(geom.height_px, patch_size, stride),
    )
    validate_grid(geom, grid)
    return geom, grid


def validate_grid(geom: SlideGeometry, grid: TileGrid) -> None:
    """Check lattice invariants; raises CorruptError on violation."""
    if not 1 <= grid.stride <= grid.patch_size:
        raise CorruptError(
            f"stride {grid.stride} outside [1, {grid.patch_size}]"
        )
    t = grid.tiles
    if len(t) == 0:
        return
    if not np.array_equal(t[:, 0], np.arange(len(t))):
        raise CorruptError("tile_ids are not dense 0..K-1")
    dy = np.diff(t[:, 2])
    dx = np.diff(t[:, 1])
    if not np.all((dy > 0) | ((dy == 0) & (dx > 0))):
        raise CorruptError("tiles are not strictly row-major sorted by (y, x)")
    if np.any(t[:, 1] % grid.stride) or np.any(t[:, 2] % grid.stride):
        raise CorruptError("tile origin not a multiple of stride")
    if np.any(t[:, 1] + grid.patch_size > geom.width_px) or np.any(
        t[:, 2] + grid.patch_size > geom.height_px
    ):
        raise CorruptError("tile extends beyond slide bounds")
    if np.any(t[:, 1] < 0) or np.any(t[:, 2] < 0):
        raise CorruptError("negative tile origin")
