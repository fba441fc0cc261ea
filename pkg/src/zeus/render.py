"""Human-inspectable outputs: mask expansion and contour overlays.

Overlays work on thumbnails, never the full-resolution canvas: every layer
is a binary raster with its own pixels-per-cell scale, resampled to the
thumbnail grid, reduced to its 4-adjacency boundary, thickened, and painted
over the base image in declared order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import InvalidInput
from .metrics import GroundTruthMask
from .simcore import SegmentationMask


@dataclass
class OverlayLayer:
    """One contour source: binary raster + slide pixels per raster cell."""

    mask: np.ndarray
    scale: float
    color: tuple[int, int, int]
    label: str = ""

    def __post_init__(self) -> None:
        self.mask = (np.asarray(self.mask) != 0).astype(np.uint8)
        if self.mask.ndim != 2:
            raise InvalidInput(f"layer mask must be 2-D, got shape {self.mask.shape}")
        if self.scale <= 0:
            raise InvalidInput(f"layer scale must be positive, got {self.scale}")
        if len(self.color) != 3 or not all(0 <= c <= 255 for c in self.color):
            raise InvalidInput(f"color must be three bytes, got {self.color}")


@dataclass
class OverlaySpec:
    layers: list[OverlayLayer]
    thumbnail: np.ndarray = field(repr=False)
    downsample: int = 1


def layer_from_segmentation(
    mask: SegmentationMask, positive_class: int, color: tuple[int, int, int],
    label: str = "",
) -> OverlayLayer:
    return OverlayLayer(
        mask=mask.labels == positive_class, scale=float(mask.stride),
        color=color, label=label,
    )


def layer_from_ground_truth(
    gt: GroundTruthMask, scale: float, color: tuple[int, int, int], label: str = ""
) -> OverlayLayer:
    return OverlayLayer(mask=gt.bits, scale=scale, color=color, label=label)


# ---------------------------------------------------------------------------

def expand_mask(mask: SegmentationMask, target_w: int, target_h: int) -> np.ndarray:
    """Nearest-neighbor expansion of cell labels to a pixel raster."""
    if target_w < 1 or target_h < 1:
        raise InvalidInput(f"target dims must be >= 1, got {target_w}x{target_h}")
    if target_w < mask.grid_cols or target_h < mask.grid_rows:
        raise InvalidInput(
            f"target {target_w}x{target_h} smaller than grid "
            f"{mask.grid_cols}x{mask.grid_rows}"
        )
    col_idx = np.minimum(
        np.arange(target_w, dtype=np.int64) // mask.stride, mask.grid_cols - 1
    )
    row_idx = np.minimum(
        np.arange(target_h, dtype=np.int64) // mask.stride, mask.grid_rows - 1
    )
    return mask.labels[np.ix_(row_idx, col_idx)]


def boundary_pixels(mask: np.ndarray) -> np.ndarray:
    """Positive pixels with a 4-adjacent non-positive pixel (or the border)."""
    m = np.asarray(mask) != 0
    padded = np.pad(m, 1)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return m & ~interior


def _layer_on_thumbnail(
    layer: OverlayLayer, thumb_w: int, thumb_h: int, downsample: int
) -> np.ndarray:
    mask_h, mask_w = layer.mask.shape
    slide_w = thumb_w * downsample
    slide_h = thumb_h * downsample
    extent_w = mask_w * layer.scale
    extent_h = mask_h * layer.scale
    # generous sanity check: the layer must span the same order of magnitude
    if not (0.5 <= extent_w / slide_w <= 2.0 and 0.5 <= extent_h / slide_h <= 2.0):
        raise InvalidInput(
            f"layer extent {extent_w:.0f}x{extent_h:.0f} does not match slide "
            f"thumbnail extent {slide_w}x{slide_h}"
        )
    xs = np.arange(thumb_w, dtype=np.float64) * downsample / layer.scale
    ys = np.arange(thumb_h, dtype=np.float64) * downsample / layer.scale
    col_idx = np.minimum(xs.astype(np.int64), mask_w - 1)
    row_idx = np.minimum(ys.astype(np.int64), mask_h - 1)
    return layer.mask[np.ix_(row_idx, col_idx)]


def overlay_contours(spec: OverlaySpec, thickness: int = 3) -> np.ndarray:
    """Paint each layer's boundary onto a copy of the thumbnail."""
    thumb = np.asarray(spec.thumbnail)
    if thumb.ndim != 3 or thumb.shape[2] != 3 or thumb.dtype != np.uint8:
        raise InvalidInput("thumbnail must be HxWx3 uint8")
    if thickness < 1:
        raise InvalidInput(f"thickness must be >= 1, got {thickness}")
    out = thumb.copy()
    thumb_h, thumb_w = thumb.shape[:2]
    for layer in spec.layers:
        scaled = _layer_on_thumbnail(layer, thumb_w, thumb_h, spec.downsample)
        edge = boundary_pixels(scaled)
        if thickness > 1:
            edge = ndimage.binary_dilation(
                edge, structure=np.ones((thickness, thickness), dtype=bool)
            )
        out[edge] = np.asarray(layer.color, dtype=np.uint8)
    return out
