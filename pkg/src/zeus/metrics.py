"""Mask evaluation: Dice, precision, recall, and dataset aggregation.

Predictions live on the stride-cell raster, so ground truth is first
binarized onto the same raster: a cell counts as tumor when tumor pixels
make up at least half of the cell area that the ground-truth raster
actually covers.  Counts, not rates, are the primitive: every metric is a
pure function of the (tp, fp, fn, tn) tuple, with explicit conventions for
empty masks so batch evaluation never divides by zero.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from ._area import UpsampledMaskArea
from .errors import InvalidInput
from .simcore import NO_LABEL, SegmentationMask
from .tiling import SlideGeometry, TileGrid


@dataclass
class GroundTruthMask:
    """Binary tumor raster, possibly downsampled relative to the slide."""

    width: int
    height: int
    bits: np.ndarray

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise InvalidInput(f"mask dims must be >= 1, got {self.width}x{self.height}")
        self.bits = (np.asarray(self.bits) != 0).astype(np.uint8)
        if self.bits.shape != (self.height, self.width):
            raise InvalidInput(
                f"mask raster shape {self.bits.shape} does not match "
                f"{self.height}x{self.width}"
            )


@dataclass
class SlideReport:
    slide_id: str
    dsc: float
    precision: float
    recall: float
    tp: int
    fp: int
    fn: int
    tn: int


@dataclass
class DatasetReport:
    group_key: str
    mean_dsc: float
    std_dsc: float
    mean_precision: float
    std_precision: float
    mean_recall: float
    std_recall: float
    n_slides: int


# ---------------------------------------------------------------------------
# resampling and counting

def resample_gt(
    gt: GroundTruthMask,
    grid: TileGrid,
    scale: float = 1.0,
    geom: SlideGeometry | None = None,
) -> np.ndarray:
    """Binarize ground truth onto the stride-cell raster.

    A cell becomes 1 iff tumor area is >= half of the cell area covered by
    the (upscaled) ground-truth raster.  With a geometry, the scaled mask
    must match the slide to within one mask pixel.
    """
    if scale <= 0:
        raise InvalidInput(f"scale must be positive, got {scale}")
    if geom is not None:
        if (
            abs(gt.width * scale - geom.width_px) > scale
            or abs(gt.height * scale - geom.height_px) > scale
        ):
            raise InvalidInput(
                f"ground truth {gt.width}x{gt.height} at scale {scale} does not "
                f"match slide {geom.width_px}x{geom.height_px}"
            )
    s = grid.stride
    cols, rows = grid.grid_cols, grid.grid_rows
    area = UpsampledMaskArea(gt.bits, scale)
    qs = np.arange(cols, dtype=np.int64) * s
    rs = np.arange(rows, dtype=np.int64) * s
    x0, y0 = np.meshgrid(qs, rs)
    tumor = area.rect(x0, y0, x0 + s, y0 + s)
    covered = area.extent_rect(x0, y0, x0 + s, y0 + s)
    cells = (covered > 0) & (tumor >= 0.5 * covered)
    return cells.astype(np.uint8)


def confusion(
    pred: SegmentationMask, gt_cells: np.ndarray, tumor_class: int = 1
) -> tuple[int, int, int, int]:
    """(tp, fp, fn, tn) over all cells; label 255 counts as negative."""
    if not 0 <= tumor_class < NO_LABEL:
        raise InvalidInput(f"tumor_class must be in [0, 254], got {tumor_class}")
    gt_cells = np.asarray(gt_cells) != 0
    if pred.labels.shape != gt_cells.shape:
        raise InvalidInput(
            f"prediction raster {pred.labels.shape} != ground truth {gt_cells.shape}"
        )
    pos = pred.labels == tumor_class
    tp = int(np.count_nonzero(pos & gt_cells))
    fp = int(np.count_nonzero(pos & ~gt_cells))
    fn = int(np.count_nonzero(~pos & gt_cells))
    tn = int(np.count_nonzero(~pos & ~gt_cells))
    return tp, fp, fn, tn


# ---------------------------------------------------------------------------
# metric definitions

def _check_counts(*counts: int) -> None:
    if any(c < 0 for c in counts):
        raise InvalidInput(f"confusion counts must be nonnegative, got {counts}")


def dsc(tp: int, fp: int, fn: int) -> float:
    """Dice coefficient 2tp/(2tp+fp+fn); both masks empty scores 1.0."""
    _check_counts(tp, fp, fn)
    denom = 2 * tp + fp + fn
    if denom == 0:
        return 1.0
    return 2.0 * tp / denom


def precision_recall(tp: int, fp: int, fn: int) -> tuple[float, float]:
    """Precision and recall; an empty denominator scores 1.0 only when the
    opposing error count is also zero."""
    _check_counts(tp, fp, fn)
    if tp + fp == 0:
        precision = 1.0 if fn == 0 else 0.0
    else:
        precision = tp / (tp + fp)
    if tp + fn == 0:
        recall = 1.0 if fp == 0 else 0.0
    else:
        recall = tp / (tp + fn)
    return precision, recall


def evaluate_mask(
    slide_id: str,
    pred: SegmentationMask,
    gt_cells: np.ndarray,
    tumor_class: int = 1,
) -> SlideReport:
    tp, fp, fn, tn = confusion(pred, gt_cells, tumor_class)
    precision, recall = precision_recall(tp, fp, fn)
    return SlideReport(
        slide_id=slide_id,
        dsc=dsc(tp, fp, fn),
        precision=precision,
        recall=recall,
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
    )


def aggregate(reports: list[SlideReport], group_key: str) -> DatasetReport:
    """Mean and population standard deviation per metric over slides."""
    if not reports:
        raise InvalidInput("cannot aggregate an empty report list")
    d = np.array([r.dsc for r in reports], dtype=np.float64)
    p = np.array([r.precision for r in reports], dtype=np.float64)
    r_ = np.array([r.recall for r in reports], dtype=np.float64)
    return DatasetReport(
        group_key=group_key,
        mean_dsc=float(d.mean()),
        std_dsc=float(d.std(ddof=0)),
        mean_precision=float(p.mean()),
        std_precision=float(p.std(ddof=0)),
        mean_recall=float(r_.mean()),
        std_recall=float(r_.std(ddof=0)),
        n_slides=len(reports),
    )


# ---------------------------------------------------------------------------
# report serialization

def write_reports(
    reports: list[SlideReport], summary: DatasetReport, destination
) -> None:
    """JSON lines: one slide object per line, dataset summary last."""
    lines = []
    for rep in reports:
        doc = {"type": "slide", **asdict(rep)}
        lines.append(json.dumps(doc, separators=(",", ":"), ensure_ascii=True))
    tail = {"type": "dataset", **asdict(summary), "cell_domain": "all_grid_cells"}
    lines.append(json.dumps(tail, separators=(",", ":"), ensure_ascii=True))
    data = ("\n".join(lines) + "\n").encode("ascii")
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        with open(destination, "wb") as fh:
            fh.write(data)


def format_table(summaries: list[DatasetReport]) -> str:
    """Plain-text mean±std table, three decimals per metric."""
    header = f"{'group':<20} {'DSC':>13} {'precision':>13} {'recall':>13} {'n':>5}"
    rows = [header, "-" * len(header)]
    for s in summaries:
        cells = [
            f"{mean:.3f}±{std:.3f}"
            for mean, std in (
                (s.mean_dsc, s.std_dsc),
                (s.mean_precision, s.std_precision),
                (s.mean_recall, s.std_recall),
            )
        ]
        rows.append(
            f"{s.group_key:<20} {cells[0]:>13} {cells[1]:>13} {cells[2]:>13} "
            f"{s.n_slides:>5}"
        )
    return "\n".join(rows)
