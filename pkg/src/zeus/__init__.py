"""Zero-shot whole-slide-image segmentation from file-based embeddings.

The pipeline: plan an overlapping tile lattice over a slide, score each
tile's embedding against prompt-ensembled class prototypes, average the
scores of overlapping tiles into stride-cell similarity grids, take the
per-cell argmax as the segmentation mask, and evaluate it with Dice,
precision, and recall.  Embeddings enter and leave through binary files so
any encoder can plug in.
"""

from . import embio, metrics, phantom, prompts, render, simcore, tiling
from .errors import ZeusError

__version__ = "0.1.0"

__all__ = [
    "ZeusError",
    "embio",
    "metrics",
    "phantom",
    "prompts",
    "render",
    "simcore",
    "tiling",
    "__version__",
]
