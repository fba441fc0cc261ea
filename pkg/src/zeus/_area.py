"""Exact area queries against an upscaled binary raster.

Both the tissue filter in tile planning and the ground-truth resampler need
the same primitive: "how much 1-area of a low-resolution binary mask,
nearest-neighbor upscaled by an integer or fractional factor, falls inside
an axis-aligned rectangle given in full-resolution units".  Computing this
on a materialized upscaled raster would cost scale^2 memory; instead we use
prefix-sum tables on the low-resolution raster and handle the fractional
cell overlaps at the rectangle border analytically.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInput


class UpsampledMaskArea:
    """Area-of-ones oracle for a binary raster scaled up by ``scale``.

    The raster covers ``[0, w*scale) x [0, h*scale)`` in output units and is
    zero outside.  Queries accept scalars or arrays (broadcast together).
    Results are exact whenever the rectangle bounds divided by ``scale`` are
    exactly representable, which holds for all integer bounds with integer
    or power-of-two scales.
    """

    def __init__(self, bits: np.ndarray, scale: float) -> None:
        bits = np.asarray(bits)
        if bits.ndim != 2 or bits.size == 0:
            raise InvalidInput("mask raster must be a nonempty 2-D array")
        if scale <= 0:
            raise InvalidInput(f"scale must be positive, got {scale}")
        self.height, self.width = bits.shape
        self.scale = float(scale)
        b = (bits != 0).astype(np.float64)
        self._bits = b
        # full[i, j] = sum of bits[:i, :j]
        full = np.zeros((self.height + 1, self.width + 1))
        full[1:, 1:] = b.cumsum(axis=0).cumsum(axis=1)
        self._full = full
        # cols[i, j] = sum of bits[:i, j];  rows[i, j] = sum of bits[i, :j]
        cols = np.zeros((self.height + 1, self.width))
        cols[1:, :] = b.cumsum(axis=0)
        rows = np.zeros((self.height, self.width + 1))
        rows[:, 1:] = b.cumsum(axis=1)
        self._cols = cols
        self._rows = rows

    def _corner(self, x, y):
        # Integral of ones over [0, x) x [0, y) in output units.  The
        # fractional cell parts are kept in output units (px = x - iu*scale)
        # so every term is a product of exactly representable values when
        # the bounds and scale are integers; no term divides by scale.
        s = self.scale
        u = np.clip(np.asarray(x, dtype=np.float64), 0.0, self.width * s)
        v = np.clip(np.asarray(y, dtype=np.float64), 0.0, self.height * s)
        iu = np.floor(u / s).astype(np.int64)
        iv = np.floor(v / s).astype(np.int64)
        px = u - iu * s
        py = v - iv * s
        # At u == width*scale, iu == width and px == 0; clamp the lookup
        # column so the zero-weighted partial terms stay in bounds.
        ju = np.minimum(iu, self.width - 1)
        jv = np.minimum(iv, self.height - 1)
        return (
            (s * s) * self._full[iv, iu]
            + (px * s) * self._cols[iv, ju]
            + (py * s) * self._rows[jv, iu]
            + (px * py) * self._bits[jv, ju]
        )

    def rect(self, x0, y0, x1, y1):
        """Area of upscaled 1-pixels inside each rectangle [x0,x1) x [y0,y1)."""
        return (
            self._corner(x1, y1)
            - self._corner(x0, y1)
            - self._corner(x1, y0)
            + self._corner(x0, y0)
        )

    def extent_rect(self, x0, y0, x1, y1):
        """Area of each rectangle clipped to the covered extent (denominator)."""
        ew = self.width * self.scale
        eh = self.height * self.scale
        dx = np.clip(np.minimum(np.asarray(x1, np.float64), ew), 0, None) - np.clip(
            np.minimum(np.asarray(x0, np.float64), ew), 0, None
        )
        dy = np.clip(np.minimum(np.asarray(y1, np.float64), eh), 0, None) - np.clip(
            np.minimum(np.asarray(y0, np.float64), eh), 0, None
        )
        return np.maximum(dx, 0.0) * np.maximum(dy, 0.0)
