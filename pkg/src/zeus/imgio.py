"""Thin raster IO wrappers.

All writers are deterministic: no timestamps or software tags, so identical
arrays produce identical files, which the idempotence guarantees elsewhere
rely on.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import InvalidInput, IoError


def read_rgb(path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"))
    except OSError as exc:
        raise IoError(f"cannot read image {path}: {exc}") from exc


def read_gray(path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("L"))
    except OSError as exc:
        raise IoError(f"cannot read image {path}: {exc}") from exc


def write_png(array: np.ndarray, path) -> None:
    array = np.asarray(array)
    if array.dtype != np.uint8:
        raise InvalidInput(f"PNG writer expects uint8, got {array.dtype}")
    if array.ndim == 2:
        img = Image.fromarray(array, mode="L")
    elif array.ndim == 3 and array.shape[2] == 3:
        img = Image.fromarray(array, mode="RGB")
    else:
        raise InvalidInput(f"unsupported PNG shape {array.shape}")
    try:
        img.save(path, format="PNG")
    except OSError as exc:
        raise IoError(f"cannot write image {path}: {exc}") from exc


def write_f32_tiff(array: np.ndarray, path) -> None:
    array = np.asarray(array, dtype=np.float32)
    if array.ndim != 2:
        raise InvalidInput(f"float TIFF writer expects 2-D, got shape {array.shape}")
    try:
        Image.fromarray(array, mode="F").save(path, format="TIFF")
    except OSError as exc:
        raise IoError(f"cannot write image {path}: {exc}") from exc


def read_f32_tiff(path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            if img.mode != "F":
                raise InvalidInput(f"{path} is not a 32-bit float image")
            return np.asarray(img, dtype=np.float32)
    except OSError as exc:
        raise IoError(f"cannot read image {path}: {exc}") from exc
