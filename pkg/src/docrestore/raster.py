"""Grayscale raster I/O and box-to-pixel helpers.

Pages are numpy uint8 arrays of shape (height, width); stored as PNG.
Real-valued box geometry is rounded to pixels only here, at the last
moment: floor on the min edge, ceil on the max edge, clamped to bounds.
"""

from __future__ import annotations

import math

import numpy as np
from PIL import Image

from .model import BBox


def load_gray(path: str) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("L"), dtype=np.uint8)


def save_gray(image: np.ndarray, path: str) -> None:
    if image.dtype != np.uint8 or image.ndim != 2:
        raise ValueError("expected a 2-D uint8 array")
    Image.fromarray(image, mode="L").save(path, format="PNG")


def pixel_bounds(box: BBox, width: int, height: int) -> tuple[int, int, int, int]:
    """(x0, y0, x1, y1) integer pixel bounds of `box`, clamped to image."""
    x0 = max(0, min(width, math.floor(box.x_min)))
    y0 = max(0, min(height, math.floor(box.y_min)))
    x1 = max(x0, min(width, math.ceil(box.x_max)))
    y1 = max(y0, min(height, math.ceil(box.y_max)))
    return x0, y0, x1, y1


def crop(image: np.ndarray, box: BBox) -> np.ndarray:
    h, w = image.shape
    x0, y0, x1, y1 = pixel_bounds(box, w, h)
    return image[y0:y1, x0:x1]


def box_mask(shape: tuple[int, int], boxes, origin: tuple[int, int] = (0, 0)) -> np.ndarray:
    """Binary uint8 mask with 1 inside each box, relative to `origin`."""
    mask = np.zeros(shape, dtype=np.uint8)
    oy, ox = origin[1], origin[0]
    h, w = shape
    for box in boxes:
        shifted = BBox(box.x_min - ox, box.y_min - oy, box.x_max - ox, box.y_max - oy)
        x0, y0, x1, y1 = pixel_bounds(shifted, w, h)
        mask[y0:y1, x0:x1] = 1
    return mask
