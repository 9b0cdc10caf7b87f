"""Decoded-pixel container and grayscale helpers.

Images are row-major sRGB uint8 arrays of shape (height, width, 3). Decoding
goes through Pillow (baseline JPEG and PNG); everything downstream is numpy.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image

# ITU-R BT.601 luma coefficients, the fixed grayscale used everywhere.
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


@dataclass(frozen=True)
class PixelImage:
    pixels: np.ndarray  # (H, W, 3) uint8

    def __post_init__(self):
        px = self.pixels
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"expected (H, W, 3) pixel array, got shape {px.shape}")
        if px.dtype != np.uint8:
            raise ValueError(f"expected uint8 pixels, got {px.dtype}")
        if px.shape[0] == 0 or px.shape[1] == 0:
            raise ValueError("image must contain at least one pixel")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @classmethod
    def from_array(cls, array: np.ndarray) -> "PixelImage":
        return cls(np.ascontiguousarray(array, dtype=np.uint8))

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "PixelImage":
        with Image.open(path) as img:
            rgb = img.convert("RGB")
            return cls(np.asarray(rgb, dtype=np.uint8))

    @classmethod
    def solid(cls, width: int, height: int, rgb: tuple[int, int, int]) -> "PixelImage":
        px = np.empty((height, width, 3), dtype=np.uint8)
        px[:, :] = rgb
        return cls(px)

    def luma(self) -> np.ndarray:
        """BT.601 luma as float64, range [0, 255]."""
        return self.pixels.astype(np.float64) @ _LUMA

    def gray_u8(self) -> np.ndarray:
        """Rounded 8-bit luma, used for histogram statistics."""
        return np.clip(np.round(self.luma()), 0, 255).astype(np.uint8)
