"""Perceptual-space descriptors computed from decoded pixels.

Color side: pixels go to CIE 1976 L*a*b* (sRGB decoding, D65 white) and each
pixel is assigned to the nearest of 11 named reference colors; global HSV
statistics use a saturation-weighted circular mean for hue. Structural side:
Canny contours feed a curvilinearity score (mean acute orientation deviation
between 8-adjacent edge pixels, normalized by pi/2) and two complexity
measures (grayscale histogram entropy and edge density).

Every operation is a pure function of (image, config): identical bytes in,
bitwise-identical features out, regardless of batch order or worker count.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .image import PixelImage
from .schema import (
    COLOR_NAMES,
    HsvSummary,
    StructuralFeatures,
    AnnotationRecord,
    quantize_color_proportion,
)

# Canonical sRGB anchors behind the default reference table. The table is
# user-overridable; these anchors are pinned so runs are reproducible.
REFERENCE_ANCHORS_SRGB: dict[str, tuple[int, int, int]] = {
    "Black": (0, 0, 0),
    "White": (255, 255, 255),
    "Gray": (128, 128, 128),
    "Red": (255, 0, 0),
    "Orange": (255, 165, 0),
    "Yellow": (255, 255, 0),
    "Green": (0, 128, 0),
    "Blue": (0, 0, 255),
    "Purple": (128, 0, 128),
    "Pink": (255, 192, 203),
    "Brown": (150, 75, 0),
}

# IEC 61966-2-1 sRGB -> XYZ matrix. The white point is taken as the row sums
# so that (255,255,255) maps to exactly L=100, a=b=0.
_SRGB_TO_XYZ = np.array(
    [
        [0.4124, 0.3576, 0.1805],
        [0.2126, 0.7152, 0.0722],
        [0.0193, 0.1192, 0.9505],
    ],
    dtype=np.float64,
)
_WHITE_POINT = _SRGB_TO_XYZ.sum(axis=1)
_LAB_DELTA = 6.0 / 29.0


def srgb_to_lab(rgb: Sequence[float] | np.ndarray) -> np.ndarray:
    """Convert sRGB (0-255 per channel) to CIE 1976 L*a*b*, D65 white.

    Accepts a single triple or any (..., 3) array; returns float64 of the
    same leading shape. L lies in [0, 100].
    """
    arr = np.asarray(rgb, dtype=np.float64) / 255.0
    linear = np.where(arr <= 0.04045, arr / 12.92, ((arr + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _SRGB_TO_XYZ.T
    t = xyz / _WHITE_POINT
    f = np.where(t > _LAB_DELTA**3, np.cbrt(t), t / (3.0 * _LAB_DELTA**2) + 4.0 / 29.0)
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    lab = np.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1)
    return lab


@dataclass(frozen=True)
class ReferenceColorTable:
    """11 named Lab anchors for nearest-color assignment."""

    names: tuple[str, ...]
    lab: np.ndarray  # (11, 3) float64

    def __post_init__(self):
        if tuple(sorted(self.names)) != tuple(sorted(COLOR_NAMES)):
            raise ValueError(f"reference table must cover exactly {COLOR_NAMES}")
        if self.lab.shape != (len(self.names), 3):
            raise ValueError("lab array shape must be (11, 3)")
        for i in range(len(self.names)):
            for j in range(i + 1, len(self.names)):
                if np.array_equal(self.lab[i], self.lab[j]):
                    raise ValueError(
                        f"anchors {self.names[i]} and {self.names[j]} coincide in Lab"
                    )

    def table_hash(self) -> str:
        payload = json.dumps(
            {n: [round(v, 6) for v in self.lab[i]] for i, n in enumerate(self.names)},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    @classmethod
    def from_srgb_anchors(cls, anchors: Mapping[str, tuple[int, int, int]]) -> "ReferenceColorTable":
        names = tuple(COLOR_NAMES)
        lab = np.stack([srgb_to_lab(anchors[n]) for n in names])
        return cls(names=names, lab=lab)

    @classmethod
    def from_config(cls, entries: Sequence[Mapping]) -> "ReferenceColorTable":
        """Build a table from config entries of {"name", "rgb"} or {"name", "lab"}."""
        by_name: dict[str, np.ndarray] = {}
        for entry in entries:
            name = entry["name"]
            if "lab" in entry:
                by_name[name] = np.asarray(entry["lab"], dtype=np.float64)
            elif "rgb" in entry:
                by_name[name] = srgb_to_lab(entry["rgb"])
            else:
                raise ValueError(f"reference color {name!r} needs an rgb or lab value")
        names = tuple(COLOR_NAMES)
        missing = [n for n in names if n not in by_name]
        if missing:
            raise ValueError(f"reference table missing colors {missing}")
        return cls(names=names, lab=np.stack([by_name[n] for n in names]))


def default_reference_table() -> ReferenceColorTable:
    return ReferenceColorTable.from_srgb_anchors(REFERENCE_ANCHORS_SRGB)


@dataclass(frozen=True)
class ExtractionConfig:
    canny_gaussian_sigma: float = 1.4
    canny_low_ratio: float = 0.1
    canny_high_ratio: float = 0.3
    histogram_bins: int = 256
    reference_table: ReferenceColorTable = field(default_factory=default_reference_table)

    def __post_init__(self):
        if self.canny_gaussian_sigma <= 0:
            raise ValueError("canny_gaussian_sigma must be > 0")
        if not (0.0 < self.canny_low_ratio < self.canny_high_ratio < 1.0):
            raise ValueError("need 0 < low_ratio < high_ratio < 1")
        if self.histogram_bins < 2:
            raise ValueError("histogram_bins must be >= 2")

    def manifest_dict(self) -> dict:
        return {
            "canny_gaussian_sigma": self.canny_gaussian_sigma,
            "canny_low_ratio": self.canny_low_ratio,
            "canny_high_ratio": self.canny_high_ratio,
            "histogram_bins": self.histogram_bins,
            "reference_table_hash": self.reference_table.table_hash(),
        }


def color_proportions(image: PixelImage, table: ReferenceColorTable) -> dict[str, float]:
    """Fraction of pixels nearest to each reference color in Lab.

    Ties break toward the earlier table entry. Fractions are exact pixel
    counts over the total, so they sum to 1.
    """
    lab = srgb_to_lab(image.pixels).reshape(-1, 3)
    diff = lab[:, None, :] - table.lab[None, :, :]
    dist2 = np.sum(diff * diff, axis=-1)
    nearest = np.argmin(dist2, axis=1)
    counts = np.bincount(nearest, minlength=len(table.names))
    total = lab.shape[0]
    return {name: counts[i] / total for i, name in enumerate(table.names)}


def rgb_to_hsv_arrays(pixels: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized RGB -> HSV: hue in degrees [0, 360), S and V in [0, 1]."""
    rgb = pixels.astype(np.float64) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = np.max(rgb, axis=-1)
    minc = np.min(rgb, axis=-1)
    delta = maxc - minc
    sat = np.where(maxc > 0, delta / np.where(maxc > 0, maxc, 1.0), 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        safe = np.where(delta > 0, delta, 1.0)
        hue = np.select(
            [delta == 0, maxc == r, maxc == g],
            [
                np.zeros_like(maxc),
                (60.0 * (g - b) / safe) % 360.0,
                60.0 * (b - r) / safe + 120.0,
            ],
            default=60.0 * (r - g) / safe + 240.0,
        )
    return hue, sat, maxc


def hsv_summary(image: PixelImage) -> HsvSummary:
    """Global HSV statistics on the 0-100 scale.

    Hue is the saturation-weighted circular mean over pixels with positive
    saturation, reported in [0, 360); an achromatic image gets hue 0 by
    convention. Saturation and value are arithmetic means rescaled to 0-100.
    """
    hue, sat, val = rgb_to_hsv_arrays(image.pixels)
    sat_total = float(np.sum(sat))
    if sat_total > 0.0:
        radians = np.deg2rad(hue)
        x = float(np.sum(sat * np.cos(radians)))
        y = float(np.sum(sat * np.sin(radians)))
        mean_hue = math.degrees(math.atan2(y, x)) % 360.0
    else:
        mean_hue = 0.0
    return HsvSummary(
        hue=mean_hue,
        saturation=float(np.mean(sat)) * 100.0,
        value=float(np.mean(val)) * 100.0,
    )


def _pad_edge(gray: np.ndarray, radius: int) -> np.ndarray:
    return np.pad(gray, radius, mode="edge")


def gaussian_blur(gray: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur, kernel truncated at 3 sigma, edge-replicate
    padding (well-defined for any image size including 1x1)."""
    radius = max(1, int(math.ceil(3.0 * sigma)))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    kernel /= kernel.sum()
    padded = np.pad(gray, ((0, 0), (radius, radius)), mode="edge")
    rows = np.zeros_like(gray, dtype=np.float64)
    for k, w in enumerate(kernel):
        rows += w * padded[:, k : k + gray.shape[1]]
    padded = np.pad(rows, ((radius, radius), (0, 0)), mode="edge")
    out = np.zeros_like(gray, dtype=np.float64)
    for k, w in enumerate(kernel):
        out += w * padded[k : k + gray.shape[0], :]
    return out


_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
_SOBEL_Y = np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]], dtype=np.float64)


def _convolve3(gray: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    padded = _pad_edge(gray, 1)
    out = np.zeros_like(gray, dtype=np.float64)
    for dy in range(3):
        for dx in range(3):
            w = kernel[dy, dx]
            if w != 0.0:
                out += w * padded[dy : dy + gray.shape[0], dx : dx + gray.shape[1]]
    return out


def sobel_gradients(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return _convolve3(gray, _SOBEL_X), _convolve3(gray, _SOBEL_Y)


def canny_edges(
    image: PixelImage, config: ExtractionConfig | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Canny contours: blur, Sobel, non-maximum suppression, hysteresis.

    Returns (edges, orientation): a boolean edge map plus per-pixel gradient
    orientation in [0, pi) (meaningful where edges is True). Thresholds are
    low_ratio/high_ratio times the pre-suppression maximum gradient
    magnitude. Suppression keeps a pixel when its magnitude is >= the
    backward neighbor and strictly > the forward neighbor along the
    quantized gradient direction, which thins symmetric 2-pixel plateaus to
    a single line.
    """
    cfg = config or ExtractionConfig()
    gray = image.luma()
    h, w = gray.shape
    blurred = gaussian_blur(gray, cfg.canny_gaussian_sigma)
    gx, gy = sobel_gradients(blurred)
    magnitude = np.hypot(gx, gy)
    orientation = np.mod(np.arctan2(gy, gx), math.pi)
    max_mag = float(magnitude.max())
    # Accumulation-order residue on flat fields is ~1e-14; a real single-level
    # luma step produces gradients orders of magnitude above this floor.
    if max_mag <= 1e-9:
        return np.zeros((h, w), dtype=bool), orientation

    # Quantize gradient direction to 4 sectors and compare along it.
    angle = np.degrees(orientation)
    sector = np.zeros((h, w), dtype=np.int8)
    sector[(angle >= 22.5) & (angle < 67.5)] = 1
    sector[(angle >= 67.5) & (angle < 112.5)] = 2
    sector[(angle >= 112.5) & (angle < 157.5)] = 3
    # Forward/backward offsets (dy, dx) per sector: 0 horizontal, 1 rising
    # diagonal, 2 vertical, 3 falling diagonal.
    offsets = {0: (0, 1), 1: (-1, 1), 2: (1, 0), 3: (1, 1)}
    padded = np.pad(magnitude, 1, mode="constant")
    keep = np.zeros((h, w), dtype=bool)
    ys, xs = np.indices((h, w))
    for s, (dy, dx) in offsets.items():
        mask = sector == s
        fwd = padded[1 + ys + dy, 1 + xs + dx]
        bwd = padded[1 + ys - dy, 1 + xs - dx]
        keep |= mask & (magnitude > fwd) & (magnitude >= bwd)
    nms = np.where(keep, magnitude, 0.0)

    high = cfg.canny_high_ratio * max_mag
    low = cfg.canny_low_ratio * max_mag
    strong = nms >= high
    weak = (nms >= low) & ~strong

    # Hysteresis: grow strong edges through weak pixels (8-connectivity)
    # by iterated dilation until fixpoint.
    edges = strong.copy()
    while True:
        padded_e = np.pad(edges, 1, mode="constant")
        neighbor_hit = np.zeros((h, w), dtype=bool)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dy == 0 and dx == 0:
                    continue
                neighbor_hit |= padded_e[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
        grown = edges | (weak & neighbor_hit)
        if np.array_equal(grown, edges):
            break
        edges = grown
    return edges, orientation


# Unordered 8-neighbor pairs are enumerated once via these four offsets.
_PAIR_OFFSETS = ((0, 1), (1, 1), (1, 0), (1, -1))


def curvilinearity(edges: np.ndarray, orientation: np.ndarray) -> float:
    """Mean acute orientation deviation between 8-adjacent edge pixels,
    normalized by pi/2. No adjacent pairs (or no edges) returns 0."""
    h, w = edges.shape
    total = 0.0
    count = 0
    half_pi = math.pi / 2.0
    for dy, dx in _PAIR_OFFSETS:
        y0 = max(0, -dy)
        y1 = min(h, h - dy)
        x0 = max(0, -dx)
        x1 = min(w, w - dx)
        if y0 >= y1 or x0 >= x1:
            continue
        a = edges[y0:y1, x0:x1]
        b = edges[y0 + dy : y1 + dy, x0 + dx : x1 + dx]
        both = a & b
        n = int(np.count_nonzero(both))
        if n == 0:
            continue
        o1 = orientation[y0:y1, x0:x1][both]
        o2 = orientation[y0 + dy : y1 + dy, x0 + dx : x1 + dx][both]
        d = np.abs(o1 - o2)
        d = np.minimum(d, math.pi - d)
        total += float(np.sum(d))
        count += n
    if count == 0:
        return 0.0
    return (total / count) / half_pi


def complexity(
    image: PixelImage, edges: np.ndarray, bins: int = 256
) -> tuple[float, float]:
    """(entropy, edge_density), both in [0, 1].

    Entropy is the Shannon entropy in bits of the rounded-luma histogram,
    normalized by log2(bins) (exactly /8 at the default 256 bins). Edge
    density is edge pixels over total pixels.
    """
    gray = image.gray_u8()
    if bins == 256:
        counts = np.bincount(gray.ravel(), minlength=256)
    else:
        counts, _ = np.histogram(gray, bins=bins, range=(0, 256))
    total = gray.size
    p = counts[counts > 0] / total
    entropy = float(-np.sum(p * np.log2(p))) / math.log2(bins) + 0.0
    density = float(np.count_nonzero(edges)) / edges.size
    return entropy, density


@dataclass(frozen=True)
class PerceptualFeatures:
    color_proportion: dict[str, float]
    average_color: HsvSummary
    structural: StructuralFeatures


def extract_all(image: PixelImage, config: ExtractionConfig | None = None) -> PerceptualFeatures:
    """Run the full perceptual extraction (full precision, no quantization)."""
    cfg = config or ExtractionConfig()
    colors = color_proportions(image, cfg.reference_table)
    hsv = hsv_summary(image)
    edges, orientation = canny_edges(image, cfg)
    curve = curvilinearity(edges, orientation)
    entropy, density = complexity(image, edges, cfg.histogram_bins)
    return PerceptualFeatures(
        color_proportion=colors,
        average_color=hsv,
        structural=StructuralFeatures(
            curvilinearity=curve,
            complexity_entropy=entropy,
            complexity_edge_density=density,
        ),
    )


def apply_features(record: AnnotationRecord, features: PerceptualFeatures) -> AnnotationRecord:
    """Merge extracted features into a record at the stored precision.

    Color proportions use largest-remainder rounding to 2 decimals so the
    stored values sum to exactly 1.00; other features land on the record's
    4-decimal grid via the record constructor.
    """
    return replace(
        record,
        color_proportion=quantize_color_proportion(features.color_proportion),
        average_color=features.average_color,
        structural=features.structural,
    )
