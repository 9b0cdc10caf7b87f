"""Affective-space aggregation and analytics.

Per-model VAD scores are combined by weighted mean (per dimension, over the
models that report that dimension); discrete labels resolve by human override,
then model consensus, then a disputed fallback that feeds the review queue.
Analytics cover 2-D density maps on the VA/VD/AD planes and per-emotion
summaries with circular hue statistics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import NoModels, NoSources
from .schema import (
    AnnotationRecord,
    COLOR_NAMES,
    EMOTIONS,
    VadVector,
    canonical_emotion,
)

PLANES: dict[str, tuple[str, str]] = {
    "VA": ("valence", "arousal"),
    "VD": ("valence", "dominance"),
    "AD": ("arousal", "dominance"),
}


def aggregate_vad(
    per_model: Mapping[str, VadVector],
    weights: Optional[Mapping[str, float]] = None,
) -> VadVector:
    """Weighted mean of per-model VAD scores, per dimension.

    Dimensions a model does not report are skipped for that model (its weight
    is dropped from that dimension's normalizer). Weights default to equal;
    the result is invariant to uniform weight scaling and clamped to [1, 9],
    though the clamp cannot fire for in-range inputs.
    """
    if not per_model:
        raise NoModels("per-model VAD map is empty")
    if weights is None:
        weights = {m: 1.0 for m in per_model}
    active = {m: float(weights.get(m, 0.0)) for m in per_model}
    if any(w < 0 for w in active.values()):
        raise ValueError("weights must be >= 0")
    if sum(active.values()) <= 0.0:
        raise ValueError("weights for present models must sum to > 0")

    def combine(dim: str) -> Optional[float]:
        num = 0.0
        den = 0.0
        for model, vad in per_model.items():
            v = getattr(vad, dim)
            if v is None:
                continue
            num += active[model] * v
            den += active[model]
        if den == 0.0:
            return None
        value = num / den
        clamped = min(9.0, max(1.0, value))
        assert clamped == value, "weighted mean of in-range scores left [1, 9]"
        return clamped

    valence = combine("valence")
    arousal = combine("arousal")
    if valence is None or arousal is None:
        raise NoModels("no model with positive weight reports valence/arousal")
    return VadVector(valence=valence, arousal=arousal, dominance=combine("dominance"))


def resolve_emotion(
    per_model: Mapping[str, str],
    human_override: Optional[str] = None,
) -> tuple[str, str]:
    """Resolve the discrete label; returns (label, provenance).

    Provenance is "human" when an override is present, "model-consensus" for
    a unanimous model vote, otherwise ("unknown", "disputed"): disputed
    records are the review queue's intake.
    """
    if human_override is not None:
        return canonical_emotion(human_override), "human"
    if not per_model:
        raise NoSources("no model labels and no human override")
    labels = {canonical_emotion(v, key=k) for k, v in per_model.items()}
    if len(labels) == 1:
        return next(iter(labels)), "model-consensus"
    return "unknown", "disputed"


def record_vad(record: AnnotationRecord) -> Optional[VadVector]:
    """VAD point used by analytics: the aggregated vector when present, else
    the equal-weight aggregate of the per-model scores."""
    if record.aggregated_vad is not None:
        return record.aggregated_vad
    if not record.per_model_vad:
        return None
    return aggregate_vad(record.per_model_vad)


@dataclass
class DensityGrid:
    plane: str
    bins_x: int
    bins_y: int
    extent: tuple[float, float, float, float]  # (x_min, x_max, y_min, y_max)
    cells: np.ndarray  # (bins_x, bins_y), sums to 1 when nonempty
    empty: bool
    smoothing_sigma: Optional[float]

    def to_json_dict(self) -> dict:
        return {
            "plane": self.plane,
            "axes": list(PLANES[self.plane]),
            "bins_x": self.bins_x,
            "bins_y": self.bins_y,
            "extent": list(self.extent),
            "empty": self.empty,
            "smoothing": (
                {"kind": "gaussian-smoothed-histogram", "sigma_bins": self.smoothing_sigma}
                if self.smoothing_sigma is not None
                else {"kind": "raw-histogram"}
            ),
            "cells_row_major": [float(v) for v in self.cells.ravel()],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")

    def render_heatmap(self, path: str | Path) -> None:
        """Grayscale PNG, max cell = white. Rows run along the y axis."""
        from PIL import Image

        peak = float(self.cells.max())
        scaled = self.cells / peak if peak > 0 else self.cells
        img = (np.flipud(scaled.T) * 255.0).astype(np.uint8)
        Image.fromarray(img, mode="L").save(path)


def _smooth_grid(cells: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian smoothing with zero padding, then renormalize so
    the cell mass still sums to 1."""
    radius = max(1, int(math.ceil(4.0 * sigma)))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    kernel /= kernel.sum()
    out = np.zeros_like(cells)
    padded = np.pad(cells, ((radius, radius), (0, 0)), mode="constant")
    for k, w in enumerate(kernel):
        out += w * padded[k : k + cells.shape[0], :]
    out2 = np.zeros_like(out)
    padded = np.pad(out, ((0, 0), (radius, radius)), mode="constant")
    for k, w in enumerate(kernel):
        out2 += w * padded[:, k : k + cells.shape[1]]
    total = out2.sum()
    return out2 / total if total > 0 else out2


def density_map(
    points: Sequence[VadVector],
    plane: str = "VA",
    bins: int = 64,
    smoothing_sigma: Optional[float] = 1.0,
) -> DensityGrid:
    """2-D histogram of VAD points over one plane of the 1-9 cube.

    Points missing a needed dimension are rejected (filter upstream). With
    smoothing_sigma=None the raw normalized histogram is returned; otherwise
    a Gaussian of that width (in bins) is applied and the grid renormalized.
    An empty input yields an all-zero grid flagged empty.
    """
    if plane not in PLANES:
        raise ValueError(f"plane must be one of {sorted(PLANES)}")
    if bins < 2:
        raise ValueError("bins must be >= 2")
    dim_x, dim_y = PLANES[plane]
    xs = []
    ys = []
    for p in points:
        x = getattr(p, dim_x)
        y = getattr(p, dim_y)
        if x is None or y is None:
            raise ValueError(f"point lacks {dim_x}/{dim_y} needed for plane {plane}")
        xs.append(x)
        ys.append(y)
    extent = (1.0, 9.0, 1.0, 9.0)
    if not xs:
        return DensityGrid(plane, bins, bins, extent, np.zeros((bins, bins)), True, smoothing_sigma)
    hist, _, _ = np.histogram2d(xs, ys, bins=bins, range=[[1.0, 9.0], [1.0, 9.0]])
    cells = hist / hist.sum()
    if smoothing_sigma is not None:
        cells = _smooth_grid(cells, smoothing_sigma)
    return DensityGrid(plane, bins, bins, extent, cells, False, smoothing_sigma)


def circular_mean_deg(hues_deg: Sequence[float], weights: Optional[Sequence[float]] = None) -> float:
    """Mean direction of hue angles, in [0, 360); 0 when the resultant is null."""
    h = np.asarray(hues_deg, dtype=np.float64)
    if h.size and np.all(h == h.flat[0]):
        return float(h.flat[0]) % 360.0
    w = np.ones_like(h) if weights is None else np.asarray(weights, dtype=np.float64)
    rad = np.deg2rad(h)
    x = float(np.sum(w * np.cos(rad)))
    y = float(np.sum(w * np.sin(rad)))
    if x == 0.0 and y == 0.0:
        return 0.0
    return math.degrees(math.atan2(y, x)) % 360.0


def circular_std_deg(hues_deg: Sequence[float]) -> float:
    """Circular standard deviation sqrt(-2 ln R), converted to degrees."""
    h = np.asarray(hues_deg, dtype=np.float64)
    if h.size and np.all(h == h.flat[0]):
        return 0.0
    rad = np.deg2rad(h)
    r = math.hypot(float(np.mean(np.cos(rad))), float(np.mean(np.sin(rad))))
    if r <= 0.0:
        return math.inf
    r = min(r, 1.0)
    if r == 1.0:
        return 0.0
    return math.degrees(math.sqrt(-2.0 * math.log(r)))


@dataclass
class EmotionSummary:
    emotion: str
    count: int
    hue_mean: float
    hue_circular_std: float
    saturation_mean: float
    saturation_std: float
    value_mean: float
    value_std: float
    vad_mean: tuple[float, float, Optional[float]]
    color_proportion_mean: dict[str, float] = field(default_factory=dict)

    def as_row(self) -> dict:
        return {
            "emotion": self.emotion,
            "count": self.count,
            "hue_mean": self.hue_mean,
            "hue_circular_std": self.hue_circular_std,
            "saturation_mean": self.saturation_mean,
            "saturation_std": self.saturation_std,
            "value_mean": self.value_mean,
            "value_std": self.value_std,
            "valence_mean": self.vad_mean[0],
            "arousal_mean": self.vad_mean[1],
            "dominance_mean": self.vad_mean[2],
            **{f"color_{c}": self.color_proportion_mean[c] for c in COLOR_NAMES},
        }


def per_emotion_summary(records: Sequence[AnnotationRecord]) -> dict[str, EmotionSummary]:
    """Central tendency and spread of HSV, mean VAD, and mean color
    proportions per emotion.

    Hue statistics are circular (unweighted over records); S/V are arithmetic
    with population std. Output keys follow the canonical emotion order;
    empty input gives an empty map.
    """
    buckets: dict[str, list[AnnotationRecord]] = {}
    for r in records:
        buckets.setdefault(r.emotion, []).append(r)
    out: dict[str, EmotionSummary] = {}
    for emotion in EMOTIONS:
        group = buckets.get(emotion)
        if not group:
            continue
        hues = [r.average_color.hue for r in group]
        sats = np.array([r.average_color.saturation for r in group])
        vals = np.array([r.average_color.value for r in group])
        vads = [v for v in (record_vad(r) for r in group) if v is not None]
        v_mean = float(np.mean([v.valence for v in vads])) if vads else float("nan")
        a_mean = float(np.mean([v.arousal for v in vads])) if vads else float("nan")
        doms = [v.dominance for v in vads if v.dominance is not None]
        d_mean = float(np.mean(doms)) if doms else None
        colors = {
            c: float(np.mean([r.color_proportion[c] for r in group])) for c in COLOR_NAMES
        }
        out[emotion] = EmotionSummary(
            emotion=emotion,
            count=len(group),
            hue_mean=circular_mean_deg(hues),
            hue_circular_std=circular_std_deg(hues),
            saturation_mean=float(np.mean(sats)),
            saturation_std=float(np.std(sats)),
            value_mean=float(np.mean(vals)),
            value_std=float(np.std(vals)),
            vad_mean=(v_mean, a_mean, d_mean),
            color_proportion_mean=colors,
        )
    return out


def summary_table(summaries: Mapping[str, EmotionSummary]) -> str:
    """Flat TSV, one row per emotion in canonical order."""
    rows = [summaries[e].as_row() for e in EMOTIONS if e in summaries]
    if not rows:
        return ""
    header = list(rows[0].keys())
    lines = ["\t".join(header)]
    for row in rows:
        lines.append("\t".join("" if row[k] is None else str(row[k]) for k in header))
    return "\n".join(lines) + "\n"
