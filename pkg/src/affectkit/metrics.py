"""Evaluation metrics over caller-supplied predictions and targets.

Hue error uses circular distance d = min(|h1-h2|, 1-|h1-h2|) on the unit hue
circle. VAD MAE is per-dimension mean absolute error on the raw 1-9 scale;
color MAE normalizes hue to [0, 1) and S/V to [0, 1]. CLIP similarity is the
per-sample cosine between supplied image and text embeddings (no encoder
lives in this package). Reports carry one row per (method, metric) with
mean and standard deviation columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyInput, LengthMismatch, ZeroVector
from .schema import HsvSummary, VadVector


def circular_hue_distance(h1: float, h2: float) -> float:
    """Circular distance on the unit hue circle, in [0, 0.5]."""
    if not (0.0 <= h1 < 1.0 and 0.0 <= h2 < 1.0):
        raise ValueError("hues must lie in [0, 1)")
    d = abs(h1 - h2)
    return min(d, 1.0 - d)


def _vad_matrix(vectors: Sequence[VadVector], name: str) -> np.ndarray:
    rows = []
    for v in vectors:
        if v.dominance is None:
            raise DimensionMismatch(f"{name} vector lacks dominance")
        rows.append([v.valence, v.arousal, v.dominance])
    return np.asarray(rows, dtype=np.float64)


def vad_mae(pred: Sequence[VadVector], target: Sequence[VadVector]) -> tuple[float, float, float]:
    """Per-dimension mean absolute error on the 1-9 scale."""
    if len(pred) != len(target):
        raise LengthMismatch(f"{len(pred)} predictions vs {len(target)} targets")
    if not pred:
        raise EmptyInput("no prediction/target pairs")
    p = _vad_matrix(pred, "prediction")
    t = _vad_matrix(target, "target")
    err = np.abs(p - t)
    means = err.mean(axis=0)
    return float(means[0]), float(means[1]), float(means[2])


def color_mae(pred: Sequence[HsvSummary], target: Sequence[HsvSummary]) -> tuple[float, float, float]:
    """(hue, saturation, value) MAE with circular hue on [0, 1) and S/V on [0, 1]."""
    if len(pred) != len(target):
        raise LengthMismatch(f"{len(pred)} predictions vs {len(target)} targets")
    if not pred:
        raise EmptyInput("no prediction/target pairs")
    hue_err = [
        circular_hue_distance((p.hue % 360.0) / 360.0, (t.hue % 360.0) / 360.0)
        for p, t in zip(pred, target)
    ]
    sat_err = [abs(p.saturation - t.saturation) / 100.0 for p, t in zip(pred, target)]
    val_err = [abs(p.value - t.value) / 100.0 for p, t in zip(pred, target)]
    return float(np.mean(hue_err)), float(np.mean(sat_err)), float(np.mean(val_err))


def clip_similarity_scores(image_embeddings: np.ndarray, text_embeddings: np.ndarray) -> np.ndarray:
    """Per-sample cosine similarity between paired embedding rows."""
    a = np.asarray(image_embeddings, dtype=np.float64)
    b = np.asarray(text_embeddings, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise DimensionMismatch(f"embedding shapes differ: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    if np.any(na == 0) or np.any(nb == 0):
        raise ZeroVector("zero-norm embedding row")
    return np.sum(a * b, axis=1) / (na * nb)


@dataclass(frozen=True)
class MetricRow:
    method: str
    metric: str
    mean: float
    std: float


METRIC_ORDER: tuple[str, ...] = (
    "clip_score",
    "vad_mae_v",
    "vad_mae_a",
    "vad_mae_d",
    "color_mae_h",
    "color_mae_s",
)


def metric_report(
    method: str,
    pred_vad: Sequence[VadVector],
    target_vad: Sequence[VadVector],
    pred_hsv: Sequence[HsvSummary],
    target_hsv: Sequence[HsvSummary],
    image_embeddings: np.ndarray | None = None,
    text_embeddings: np.ndarray | None = None,
    include_color_v: bool = False,
) -> list[MetricRow]:
    """Evaluation rows for one method: CLIP similarity (when embeddings are
    supplied), per-dimension VAD MAE, and circular-hue/saturation color MAE.

    Means are over samples; std is the population std of the per-sample
    errors (or similarities)."""
    if len(pred_vad) != len(target_vad) or len(pred_hsv) != len(target_hsv):
        raise LengthMismatch("prediction/target lists differ in length")
    if not pred_vad or not pred_hsv:
        raise EmptyInput("need at least one sample")
    rows: list[MetricRow] = []

    def add(metric: str, samples: np.ndarray) -> None:
        rows.append(MetricRow(method, metric, float(samples.mean()), float(samples.std())))

    if image_embeddings is not None and text_embeddings is not None:
        add("clip_score", clip_similarity_scores(image_embeddings, text_embeddings))

    p = _vad_matrix(pred_vad, "prediction")
    t = _vad_matrix(target_vad, "target")
    err = np.abs(p - t)
    add("vad_mae_v", err[:, 0])
    add("vad_mae_a", err[:, 1])
    add("vad_mae_d", err[:, 2])

    hue_err = np.array(
        [
            circular_hue_distance((a.hue % 360.0) / 360.0, (b.hue % 360.0) / 360.0)
            for a, b in zip(pred_hsv, target_hsv)
        ]
    )
    sat_err = np.array([abs(a.saturation - b.saturation) / 100.0 for a, b in zip(pred_hsv, target_hsv)])
    add("color_mae_h", hue_err)
    add("color_mae_s", sat_err)
    if include_color_v:
        val_err = np.array([abs(a.value - b.value) / 100.0 for a, b in zip(pred_hsv, target_hsv)])
        add("color_mae_v", val_err)
    return rows


def render_report(rows: Sequence[MetricRow]) -> str:
    """TSV with header method/metric/mean/std, one row per (method, metric)."""
    lines = ["method\tmetric\tmean\tstd"]
    for row in rows:
        lines.append(f"{row.method}\t{row.metric}\t{row.mean:.6f}\t{row.std:.6f}")
    return "\n".join(lines) + "\n"


def write_report(rows: Sequence[MetricRow], path: str | Path) -> None:
    Path(path).write_text(render_report(rows))
