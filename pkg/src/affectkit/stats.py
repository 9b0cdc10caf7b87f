"""Interplay analytics between affective dimensions and perceptual features.

Pearson correlations relate V/A/D to HSV statistics and structural features;
hue enters through (cos h, sin h) channels, since Pearson on a raw circular
quantity is ill-defined. Color composition splits the 11-color mass into an
achromatic block (Black/White/Gray) and a renormalized 8-hue chromatic block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .affect import record_vad
from .errors import DegenerateInput, ZeroVariance
from .schema import ACHROMATIC_COLORS, CHROMATIC_COLORS, AnnotationRecord, EMOTIONS


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient.

    Raises DegenerateInput for length < 2 or when both series are constant,
    ZeroVariance naming the offending series when exactly one is constant.
    """
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.shape != ya.shape:
        raise DegenerateInput(f"length mismatch: {xa.shape} vs {ya.shape}")
    if xa.ndim != 1 or xa.size < 2:
        raise DegenerateInput("need at least 2 paired observations")
    x_const = bool(np.all(xa == xa[0]))
    y_const = bool(np.all(ya == ya[0]))
    if x_const and y_const:
        raise DegenerateInput("both series are constant")
    if x_const:
        raise ZeroVariance("x")
    if y_const:
        raise ZeroVariance("y")
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    return float(np.sum(dx * dy) / np.sqrt(np.sum(dx * dx) * np.sum(dy * dy)))


VAD_ROWS: tuple[str, ...] = ("valence", "arousal", "dominance")
FEATURE_COLS: tuple[str, ...] = (
    "hue_cos",
    "hue_sin",
    "saturation",
    "value",
    "curvilinearity",
    "entropy",
    "edge_density",
)


def _feature_value(record: AnnotationRecord, col: str) -> float:
    hue_rad = np.deg2rad(record.average_color.hue)
    return {
        "hue_cos": float(np.cos(hue_rad)),
        "hue_sin": float(np.sin(hue_rad)),
        "saturation": record.average_color.saturation,
        "value": record.average_color.value,
        "curvilinearity": record.structural.curvilinearity,
        "entropy": record.structural.complexity_entropy,
        "edge_density": record.structural.complexity_edge_density,
    }[col]


@dataclass
class CorrelationMatrix:
    rows: tuple[str, ...]
    cols: tuple[str, ...]
    values: np.ndarray  # NaN where a cell is degenerate
    notes: dict[tuple[str, str], str] = field(default_factory=dict)

    def cell(self, row: str, col: str) -> float:
        return float(self.values[self.rows.index(row), self.cols.index(col)])

    def to_table(self) -> str:
        lines = ["\t".join(["dimension", *self.cols])]
        for i, row in enumerate(self.rows):
            cells = []
            for j, col in enumerate(self.cols):
                v = self.values[i, j]
                cells.append(self.notes.get((row, col), f"{v:.6f}"))
            lines.append("\t".join([row, *cells]))
        return "\n".join(lines) + "\n"


def correlation_matrix(records: Sequence[AnnotationRecord]) -> CorrelationMatrix:
    """Entry-wise Pearson correlation over {V, A, D} x perceptual features.

    Each cell uses the records where both quantities are available (dominance
    can be absent). Degenerate cells carry a marker note instead of failing
    the whole matrix.
    """
    if len(records) < 2:
        raise DegenerateInput("need at least 2 records")
    values = np.full((len(VAD_ROWS), len(FEATURE_COLS)), np.nan)
    notes: dict[tuple[str, str], str] = {}
    vads = [(r, record_vad(r)) for r in records]
    for i, dim in enumerate(VAD_ROWS):
        pairs = [(getattr(v, dim), r) for r, v in vads if v is not None and getattr(v, dim) is not None]
        for j, col in enumerate(FEATURE_COLS):
            xs = [p[0] for p in pairs]
            ys = [_feature_value(p[1], col) for p in pairs]
            try:
                values[i, j] = pearson_r(xs, ys)
            except ZeroVariance as exc:
                notes[(dim, col)] = f"zero-variance:{dim if exc.series == 'x' else col}"
            except DegenerateInput as exc:
                notes[(dim, col)] = f"degenerate:{exc}"
    return CorrelationMatrix(VAD_ROWS, FEATURE_COLS, values, notes)


@dataclass
class CompositionSummary:
    emotion: str
    count: int
    achromatic: float
    chromatic: float
    hue_shares: dict[str, float]

    def as_row(self) -> dict:
        return {
            "emotion": self.emotion,
            "count": self.count,
            "achromatic": self.achromatic,
            "chromatic": self.chromatic,
            **{f"share_{c}": self.hue_shares[c] for c in CHROMATIC_COLORS},
        }


def composition_by_emotion(records: Sequence[AnnotationRecord]) -> dict[str, CompositionSummary]:
    """Achromatic/chromatic split and 8-hue shares, averaged per emotion.

    Per record, masses are normalized by the record's total color mass so
    achromatic + chromatic = 1 exactly; hue shares renormalize the chromatic
    block (a record with zero chromatic mass contributes count but no hue
    share). Empty input gives an empty map.
    """
    buckets: dict[str, list[AnnotationRecord]] = {}
    for r in records:
        buckets.setdefault(r.emotion, []).append(r)
    out: dict[str, CompositionSummary] = {}
    for emotion in EMOTIONS:
        group = buckets.get(emotion)
        if not group:
            continue
        achromatic = []
        chromatic = []
        shares_acc = np.zeros(len(CHROMATIC_COLORS))
        share_n = 0
        for r in group:
            total = sum(r.color_proportion.values())
            ach = sum(r.color_proportion[c] for c in ACHROMATIC_COLORS) / total
            chrom_vals = np.array([r.color_proportion[c] for c in CHROMATIC_COLORS])
            chrom_mass = float(chrom_vals.sum())
            achromatic.append(ach)
            chromatic.append(chrom_mass / total)
            if chrom_mass > 0:
                shares_acc += chrom_vals / chrom_mass
                share_n += 1
        shares = shares_acc / share_n if share_n else shares_acc
        out[emotion] = CompositionSummary(
            emotion=emotion,
            count=len(group),
            achromatic=float(np.mean(achromatic)),
            chromatic=float(np.mean(chromatic)),
            hue_shares={c: float(shares[k]) for k, c in enumerate(CHROMATIC_COLORS)},
        )
    return out


def composition_table(summaries: dict[str, CompositionSummary]) -> str:
    rows = [summaries[e].as_row() for e in EMOTIONS if e in summaries]
    if not rows:
        return ""
    header = list(rows[0].keys())
    lines = ["\t".join(header)]
    for row in rows:
        lines.append("\t".join(str(row[k]) for k in header))
    return "\n".join(lines) + "\n"
