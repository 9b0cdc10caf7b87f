"""Corpus curation: sharpness scoring, perceptual-hash dedup, threshold filters.

Aesthetic and CLIP-similarity scores are ingested fields (no model inference
here); sharpness is the variance of the 3x3 Laplacian response. Duplicate
detection uses a 64-bit difference hash (9x8 area-averaged grayscale, one bit
per horizontal neighbor comparison) with single-linkage Hamming clustering.
Embedding-based near-duplicate checks consume externally supplied vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import DegenerateImage
from .image import PixelImage
from .schema import AnnotationRecord

_LAPLACIAN = np.array([[0, 1, 0], [1, -4, 1], [0, 1, 0]], dtype=np.float64)


def sharpness_score(image: PixelImage) -> float:
    """Variance of the 3x3 Laplacian over the grayscale interior.

    The kernel is applied in valid mode (no padding), so images smaller than
    3x3 are rejected as DegenerateImage.
    """
    gray = image.luma()
    h, w = gray.shape
    if h < 3 or w < 3:
        raise DegenerateImage(f"need at least 3x3 pixels, got {w}x{h}")
    response = np.zeros((h - 2, w - 2), dtype=np.float64)
    for dy in range(3):
        for dx in range(3):
            k = _LAPLACIAN[dy, dx]
            if k != 0.0:
                response += k * gray[dy : dy + h - 2, dx : dx + w - 2]
    return float(np.var(response))


def _area_resize(gray: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Exact area-average downscale: each target cell averages the source
    pixels it overlaps, with fractional edge weights."""

    def axis_weights(n_src: int, n_dst: int) -> np.ndarray:
        w = np.zeros((n_dst, n_src), dtype=np.float64)
        step = n_src / n_dst
        for i in range(n_dst):
            lo = i * step
            hi = (i + 1) * step
            j0 = int(math.floor(lo))
            j1 = min(n_src, int(math.ceil(hi)))
            for j in range(j0, j1):
                overlap = min(hi, j + 1) - max(lo, j)
                if overlap > 0:
                    w[i, j] = overlap
        return w / step

    wr = axis_weights(gray.shape[0], out_h)
    wc = axis_weights(gray.shape[1], out_w)
    return wr @ gray @ wc.T


def perceptual_hash(image: PixelImage) -> int:
    """64-bit difference hash.

    Downscale the grayscale image to 9x8 by area averaging, then emit one bit
    per horizontal neighbor pair (1 when left > right). Bit i = row * 8 + col.
    Known limitation: any two images whose rows are monotone-equal (e.g. flat
    white vs flat black) collide; the sharpness filter catches those.
    """
    # Rounding kills resize-weight dust so flat fields compare equal.
    cells = np.round(_area_resize(image.luma(), 8, 9), 6)
    value = 0
    for row in range(8):
        for col in range(8):
            if cells[row, col] > cells[row, col + 1]:
                value |= 1 << (row * 8 + col)
    return value


def hamming(a: int, b: int) -> int:
    return int(bin(a ^ b).count("1"))


@dataclass(frozen=True)
class DuplicateCluster:
    representative_stem: str
    member_stems: tuple[str, ...]
    hash_distance_max: int


def dedup(hashes: Sequence[tuple[str, int]], threshold: int) -> list[DuplicateCluster]:
    """Single-linkage clustering of hashes under Hamming <= threshold.

    Clusters are connected components of the threshold graph, so chained
    members can sit farther than the threshold from the representative;
    hash_distance_max exposes that spread. Representative = lexicographically
    smallest member stem. Singletons are omitted; output sorted by
    representative. Invariant under input permutation.
    """
    if not 0 <= threshold <= 64:
        raise ValueError("threshold must be in [0, 64]")
    items = sorted(hashes, key=lambda sh: sh[0])
    n = len(items)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    for i in range(n):
        for j in range(i + 1, n):
            if hamming(items[i][1], items[j][1]) <= threshold:
                union(i, j)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)

    clusters = []
    for members in groups.values():
        if len(members) < 2:
            continue
        stems = sorted(items[i][0] for i in members)
        rep = stems[0]
        rep_hash = next(items[i][1] for i in members if items[i][0] == rep)
        dist_max = max(hamming(rep_hash, items[i][1]) for i in members)
        clusters.append(DuplicateCluster(rep, tuple(stems), dist_max))
    clusters.sort(key=lambda c: c.representative_stem)
    return clusters


def format_duplicate_lines(clusters: Iterable[DuplicateCluster], hashes: Mapping[str, int]) -> list[str]:
    """Release-package duplicate list: representative<TAB>member<TAB>hamming."""
    lines = []
    for cluster in clusters:
        rep_hash = hashes[cluster.representative_stem]
        for member in cluster.member_stems:
            if member == cluster.representative_stem:
                continue
            lines.append(f"{cluster.representative_stem}\t{member}\t{hamming(rep_hash, hashes[member])}")
    return lines


@dataclass(frozen=True)
class FilterPolicy:
    """Absolute keep/drop thresholds. Percentile-based defaults must be
    resolved to absolute values first (see resolve_sharpness_floor) so that
    filtering the kept subset again drops nothing."""

    min_sharpness: Optional[float] = None
    min_aesthetic: Optional[float] = None
    min_clip_similarity: Optional[float] = None
    strict_missing: bool = False

    def __post_init__(self):
        for name in ("min_sharpness", "min_aesthetic", "min_clip_similarity"):
            v = getattr(self, name)
            if v is not None and not math.isfinite(v):
                raise ValueError(f"{name} must be finite")


def resolve_sharpness_floor(scores: Sequence[float], drop_fraction: float = 0.05) -> float:
    """Corpus-relative sharpness floor: the drop_fraction quantile of the
    observed scores (default: drop the bottom 5 percent)."""
    if not scores:
        raise ValueError("no sharpness scores to resolve a floor from")
    if not 0.0 <= drop_fraction < 1.0:
        raise ValueError("drop_fraction must be in [0, 1)")
    return float(np.quantile(np.asarray(scores, dtype=np.float64), drop_fraction))


@dataclass
class QualityReport:
    stem: str
    sharpness: Optional[float]
    aesthetic_score: Optional[float]
    clip_similarity: Optional[float]
    verdict: str  # keep | drop
    drop_reasons: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "stem": self.stem,
            "sharpness": self.sharpness,
            "aesthetic_score": self.aesthetic_score,
            "clip_similarity": self.clip_similarity,
            "verdict": self.verdict,
            "drop_reasons": list(self.drop_reasons),
        }


def filter_corpus(
    records: Sequence[AnnotationRecord],
    policy: FilterPolicy,
    sharpness: Optional[Mapping[str, float]] = None,
) -> list[QualityReport]:
    """One QualityReport per record; drop_reasons lists every violated
    threshold. Inputs are never mutated. Missing scores pass unless
    policy.strict_missing, in which case they add a "score-missing" reason.
    """
    sharpness = sharpness or {}
    reports = []
    for record in records:
        sharp = sharpness.get(record.stem)
        reasons: list[str] = []

        def check(name: str, value: Optional[float], floor: Optional[float]) -> None:
            if floor is None:
                return
            if value is None:
                if policy.strict_missing:
                    reasons.append("score-missing")
                return
            if value < floor:
                reasons.append(name)

        check("sharpness", sharp, policy.min_sharpness)
        check("aesthetic_score", record.aesthetic_score, policy.min_aesthetic)
        check("clip_similarity", record.clip_similarity, policy.min_clip_similarity)
        reports.append(
            QualityReport(
                stem=record.stem,
                sharpness=sharp,
                aesthetic_score=record.aesthetic_score,
                clip_similarity=record.clip_similarity,
                verdict="drop" if reasons else "keep",
                drop_reasons=reasons,
            )
        )
    return reports


def load_embeddings(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read a (stem, vector) embedding file.

    Text format: first non-comment line is the dimension, then one line per
    stem followed by that many floats. An .npz with arrays "stems" and
    "vectors" is accepted as the binary form.
    """
    path = Path(path)
    if path.suffix == ".npz":
        data = np.load(path, allow_pickle=False)
        stems = [str(s) for s in data["stems"]]
        vectors = np.asarray(data["vectors"], dtype=np.float64)
        if vectors.ndim != 2 or len(stems) != vectors.shape[0]:
            raise ValueError("npz embeddings need matching stems and 2-D vectors")
        return stems, vectors
    stems: list[str] = []
    rows: list[list[float]] = []
    dim: Optional[int] = None
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if dim is None:
            dim = int(line)
            continue
        parts = line.split()
        if len(parts) != dim + 1:
            raise ValueError(f"expected stem + {dim} values, got {len(parts)} fields")
        stems.append(parts[0])
        rows.append([float(v) for v in parts[1:]])
    if dim is None:
        raise ValueError("embedding file has no dimension header")
    return stems, np.asarray(rows, dtype=np.float64).reshape(len(stems), dim)


def embedding_duplicates(
    stems: Sequence[str], vectors: np.ndarray, threshold: float = 0.98
) -> list[DuplicateCluster]:
    """Single-linkage clusters of embeddings with cosine similarity >= threshold.

    Reuses the DuplicateCluster shape; hash_distance_max is 0 for these (the
    similarity signal is cosine, not Hamming)."""
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("zero-norm embedding vector")
    unit = vectors / norms
    sim = unit @ unit.T
    n = len(stems)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if sim[i, j] >= threshold:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    clusters = []
    for members in groups.values():
        if len(members) < 2:
            continue
        member_stems = tuple(sorted(stems[i] for i in members))
        clusters.append(DuplicateCluster(member_stems[0], member_stems, 0))
    clusters.sort(key=lambda c: c.representative_stem)
    return clusters
