"""Loss and regularization kernel over caller-supplied vectors.

Pure functions only: no sampler, no encoder, no training loop. Each term is
paired with an analytic gradient (with respect to the prediction-side
argument) so external trainers can be verified against central finite
differences. Conventions shared by the affect terms:

    d_u(i, j)     = ||u_i - u_j||_2 / sqrt(3)          in [0, 1]
    d_cos(i, j)   = (1 - cos(delta_i, delta_j)) / 2     in [0, 1]
    smooth_l1(x)  = 0.5 x^2 / beta   if |x| <= beta, else |x| - 0.5 beta
    hinge(x)      = max(0, x)

The supervision vector packs normalized VAD u and a color target c as
s = [2 (w_vad u) - 1, 2 (w_col c) - 1] in [-1, 1]^6; weights are restricted
to (0, 1] so the range bound always holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import (
    AllAnchorsSkipped,
    DimensionMismatch,
    LengthMismatch,
    NonFiniteComponent,
    WeightOutOfRange,
    ZeroVector,
)
from .metrics import circular_hue_distance


@dataclass(frozen=True)
class LossWeights:
    """Scalar coefficients for the loss suite, with the defaults recorded in
    every output manifest. Margins and the target radius are >= 0, the
    contrast temperature > 0, top_k >= 1."""

    w_vad: float = 1.0
    w_col: float = 1.0
    m: float = 1.0            # effect-hinge margin
    m_far: float = 0.5        # push margin on far pairs
    m_near: float = 0.1       # pull margin on near pairs
    r0: float = 1.0           # target modulation radius
    alpha: float = 1.0        # distance-matching weight
    beta: float = 1.0         # push weight
    gamma: float = 1.0        # pull weight
    eta: float = 1.0          # same-pair weight
    lambda_img: float = 1.0
    lambda_eff: float = 1.0
    lambda_pair: float = 1.0
    lambda_dir: float = 1.0
    lambda_con: float = 1.0
    lambda_mag: float = 1.0
    lambda_inj: float = 1.0
    w_h: float = 1.0
    w_s: float = 1.0
    w_v: float = 1.0
    supcon_temperature: float = 0.07
    smoothl1_beta: float = 1.0
    top_k: int = 8
    eps_same: float = 1e-6
    pair_sample_limit: int = 512

    def __post_init__(self):
        if self.m < 0 or self.m_far < 0 or self.m_near < 0 or self.r0 < 0:
            raise ValueError("margins and r0 must be >= 0")
        if self.supcon_temperature <= 0:
            raise ValueError("supcon_temperature must be > 0")
        if self.smoothl1_beta <= 0:
            raise ValueError("smoothl1_beta must be > 0")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")

    def manifest_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


DEFAULT_WEIGHTS = LossWeights()


def pack_supervision(
    u: Sequence[float], c: Sequence[float], weights: LossWeights = DEFAULT_WEIGHTS
) -> np.ndarray:
    """Pack normalized VAD and a color target into the 6-D supervision vector."""
    for name, w in (("w_vad", weights.w_vad), ("w_col", weights.w_col)):
        if not 0.0 < w <= 1.0:
            raise WeightOutOfRange(f"{name} = {w} outside (0, 1]")
    ua = np.asarray(u, dtype=np.float64)
    ca = np.asarray(c, dtype=np.float64)
    if ua.shape != (3,) or ca.shape != (3,):
        raise DimensionMismatch("u and c must both be 3-vectors")
    for name, block in (("u", ua), ("c", ca)):
        if np.any(block < 0.0) or np.any(block > 1.0):
            raise ValueError(f"{name} components must lie in [0, 1]")
    return np.concatenate([2.0 * weights.w_vad * ua - 1.0, 2.0 * weights.w_col * ca - 1.0])


# ---------------------------------------------------------------- generation

def diffusion_loss(pred: np.ndarray, noise: np.ndarray) -> float:
    """Squared L2 reconstruction error between predicted and true noise."""
    p = np.asarray(pred, dtype=np.float64)
    n = np.asarray(noise, dtype=np.float64)
    if p.shape != n.shape:
        raise DimensionMismatch(f"shape {p.shape} vs {n.shape}")
    d = p - n
    return float(np.sum(d * d))


def diffusion_loss_grad(pred: np.ndarray, noise: np.ndarray) -> np.ndarray:
    p = np.asarray(pred, dtype=np.float64)
    n = np.asarray(noise, dtype=np.float64)
    return 2.0 * (p - n)


def embedding_consistency(e1: Sequence[float], e2: Sequence[float]) -> float:
    """1 - cosine similarity of two embeddings (normalized internally)."""
    a = np.asarray(e1, dtype=np.float64)
    b = np.asarray(e2, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("embedding with zero norm")
    return float(1.0 - np.dot(a, b) / (na * nb))


def embedding_consistency_grad(e1: Sequence[float], e2: Sequence[float]) -> np.ndarray:
    """Gradient with respect to e1."""
    a = np.asarray(e1, dtype=np.float64)
    b = np.asarray(e2, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("embedding with zero norm")
    cos = np.dot(a, b) / (na * nb)
    return -(b / (na * nb) - cos * a / (na * na))


def effect_hinge(pred: Sequence[float], base: Sequence[float], margin: float) -> float:
    """Hinge on the L1 deviation from the base branch: [m - ||pred-base||_1]_+."""
    p = np.asarray(pred, dtype=np.float64)
    b = np.asarray(base, dtype=np.float64)
    if p.shape != b.shape:
        raise DimensionMismatch(f"shape {p.shape} vs {b.shape}")
    return max(0.0, float(margin - np.sum(np.abs(p - b))))


def effect_hinge_grad(pred: Sequence[float], base: Sequence[float], margin: float) -> np.ndarray:
    p = np.asarray(pred, dtype=np.float64)
    b = np.asarray(base, dtype=np.float64)
    if margin - np.sum(np.abs(p - b)) <= 0.0:
        return np.zeros_like(p)
    return -np.sign(p - b)


# ------------------------------------------------------------------ geometry

def smooth_l1(x: float, beta: float) -> float:
    ax = abs(x)
    return 0.5 * x * x / beta if ax <= beta else ax - 0.5 * beta


def _smooth_l1_deriv(x: float, beta: float) -> float:
    return x / beta if abs(x) <= beta else math.copysign(1.0, x)


def _pair_indices(n: int, limit: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Unordered pair index arrays: all pairs up to `limit` items, else a
    seeded uniform sample of limit*(limit-1)/2 distinct pairs."""
    if n <= limit:
        return np.triu_indices(n, k=1)
    total = n * (n - 1) // 2
    k = limit * (limit - 1) // 2
    rng = np.random.default_rng(seed)
    if total <= 5_000_000:
        flat = np.sort(rng.choice(total, size=k, replace=False))
    else:
        chosen: set[int] = set()
        while len(chosen) < k:
            for v in rng.integers(0, total, size=k - len(chosen)):
                chosen.add(int(v))
        flat = np.sort(np.fromiter(chosen, dtype=np.int64))
    counts = n - 1 - np.arange(n - 1, dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    i = np.searchsorted(starts, flat, side="right") - 1
    j = flat - starts[i] + i + 1
    return i.astype(np.intp), j.astype(np.intp)


def _as_batch(vectors: Sequence, name: str) -> np.ndarray:
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be a list of equal-length vectors")
    return arr


def pairwise_alignment(
    deltas: Sequence,
    supervisions: Sequence,
    beta: float = 1.0,
    sample_limit: int = 512,
    seed: int = 0,
) -> float:
    """Match modulation-space and supervision-space pairwise L2 distances with
    a smooth L1 penalty, averaged over (sampled) unordered pairs."""
    d = _as_batch(deltas, "deltas")
    s = _as_batch(supervisions, "supervisions")
    if d.shape[0] != s.shape[0]:
        raise LengthMismatch(f"{d.shape[0]} deltas vs {s.shape[0]} supervisions")
    if d.shape[0] < 2:
        raise LengthMismatch("need at least 2 items")
    ii, jj = _pair_indices(d.shape[0], sample_limit, seed)
    dd = np.linalg.norm(d[ii] - d[jj], axis=1)
    ds = np.linalg.norm(s[ii] - s[jj], axis=1)
    x = dd - ds
    vals = np.where(np.abs(x) <= beta, 0.5 * x * x / beta, np.abs(x) - 0.5 * beta)
    return float(np.mean(vals))


def pairwise_alignment_grad(
    deltas: Sequence,
    supervisions: Sequence,
    beta: float = 1.0,
    sample_limit: int = 512,
    seed: int = 0,
) -> np.ndarray:
    """Gradient with respect to the deltas. Pairs at zero delta-distance
    contribute a zero subgradient."""
    d = _as_batch(deltas, "deltas")
    s = _as_batch(supervisions, "supervisions")
    ii, jj = _pair_indices(d.shape[0], sample_limit, seed)
    diff = d[ii] - d[jj]
    dd = np.linalg.norm(diff, axis=1)
    ds = np.linalg.norm(s[ii] - s[jj], axis=1)
    x = dd - ds
    slope = np.where(np.abs(x) <= beta, x / beta, np.sign(x))
    grad = np.zeros_like(d)
    nonzero = dd > 0
    contrib = np.zeros_like(diff)
    contrib[nonzero] = (slope[nonzero] / dd[nonzero])[:, None] * diff[nonzero]
    np.add.at(grad, ii, contrib)
    np.add.at(grad, jj, -contrib)
    return grad / len(ii)


def _project_supervision(s: np.ndarray, dim: int, projection: Optional[np.ndarray]) -> np.ndarray:
    if projection is not None:
        return np.asarray(projection, dtype=np.float64) @ s
    if s.shape[0] >= dim:
        return s[:dim]
    return np.concatenate([s, np.zeros(dim - s.shape[0])])


def directional_alignment(
    delta: Sequence[float], s: Sequence[float], projection: Optional[np.ndarray] = None
) -> float:
    """1 - cos between the unit modulation vector and the unit projected
    supervision. Without an explicit projection, s is zero-padded or
    truncated to the modulation dimension."""
    d = np.asarray(delta, dtype=np.float64)
    sv = _project_supervision(np.asarray(s, dtype=np.float64), d.shape[0], projection)
    nd, ns = np.linalg.norm(d), np.linalg.norm(sv)
    if nd == 0.0 or ns == 0.0:
        raise ZeroVector("direction undefined for zero vector")
    return float(1.0 - np.dot(d, sv) / (nd * ns))


def directional_alignment_grad(
    delta: Sequence[float], s: Sequence[float], projection: Optional[np.ndarray] = None
) -> np.ndarray:
    d = np.asarray(delta, dtype=np.float64)
    sv = _project_supervision(np.asarray(s, dtype=np.float64), d.shape[0], projection)
    nd, ns = np.linalg.norm(d), np.linalg.norm(sv)
    if nd == 0.0 or ns == 0.0:
        raise ZeroVector("direction undefined for zero vector")
    cos = np.dot(d, sv) / (nd * ns)
    return -(sv / (nd * ns) - cos * d / (nd * nd))


def _unit_rows(deltas: Sequence, name: str = "deltas") -> tuple[np.ndarray, np.ndarray]:
    d = _as_batch(deltas, name)
    norms = np.linalg.norm(d, axis=1)
    if np.any(norms == 0.0):
        raise ZeroVector(f"{name} contain a zero vector")
    return d, norms


def supervised_contrast(
    deltas: Sequence, mask: np.ndarray, temperature: float = 0.07
) -> float:
    """Supervised contrastive loss over cosine similarities of the deltas.

    mask[i, j] = True marks a positive pair (same emotion or scene); it must
    be symmetric with a zero diagonal. Anchors without positives are excluded
    from the average; if none remain, AllAnchorsSkipped is raised.
    """
    d, norms = _unit_rows(deltas)
    m = np.asarray(mask, dtype=bool)
    n = d.shape[0]
    if m.shape != (n, n):
        raise DimensionMismatch(f"mask shape {m.shape} does not match {n} items")
    if np.any(np.diag(m)):
        raise ValueError("mask diagonal must be zero")
    if not np.array_equal(m, m.T):
        raise ValueError("mask must be symmetric")
    z = d / norms[:, None]
    sim = (z @ z.T) / temperature
    anchors = np.where(m.sum(axis=1) > 0)[0]
    if anchors.size == 0:
        raise AllAnchorsSkipped("no anchor has a positive pair")
    total = 0.0
    for i in anchors:
        others = np.arange(n) != i
        row = sim[i, others]
        shift = row.max()
        log_z = shift + math.log(np.sum(np.exp(row - shift)))
        positives = np.where(m[i])[0]
        total += -np.mean(sim[i, positives] - log_z)
    return float(total / anchors.size)


def supervised_contrast_grad(
    deltas: Sequence, mask: np.ndarray, temperature: float = 0.07
) -> np.ndarray:
    """Gradient with respect to the deltas (chain rule through the row
    normalization of each delta)."""
    d, norms = _unit_rows(deltas)
    m = np.asarray(mask, dtype=bool)
    n = d.shape[0]
    z = d / norms[:, None]
    sim = (z @ z.T) / temperature
    anchors = np.where(m.sum(axis=1) > 0)[0]
    if anchors.size == 0:
        raise AllAnchorsSkipped("no anchor has a positive pair")
    # g[i, j] = dL/d sim_cos(i, j) accumulated per anchor row i.
    g = np.zeros((n, n))
    for i in anchors:
        others = np.arange(n) != i
        row = sim[i, others]
        shift = row.max()
        exp_row = np.exp(row - shift)
        p = np.zeros(n)
        p[others] = exp_row / exp_row.sum()
        pos = m[i].astype(np.float64)
        g[i] = (p - pos / pos.sum()) / (temperature * anchors.size)
        g[i, i] = 0.0
    gz = (g + g.T) @ z  # dL/dz_i, since cos(i, j) feeds both anchor rows
    grad = np.zeros_like(d)
    for i in range(n):
        grad[i] = (gz[i] - np.dot(gz[i], z[i]) * z[i]) / norms[i]
    return grad


def _cosine_pair_distance(z: np.ndarray, ii: np.ndarray, jj: np.ndarray) -> np.ndarray:
    cos = np.clip(np.sum(z[ii] * z[jj], axis=1), -1.0, 1.0)
    return (1.0 - cos) / 2.0


def vad_geometry(
    deltas: Sequence, us: Sequence, weights: LossWeights = DEFAULT_WEIGHTS
) -> dict[str, float]:
    """Affect-geometry terms tying modulation directions to VAD layout.

    With d_u = ||u_i - u_j|| / sqrt(3) and d_cos = (1 - cos(delta_i,
    delta_j)) / 2 over all unordered pairs:

        align = mean (d_cos - d_u)^2
        push  = mean over top-k farthest-by-d_u pairs of [m_far - d_cos]_+
        pull  = mean over top-k nearest pairs of [d_cos - m_near]_+
        same  = mean d_cos^2 over pairs with d_u <= eps_same (0 if none)

    Top-k ties break by pair enumeration order, so results are deterministic.
    """
    d, norms = _unit_rows(deltas)
    u = _as_batch(us, "us")
    if d.shape[0] != u.shape[0]:
        raise LengthMismatch(f"{d.shape[0]} deltas vs {u.shape[0]} VAD points")
    if d.shape[0] < 2:
        raise LengthMismatch("need at least 2 items")
    if u.shape[1] != 3:
        raise DimensionMismatch("VAD points must be 3-vectors")
    z = d / norms[:, None]
    ii, jj = np.triu_indices(d.shape[0], k=1)
    d_u = np.linalg.norm(u[ii] - u[jj], axis=1) / math.sqrt(3.0)
    d_cos = _cosine_pair_distance(z, ii, jj)
    k = min(weights.top_k, len(ii))
    far = np.argsort(-d_u, kind="stable")[:k]
    near = np.argsort(d_u, kind="stable")[:k]
    same = np.where(d_u <= weights.eps_same)[0]
    align = float(np.mean((d_cos - d_u) ** 2))
    push = float(np.mean(np.maximum(0.0, weights.m_far - d_cos[far])))
    pull = float(np.mean(np.maximum(0.0, d_cos[near] - weights.m_near)))
    same_val = float(np.mean(d_cos[same] ** 2)) if same.size else 0.0
    return {"align": align, "push": push, "pull": pull, "same": same_val}


def vad_geometry_grad(
    deltas: Sequence, us: Sequence, weights: LossWeights = DEFAULT_WEIGHTS
) -> dict[str, np.ndarray]:
    """Per-term gradients with respect to the deltas."""
    d, norms = _unit_rows(deltas)
    u = _as_batch(us, "us")
    z = d / norms[:, None]
    n = d.shape[0]
    ii, jj = np.triu_indices(n, k=1)
    d_u = np.linalg.norm(u[ii] - u[jj], axis=1) / math.sqrt(3.0)
    cos_ij = np.sum(z[ii] * z[jj], axis=1)
    d_cos = (1.0 - cos_ij) / 2.0
    k = min(weights.top_k, len(ii))
    far = np.argsort(-d_u, kind="stable")[:k]
    near = np.argsort(d_u, kind="stable")[:k]
    same = np.where(d_u <= weights.eps_same)[0]

    def accumulate(pair_weights: np.ndarray) -> np.ndarray:
        """Map dL/d(d_cos) per pair into delta space.

        d(d_cos)/d(delta_i) = -(z_j - cos z_i) / (2 |delta_i|)."""
        grad = np.zeros_like(d)
        w = pair_weights
        gi = -0.5 * w[:, None] * (z[jj] - cos_ij[:, None] * z[ii]) / norms[ii][:, None]
        gj = -0.5 * w[:, None] * (z[ii] - cos_ij[:, None] * z[jj]) / norms[jj][:, None]
        np.add.at(grad, ii, gi)
        np.add.at(grad, jj, gj)
        return grad

    p = len(ii)
    align_w = 2.0 * (d_cos - d_u) / p
    push_w = np.zeros(p)
    push_w[far] = np.where(weights.m_far - d_cos[far] > 0, -1.0 / k, 0.0)
    pull_w = np.zeros(p)
    pull_w[near] = np.where(d_cos[near] - weights.m_near > 0, 1.0 / k, 0.0)
    same_w = np.zeros(p)
    if same.size:
        same_w[same] = 2.0 * d_cos[same] / same.size
    return {
        "align": accumulate(align_w),
        "push": accumulate(push_w),
        "pull": accumulate(pull_w),
        "same": accumulate(same_w),
    }


# ------------------------------------------------------------- regularization

def magnitude_reg(delta: Sequence[float], r0: float) -> float:
    """(||delta||_2 - r0)^2; keeps the modulation near the target radius."""
    d = np.asarray(delta, dtype=np.float64)
    return float((np.linalg.norm(d) - r0) ** 2)


def magnitude_reg_grad(delta: Sequence[float], r0: float) -> np.ndarray:
    d = np.asarray(delta, dtype=np.float64)
    norm = np.linalg.norm(d)
    if norm == 0.0:
        raise ZeroVector("gradient undefined at the zero vector")
    return 2.0 * (norm - r0) * d / norm


def _row_cosines(a: np.ndarray, b: np.ndarray, name: str) -> np.ndarray:
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    if np.any(na == 0.0) or np.any(nb == 0.0):
        raise ZeroVector(f"{name} pair contains a zero vector")
    return np.sum(a * b, axis=1) / (na * nb)


def injector_preservation(
    delta_pairs: tuple[Sequence, Sequence], injected_pairs: tuple[Sequence, Sequence]
) -> float:
    """MSE between pre- and post-injector cosine relations.

    The injector outputs are caller-supplied (no injector network here);
    this verifies the cosine-preservation identity over the given pairs.
    """
    a = _as_batch(delta_pairs[0], "delta_a")
    b = _as_batch(delta_pairs[1], "delta_b")
    ia = _as_batch(injected_pairs[0], "injected_a")
    ib = _as_batch(injected_pairs[1], "injected_b")
    if a.shape != b.shape or ia.shape[0] != a.shape[0] or ib.shape[0] != a.shape[0]:
        raise LengthMismatch("delta pairs and injected pairs must align")
    cos_d = _row_cosines(a, b, "delta")
    cos_i = _row_cosines(ia, ib, "injected")
    return float(np.mean((cos_d - cos_i) ** 2))


def injector_preservation_grad(
    delta_pairs: tuple[Sequence, Sequence], injected_pairs: tuple[Sequence, Sequence]
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients with respect to (delta_a, delta_b)."""
    a = _as_batch(delta_pairs[0], "delta_a")
    b = _as_batch(delta_pairs[1], "delta_b")
    ia = _as_batch(injected_pairs[0], "injected_a")
    ib = _as_batch(injected_pairs[1], "injected_b")
    cos_d = _row_cosines(a, b, "delta")
    cos_i = _row_cosines(ia, ib, "injected")
    coeff = 2.0 * (cos_d - cos_i) / a.shape[0]
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    ga = coeff[:, None] * (b / (na * nb)[:, None] - cos_d[:, None] * a / (na * na)[:, None])
    gb = coeff[:, None] * (a / (na * nb)[:, None] - cos_d[:, None] * b / (nb * nb)[:, None])
    return ga, gb


# ---------------------------------------------------------------- perceptual

def perceptual_loss(
    pred: Sequence[float], target: Sequence[float], weights: LossWeights = DEFAULT_WEIGHTS
) -> float:
    """Color penalty between HSV triples in [0, 1]^3 (hue circular):

        w_h g(s, s_hat) (2 d_h)^2 + w_s (s_hat - s)^2 + w_v (v_hat - v)^2

    with gate g = sqrt((s + s_hat) / 2), so hue error stops mattering as both
    saturations approach zero."""
    ph, ps, pv = (float(v) for v in pred)
    th, ts, tv = (float(v) for v in target)
    for name, v in (("pred", (ph, ps, pv)), ("target", (th, ts, tv))):
        if not all(0.0 <= x <= 1.0 for x in v):
            raise ValueError(f"{name} components must lie in [0, 1]")
    d_h = circular_hue_distance(ph % 1.0, th % 1.0)
    gate = math.sqrt((ps + ts) / 2.0)
    return (
        weights.w_h * gate * (2.0 * d_h) ** 2
        + weights.w_s * (ps - ts) ** 2
        + weights.w_v * (pv - tv) ** 2
    )


def perceptual_loss_grad(
    pred: Sequence[float], target: Sequence[float], weights: LossWeights = DEFAULT_WEIGHTS
) -> np.ndarray:
    """Gradient with respect to the predicted (h, s, v)."""
    ph, ps, pv = (float(v) for v in pred)
    th, ts, tv = (float(v) for v in target)
    e = abs(th - ph)
    d_h = min(e, 1.0 - e)
    # d(d_h)/d(pred_h): the near branch moves with sign(ph - th), the
    # wrapped branch with the opposite sign.
    sign = math.copysign(1.0, ph - th) if ph != th else 0.0
    dd_dh = sign if e < 0.5 else -sign
    gate = math.sqrt((ps + ts) / 2.0)
    dgate_ds = 0.25 / gate if gate > 0 else 0.0
    gh = weights.w_h * gate * 8.0 * d_h * dd_dh
    gs = weights.w_h * (2.0 * d_h) ** 2 * dgate_ds + 2.0 * weights.w_s * (ps - ts)
    gv = 2.0 * weights.w_v * (pv - tv)
    return np.array([gh, gs, gv])


# --------------------------------------------------------------------- total

COMPONENT_KEYS: tuple[str, ...] = (
    "diff",
    "img",
    "effect",
    "pair",
    "dir",
    "supcon",
    "vad_align",
    "push",
    "pull",
    "same",
    "perc",
    "mag",
    "inj",
)


def total_loss(
    components: Mapping[str, float], weights: LossWeights = DEFAULT_WEIGHTS
) -> tuple[float, dict[str, float]]:
    """Weighted total over the component values, grouped as

        gen   = diff + lambda_img img + lambda_eff effect
        align = lambda_pair pair + lambda_dir dir + lambda_con supcon
        aff   = alpha vad_align + beta push + gamma pull + eta same
        perc  = perc
        reg   = lambda_mag mag + lambda_inj inj

    Missing components count as 0. Returns (total, per-term breakdown) for
    logging; any non-finite component raises NonFiniteComponent.
    """
    vals: dict[str, float] = {}
    for key in COMPONENT_KEYS:
        v = float(components.get(key, 0.0))
        if not math.isfinite(v):
            raise NonFiniteComponent(key, v)
        vals[key] = v
    unknown = set(components) - set(COMPONENT_KEYS)
    if unknown:
        raise KeyError(f"unknown loss components: {sorted(unknown)}")
    gen = vals["diff"] + weights.lambda_img * vals["img"] + weights.lambda_eff * vals["effect"]
    align = (
        weights.lambda_pair * vals["pair"]
        + weights.lambda_dir * vals["dir"]
        + weights.lambda_con * vals["supcon"]
    )
    aff = (
        weights.alpha * vals["vad_align"]
        + weights.beta * vals["push"]
        + weights.gamma * vals["pull"]
        + weights.eta * vals["same"]
    )
    reg = weights.lambda_mag * vals["mag"] + weights.lambda_inj * vals["inj"]
    total = gen + align + aff + vals["perc"] + reg
    breakdown = {
        **{k: vals[k] for k in COMPONENT_KEYS},
        "gen": gen,
        "align": align,
        "aff": aff,
        "perc_group": vals["perc"],
        "reg": reg,
        "total": total,
    }
    return total, breakdown
