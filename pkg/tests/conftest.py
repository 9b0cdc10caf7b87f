"""Shared fixtures: synthetic images, record generator, corpus builder."""

from __future__ import annotations

import json
import random

import numpy as np
import pytest
from PIL import Image

from affectkit.schema import (
    AnnotationRecord,
    COLOR_NAMES,
    EMOTIONS,
    HsvSummary,
    PersonRecord,
    StructuralFeatures,
    VadVector,
    serialize_record,
)

# The released pairing example: one beach-scene annotation with per-model
# suffixed keys (one model omits dominance) kept verbatim.
PAIRING_EXAMPLE = {
    "clip_similarity": 0.2081,
    "scene": "beach",
    "emotion": "awe",
    "description_InternVL3-8B": "The image captures a serene sunset ...",
    "color_proportion": {
        "Black": 0.06,
        "White": 0.03,
        "Orange": 0.12,
        "Pink": 0.17,
        "Brown": 0.18,
        "Gray": 0.44,
        "Red": 0.0,
        "Green": 0.0,
        "Blue": 0.0,
        "Yellow": 0.0,
        "Purple": 0.0,
    },
    "average_color": {"hue": 20, "saturation": 45, "value": 69},
    "people_count": 0,
    "persons": [],
    "objects": {},
    "curvilinearity": 0.0986,
    "complexity_entropy": 0.9404,
    "complexity_edge_density": 0.0392,
    "aesthetic_score": 6.4474,
    "liqe_score": 3.3281,
    "valence_internvl3_8B": 8,
    "arousal_internvl3_8B": 7,
    "emotion_internvl3_8B": "awe",
    "valence_qwen2.5_vl_7b_instruct": 8,
    "arousal_qwen2.5_vl_7b_instruct": 7,
    "dominance_qwen2.5_vl_7b_instruct": 7,
    "emotion_qwen2.5_vl_7b_instruct": "awe",
}


@pytest.fixture
def pairing_example_bytes() -> bytes:
    return json.dumps(PAIRING_EXAMPLE).encode("utf-8")


def random_color_proportion(rng: random.Random) -> dict[str, float]:
    """Proportions on the 2-decimal grid that sum to exactly 1.00."""
    cents = [0] * len(COLOR_NAMES)
    for _ in range(100):
        cents[rng.randrange(len(COLOR_NAMES))] += 1
    return {c: cents[i] / 100.0 for i, c in enumerate(COLOR_NAMES)}


def random_record(rng: random.Random, stem: str = "", scene: str = "beach") -> AnnotationRecord:
    """A valid record with values already on the stored quantization grid."""
    models = rng.sample(["internvl3_8B", "qwen2.5_vl_7b_instruct", "modelC"], k=rng.randint(1, 3))
    per_model_vad = {}
    per_model_emotion = {}
    for m in models:
        per_model_vad[m] = VadVector(
            valence=float(rng.randint(1, 9)),
            arousal=float(rng.randint(1, 9)),
            dominance=float(rng.randint(1, 9)) if rng.random() < 0.8 else None,
        )
        per_model_emotion[m] = rng.choice(EMOTIONS[:9])
    people_count = rng.randint(0, 3)
    persons = [
        PersonRecord(
            gender=rng.choice(("male", "female", "unknown")),
            age_group=rng.choice(("adult", "child", "senior")),
            expression=rng.choice(EMOTIONS[:9]),
            interaction=rng.choice(("gazing", "comforting", "")),
        )
        for _ in range(people_count)
    ]
    extras = {}
    if rng.random() < 0.5:
        extras["source_platform"] = rng.choice(("unsplash", "pexels", "flickr"))
    aggregated = None
    if rng.random() < 0.5:
        aggregated = VadVector(
            valence=round(rng.uniform(1, 9), 4),
            arousal=round(rng.uniform(1, 9), 4),
            dominance=round(rng.uniform(1, 9), 4),
        )
    return AnnotationRecord(
        stem=stem,
        scene=scene,
        emotion=rng.choice(EMOTIONS[:9]),
        per_model_vad=per_model_vad,
        per_model_emotion=per_model_emotion,
        aggregated_vad=aggregated,
        color_proportion=random_color_proportion(rng),
        average_color=HsvSummary(
            hue=round(rng.uniform(0, 359.99), 4),
            saturation=round(rng.uniform(0, 100), 4),
            value=round(rng.uniform(0, 100), 4),
        ),
        structural=StructuralFeatures(
            curvilinearity=round(rng.random(), 4),
            complexity_entropy=round(rng.random(), 4),
            complexity_edge_density=round(rng.random(), 4),
        ),
        people_count=people_count,
        persons=persons,
        objects={"boat": rng.randint(0, 4)} if rng.random() < 0.5 else {},
        descriptions={"InternVL3-8B": "a synthetic caption"} if rng.random() < 0.7 else {},
        clip_similarity=round(rng.uniform(-1, 1), 4),
        aesthetic_score=round(rng.uniform(0, 10), 4),
        liqe_score=round(rng.uniform(0, 5), 4),
        extras=extras,
    )


def synth_image(rng: np.random.Generator, width: int = 48, height: int = 48, kind: str | None = None) -> np.ndarray:
    """Synthetic photo-like content: gradients, shapes, stripes, noise."""
    kinds = ("gradient", "shapes", "stripes", "noise", "disk")
    kind = kind or kinds[int(rng.integers(len(kinds)))]
    img = np.zeros((height, width, 3), dtype=np.float64)
    if kind == "gradient":
        gx = np.linspace(0, 255, width)
        gy = np.linspace(0, 255, height)[:, None]
        base = rng.integers(0, 80, size=3)
        img[..., 0] = np.clip(gx[None, :] + base[0], 0, 255)
        img[..., 1] = np.clip(gy + base[1], 0, 255)
        img[..., 2] = np.clip((gx[None, :] + gy) / 2 + base[2], 0, 255)
    elif kind == "shapes":
        img[:] = rng.integers(0, 256, size=3)
        for _ in range(4):
            x0, y0 = int(rng.integers(0, width - 4)), int(rng.integers(0, height - 4))
            x1 = int(rng.integers(x0 + 2, min(width, x0 + width // 2) + 1))
            y1 = int(rng.integers(y0 + 2, min(height, y0 + height // 2) + 1))
            img[y0:y1, x0:x1] = rng.integers(0, 256, size=3)
    elif kind == "stripes":
        period = int(rng.integers(2, 8))
        cols = (np.arange(width) // period) % 2
        a, b = rng.integers(0, 256, size=(2, 3))
        img[:] = np.where(cols[None, :, None] == 0, a, b)
    elif kind == "disk":
        img[:] = rng.integers(0, 256, size=3)
        cy, cx = height / 2, width / 2
        radius = min(width, height) * 0.35
        ys, xs = np.indices((height, width))
        mask = (ys - cy) ** 2 + (xs - cx) ** 2 <= radius**2
        img[mask] = rng.integers(0, 256, size=3)
    else:
        img = rng.integers(0, 256, size=(height, width, 3)).astype(np.float64)
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def photo_like_image(rng: np.random.Generator, width: int = 64, height: int = 48) -> np.ndarray:
    """Continuous-tone content (low-frequency color fields, one blended disk,
    mild grain): the standard fixture family for hash-stability bounds, where
    dHash has no tie bits to flip."""
    ys, xs = np.indices((height, width), dtype=np.float64)
    img = np.zeros((height, width, 3))
    for ch in range(3):
        fx, fy = rng.uniform(0.5, 2.0, size=2)
        phase = rng.uniform(0, 2 * np.pi, size=2)
        img[..., ch] = (
            110
            + 70 * np.cos(2 * np.pi * fx * xs / width + phase[0])
            + 50 * np.cos(2 * np.pi * fy * ys / height + phase[1])
        )
    cy, cx = rng.uniform(0.25, 0.75) * height, rng.uniform(0.25, 0.75) * width
    radius = rng.uniform(0.15, 0.3) * min(width, height)
    disk = ((ys - cy) ** 2 + (xs - cx) ** 2) <= radius * radius
    img[disk] = img[disk] * 0.4 + rng.uniform(0, 255, size=3) * 0.6
    img += rng.normal(0, 2.0, size=img.shape)
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def build_fixture_corpus(root, *, scenes=("beach", "forest", "street"), stems_per_scene=2, seed=7):
    """Scene-folder corpus of synthetic JPEGs plus valid paired JSONs, with
    one extra orphan image (no JSON)."""
    rng = random.Random(seed)
    np_rng = np.random.default_rng(seed)
    pairs = []
    for scene in scenes:
        scene_dir = root / scene
        scene_dir.mkdir(parents=True, exist_ok=True)
        for i in range(stems_per_scene):
            stem = f"{scene}_{i:03d}"
            pixels = synth_image(np_rng)
            Image.fromarray(pixels).save(scene_dir / f"{stem}.jpg", quality=95)
            record = random_record(rng, stem=stem, scene=scene)
            (scene_dir / f"{stem}.json").write_bytes(serialize_record(record))
            pairs.append((scene, stem))
    orphan_dir = root / scenes[0]
    Image.fromarray(synth_image(np_rng)).save(orphan_dir / "orphan_img.jpg", quality=95)
    return pairs


@pytest.fixture
def fixture_corpus(tmp_path):
    pairs = build_fixture_corpus(tmp_path / "corpus")
    return tmp_path / "corpus", pairs
