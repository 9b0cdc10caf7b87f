"""Annotation data model, JSON parsing/serialization, and corpus layout scanning.

The on-disk layout pairs `<root>/<scene>/<stem>.jpg` with
`<root>/<scene>/<stem>.json`. The JSON carries the released flat field
names: per-model affect predictions are suffixed keys ("valence_<model>",
"emotion_<model>") and are folded into maps keyed by the suffix string; the
suffix is kept verbatim so arbitrary model ids survive a round trip.

Float fields are quantized on record construction (2 decimals for color
proportions, 4 for features and scores), which makes serialization
byte-stable and parse(serialize(record)) an identity.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional

from .errors import MalformedSyntax, SchemaViolation

EMOTIONS: tuple[str, ...] = (
    "amusement",
    "anger",
    "awe",
    "contentment",
    "disgust",
    "excitement",
    "fear",
    "sadness",
    "neutral",
    "unknown",
)

COLOR_NAMES: tuple[str, ...] = (
    "Black",
    "White",
    "Gray",
    "Red",
    "Orange",
    "Yellow",
    "Green",
    "Blue",
    "Purple",
    "Pink",
    "Brown",
)

ACHROMATIC_COLORS: tuple[str, ...] = ("Black", "White", "Gray")
CHROMATIC_COLORS: tuple[str, ...] = tuple(
    c for c in COLOR_NAMES if c not in ACHROMATIC_COLORS
)

GENDERS: tuple[str, ...] = ("male", "female", "unknown")

IMAGE_EXTENSIONS: tuple[str, ...] = (".jpg", ".jpeg", ".png")

# Quantization grid used when records are built or parsed.
COLOR_DECIMALS = 2
FEATURE_DECIMALS = 4


def canonical_emotion(value: str, *, field_name: str = "emotion", key: str = "") -> str:
    """Lowercase an emotion label, rejecting anything outside the vocabulary."""
    if not isinstance(value, str):
        raise SchemaViolation(field_name, f"expected string label, got {type(value).__name__}")
    label = value.strip().lower()
    if label not in EMOTIONS:
        where = f" (key {key!r})" if key else ""
        raise SchemaViolation(field_name, f"unknown emotion label {value!r}{where}")
    return label


def _q(value: float, decimals: int) -> float:
    return round(float(value), decimals)


def _check_finite(name: str, value: float) -> float:
    v = float(value)
    if not math.isfinite(v):
        raise SchemaViolation(name, f"value {value!r} is not finite")
    return v


@dataclass(frozen=True)
class VadVector:
    """A point on the 1-9 SAM scale. Dominance may be absent at the
    per-model layer; aggregated vectors normally carry all three."""

    valence: float
    arousal: float
    dominance: Optional[float] = None

    def validate(self, *, key: str = "") -> "VadVector":
        for name, v in (("valence", self.valence), ("arousal", self.arousal),
                        ("dominance", self.dominance)):
            if v is None:
                continue
            _check_finite(name, v)
            if not 1.0 <= v <= 9.0:
                where = f" ('{name}_{key}')" if key else ""
                raise SchemaViolation(name, f"score {v}{where} out of range [1, 9]")
        return self

    def normalized(self) -> tuple[float, float, float]:
        """Map each 1-9 component to [0, 1] via u = (x - 1) / 8."""
        if self.dominance is None:
            raise SchemaViolation("dominance", "cannot normalize a vector without dominance")
        return (
            (self.valence - 1.0) / 8.0,
            (self.arousal - 1.0) / 8.0,
            (self.dominance - 1.0) / 8.0,
        )

    def as_dict(self) -> dict[str, float]:
        d = {"valence": self.valence, "arousal": self.arousal}
        if self.dominance is not None:
            d["dominance"] = self.dominance
        return d


@dataclass(frozen=True)
class HsvSummary:
    """Global color atmosphere: circular hue in [0, 360), S and V in [0, 100]."""

    hue: float
    saturation: float
    value: float

    def validate(self) -> "HsvSummary":
        _check_finite("hue", self.hue)
        if not 0.0 <= self.hue < 360.0:
            raise SchemaViolation("hue", f"hue {self.hue} outside [0, 360)")
        for name, v in (("saturation", self.saturation), ("value", self.value)):
            _check_finite(name, v)
            if not 0.0 <= v <= 100.0:
                raise SchemaViolation(name, f"{name} {v} outside [0, 100]")
        return self


@dataclass(frozen=True)
class StructuralFeatures:
    curvilinearity: float
    complexity_entropy: float
    complexity_edge_density: float

    def validate(self) -> "StructuralFeatures":
        for name in ("curvilinearity", "complexity_entropy", "complexity_edge_density"):
            v = _check_finite(name, getattr(self, name))
            if not 0.0 <= v <= 1.0:
                raise SchemaViolation(name, f"{name} {v} outside [0, 1]")
        return self


@dataclass
class PersonRecord:
    """One detected person. Fields default to unknown/empty so images with
    people_count = 0 need no person payload at all."""

    gender: str = "unknown"
    age_group: str = ""
    expression: str = "unknown"
    interaction: str = ""
    extras: dict[str, Any] = field(default_factory=dict)

    def validate(self) -> "PersonRecord":
        if self.gender not in GENDERS:
            raise SchemaViolation("gender", f"unknown gender {self.gender!r}")
        self.expression = canonical_emotion(self.expression, field_name="expression")
        return self


def validate_color_proportion(mapping: Mapping[str, Any], *, sum_tolerance: float) -> dict[str, float]:
    """Check the 11-key color map: full coverage, values in [0, 1], total near 1."""
    missing = [c for c in COLOR_NAMES if c not in mapping]
    extra = [k for k in mapping if k not in COLOR_NAMES]
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing keys {missing}")
        if extra:
            parts.append(f"unexpected keys {extra}")
        raise SchemaViolation("color_proportion", "; ".join(parts))
    out: dict[str, float] = {}
    for name in COLOR_NAMES:
        v = mapping[name]
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise SchemaViolation("color_proportion", f"{name} is not a number")
        v = _check_finite("color_proportion", v)
        if not 0.0 <= v <= 1.0:
            raise SchemaViolation("color_proportion", f"{name} = {v} outside [0, 1]")
        out[name] = v
    total = sum(out.values())
    if abs(total - 1.0) > sum_tolerance:
        raise SchemaViolation(
            "color_proportion",
            f"values sum to {total:.6f}, outside 1 +/- {sum_tolerance}",
        )
    return out


def quantize_color_proportion(mapping: Mapping[str, float]) -> dict[str, float]:
    """Round proportions to 2 decimals with largest-remainder balancing so the
    stored values sum to exactly 1.00. Ties go to the canonical color order."""
    cents = {c: mapping.get(c, 0.0) * 100.0 for c in COLOR_NAMES}
    floors = {c: math.floor(cents[c]) for c in COLOR_NAMES}
    deficit = 100 - sum(floors.values())
    remainders = sorted(
        COLOR_NAMES,
        key=lambda c: (-(cents[c] - floors[c]), COLOR_NAMES.index(c)),
    )
    for c in remainders[:deficit]:
        floors[c] += 1
    return {c: floors[c] / 100.0 for c in COLOR_NAMES}


@dataclass
class AnnotationRecord:
    """One image's full annotation: affective labels, perceptual features,
    contextual entities, and ingested quality scores.

    `stem` comes from the filename, not the JSON payload; corpus loaders pass
    it into parse_record. Unknown top-level JSON fields are preserved in
    `extras` and re-emitted on serialization.
    """

    scene: str
    emotion: str
    color_proportion: dict[str, float]
    average_color: HsvSummary
    structural: StructuralFeatures
    clip_similarity: float
    aesthetic_score: float
    liqe_score: float
    stem: str = ""
    per_model_vad: dict[str, VadVector] = field(default_factory=dict)
    per_model_emotion: dict[str, str] = field(default_factory=dict)
    aggregated_vad: Optional[VadVector] = None
    people_count: int = 0
    persons: list[PersonRecord] = field(default_factory=list)
    objects: dict[str, int] = field(default_factory=dict)
    descriptions: dict[str, str] = field(default_factory=dict)
    extras: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.color_proportion = {
            c: _q(v, COLOR_DECIMALS) for c, v in self.color_proportion.items()
        }
        self.average_color = HsvSummary(
            hue=_q(self.average_color.hue, FEATURE_DECIMALS),
            saturation=_q(self.average_color.saturation, FEATURE_DECIMALS),
            value=_q(self.average_color.value, FEATURE_DECIMALS),
        )
        self.structural = StructuralFeatures(
            curvilinearity=_q(self.structural.curvilinearity, FEATURE_DECIMALS),
            complexity_entropy=_q(self.structural.complexity_entropy, FEATURE_DECIMALS),
            complexity_edge_density=_q(self.structural.complexity_edge_density, FEATURE_DECIMALS),
        )
        self.clip_similarity = _q(self.clip_similarity, FEATURE_DECIMALS)
        self.aesthetic_score = _q(self.aesthetic_score, FEATURE_DECIMALS)
        self.liqe_score = _q(self.liqe_score, FEATURE_DECIMALS)
        self.per_model_vad = {
            m: VadVector(
                valence=_q(v.valence, FEATURE_DECIMALS),
                arousal=_q(v.arousal, FEATURE_DECIMALS),
                dominance=None if v.dominance is None else _q(v.dominance, FEATURE_DECIMALS),
            )
            for m, v in self.per_model_vad.items()
        }
        if self.aggregated_vad is not None:
            a = self.aggregated_vad
            self.aggregated_vad = VadVector(
                valence=_q(a.valence, FEATURE_DECIMALS),
                arousal=_q(a.arousal, FEATURE_DECIMALS),
                dominance=None if a.dominance is None else _q(a.dominance, FEATURE_DECIMALS),
            )

    def check_finalized(self) -> None:
        """Finalized records must carry at least one per-model VAD and emotion."""
        if not self.per_model_vad:
            raise SchemaViolation("per_model_vad", "finalized record has no per-model VAD")
        if not self.per_model_emotion:
            raise SchemaViolation("per_model_emotion", "finalized record has no per-model emotion")


_DIM_PREFIXES = ("valence_", "arousal_", "dominance_")
_REQUIRED_FIELDS = (
    "clip_similarity",
    "scene",
    "emotion",
    "color_proportion",
    "average_color",
    "people_count",
    "persons",
    "objects",
    "curvilinearity",
    "complexity_entropy",
    "complexity_edge_density",
    "aesthetic_score",
    "liqe_score",
)


def _require_number(doc: Mapping[str, Any], key: str) -> float:
    v = doc[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise SchemaViolation(key, f"expected number, got {type(v).__name__}")
    return _check_finite(key, v)


def _parse_person(entry: Any, index: int) -> PersonRecord:
    if not isinstance(entry, dict):
        raise SchemaViolation("persons", f"entry {index} is not an object")
    known = {"gender", "age_group", "expression", "interaction"}
    person = PersonRecord(
        gender=str(entry.get("gender", "unknown")).strip().lower(),
        age_group=str(entry.get("age_group", "")),
        expression=str(entry.get("expression", "unknown")),
        interaction=str(entry.get("interaction", "")),
        extras={k: v for k, v in entry.items() if k not in known},
    )
    return person.validate()


def parse_record(
    raw: bytes | str,
    *,
    stem: str = "",
    color_sum_tolerance: float = 0.02,
    require_models: bool = False,
) -> AnnotationRecord:
    """Parse and validate one annotation JSON document.

    The default color-sum tolerance (0.02) matches ingested files whose
    proportions are stored at 2 decimals; extraction-time checks use 1e-6.
    Raises MalformedSyntax for non-JSON input and SchemaViolation(field,
    reason) for every content failure.
    """
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedSyntax(f"not UTF-8 text: {exc}") from None
    else:
        text = raw
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedSyntax(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedSyntax("top-level JSON value must be an object")

    for key in _REQUIRED_FIELDS:
        if key not in doc:
            raise SchemaViolation(key, "required field missing")

    scene = doc["scene"]
    if not isinstance(scene, str) or not scene:
        raise SchemaViolation("scene", "expected nonempty string")
    emotion = canonical_emotion(doc["emotion"])

    if not isinstance(doc["color_proportion"], dict):
        raise SchemaViolation("color_proportion", "expected object")
    colors = validate_color_proportion(doc["color_proportion"], sum_tolerance=color_sum_tolerance)

    avg = doc["average_color"]
    if not isinstance(avg, dict):
        raise SchemaViolation("average_color", "expected object")
    for k in ("hue", "saturation", "value"):
        if k not in avg:
            raise SchemaViolation(k, "average_color is missing this key")
    hsv = HsvSummary(
        hue=_require_number(avg, "hue"),
        saturation=_require_number(avg, "saturation"),
        value=_require_number(avg, "value"),
    ).validate()

    structural = StructuralFeatures(
        curvilinearity=_require_number(doc, "curvilinearity"),
        complexity_entropy=_require_number(doc, "complexity_entropy"),
        complexity_edge_density=_require_number(doc, "complexity_edge_density"),
    ).validate()

    clip = _require_number(doc, "clip_similarity")
    if not -1.0 <= clip <= 1.0:
        raise SchemaViolation("clip_similarity", f"{clip} outside [-1, 1]")
    aesthetic = _require_number(doc, "aesthetic_score")
    liqe = _require_number(doc, "liqe_score")

    people_count = doc["people_count"]
    if not isinstance(people_count, int) or isinstance(people_count, bool) or people_count < 0:
        raise SchemaViolation("people_count", f"expected integer >= 0, got {people_count!r}")
    if not isinstance(doc["persons"], list):
        raise SchemaViolation("persons", "expected list")
    persons = [_parse_person(p, i) for i, p in enumerate(doc["persons"])]
    if people_count > 0 and len(persons) != people_count:
        raise SchemaViolation(
            "persons", f"people_count is {people_count} but persons has {len(persons)} entries"
        )

    if not isinstance(doc["objects"], dict):
        raise SchemaViolation("objects", "expected object")
    objects: dict[str, int] = {}
    for k, v in doc["objects"].items():
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise SchemaViolation("objects", f"count for {k!r} must be an integer >= 0")
        objects[str(k)] = v

    # Fold suffixed per-model keys and descriptions.
    vad_parts: dict[str, dict[str, float]] = {}
    per_model_emotion: dict[str, str] = {}
    descriptions: dict[str, str] = {}
    consumed: set[str] = set(_REQUIRED_FIELDS)
    for key, value in doc.items():
        matched = False
        for prefix in _DIM_PREFIXES:
            if key.startswith(prefix) and len(key) > len(prefix):
                dim = prefix[:-1]
                model = key[len(prefix):]
                if not isinstance(value, (int, float)) or isinstance(value, bool):
                    raise SchemaViolation(dim, f"{key!r} is not a number")
                score = _check_finite(dim, value)
                if not 1.0 <= score <= 9.0:
                    raise SchemaViolation(dim, f"{key!r} = {score} out of range [1, 9]")
                vad_parts.setdefault(model, {})[dim] = score
                matched = True
                break
        if matched:
            consumed.add(key)
            continue
        if key.startswith("emotion_") and len(key) > len("emotion_"):
            model = key[len("emotion_"):]
            per_model_emotion[model] = canonical_emotion(value, key=key)
            consumed.add(key)
        elif key.startswith("description_") and len(key) > len("description_"):
            source = key[len("description_"):]
            if not isinstance(value, str):
                raise SchemaViolation("description", f"{key!r} is not a string")
            descriptions[source] = value
            consumed.add(key)

    per_model_vad: dict[str, VadVector] = {}
    for model, dims in vad_parts.items():
        if "valence" not in dims or "arousal" not in dims:
            missing = "valence" if "valence" not in dims else "arousal"
            raise SchemaViolation(missing, f"model {model!r} reports VAD without {missing}")
        per_model_vad[model] = VadVector(
            valence=dims["valence"],
            arousal=dims["arousal"],
            dominance=dims.get("dominance"),
        ).validate(key=model)

    aggregated: Optional[VadVector] = None
    if "aggregated_vad" in doc:
        agg = doc["aggregated_vad"]
        if not isinstance(agg, dict) or "valence" not in agg or "arousal" not in agg:
            raise SchemaViolation("aggregated_vad", "expected object with valence and arousal")
        aggregated = VadVector(
            valence=_require_number(agg, "valence"),
            arousal=_require_number(agg, "arousal"),
            dominance=_require_number(agg, "dominance") if "dominance" in agg else None,
        ).validate()
        consumed.add("aggregated_vad")

    extras = {k: v for k, v in doc.items() if k not in consumed}

    record = AnnotationRecord(
        stem=stem,
        scene=scene,
        emotion=emotion,
        per_model_vad=per_model_vad,
        per_model_emotion=per_model_emotion,
        aggregated_vad=aggregated,
        color_proportion=colors,
        average_color=hsv,
        structural=structural,
        people_count=people_count,
        persons=persons,
        objects=objects,
        descriptions=descriptions,
        clip_similarity=clip,
        aesthetic_score=aesthetic,
        liqe_score=liqe,
        extras=extras,
    )
    if require_models:
        record.check_finalized()
    return record


def _emit_number(value: float) -> int | float:
    """Per-model raw scores are integers in released files; keep that look."""
    f = float(value)
    return int(f) if f.is_integer() else f


def _assert_serializable(name: str, value: Any) -> None:
    if isinstance(value, bool) or value is None or isinstance(value, (str, int)):
        return
    if isinstance(value, float):
        if not math.isfinite(value):
            raise SchemaViolation(name, f"cannot serialize non-finite number {value!r}")
        return
    if isinstance(value, (list, tuple)):
        for i, v in enumerate(value):
            _assert_serializable(f"{name}[{i}]", v)
        return
    if isinstance(value, dict):
        for k, v in value.items():
            _assert_serializable(f"{name}.{k}", v)
        return
    raise SchemaViolation(name, f"cannot serialize value of type {type(value).__name__}")


def serialize_record(record: AnnotationRecord) -> bytes:
    """Serialize a record to canonical UTF-8 JSON bytes.

    Output is deterministic: known fields in a fixed order, per-model blocks
    sorted by model id, extras sorted by key. NaN/Inf anywhere is rejected.
    """
    doc: dict[str, Any] = {}
    doc["clip_similarity"] = record.clip_similarity
    doc["scene"] = record.scene
    doc["emotion"] = record.emotion
    for source in sorted(record.descriptions):
        doc[f"description_{source}"] = record.descriptions[source]
    doc["color_proportion"] = {c: record.color_proportion[c] for c in COLOR_NAMES}
    doc["average_color"] = {
        "hue": record.average_color.hue,
        "saturation": record.average_color.saturation,
        "value": record.average_color.value,
    }
    doc["people_count"] = record.people_count
    persons_out = []
    for p in record.persons:
        entry: dict[str, Any] = {
            "gender": p.gender,
            "age_group": p.age_group,
            "expression": p.expression,
            "interaction": p.interaction,
        }
        for k in sorted(p.extras):
            entry[k] = p.extras[k]
        persons_out.append(entry)
    doc["persons"] = persons_out
    doc["objects"] = {k: record.objects[k] for k in sorted(record.objects)}
    doc["curvilinearity"] = record.structural.curvilinearity
    doc["complexity_entropy"] = record.structural.complexity_entropy
    doc["complexity_edge_density"] = record.structural.complexity_edge_density
    doc["aesthetic_score"] = record.aesthetic_score
    doc["liqe_score"] = record.liqe_score
    for model in sorted(record.per_model_vad):
        vad = record.per_model_vad[model]
        doc[f"valence_{model}"] = _emit_number(vad.valence)
        doc[f"arousal_{model}"] = _emit_number(vad.arousal)
        if vad.dominance is not None:
            doc[f"dominance_{model}"] = _emit_number(vad.dominance)
    for model in sorted(record.per_model_emotion):
        doc[f"emotion_{model}"] = record.per_model_emotion[model]
    if record.aggregated_vad is not None:
        doc["aggregated_vad"] = record.aggregated_vad.as_dict()
    for key in sorted(record.extras):
        doc[key] = record.extras[key]

    _assert_serializable("record", doc)
    text = json.dumps(doc, ensure_ascii=False, sort_keys=False, indent=2)
    return (text + "\n").encode("utf-8")


@dataclass(frozen=True)
class CorpusEntry:
    scene: str
    stem: str
    image_path: Path
    json_path: Path


@dataclass(frozen=True)
class OrphanReport:
    scene: str
    stem: str
    path: Path
    kind: str  # missing-json | missing-image | duplicate-image | io-error
    detail: str = ""


def scan_corpus(root: str | os.PathLike) -> tuple[list[CorpusEntry], list[OrphanReport]]:
    """Enumerate scene folders and pair images with annotation JSONs by stem.

    Pairs come back sorted by (scene, stem); unreadable directories are
    reported as io-error orphans and the scan continues, so the result is a
    pure function of directory contents.
    """
    root_path = Path(root)
    if not root_path.is_dir():
        raise NotADirectoryError(f"corpus root {root_path} does not exist")
    pairs: list[CorpusEntry] = []
    orphans: list[OrphanReport] = []
    try:
        scene_dirs = sorted(p for p in root_path.iterdir() if p.is_dir())
    except OSError as exc:
        orphans.append(OrphanReport("", "", root_path, "io-error", str(exc)))
        return pairs, orphans
    for scene_dir in scene_dirs:
        scene = scene_dir.name
        images: dict[str, Path] = {}
        jsons: dict[str, Path] = {}
        try:
            entries = sorted(p for p in scene_dir.iterdir() if p.is_file())
        except OSError as exc:
            orphans.append(OrphanReport(scene, "", scene_dir, "io-error", str(exc)))
            continue
        for path in entries:
            suffix = path.suffix.lower()
            stem = path.stem
            if suffix in IMAGE_EXTENSIONS:
                if stem in images:
                    orphans.append(OrphanReport(scene, stem, path, "duplicate-image"))
                else:
                    images[stem] = path
            elif suffix == ".json":
                jsons[stem] = path
        for stem in sorted(set(images) | set(jsons)):
            if stem in images and stem in jsons:
                pairs.append(CorpusEntry(scene, stem, images[stem], jsons[stem]))
            elif stem in images:
                orphans.append(OrphanReport(scene, stem, images[stem], "missing-json"))
            else:
                orphans.append(OrphanReport(scene, stem, jsons[stem], "missing-image"))
    pairs.sort(key=lambda e: (e.scene, e.stem))
    orphans.sort(key=lambda o: (o.scene, o.stem, str(o.path)))
    return pairs, orphans


def load_record(entry: CorpusEntry, **kwargs) -> AnnotationRecord:
    """Read and parse the JSON half of a corpus pair, stamping the stem."""
    raw = entry.json_path.read_bytes()
    return parse_record(raw, stem=entry.stem, **kwargs)


def iter_records(root: str | os.PathLike, **kwargs) -> Iterable[tuple[CorpusEntry, AnnotationRecord]]:
    pairs, _ = scan_corpus(root)
    for entry in pairs:
        yield entry, load_record(entry, **kwargs)
