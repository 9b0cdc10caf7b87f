"""Human review workflow: queue state machine, audit trail, agreement stats.

Reviewers accept or reject each presented field independently; a rejection
needs a rationale and may carry a corrected value. All-yes decisions finalize
the item immediately; any-no sends it to the recheck queue with the round
counter bumped and corrections applied for the next pass. Every state change
appends an audit entry; replaying the line-delimited log from an empty queue
reconstructs the exact queue state.

Agreement statistics follow the audited-subset report layout: discrete
accuracy and Fleiss' kappa, per-dimension VAD MSE and Pearson r.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, IO, Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import (
    AlreadyFinalized,
    DegenerateInput,
    IncompleteDecision,
    MissingRationale,
    UnknownItem,
    ZeroVariance,
)
from .schema import VadVector, canonical_emotion
from .stats import pearson_r

VAD_FIELDS: tuple[str, ...] = ("valence", "arousal", "dominance")
STATES: tuple[str, ...] = ("pending", "recheck", "finalized")

DEFAULT_LEASE_SECONDS = 900.0
DEFAULT_MAX_ROUNDS = 5


@dataclass
class ReviewItem:
    stem: str
    image_ref: str
    emotion_candidates: tuple[str, ...]
    vad: VadVector
    state: str = "pending"
    round: int = 1
    needs_senior: bool = False
    needs_adjudication: bool = False
    initial_candidates: tuple[str, ...] = ()
    initial_vad: Optional[VadVector] = None

    def __post_init__(self):
        if not 1 <= len(self.emotion_candidates) <= 2:
            raise ValueError("items present 1 or 2 emotion candidates")
        if len(set(self.emotion_candidates)) != len(self.emotion_candidates):
            raise ValueError("emotion candidates must be distinct")
        self.emotion_candidates = tuple(
            canonical_emotion(c, field_name="emotion_candidates") for c in self.emotion_candidates
        )
        if self.state not in STATES:
            raise ValueError(f"unknown state {self.state!r}")
        if self.vad.dominance is None:
            raise ValueError("review items present all three VAD scores")
        if not self.initial_candidates:
            self.initial_candidates = self.emotion_candidates
        if self.initial_vad is None:
            self.initial_vad = self.vad

    def presented_fields(self) -> tuple[str, ...]:
        emotion_fields = tuple(f"emotion_{i + 1}" for i in range(len(self.emotion_candidates)))
        return emotion_fields + VAD_FIELDS

    def to_json_dict(self) -> dict:
        return {
            "stem": self.stem,
            "image_ref": self.image_ref,
            "emotion_candidates": list(self.emotion_candidates),
            "vad": self.vad.as_dict(),
            "state": self.state,
            "round": self.round,
            "needs_senior": self.needs_senior,
            "needs_adjudication": self.needs_adjudication,
            "initial_candidates": list(self.initial_candidates),
            "initial_vad": self.initial_vad.as_dict() if self.initial_vad else None,
        }

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "ReviewItem":
        return cls(
            stem=doc["stem"],
            image_ref=doc["image_ref"],
            emotion_candidates=tuple(doc["emotion_candidates"]),
            vad=VadVector(**doc["vad"]),
            state=doc.get("state", "pending"),
            round=doc.get("round", 1),
            needs_senior=doc.get("needs_senior", False),
            needs_adjudication=doc.get("needs_adjudication", False),
            initial_candidates=tuple(doc.get("initial_candidates", ())),
            initial_vad=VadVector(**doc["initial_vad"]) if doc.get("initial_vad") else None,
        )


@dataclass(frozen=True)
class FieldVerdict:
    field: str
    verdict: str  # yes | no
    rationale: str = ""
    corrected_value: Optional[object] = None  # emotion label or 1-9 score

    def __post_init__(self):
        if self.verdict not in ("yes", "no"):
            raise ValueError(f"verdict must be yes or no, got {self.verdict!r}")
        if self.verdict == "yes" and self.corrected_value is not None:
            raise ValueError(f"corrected value on a yes verdict for {self.field!r}")


@dataclass(frozen=True)
class ReviewDecision:
    stem: str
    reviewer: str
    timestamp: str
    verdicts: tuple[FieldVerdict, ...]

    def to_json_dict(self) -> dict:
        return {
            "stem": self.stem,
            "reviewer": self.reviewer,
            "timestamp": self.timestamp,
            "verdicts": [
                {
                    "field": v.field,
                    "verdict": v.verdict,
                    "rationale": v.rationale,
                    "corrected_value": v.corrected_value,
                }
                for v in self.verdicts
            ],
        }

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "ReviewDecision":
        return cls(
            stem=doc["stem"],
            reviewer=doc["reviewer"],
            timestamp=doc["timestamp"],
            verdicts=tuple(
                FieldVerdict(
                    field=v["field"],
                    verdict=v["verdict"],
                    rationale=v.get("rationale", ""),
                    corrected_value=v.get("corrected_value"),
                )
                for v in doc["verdicts"]
            ),
        )


@dataclass(frozen=True)
class AuditEntry:
    seq: int
    decision: ReviewDecision
    resulting_state: str
    resulting_round: int

    def to_json_dict(self) -> dict:
        return {
            "kind": "decision",
            "seq": self.seq,
            "resulting_state": self.resulting_state,
            "resulting_round": self.resulting_round,
            **self.decision.to_json_dict(),
        }


def _validate_decision(item: ReviewItem, decision: ReviewDecision) -> None:
    presented = item.presented_fields()
    seen = [v.field for v in decision.verdicts]
    duplicates = {f for f in seen if seen.count(f) > 1}
    if duplicates:
        raise IncompleteDecision(f"duplicate verdicts for {sorted(duplicates)}", field=sorted(duplicates)[0])
    missing = [f for f in presented if f not in seen]
    if missing:
        raise IncompleteDecision(f"missing verdicts for {missing}", field=missing[0])
    extra = [f for f in seen if f not in presented]
    if extra:
        raise IncompleteDecision(f"verdicts for fields not presented: {extra}", field=extra[0])
    for v in decision.verdicts:
        if v.verdict == "no" and not v.rationale.strip():
            raise MissingRationale(v.field)
        if v.verdict == "no" and v.corrected_value is not None:
            if v.field in VAD_FIELDS:
                score = v.corrected_value
                if (
                    not isinstance(score, (int, float))
                    or isinstance(score, bool)
                    or not 1 <= float(score) <= 9
                ):
                    raise IncompleteDecision(
                        f"corrected {v.field} must be a 1-9 score", field=v.field
                    )
            else:
                canonical_emotion(str(v.corrected_value), field_name=v.field)


def _next_round_item(item: ReviewItem, decision: ReviewDecision) -> None:
    """Apply corrections in place and move the item to its next recheck round."""
    by_field = {v.field: v for v in decision.verdicts}
    new_vad = {dim: getattr(item.vad, dim) for dim in VAD_FIELDS}
    for dim in VAD_FIELDS:
        v = by_field[dim]
        if v.verdict == "no" and v.corrected_value is not None:
            new_vad[dim] = float(v.corrected_value)

    candidates: list[str] = []
    for i, candidate in enumerate(item.emotion_candidates):
        v = by_field[f"emotion_{i + 1}"]
        if v.verdict == "yes":
            candidates.append(candidate)
        elif v.corrected_value is not None:
            candidates.append(canonical_emotion(str(v.corrected_value)))
    deduped: list[str] = []
    for c in candidates:
        if c not in deduped:
            deduped.append(c)
    if not deduped:
        # Both suggestions rejected with no correction: reset and flag for
        # senior review.
        deduped = ["unknown"]
        item.needs_senior = True

    item.vad = VadVector(**new_vad)
    item.emotion_candidates = tuple(deduped[:2])
    item.state = "recheck"
    item.round += 1


class ReviewQueue:
    """Single-writer review queue with leases and an append-only audit log.

    All state changes flow through apply_decision under one lock; reads see a
    consistent snapshot. Items handed to a reviewer are leased and withheld
    from other reviewers until the lease lapses. Items past max_rounds are
    flagged for adjudication and leave the polling rotation.
    """

    def __init__(
        self,
        lease_seconds: float = DEFAULT_LEASE_SECONDS,
        max_rounds: int = DEFAULT_MAX_ROUNDS,
        clock: Callable[[], float] = time.monotonic,
    ):
        self._items: dict[str, ReviewItem] = {}
        self._lock = threading.RLock()
        self._leases: dict[str, tuple[str, float]] = {}
        self._seq = 0
        self._log: list[dict] = []
        self._log_stream: Optional[IO[str]] = None
        self.lease_seconds = lease_seconds
        self.max_rounds = max_rounds
        self.clock = clock

    # ------------------------------------------------------------ intake/io

    def attach_log(self, stream: IO[str]) -> None:
        """Stream every log record as one JSON line, flushed per entry."""
        self._log_stream = stream

    def _emit(self, record: dict) -> None:
        self._log.append(record)
        if self._log_stream is not None:
            self._log_stream.write(json.dumps(record, sort_keys=True) + "\n")
            self._log_stream.flush()

    def add_item(self, item: ReviewItem, _log: bool = True) -> None:
        with self._lock:
            if item.stem in self._items:
                raise ValueError(f"duplicate stem {item.stem!r}")
            self._items[item.stem] = item
            if _log:
                self._seq += 1
                self._emit({"kind": "intake", "seq": self._seq, "item": item.to_json_dict()})

    def add_items(self, items: Iterable[ReviewItem]) -> None:
        for item in items:
            self.add_item(item)

    def get(self, stem: str) -> ReviewItem:
        with self._lock:
            if stem not in self._items:
                raise UnknownItem(f"no review item with stem {stem!r}")
            return self._items[stem]

    def items(self) -> list[ReviewItem]:
        with self._lock:
            return [self._items[s] for s in sorted(self._items)]

    def log_records(self) -> list[dict]:
        with self._lock:
            return list(self._log)

    # ------------------------------------------------------------- workflow

    def next_pending(self, reviewer: str) -> Optional[ReviewItem]:
        """Deterministic polling order: recheck before pending, then round
        descending, then stem ascending. Leased items go only to their
        current holder until the lease lapses."""
        with self._lock:
            now = self.clock()
            candidates = [
                it
                for it in self._items.values()
                if it.state in ("pending", "recheck") and not it.needs_adjudication
            ]
            candidates.sort(key=lambda it: (it.state != "recheck", -it.round, it.stem))
            for item in candidates:
                lease = self._leases.get(item.stem)
                if lease is not None and lease[1] > now and lease[0] != reviewer:
                    continue
                self._leases[item.stem] = (reviewer, now + self.lease_seconds)
                return item
            return None

    def apply_decision(self, decision: ReviewDecision, _log: bool = True) -> tuple[ReviewItem, AuditEntry]:
        """Validate and apply one decision atomically.

        All-yes finalizes; any-no moves the item to recheck with round + 1
        and corrections applied. Validation failures leave the item untouched
        and append nothing.
        """
        with self._lock:
            item = self.get(decision.stem)
            if item.state == "finalized":
                raise AlreadyFinalized(f"item {item.stem!r} is already finalized")
            _validate_decision(item, decision)
            if all(v.verdict == "yes" for v in decision.verdicts):
                item.state = "finalized"
            else:
                _next_round_item(item, decision)
                if item.round > self.max_rounds:
                    item.needs_adjudication = True
            self._leases.pop(item.stem, None)
            self._seq += 1
            entry = AuditEntry(
                seq=self._seq,
                decision=decision,
                resulting_state=item.state,
                resulting_round=item.round,
            )
            if _log:
                self._emit(entry.to_json_dict())
            return item, entry

    # ----------------------------------------------------------- persistence

    def snapshot_dict(self) -> dict:
        with self._lock:
            return {
                "seq": self._seq,
                "items": [self._items[s].to_json_dict() for s in sorted(self._items)],
            }

    def save_snapshot(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.snapshot_dict(), indent=2, sort_keys=True) + "\n")

    def export_corrections(self) -> list[dict]:
        """Per-field export of human corrections: the boundary where
        corrected labels leave this toolkit."""
        out = []
        with self._lock:
            for record in self._log:
                if record.get("kind") != "decision":
                    continue
                for v in record["verdicts"]:
                    if v["verdict"] == "no" and v.get("corrected_value") is not None:
                        out.append(
                            {
                                "stem": record["stem"],
                                "field": v["field"],
                                "corrected_value": v["corrected_value"],
                                "rationale": v["rationale"],
                                "reviewer": record["reviewer"],
                                "timestamp": record["timestamp"],
                            }
                        )
        return out


def replay_log(lines: Iterable[str], **queue_kwargs) -> ReviewQueue:
    """Rebuild a queue from its line-delimited log, verifying that every
    decision lands in the state the log recorded."""
    queue = ReviewQueue(**queue_kwargs)
    expected_seq = 0
    for line in lines:
        line = line.strip()
        if not line:
            continue
        record = json.loads(line)
        expected_seq += 1
        if record.get("seq") != expected_seq:
            raise ValueError(
                f"audit log gap: expected seq {expected_seq}, found {record.get('seq')}"
            )
        kind = record.get("kind")
        if kind == "intake":
            queue.add_item(ReviewItem.from_json_dict(record["item"]), _log=False)
        elif kind == "decision":
            decision = ReviewDecision.from_json_dict(record)
            item, _ = queue.apply_decision(decision, _log=False)
            if item.state != record["resulting_state"] or item.round != record["resulting_round"]:
                raise ValueError(
                    f"replay divergence at seq {record['seq']}: "
                    f"got {item.state}/round {item.round}, "
                    f"log says {record['resulting_state']}/round {record['resulting_round']}"
                )
        else:
            raise ValueError(f"unknown log record kind {kind!r}")
        queue._seq = record["seq"]
        queue._log.append(record)
    return queue


# ------------------------------------------------------------------ agreement

def fleiss_kappa(ratings: Sequence[Sequence[object]]) -> float:
    """Fleiss' kappa for items x raters categorical ratings.

    Chance agreement comes from the pooled category marginals:
    kappa = (P_bar - P_e) / (1 - P_e). Unanimous matrices return 1.0 (also
    when every rating is one category and P_e would hit 1). Invariant under
    any relabeling of categories.
    """
    matrix = [list(row) for row in ratings]
    if not matrix:
        raise DegenerateInput("no items")
    n_raters = len(matrix[0])
    if n_raters < 2:
        raise DegenerateInput("need at least 2 raters")
    if any(len(row) != n_raters for row in matrix):
        raise DegenerateInput("all items need the same number of ratings")
    categories = sorted({str(v) for row in matrix for v in row})
    counts = np.zeros((len(matrix), len(categories)))
    index = {c: k for k, c in enumerate(categories)}
    for i, row in enumerate(matrix):
        for v in row:
            counts[i, index[str(v)]] += 1
    n = float(n_raters)
    p_items = (np.sum(counts * counts, axis=1) - n) / (n * (n - 1.0))
    p_bar = float(np.mean(p_items))
    marginals = counts.sum(axis=0) / counts.sum()
    p_e = float(np.sum(marginals * marginals))
    if p_bar == 1.0:
        return 1.0
    return (p_bar - p_e) / (1.0 - p_e)


@dataclass
class AgreementReport:
    n_pairs: int
    accuracy_percent: Optional[float]
    mse: tuple[Optional[float], Optional[float], Optional[float]]
    pearson: tuple[Optional[float], Optional[float], Optional[float]]
    fleiss: Optional[float]
    notes: dict[str, str] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "accuracy_percent": self.accuracy_percent,
            "mse": {"valence": self.mse[0], "arousal": self.mse[1], "dominance": self.mse[2]},
            "pearson": {
                "valence": self.pearson[0],
                "arousal": self.pearson[1],
                "dominance": self.pearson[2],
            },
            "fleiss_kappa": self.fleiss,
            "notes": dict(self.notes),
        }

    def to_table(self) -> str:
        """Audited-subset layout: one row per subset with a discrete column
        (accuracy or kappa) and a VAD column (MSE or r)."""

        def fmt(v: Optional[float], suffix: str = "") -> str:
            return "-" if v is None else f"{v:.4f}{suffix}"

        def triple(vs) -> str:
            return " / ".join(fmt(v) for v in vs)

        lines = [
            "Subset\tDiscrete (Acc./kappa)\tVAD (MSE / r)",
            f"Audited ({self.n_pairs})\t{fmt(self.accuracy_percent, '%')} (Acc.)\t{triple(self.mse)} (MSE)",
            f"Multi-rater\t{fmt(self.fleiss)} (kappa)\t{triple(self.pearson)} (r)",
        ]
        return "\n".join(lines) + "\n"


def agreement_report(
    pairs: Sequence[tuple[tuple[str, VadVector], tuple[str, VadVector]]],
    multi_rater: Optional[Sequence[Sequence[object]]] = None,
) -> AgreementReport:
    """Agreement between machine and human labels.

    pairs: (machine, human) tuples of (label, VadVector). Degenerate inputs
    mark the affected statistic with a note instead of failing the report.
    """
    notes: dict[str, str] = {}
    accuracy = None
    mse: list[Optional[float]] = [None, None, None]
    pearson: list[Optional[float]] = [None, None, None]
    if pairs:
        machine_labels = [m[0] for m, _ in pairs]
        human_labels = [h[0] for _, h in pairs]
        accuracy = 100.0 * float(
            np.mean([m == h for m, h in zip(machine_labels, human_labels)])
        )
        for k, dim in enumerate(VAD_FIELDS):
            ms = [getattr(m[1], dim) for m, _ in pairs]
            hs = [getattr(h[1], dim) for _, h in pairs]
            if any(v is None for v in ms + hs):
                notes[f"mse_{dim}"] = "degenerate:missing dimension"
                continue
            err = np.asarray(ms) - np.asarray(hs)
            mse[k] = float(np.mean(err * err))
            try:
                pearson[k] = pearson_r(ms, hs)
            except ZeroVariance as exc:
                notes[f"pearson_{dim}"] = f"zero-variance:{exc.series}"
            except DegenerateInput as exc:
                notes[f"pearson_{dim}"] = f"degenerate:{exc}"
    else:
        notes["pairs"] = "degenerate:no pairs"

    fleiss = None
    if multi_rater is not None:
        try:
            fleiss = fleiss_kappa(multi_rater)
        except DegenerateInput as exc:
            notes["fleiss_kappa"] = f"degenerate:{exc}"

    return AgreementReport(
        n_pairs=len(pairs),
        accuracy_percent=accuracy,
        mse=(mse[0], mse[1], mse[2]),
        pearson=(pearson[0], pearson[1], pearson[2]),
        fleiss=fleiss,
        notes=notes,
    )
