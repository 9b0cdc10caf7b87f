"""HTTP facade over the review queue for the companion UI and scripts.

Endpoints (JSON over HTTP, CORS enabled for the UI origin):

    GET  /api/queue/next?reviewer=<id>     next leased item, 204 when empty,
                                           400 without a reviewer id
    POST /api/items/<stem>/decision        apply a decision; 409 when the
                                           item is finalized, 422 naming the
                                           offending field on validation
                                           errors, 404 for unknown stems
    GET  /api/stats                        agreement over finalized items
    GET  /api/images/<scene>/<stem>        image bytes from the corpus root

Every state change goes through ReviewQueue.apply_decision, so arbitrary
request sequences stay replayable from the audit log. Image serving is
read-only and confined to the corpus root.
"""

from __future__ import annotations

import json
import re
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, unquote, urlparse

from .errors import (
    AlreadyFinalized,
    IncompleteDecision,
    MissingRationale,
    SchemaViolation,
    UnknownItem,
)
from .review import AgreementReport, ReviewDecision, ReviewItem, ReviewQueue, agreement_report
from .schema import IMAGE_EXTENSIONS

_SAFE_SEGMENT = re.compile(r"^[A-Za-z0-9._-]+$")
_CONTENT_TYPES = {".jpg": "image/jpeg", ".jpeg": "image/jpeg", ".png": "image/png"}


def item_payload(item: ReviewItem) -> dict:
    ref = Path(item.image_ref)
    scene = ref.parent.name
    return {
        "stem": item.stem,
        "image_url": f"/api/images/{scene}/{item.stem}" if scene else "",
        "emotion_candidates": list(item.emotion_candidates),
        "vad": item.vad.as_dict(),
        "presented_fields": list(item.presented_fields()),
        "state": item.state,
        "round": item.round,
    }


def stats_payload(queue: ReviewQueue) -> dict:
    """Agreement between the round-1 machine presentation and the finalized
    values. Empty markers (nulls) when nothing is finalized yet."""
    pairs = []
    for item in queue.items():
        if item.state != "finalized":
            continue
        machine = (item.initial_candidates[0], item.initial_vad)
        human = (item.emotion_candidates[0], item.vad)
        pairs.append((machine, human))
    report: AgreementReport = agreement_report(pairs)
    payload = report.to_json_dict()
    payload["finalized"] = len(pairs)
    return payload


class ReviewService:
    """Binds a queue and a corpus root to the HTTP handler."""

    def __init__(self, queue: ReviewQueue, corpus_root: str | Path, allowed_origin: str = "*"):
        self.queue = queue
        self.corpus_root = Path(corpus_root).resolve()
        self.allowed_origin = allowed_origin

    def make_server(self, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
        service = self

        class Handler(_ReviewHandler):
            pass

        Handler.service = service
        server = ThreadingHTTPServer((host, port), Handler)
        server.daemon_threads = True
        return server

    def resolve_image(self, scene: str, stem: str) -> Optional[Path]:
        """Map (scene, stem) to an image file, refusing anything that would
        escape the corpus root."""
        if not (_SAFE_SEGMENT.match(scene) and _SAFE_SEGMENT.match(stem)):
            return None
        if ".." in (scene, stem):
            return None
        for ext in IMAGE_EXTENSIONS:
            candidate = (self.corpus_root / scene / f"{stem}{ext}").resolve()
            try:
                candidate.relative_to(self.corpus_root)
            except ValueError:
                return None
            if candidate.is_file():
                return candidate
        return None


class _ReviewHandler(BaseHTTPRequestHandler):
    service: ReviewService

    # Silence per-request stderr logging; tests drive many requests.
    def log_message(self, format: str, *args) -> None:
        pass

    def _cors(self) -> None:
        self.send_header("Access-Control-Allow-Origin", self.service.allowed_origin)
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self._cors()
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_empty(self, status: int) -> None:
        self.send_response(status)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_OPTIONS(self) -> None:
        self._send_empty(204)

    def do_GET(self) -> None:
        url = urlparse(self.path)
        parts = [unquote(p) for p in url.path.split("/") if p]
        if parts == ["api", "queue", "next"]:
            query = parse_qs(url.query)
            reviewer = query.get("reviewer", [""])[0].strip()
            if not reviewer:
                self._send_json(400, {"error": "missing reviewer id"})
                return
            item = self.service.queue.next_pending(reviewer)
            if item is None:
                self._send_empty(204)
            else:
                self._send_json(200, item_payload(item))
            return
        if parts == ["api", "stats"]:
            self._send_json(200, stats_payload(self.service.queue))
            return
        if len(parts) == 4 and parts[:2] == ["api", "images"]:
            path = self.service.resolve_image(parts[2], parts[3])
            if path is None:
                self._send_json(404, {"error": "image not found"})
                return
            data = path.read_bytes()
            self.send_response(200)
            self._cors()
            self.send_header("Content-Type", _CONTENT_TYPES.get(path.suffix.lower(), "application/octet-stream"))
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)
            return
        self._send_json(404, {"error": "unknown endpoint"})

    def do_POST(self) -> None:
        url = urlparse(self.path)
        parts = [unquote(p) for p in url.path.split("/") if p]
        if len(parts) == 4 and parts[:2] == ["api", "items"] and parts[3] == "decision":
            stem = parts[2]
            length = int(self.headers.get("Content-Length", "0"))
            raw = self.rfile.read(length) if length else b""
            try:
                body = json.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError):
                self._send_json(400, {"error": "body is not valid JSON"})
                return
            try:
                decision = self._decision_from_body(stem, body)
                item, _ = self.service.queue.apply_decision(decision)
            except UnknownItem:
                self._send_json(404, {"error": f"unknown stem {stem!r}"})
                return
            except AlreadyFinalized:
                self._send_json(409, {"error": "item already finalized", "state": "finalized"})
                return
            except MissingRationale as exc:
                self._send_json(422, {"error": "missing rationale", "field": exc.field})
                return
            except IncompleteDecision as exc:
                self._send_json(422, {"error": str(exc), "field": exc.field})
                return
            except (SchemaViolation, ValueError, KeyError, TypeError) as exc:
                self._send_json(422, {"error": str(exc), "field": getattr(exc, "field", "")})
                return
            self._send_json(200, {"state": item.state, "round": item.round})
            return
        self._send_json(404, {"error": "unknown endpoint"})

    def _decision_from_body(self, stem: str, body: dict) -> ReviewDecision:
        if not isinstance(body, dict):
            raise IncompleteDecision("decision body must be an object")
        reviewer = str(body.get("reviewer", "")).strip()
        if not reviewer:
            raise IncompleteDecision("missing reviewer id", field="reviewer")
        verdict_docs = body.get("verdicts")
        if not isinstance(verdict_docs, list) or not verdict_docs:
            raise IncompleteDecision("missing verdicts", field="verdicts")
        timestamp = str(body.get("timestamp", "")) or datetime.now(timezone.utc).isoformat()
        doc = {
            "stem": stem,
            "reviewer": reviewer,
            "timestamp": timestamp,
            "verdicts": verdict_docs,
        }
        return ReviewDecision.from_json_dict(doc)


def serve_forever(service: ReviewService, host: str, port: int) -> None:
    server = service.make_server(host, port)
    actual_port = server.server_address[1]
    print(f"review service listening on http://{host}:{actual_port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
