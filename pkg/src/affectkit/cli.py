"""Command-line entry point.

Subcommands: extract | validate | filter | dedup | stats | metrics |
review-serve | audit-replay. Configuration precedence is flags > config file
(JSON) > built-in defaults; the effective configuration is echoed into a
manifest.json under --out for every run that writes outputs.
"""

from __future__ import annotations

import argparse
import json
import signal
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .affect import density_map, per_emotion_summary, record_vad, summary_table
from .curation import (
    FilterPolicy,
    dedup,
    embedding_duplicates,
    filter_corpus,
    format_duplicate_lines,
    load_embeddings,
    perceptual_hash,
    resolve_sharpness_floor,
    sharpness_score,
)
from .errors import AffectKitError, MalformedSyntax, SchemaViolation
from .image import PixelImage
from .metrics import metric_report, render_report, write_report
from .perceptual import (
    ExtractionConfig,
    ReferenceColorTable,
    apply_features,
    extract_all,
)
from .review import ReviewItem, ReviewQueue, replay_log
from .schema import (
    AnnotationRecord,
    HsvSummary,
    VadVector,
    parse_record,
    scan_corpus,
    serialize_record,
)
from .service import ReviewService, serve_forever
from .stats import composition_by_emotion, composition_table, correlation_matrix

DEFAULTS = {
    "extraction": {
        "canny_gaussian_sigma": 1.4,
        "canny_low_ratio": 0.1,
        "canny_high_ratio": 0.3,
        "histogram_bins": 256,
        "reference_colors": None,
    },
    "filter": {
        "min_sharpness": None,
        "min_aesthetic": None,
        "min_clip_similarity": None,
        "strict_missing": False,
        "sharpness_drop_fraction": 0.05,
    },
    "dedup": {"threshold": 8, "embedding_cosine_threshold": 0.98},
    "stats": {"bins": 64, "smoothing_sigma": 1.0},
    "review": {"lease_seconds": 900.0, "max_rounds": 5},
    "service": {"host": "127.0.0.1", "port": 8765},
}


def load_config(path: str | None) -> dict:
    merged = json.loads(json.dumps(DEFAULTS))
    if path:
        user = json.loads(Path(path).read_text())
        for section, values in user.items():
            if section not in merged:
                raise SystemExit(f"unknown config section {section!r}")
            merged[section].update(values)
    return merged


def extraction_config(cfg: dict) -> ExtractionConfig:
    section = cfg["extraction"]
    table = (
        ReferenceColorTable.from_config(section["reference_colors"])
        if section["reference_colors"]
        else None
    )
    kwargs = {
        "canny_gaussian_sigma": section["canny_gaussian_sigma"],
        "canny_low_ratio": section["canny_low_ratio"],
        "canny_high_ratio": section["canny_high_ratio"],
        "histogram_bins": section["histogram_bins"],
    }
    if table is not None:
        kwargs["reference_table"] = table
    return ExtractionConfig(**kwargs)


def write_manifest(out_dir: Path, command: str, cfg: dict, args: argparse.Namespace, extra: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "tool": f"affectkit {__version__}",
        "command": command,
        "seed": getattr(args, "seed", None),
        "workers": getattr(args, "workers", None),
        "config": cfg,
        **extra,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# Workers receive plain paths so the pool stays oblivious to record state.

def _extract_worker(job: tuple[str, ExtractionConfig]):
    path, config = job
    image = PixelImage.from_file(path)
    return extract_all(image, config)


def _sharpness_worker(path: str) -> float:
    return sharpness_score(PixelImage.from_file(path))


def _hash_worker(path: str) -> int:
    return perceptual_hash(PixelImage.from_file(path))


def _pool_map(fn, jobs, workers: int):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def cmd_extract(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    config = extraction_config(cfg)
    pairs, orphans = scan_corpus(args.root)
    errors: list[str] = []
    features = _pool_map(
        _extract_worker, [(str(p.image_path), config) for p in pairs], args.workers
    )
    changed = 0
    for entry, feats in zip(pairs, features):
        try:
            record = parse_record(entry.json_path.read_bytes(), stem=entry.stem)
        except (MalformedSyntax, SchemaViolation) as exc:
            errors.append(f"{entry.scene}/{entry.stem}: {exc}")
            continue
        updated = apply_features(record, feats)
        payload = serialize_record(updated)
        if payload != entry.json_path.read_bytes():
            changed += 1
            if args.dry_run:
                print(f"would update {entry.json_path}")
            else:
                entry.json_path.write_bytes(payload)
    for orphan in orphans:
        errors.append(f"{orphan.scene}/{orphan.stem}: orphan ({orphan.kind})")
    out_dir = Path(args.out)
    write_manifest(
        out_dir,
        "extract",
        cfg,
        args,
        {
            "extraction": config.manifest_dict(),
            "root": str(args.root),
            "pairs": len(pairs),
            "updated": changed,
            "dry_run": args.dry_run,
            "errors": errors,
        },
    )
    for line in errors:
        print(f"error: {line}", file=sys.stderr)
    print(f"extracted features for {len(pairs)} images ({changed} updated, {len(errors)} errors)")
    return 0 if not errors else 1


def cmd_validate(args: argparse.Namespace) -> int:
    pairs, orphans = scan_corpus(args.root)
    violations: list[str] = []
    for entry in pairs:
        try:
            parse_record(entry.json_path.read_bytes(), stem=entry.stem)
        except (MalformedSyntax, SchemaViolation) as exc:
            violations.append(f"{entry.scene}/{entry.stem}: {exc}")
    for orphan in orphans:
        violations.append(f"{orphan.scene}/{orphan.stem}: orphan ({orphan.kind})")
    for line in violations:
        print(line)
    print(f"{len(violations)} violations")
    return 0 if not violations else 1


def _load_records(root: str) -> tuple[list, list[str]]:
    pairs, orphans = scan_corpus(root)
    records = []
    errors = [f"{o.scene}/{o.stem}: orphan ({o.kind})" for o in orphans]
    for entry in pairs:
        try:
            records.append((entry, parse_record(entry.json_path.read_bytes(), stem=entry.stem)))
        except (MalformedSyntax, SchemaViolation) as exc:
            errors.append(f"{entry.scene}/{entry.stem}: {exc}")
    return records, errors


def cmd_filter(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    section = dict(cfg["filter"])
    for flag in ("min_sharpness", "min_aesthetic", "min_clip_similarity"):
        value = getattr(args, flag)
        if value is not None:
            section[flag] = value
    loaded, errors = _load_records(args.root)
    sharpness = {
        entry.stem: value
        for (entry, _), value in zip(
            loaded, _pool_map(_sharpness_worker, [str(e.image_path) for e, _ in loaded], args.workers)
        )
    }
    if section["min_sharpness"] is None and sharpness:
        section["min_sharpness"] = resolve_sharpness_floor(
            list(sharpness.values()), section["sharpness_drop_fraction"]
        )
    policy = FilterPolicy(
        min_sharpness=section["min_sharpness"],
        min_aesthetic=section["min_aesthetic"],
        min_clip_similarity=section["min_clip_similarity"],
        strict_missing=section["strict_missing"],
    )
    reports = filter_corpus([r for _, r in loaded], policy, sharpness)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "quality_reports.jsonl").open("w") as fh:
        for report in reports:
            fh.write(json.dumps(report.as_dict(), sort_keys=True) + "\n")
    kept = sum(1 for r in reports if r.verdict == "keep")
    cfg["filter"] = section
    write_manifest(
        out_dir,
        "filter",
        cfg,
        args,
        {"root": str(args.root), "records": len(reports), "kept": kept, "errors": errors},
    )
    print(f"{kept}/{len(reports)} records kept; reports in {out_dir / 'quality_reports.jsonl'}")
    return 0 if not errors else 1


def cmd_dedup(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    threshold = args.threshold if args.threshold is not None else cfg["dedup"]["threshold"]
    pairs, _ = scan_corpus(args.root)
    hash_values = _pool_map(_hash_worker, [str(e.image_path) for e in pairs], args.workers)
    hashes = [(e.stem, h) for e, h in zip(pairs, hash_values)]
    clusters = dedup(hashes, threshold)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = format_duplicate_lines(clusters, dict(hashes))
    (out_dir / "duplicates.tsv").write_text("\n".join(lines) + ("\n" if lines else ""))
    extra = {
        "root": str(args.root),
        "hash_algorithm": "dhash-9x8",
        "threshold": threshold,
        "images": len(hashes),
        "clusters": len(clusters),
    }
    if args.embeddings:
        stems, vectors = load_embeddings(args.embeddings)
        emb_clusters = embedding_duplicates(
            stems, vectors, cfg["dedup"]["embedding_cosine_threshold"]
        )
        emb_lines = []
        for cluster in emb_clusters:
            for member in cluster.member_stems:
                if member != cluster.representative_stem:
                    emb_lines.append(f"{cluster.representative_stem}\t{member}")
        (out_dir / "embedding_duplicates.tsv").write_text(
            "\n".join(emb_lines) + ("\n" if emb_lines else "")
        )
        extra["embedding_clusters"] = len(emb_clusters)
    write_manifest(out_dir, "dedup", cfg, args, extra)
    print(f"{len(clusters)} duplicate clusters at threshold {threshold}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    bins = args.bins if args.bins is not None else cfg["stats"]["bins"]
    sigma = cfg["stats"]["smoothing_sigma"]
    if args.no_smoothing:
        sigma = None
    loaded, errors = _load_records(args.root)
    records = [r for _, r in loaded]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    vads = [v for v in (record_vad(r) for r in records) if v is not None]
    grids = {}
    for plane in ("VA", "VD", "AD"):
        points = vads if plane == "VA" else [v for v in vads if v.dominance is not None]
        grid = density_map(points, plane=plane, bins=bins, smoothing_sigma=sigma)
        grid.save(out_dir / f"density_{plane}.json")
        if args.heatmap:
            grid.render_heatmap(out_dir / f"density_{plane}.png")
        grids[plane] = len(points)
    (out_dir / "per_emotion.tsv").write_text(summary_table(per_emotion_summary(records)))
    (out_dir / "composition.tsv").write_text(
        composition_table(composition_by_emotion(records))
    )
    if len(records) >= 2:
        (out_dir / "correlation.tsv").write_text(correlation_matrix(records).to_table())
    write_manifest(
        out_dir,
        "stats",
        cfg,
        args,
        {"root": str(args.root), "records": len(records), "density_points": grids, "errors": errors},
    )
    print(f"stats for {len(records)} records written to {out_dir}")
    return 0 if not errors else 1


def _load_metric_samples(path: str) -> tuple[list[VadVector], list[HsvSummary]]:
    docs = json.loads(Path(path).read_text())
    vads = []
    hsvs = []
    for doc in docs:
        vads.append(
            VadVector(
                valence=float(doc["valence"]),
                arousal=float(doc["arousal"]),
                dominance=float(doc["dominance"]),
            )
        )
        hsvs.append(
            HsvSummary(
                hue=float(doc["hue"]),
                saturation=float(doc["saturation"]),
                value=float(doc["value"]),
            )
        )
    return vads, hsvs


def cmd_metrics(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    pred_vad, pred_hsv = _load_metric_samples(args.pred)
    target_vad, target_hsv = _load_metric_samples(args.target)
    image_emb = text_emb = None
    if args.image_embeddings and args.text_embeddings:
        stems_a, image_raw = load_embeddings(args.image_embeddings)
        stems_b, text_raw = load_embeddings(args.text_embeddings)
        if stems_a != stems_b:
            raise SystemExit("image and text embedding files list different stems")
        image_emb, text_emb = image_raw, text_raw
    rows = metric_report(
        args.method,
        pred_vad,
        target_vad,
        pred_hsv,
        target_hsv,
        image_embeddings=image_emb,
        text_embeddings=text_emb,
        include_color_v=args.include_color_v,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_report(rows, out_dir / "metric_report.tsv")
    write_manifest(
        out_dir,
        "metrics",
        cfg,
        args,
        {"pred": args.pred, "target": args.target, "samples": len(pred_vad)},
    )
    print(render_report(rows), end="")
    return 0


def build_queue_from_corpus(root: str, intake: str) -> tuple[ReviewQueue, list[str]]:
    loaded, errors = _load_records(root)
    queue = ReviewQueue()
    for entry, record in loaded:
        labels: list[str] = []
        for model in sorted(record.per_model_emotion):
            label = record.per_model_emotion[model]
            if label not in labels:
                labels.append(label)
        if not labels:
            continue
        disputed = len(labels) > 1
        if intake == "disputed" and not disputed:
            continue
        vad = record_vad(record)
        if vad is None or vad.dominance is None:
            errors.append(f"{entry.scene}/{entry.stem}: no complete VAD for review intake")
            continue
        queue.add_item(
            ReviewItem(
                stem=record.stem,
                image_ref=f"{entry.scene}/{entry.image_path.name}",
                emotion_candidates=tuple(labels[:2]),
                vad=vad,
            )
        )
    return queue, errors


def cmd_review_serve(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    host = args.host or cfg["service"]["host"]
    port = args.port if args.port is not None else cfg["service"]["port"]
    queue = ReviewQueue(
        lease_seconds=cfg["review"]["lease_seconds"],
        max_rounds=cfg["review"]["max_rounds"],
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "audit.jsonl"
    log_stream = log_path.open("a")
    queue.attach_log(log_stream)
    if args.intake_file:
        docs = json.loads(Path(args.intake_file).read_text())
        for doc in docs:
            queue.add_item(ReviewItem.from_json_dict(doc))
    else:
        seeded, errors = build_queue_from_corpus(args.root, args.intake)
        for item in seeded.items():
            queue.add_item(item)
        for line in errors:
            print(f"intake: {line}", file=sys.stderr)
    write_manifest(
        out_dir,
        "review-serve",
        cfg,
        args,
        {"root": str(args.root), "queued": len(queue.items()), "audit_log": str(log_path)},
    )
    service = ReviewService(queue, args.root)

    def _graceful_stop(signum, frame):
        raise KeyboardInterrupt

    # SIGTERM (docker stop, systemd) must also land in the snapshot path.
    signal.signal(signal.SIGTERM, _graceful_stop)
    try:
        serve_forever(service, host, port)
    finally:
        queue.save_snapshot(out_dir / "queue_snapshot.json")
        log_stream.close()
    return 0


def cmd_audit_replay(args: argparse.Namespace) -> int:
    lines = Path(args.log).read_text().splitlines()
    queue = replay_log(lines)
    reconstructed = queue.snapshot_dict()
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "reconstructed_snapshot.json").write_text(
            json.dumps(reconstructed, indent=2, sort_keys=True) + "\n"
        )
    states = {}
    for item in queue.items():
        states[item.state] = states.get(item.state, 0) + 1
    print(f"replayed {len(lines)} log records: {states or 'empty queue'}")
    if args.snapshot:
        expected = json.loads(Path(args.snapshot).read_text())
        if expected != reconstructed:
            print("snapshot mismatch: replayed state differs from the stored snapshot", file=sys.stderr)
            return 1
        print("snapshot verified: replayed state matches")
    return 0


def add_common(parser: argparse.ArgumentParser, root: bool = True) -> None:
    if root:
        parser.add_argument("--root", required=True, help="corpus root directory")
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--out", default="affectkit_out", help="output directory")
    parser.add_argument("--seed", type=int, default=0, help="seed for any sampled computation")
    parser.add_argument("--workers", type=int, default=1, help="worker processes for image batches")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="affectkit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"affectkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="compute perceptual features into paired JSONs")
    add_common(p)
    p.add_argument("--dry-run", action="store_true", help="report changes without writing")
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("validate", help="validate corpus layout and annotation JSONs")
    p.add_argument("--root", required=True)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("filter", help="emit quality reports against thresholds")
    add_common(p)
    p.add_argument("--min-sharpness", type=float, default=None, dest="min_sharpness")
    p.add_argument("--min-aesthetic", type=float, default=None, dest="min_aesthetic")
    p.add_argument("--min-clip-similarity", type=float, default=None, dest="min_clip_similarity")
    p.set_defaults(fn=cmd_filter)

    p = sub.add_parser("dedup", help="perceptual-hash duplicate clusters")
    add_common(p)
    p.add_argument("--threshold", type=int, default=None, help="Hamming threshold (default 8)")
    p.add_argument("--embeddings", default=None, help="optional embedding file for near-dup clusters")
    p.set_defaults(fn=cmd_dedup)

    p = sub.add_parser("stats", help="density grids, per-emotion summaries, correlations")
    add_common(p)
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--no-smoothing", action="store_true")
    p.add_argument("--heatmap", action="store_true", help="also render PNG heatmaps")
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("metrics", help="evaluate prediction files against target files")
    add_common(p, root=False)
    p.add_argument("--pred", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--method", default="ours")
    p.add_argument("--image-embeddings", default=None)
    p.add_argument("--text-embeddings", default=None)
    p.add_argument("--include-color-v", action="store_true")
    p.set_defaults(fn=cmd_metrics)

    p = sub.add_parser("review-serve", help="run the review HTTP service")
    add_common(p)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--intake", choices=("disputed", "all"), default="disputed")
    p.add_argument("--intake-file", default=None, help="JSON list of review items")
    p.set_defaults(fn=cmd_review_serve)

    p = sub.add_parser("audit-replay", help="rebuild queue state from an audit log")
    p.add_argument("--log", required=True)
    p.add_argument("--snapshot", default=None, help="snapshot file to verify against")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_audit_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except AffectKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
