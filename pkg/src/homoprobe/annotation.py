"""Human-rating task export/import and the rating collection server.

Task files list (candidate, original) pairs in a seeded shuffle, each with a
sampled source sentence when the session uses context. Ratings come back as
JSON lines matching the RatingRecord schema; the bundled server also accepts
them over POST /api/ratings so the browser UI can submit directly.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Iterable
from urllib.parse import parse_qs, urlparse

from .dataset import Dataset
from .errors import MissingContextError, ValidationError
from .metrics import RatingRecord, rating_from_json_dict, rating_to_json_dict


@dataclass(frozen=True)
class TaskItem:
    item_id: str
    candidate: str
    original: str
    mode: str  # "with_context" | "without_context"
    source_context: str | None = None


def _item_id(original: str, candidate: str, mode: str) -> str:
    return hashlib.sha1(f"{original}|{candidate}|{mode}".encode("utf-8")).hexdigest()[:10]


def export_tasks(
    pairs: Iterable[tuple[str, str]],
    dataset: Dataset | None,
    with_context: bool,
    seed: int = 0,
) -> list[TaskItem]:
    """Build rating task items from (candidate, original) pairs.

    With context enabled, each item carries one source sentence containing
    the original slang, sampled with the given seed; the item order is a
    seed-reproducible shuffle either way.
    """
    mode = "with_context" if with_context else "without_context"
    rng = random.Random(seed)
    items = []
    for candidate, original in pairs:
        context = None
        if with_context:
            if dataset is None:
                raise MissingContextError(candidate, original)
            sources = [inst.source for inst in dataset.instances if original in inst.source]
            if not sources:
                raise MissingContextError(candidate, original)
            context = rng.choice(sources)
        items.append(
            TaskItem(
                item_id=_item_id(original, candidate, mode),
                candidate=candidate,
                original=original,
                mode=mode,
                source_context=context,
            )
        )
    rng.shuffle(items)
    return items


def task_to_json_dict(item: TaskItem) -> dict:
    out = {
        "item_id": item.item_id,
        "candidate": item.candidate,
        "original": item.original,
        "mode": item.mode,
    }
    if item.mode == "with_context":
        out["source_context"] = item.source_context
    return out


def save_tasks(items: Iterable[TaskItem], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            fh.write(json.dumps(task_to_json_dict(item), ensure_ascii=False) + "\n")


def load_tasks(path: str | Path) -> list[TaskItem]:
    items = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc.msg}", line=lineno) from exc
        mode = obj.get("mode")
        if mode not in ("with_context", "without_context"):
            raise ValidationError(f"mode {mode!r} invalid", line=lineno, field="mode")
        if mode == "with_context" and not obj.get("source_context"):
            raise ValidationError("with_context item lacks source_context", line=lineno, field="source_context")
        items.append(
            TaskItem(
                item_id=obj["item_id"],
                candidate=obj["candidate"],
                original=obj["original"],
                mode=mode,
                source_context=obj.get("source_context"),
            )
        )
    return items


def import_ratings(path: str | Path) -> list[RatingRecord]:
    """Load and validate a ratings file; duplicate (annotator, candidate, mode) entries are rejected."""
    records = []
    seen = set()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc.msg}", line=lineno) from exc
        record = rating_from_json_dict(obj, line=lineno)
        key = (record.annotator_id, record.candidate_text, record.original_text, record.context_shown)
        if key in seen:
            raise ValidationError(
                f"duplicate rating by {record.annotator_id!r} for candidate {record.candidate_text!r}",
                line=lineno,
            )
        seen.add(key)
        records.append(record)
    return records


def group_by_annotator(records: Iterable[RatingRecord]) -> dict[str, list[RatingRecord]]:
    grouped: dict[str, list[RatingRecord]] = {}
    for record in records:
        grouped.setdefault(record.annotator_id, []).append(record)
    return grouped


# --- Rating collection server --------------------------------------------------


class _RatingStore:
    """File-backed rating store; upserts are keyed so re-rating is idempotent (latest wins)."""

    def __init__(self, path: Path):
        self.path = path
        self._lock = threading.Lock()
        self._records: dict[tuple, RatingRecord] = {}
        if path.exists():
            for record in import_ratings(path):
                self._records[self._key(record)] = record

    @staticmethod
    def _key(record: RatingRecord) -> tuple:
        return (record.annotator_id, record.candidate_text, record.original_text, record.context_shown)

    def upsert(self, record: RatingRecord) -> None:
        with self._lock:
            self._records[self._key(record)] = record
            tmp = self.path.with_suffix(".tmp")
            with open(tmp, "w", encoding="utf-8") as fh:
                for key in sorted(self._records):
                    fh.write(json.dumps(rating_to_json_dict(self._records[key]), ensure_ascii=False) + "\n")
            os.replace(tmp, self.path)


def make_annotation_server(
    tasks_path: str | Path,
    ratings_path: str | Path,
    ui_dir: str | Path | None = None,
    host: str = "127.0.0.1",
    port: int = 8421,
) -> ThreadingHTTPServer:
    """HTTP server for the rating UI: task JSON, rating POSTs and the static bundle."""
    tasks = load_tasks(tasks_path)
    store = _RatingStore(Path(ratings_path))
    static_root = Path(ui_dir).resolve() if ui_dir else None

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):  # keep test output clean
            pass

        def _send_json(self, status: int, payload) -> None:
            body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            parsed = urlparse(self.path)
            if parsed.path == "/api/tasks":
                query = parse_qs(parsed.query)
                mode = query.get("mode", [None])[0]
                selected = [t for t in tasks if mode is None or t.mode == mode]
                self._send_json(200, [task_to_json_dict(t) for t in selected])
                return
            if static_root is None:
                self._send_json(404, {"error": "not_found", "message": "no static UI configured"})
                return
            rel = parsed.path.lstrip("/") or "index.html"
            target = (static_root / rel).resolve()
            if not str(target).startswith(str(static_root)) or not target.is_file():
                self._send_json(404, {"error": "not_found", "message": parsed.path})
                return
            content_types = {".html": "text/html", ".js": "text/javascript", ".css": "text/css", ".json": "application/json"}
            body = target.read_bytes()
            self.send_response(200)
            self.send_header("Content-Type", content_types.get(target.suffix, "application/octet-stream"))
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_POST(self):
            parsed = urlparse(self.path)
            if parsed.path != "/api/ratings":
                self._send_json(404, {"error": "not_found", "message": parsed.path})
                return
            length = int(self.headers.get("Content-Length", "0"))
            try:
                record = rating_from_json_dict(json.loads(self.rfile.read(length).decode("utf-8")))
            except (ValidationError, json.JSONDecodeError, UnicodeDecodeError) as exc:
                message = str(exc) if not isinstance(exc, ValidationError) else exc.args[0]
                self._send_json(400, {"error": "validation", "message": message})
                return
            store.upsert(record)
            self._send_json(200, {"status": "ok"})

    return ThreadingHTTPServer((host, port), Handler)
