"""Loading and validating quality-annotated translation records.

One record pairs a Chinese microblog source with its English MT output, a
human quality score, highlighted error spans on both sides, an optional
reference translation and an emotion label. Files are UTF-8 JSON lines; all
span offsets are character (code point) offsets, half-open.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

from .errors import ValidationError

EMOTION_LABELS = ("anger", "joy", "sadness", "surprise", "fear", "neutral")

Span = tuple[int, int]


@dataclass(frozen=True)
class Instance:
    id: str
    source: str
    mt: str
    qe_score: float
    src_error_spans: tuple[Span, ...]
    tgt_error_spans: tuple[Span, ...]
    reference: str | None
    emotion_label: str


@dataclass(frozen=True)
class Dataset:
    instances: tuple[Instance, ...]
    name: str = "dataset"

    def __len__(self) -> int:
        return len(self.instances)

    def by_id(self) -> dict[str, Instance]:
        return {inst.id: inst for inst in self.instances}


def _check_spans(spans, text: str, field: str, line: int | None) -> tuple[Span, ...]:
    out = []
    for span in spans:
        if not (isinstance(span, (list, tuple)) and len(span) == 2):
            raise ValidationError(f"span {span!r} is not a [start, end] pair", line=line, field=field)
        start, end = span
        if not (isinstance(start, int) and isinstance(end, int)):
            raise ValidationError(f"span {span!r} offsets must be integers", line=line, field=field)
        if not (0 <= start < end <= len(text)):
            raise ValidationError(
                f"span [{start}, {end}) out of range for text of length {len(text)}", line=line, field=field
            )
        out.append((start, end))
    return tuple(out)


def instance_from_json_dict(obj: dict, line: int | None = None) -> Instance:
    required = ["id", "source", "mt", "qe_score", "src_error_spans", "tgt_error_spans", "reference", "emotion_label"]
    for key in required:
        if key not in obj:
            raise ValidationError("missing field", line=line, field=key)
    if not isinstance(obj["id"], str) or not obj["id"]:
        raise ValidationError("id must be a non-empty string", line=line, field="id")
    if not isinstance(obj["source"], str) or not isinstance(obj["mt"], str):
        raise ValidationError("source and mt must be strings", line=line, field="source")
    qe = obj["qe_score"]
    if isinstance(qe, bool) or not isinstance(qe, (int, float)) or not math.isfinite(qe):
        raise ValidationError(f"qe_score {qe!r} is not a finite number", line=line, field="qe_score")
    reference = obj["reference"]
    if reference is not None and not isinstance(reference, str):
        raise ValidationError("reference must be a string or null", line=line, field="reference")
    label = obj["emotion_label"]
    if label not in EMOTION_LABELS:
        raise ValidationError(f"emotion_label {label!r} not one of {EMOTION_LABELS}", line=line, field="emotion_label")
    return Instance(
        id=obj["id"],
        source=obj["source"],
        mt=obj["mt"],
        qe_score=float(qe),
        src_error_spans=_check_spans(obj["src_error_spans"], obj["source"], "src_error_spans", line),
        tgt_error_spans=_check_spans(obj["tgt_error_spans"], obj["mt"], "tgt_error_spans", line),
        reference=reference,
        emotion_label=label,
    )


def instance_to_json_dict(inst: Instance) -> dict:
    return {
        "id": inst.id,
        "source": inst.source,
        "mt": inst.mt,
        "qe_score": inst.qe_score,
        "src_error_spans": [list(s) for s in inst.src_error_spans],
        "tgt_error_spans": [list(s) for s in inst.tgt_error_spans],
        "reference": inst.reference,
        "emotion_label": inst.emotion_label,
    }


def load_dataset(path: str | Path, name: str | None = None) -> Dataset:
    """Parse and validate a JSON-lines dataset; violations are reported with line numbers."""
    instances = []
    ids = set()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc.msg}", line=lineno) from exc
        inst = instance_from_json_dict(obj, line=lineno)
        if inst.id in ids:
            raise ValidationError(f"duplicate id {inst.id!r}", line=lineno, field="id")
        ids.add(inst.id)
        instances.append(inst)
    if not instances:
        raise ValidationError(f"{path}: empty dataset")
    return Dataset(instances=tuple(instances), name=name or Path(path).stem)


def save_dataset(ds: Dataset, path: str | Path) -> None:
    """Write canonical JSON lines (fixed key order, no ASCII escaping)."""
    with open(path, "w", encoding="utf-8") as fh:
        for inst in ds.instances:
            fh.write(json.dumps(instance_to_json_dict(inst), ensure_ascii=False) + "\n")


def select_containing(ds: Dataset, slang: Iterable) -> Dataset:
    """Keep instances whose source contains at least one slang word as a substring, stable order."""
    words = [getattr(s, "word", s) for s in slang]
    if not words:
        raise ValueError("slang list must be non-empty")
    kept = tuple(inst for inst in ds.instances if any(w in inst.source for w in words))
    return Dataset(instances=kept, name=ds.name)


def rename(ds: Dataset, name: str) -> Dataset:
    return replace(ds, name=name)
