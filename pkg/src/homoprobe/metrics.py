"""Correlation, change and consistency arithmetic behind every reported number.

Spearman uses average fractional ranks for ties; constant inputs yield a
distinct undefined-correlation error rather than a silent NaN or zero.
Percentage change is plain (new - base) / base * 100 against the unperturbed
baseline, and the increase rate counts strict score increases only.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .dataset import EMOTION_LABELS
from .errors import (
    IdMismatchError,
    InvalidLabelError,
    MissingScoreError,
    UndefinedCorrelationError,
    ValidationError,
)


def _ranks(values: Sequence[float]) -> list[float]:
    """1-based average fractional ranks; tied values share the mean of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1
        for pos in range(i, j + 1):
            ranks[order[pos]] = mean_rank
        i = j + 1
    return ranks


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation; raises UndefinedCorrelationError on constant input or n < 3."""
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 3:
        raise UndefinedCorrelationError(f"need at least 3 paired observations, got {n}")
    mean_x = math.fsum(x) / n
    mean_y = math.fsum(y) / n
    dx = [xi - mean_x for xi in x]
    dy = [yi - mean_y for yi in y]
    var_x = math.fsum(d * d for d in dx)
    var_y = math.fsum(d * d for d in dy)
    if var_x == 0.0 or var_y == 0.0:
        raise UndefinedCorrelationError("correlation undefined for a constant vector")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(var_x * var_y)
    return max(-1.0, min(1.0, r))


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Rank correlation: Pearson over average fractional ranks."""
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 3:
        raise UndefinedCorrelationError(f"need at least 3 paired observations, got {len(x)}")
    return pearson(_ranks(x), _ranks(y))


def pct_change(base: float, new: float) -> float:
    """Sign-carrying percentage change of new against base."""
    if base == 0:
        raise ValueError("pct_change undefined for base 0")
    return (new - base) / base * 100.0


def increase_rate(
    base_scores: Iterable[tuple[str, float]], new_scores: Iterable[tuple[str, float]]
) -> float:
    """Percent of ids whose score strictly increased; ties do not count as increases."""
    base = dict(base_scores)
    new = dict(new_scores)
    if set(base) != set(new):
        only_base = sorted(set(base) - set(new))[:3]
        only_new = sorted(set(new) - set(base))[:3]
        raise IdMismatchError(f"id sets differ (base-only {only_base}, new-only {only_new})")
    if not base:
        raise ValueError("increase_rate needs at least one paired score")
    increased = sum(1 for instance_id in base if new[instance_id] > base[instance_id])
    return 100.0 * increased / len(base)


@dataclass(frozen=True)
class LabelConsistencyReport:
    precision: float
    recall: float
    f1: float
    same_label_rate: float
    averaging: str
    n: int


def label_consistency(
    original: Iterable[tuple[str, str]],
    predicted: Iterable[tuple[str, str]],
    averaging: str = "weighted",
) -> LabelConsistencyReport:
    """Precision/recall/F1 of predicted labels against the original labels as gold.

    averaging is "weighted" (per-class metrics weighted by gold support, the
    reported default) or "macro" (unweighted mean over classes). The choice
    is carried in the report so downstream tables can surface it.
    """
    if averaging not in ("weighted", "macro"):
        raise ValueError(f"averaging must be 'weighted' or 'macro', got {averaging!r}")
    gold = dict(original)
    pred = dict(predicted)
    if set(gold) != set(pred):
        raise IdMismatchError("original and predicted id sets differ")
    if not gold:
        raise ValueError("label_consistency needs at least one pair")
    for mapping in (gold, pred):
        for instance_id, label in mapping.items():
            if label not in EMOTION_LABELS:
                raise InvalidLabelError(f"unknown label {label!r} for instance {instance_id!r}")

    labels = sorted(set(gold.values()) | set(pred.values()))
    per_class = {}
    for label in labels:
        tp = sum(1 for i in gold if gold[i] == label and pred[i] == label)
        fp = sum(1 for i in gold if gold[i] != label and pred[i] == label)
        fn = sum(1 for i in gold if gold[i] == label and pred[i] != label)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        support = sum(1 for i in gold if gold[i] == label)
        per_class[label] = (precision, recall, f1, support)

    n = len(gold)
    if averaging == "weighted":
        weights = {label: per_class[label][3] / n for label in labels}
    else:
        weights = {label: 1 / len(labels) for label in labels}
    precision = sum(per_class[label][0] * weights[label] for label in weights)
    recall = sum(per_class[label][1] * weights[label] for label in weights)
    f1 = sum(per_class[label][2] * weights[label] for label in weights)
    same = sum(1 for i in gold if gold[i] == pred[i]) / n
    return LabelConsistencyReport(
        precision=precision, recall=recall, f1=f1, same_label_rate=same, averaging=averaging, n=n
    )


# --- Human ratings ------------------------------------------------------------


@dataclass(frozen=True)
class RatingRecord:
    candidate_text: str
    original_text: str
    annotator_id: str
    score: int
    context_shown: bool
    source_context: str | None = None


def rating_from_json_dict(obj: dict, line: int | None = None) -> RatingRecord:
    for key in ("candidate_text", "original_text", "annotator_id", "score", "context_shown"):
        if key not in obj:
            raise ValidationError("missing field", line=line, field=key)
    score = obj["score"]
    if isinstance(score, bool) or not isinstance(score, int) or not 1 <= score <= 5:
        raise ValidationError(f"score {score!r} must be an integer from 1 to 5", line=line, field="score")
    context_shown = obj["context_shown"]
    if not isinstance(context_shown, bool):
        raise ValidationError("context_shown must be a boolean", line=line, field="context_shown")
    source_context = obj.get("source_context")
    if context_shown and not source_context:
        raise ValidationError("context_shown requires source_context", line=line, field="source_context")
    if not context_shown and source_context is not None:
        raise ValidationError("source_context present without context_shown", line=line, field="source_context")
    return RatingRecord(
        candidate_text=obj["candidate_text"],
        original_text=obj["original_text"],
        annotator_id=obj["annotator_id"],
        score=score,
        context_shown=context_shown,
        source_context=source_context,
    )


def rating_to_json_dict(record: RatingRecord) -> dict:
    out = {
        "candidate_text": record.candidate_text,
        "original_text": record.original_text,
        "annotator_id": record.annotator_id,
        "score": record.score,
        "context_shown": record.context_shown,
    }
    if record.context_shown:
        out["source_context"] = record.source_context
    return out


def load_ratings(path: str | Path) -> list[RatingRecord]:
    records = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc.msg}", line=lineno) from exc
        records.append(rating_from_json_dict(obj, line=lineno))
    return records


def save_ratings(records: Iterable[RatingRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(rating_to_json_dict(record), ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class HumanCorrelationReport:
    per_annotator: Mapping[str, float]
    vs_mean_rating: float
    inter_annotator: Mapping[str, float]
    n_records: int
    n_candidates: int


def human_method_correlation(
    ratings: Sequence[RatingRecord], method_scores: Iterable[tuple[str, float]]
) -> HumanCorrelationReport:
    """Spearman of a generation method's scores against human ratings.

    Reports one correlation per annotator, one against the mean rating per
    candidate, and the pairwise inter-annotator correlations for reference.
    """
    scores = dict(method_scores)
    for record in ratings:
        if record.candidate_text not in scores:
            raise MissingScoreError(record.candidate_text)

    by_annotator: dict[str, list[RatingRecord]] = {}
    for record in ratings:
        by_annotator.setdefault(record.annotator_id, []).append(record)

    per_annotator = {}
    for annotator, records in sorted(by_annotator.items()):
        ordered = sorted(records, key=lambda r: (r.candidate_text, r.context_shown))
        per_annotator[annotator] = spearman(
            [scores[r.candidate_text] for r in ordered], [float(r.score) for r in ordered]
        )

    by_candidate: dict[str, list[int]] = {}
    for record in ratings:
        by_candidate.setdefault(record.candidate_text, []).append(record.score)
    candidates = sorted(by_candidate)
    vs_mean = spearman(
        [scores[c] for c in candidates],
        [sum(by_candidate[c]) / len(by_candidate[c]) for c in candidates],
    )

    # Pairwise agreement over shared candidates, each annotator reduced to a
    # per-candidate mean first (covers repeat ratings across context modes).
    inter = {}
    annotators = sorted(by_annotator)
    for i, first in enumerate(annotators):
        for second in annotators[i + 1 :]:
            mine = _mean_by_candidate(by_annotator[first])
            theirs = _mean_by_candidate(by_annotator[second])
            common = sorted(set(mine) & set(theirs))
            if len(common) >= 3:
                inter[f"{first}|{second}"] = spearman(
                    [mine[c] for c in common], [theirs[c] for c in common]
                )
    return HumanCorrelationReport(
        per_annotator=per_annotator,
        vs_mean_rating=vs_mean,
        inter_annotator=inter,
        n_records=len(ratings),
        n_candidates=len(candidates),
    )


def _mean_by_candidate(records: Iterable[RatingRecord]) -> dict[str, float]:
    grouped: dict[str, list[int]] = {}
    for record in records:
        grouped.setdefault(record.candidate_text, []).append(record.score)
    return {c: sum(v) / len(v) for c, v in grouped.items()}
