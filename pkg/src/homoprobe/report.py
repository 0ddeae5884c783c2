"""Assembling the robustness report from probe outputs.

The correlation table holds per-model Spearman and Pearson scores of
predicted quality against the human scores, with percentage changes against
the unperturbed baseline group for every perturbed group. The increase
table gives the percent of instances whose predicted score strictly rose
after the translation was improved, and the label table compares predicted
emotion labels against the human-annotated originals.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import UndefinedCorrelationError
from .metrics import (
    LabelConsistencyReport,
    increase_rate,
    label_consistency,
    pct_change,
    pearson,
    spearman,
)


@dataclass(frozen=True)
class CorrelationReport:
    group_name: str
    model_name: str
    spearman: float | None
    pearson: float | None
    pct_change_spearman: float | None
    pct_change_pearson: float | None
    n: int
    status: str = "ok"  # "ok" | "undefined"


def _paired(human: Mapping[str, float], predicted: Sequence[tuple[str, float]]):
    xs, ys = [], []
    for instance_id, score in predicted:
        if instance_id in human:
            xs.append(human[instance_id])
            ys.append(score)
    return xs, ys


def correlation_reports(
    human_scores: Mapping[str, float],
    probe_scores: Mapping[tuple[str, str], Sequence[tuple[str, float]]],
    baseline: str = "G0",
) -> list[CorrelationReport]:
    """One report row per (group, model); perturbed rows carry pct change vs the baseline.

    probe_scores maps (group_name, model_name) to per-instance predictions.
    Undefined correlations (constant predictions) are reported with a
    distinct status, never as zero.
    """
    models = sorted({model for _, model in probe_scores})
    groups = sorted({group for group, _ in probe_scores}, key=_group_sort_key)
    if any(group == baseline for group in groups):
        groups = [baseline] + [g for g in groups if g != baseline]
    rows = []
    base_values: dict[str, tuple[float | None, float | None]] = {}
    for group in groups:
        for model in models:
            if (group, model) not in probe_scores:
                continue
            xs, ys = _paired(human_scores, probe_scores[(group, model)])
            try:
                rho = spearman(xs, ys)
                r = pearson(xs, ys)
                status = "ok"
            except UndefinedCorrelationError:
                rho = r = None
                status = "undefined"
            if group == baseline:
                base_values[model] = (rho, r)
                pct_rho = pct_r = None
            else:
                base_rho, base_r = base_values.get(model, (None, None))
                pct_rho = pct_change(base_rho, rho) if rho is not None and base_rho else None
                pct_r = pct_change(base_r, r) if r is not None and base_r else None
            rows.append(
                CorrelationReport(
                    group_name=group,
                    model_name=model,
                    spearman=rho,
                    pearson=r,
                    pct_change_spearman=pct_rho,
                    pct_change_pearson=pct_r,
                    n=len(xs),
                    status=status,
                )
            )
    return rows


def _group_sort_key(name: str):
    order = {"G0": 0, "M1G1": 1, "M1G2": 2, "M1G3": 3, "M1G4": 4, "M1G5": 5, "M2G1": 6, "M2G2": 7}
    return (order.get(name, 99), name)


def increase_reports(
    probe_scores: Mapping[tuple[str, str], Sequence[tuple[str, float]]],
    baseline: str = "G0",
    targets: Sequence[str] = ("M2G1", "M2G2"),
) -> dict[str, dict[str, float]]:
    """Per model, the percent of instances with strictly increased scores vs the baseline."""
    models = sorted({model for _, model in probe_scores})
    out: dict[str, dict[str, float]] = {}
    for model in models:
        if (baseline, model) not in probe_scores:
            continue
        base = probe_scores[(baseline, model)]
        row = {}
        for target in targets:
            if (target, model) in probe_scores:
                row[target] = increase_rate(base, probe_scores[(target, model)])
        if row:
            out[model] = row
    return out


def label_reports(
    gold_labels: Sequence[tuple[str, str]],
    predicted_by_group: Mapping[str, Sequence[tuple[str, str]]],
    averaging: str = "weighted",
) -> dict[str, LabelConsistencyReport]:
    return {
        group: label_consistency(gold_labels, predicted, averaging=averaging)
        for group, predicted in sorted(predicted_by_group.items())
    }


@dataclass(frozen=True)
class RobustnessReport:
    correlations: list[CorrelationReport]
    increases: dict[str, dict[str, float]]
    labels: dict[str, LabelConsistencyReport]
    baseline: str
    label_averaging: str

    def to_json_dict(self) -> dict:
        return {
            "baseline": self.baseline,
            "metadata": {"label_averaging": self.label_averaging},
            "correlations": [
                {
                    "group": row.group_name,
                    "model": row.model_name,
                    "spearman": row.spearman,
                    "pearson": row.pearson,
                    "pct_change_spearman": row.pct_change_spearman,
                    "pct_change_pearson": row.pct_change_pearson,
                    "n": row.n,
                    "status": row.status,
                }
                for row in self.correlations
            ],
            "increases": self.increases,
            "label_consistency": {
                group: {
                    "precision": rep.precision,
                    "recall": rep.recall,
                    "f1": rep.f1,
                    "same_label_rate": rep.same_label_rate,
                    "averaging": rep.averaging,
                    "n": rep.n,
                }
                for group, rep in self.labels.items()
            },
        }


def render_json(report: RobustnessReport) -> str:
    return json.dumps(report.to_json_dict(), ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def _fmt_cell(row: CorrelationReport, metric: str, baseline: str) -> str:
    value = getattr(row, metric)
    if value is None:
        return "undef"
    if row.group_name == baseline:
        return f"{value:.4f}"
    pct = getattr(row, f"pct_change_{metric}")
    if pct is None:
        return f"{value:.4f}"
    return f"{pct:+.2f}%"


def render_text(report: RobustnessReport) -> str:
    """Aligned text tables: baseline rows show raw correlations, others percent changes."""
    lines = []
    models = sorted({row.model_name for row in report.correlations})
    groups = []
    for row in report.correlations:
        if row.group_name not in groups:
            groups.append(row.group_name)
    by_key = {(row.group_name, row.model_name): row for row in report.correlations}

    lines.append("== Correlation with human quality scores (rho / r) ==")
    header = ["group"] + [f"{m} rho" for m in models] + [f"{m} r" for m in models]
    table = [header]
    for group in groups:
        row_cells = [group]
        for metric in ("spearman", "pearson"):
            for model in models:
                row = by_key.get((group, model))
                row_cells.append(_fmt_cell(row, metric, report.baseline) if row else "-")
        table.append(row_cells)
    lines.extend(_align(table))

    if report.increases:
        lines.append("")
        lines.append("== Instances with increased scores after translation improvement (%) ==")
        targets = sorted({t for row in report.increases.values() for t in row})
        table = [["model"] + targets]
        for model in sorted(report.increases):
            table.append(
                [model] + [f"{report.increases[model][t]:.2f}" if t in report.increases[model] else "-" for t in targets]
            )
        lines.extend(_align(table))

    if report.labels:
        lines.append("")
        lines.append(f"== Emotion label consistency vs original labels ({report.label_averaging}) ==")
        table = [["group", "precision", "recall", "f1", "same_label"]]
        for group, rep in report.labels.items():
            table.append(
                [group, f"{rep.precision:.4f}", f"{rep.recall:.4f}", f"{rep.f1:.4f}", f"{rep.same_label_rate:.4f}"]
            )
        lines.extend(_align(table))
    return "\n".join(lines) + "\n"


def render_csv(report: RobustnessReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["section", "group", "model", "spearman", "pearson", "pct_change_spearman", "pct_change_pearson", "n", "status"]
    )
    for row in report.correlations:
        writer.writerow(
            [
                "correlation",
                row.group_name,
                row.model_name,
                row.spearman,
                row.pearson,
                row.pct_change_spearman,
                row.pct_change_pearson,
                row.n,
                row.status,
            ]
        )
    for model, targets in sorted(report.increases.items()):
        for target, value in sorted(targets.items()):
            writer.writerow(["increase", target, model, "", "", "", "", "", f"{value:.6f}"])
    for group, rep in sorted(report.labels.items()):
        writer.writerow(
            ["label_consistency", group, "", rep.precision, rep.recall, rep.f1, rep.same_label_rate, rep.n, rep.averaging]
        )
    return buffer.getvalue()


def _align(rows: list[list[str]]) -> list[str]:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    return ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip() for row in rows]
