"""Confusion matrices, per-class metrics, and report rendering.

Per-class accuracy is 100 * recall (diagonal over row sum); the report's
Average row uses support-weighted means, so average accuracy equals
100 * trace / total.  Zero-denominator cells yield 0 and a degenerate
flag instead of NaN, keeping text reports diffable.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ContractError

REPORT_COLUMNS = ("Precision", "Recall", "F1-score", "Support", "Class Accuracy")


@dataclass
class ConfusionMatrix:
    """Counts with rows = true class, columns = predicted class."""

    counts: np.ndarray  # (C, C) int64
    class_names: list[str]

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        C = len(self.class_names)
        if self.counts.shape != (C, C):
            raise ContractError(
                f"confusion matrix shape {self.counts.shape} does not match "
                f"{C} classes"
            )
        if (self.counts < 0).any():
            raise ContractError("confusion matrix counts must be non-negative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion_matrix(predictions, labels, class_names) -> ConfusionMatrix:
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if predictions.shape != labels.shape or predictions.ndim != 1:
        raise ContractError(
            f"predictions {predictions.shape} and labels {labels.shape} must "
            "be equal-length vectors"
        )
    C = len(class_names)
    if len(labels) and (
        labels.min() < 0 or labels.max() >= C
        or predictions.min() < 0 or predictions.max() >= C
    ):
        raise ContractError(f"class index out of range 0..{C - 1}")
    counts = np.zeros((C, C), dtype=np.int64)
    np.add.at(counts, (labels, predictions), 1)
    return ConfusionMatrix(counts=counts, class_names=list(class_names))


@dataclass
class ClassMetrics:
    name: str
    precision: float
    recall: float
    f1: float
    support: int
    class_accuracy: float  # percent, = 100 * recall
    degenerate: bool = False  # some denominator was zero


@dataclass
class EvaluationReport:
    """Table-shaped metrics: one row per class plus a weighted Average row."""

    per_class: list[ClassMetrics]
    avg_precision: float
    avg_recall: float
    avg_f1: float
    total_support: int
    average_accuracy: float  # percent, = 100 * trace / total
    source: str = ""
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "classes": [asdict(m) for m in self.per_class],
            "average": {
                "precision": self.avg_precision,
                "recall": self.avg_recall,
                "f1": self.avg_f1,
                "support": self.total_support,
            },
            "average_accuracy": self.average_accuracy,
            "source": self.source,
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationReport":
        return cls(
            per_class=[ClassMetrics(**m) for m in d["classes"]],
            avg_precision=d["average"]["precision"],
            avg_recall=d["average"]["recall"],
            avg_f1=d["average"]["f1"],
            total_support=d["average"]["support"],
            average_accuracy=d["average_accuracy"],
            source=d.get("source", ""),
            degenerate=d.get("degenerate", False),
        )


def per_class_metrics(cm: ConfusionMatrix, source: str = "") -> EvaluationReport:
    counts = cm.counts.astype(np.float64)
    diag = np.diag(counts)
    row_sums = counts.sum(axis=1)
    col_sums = counts.sum(axis=0)
    total = counts.sum()

    rows = []
    for c, name in enumerate(cm.class_names):
        degenerate = row_sums[c] == 0 or col_sums[c] == 0
        precision = float(diag[c] / col_sums[c]) if col_sums[c] > 0 else 0.0
        recall = float(diag[c] / row_sums[c]) if row_sums[c] > 0 else 0.0
        f1 = (
            2.0 * precision * recall / (precision + recall)
            if precision + recall > 0
            else 0.0
        )
        rows.append(
            ClassMetrics(
                name=name,
                precision=precision,
                recall=recall,
                f1=f1,
                support=int(row_sums[c]),
                class_accuracy=100.0 * recall,
                degenerate=bool(degenerate),
            )
        )
    if total > 0:
        weights = row_sums / total
        avg_precision = float(sum(w * m.precision for w, m in zip(weights, rows)))
        avg_recall = float(sum(w * m.recall for w, m in zip(weights, rows)))
        avg_f1 = float(sum(w * m.f1 for w, m in zip(weights, rows)))
        average_accuracy = float(100.0 * diag.sum() / total)
    else:
        avg_precision = avg_recall = avg_f1 = average_accuracy = 0.0
    return EvaluationReport(
        per_class=rows,
        avg_precision=avg_precision,
        avg_recall=avg_recall,
        avg_f1=avg_f1,
        total_support=int(total),
        average_accuracy=average_accuracy,
        source=source,
        degenerate=bool(total == 0 or any(m.degenerate for m in rows)),
    )


def _format_row(name, precision, recall, f1, support, accuracy, name_width):
    return (
        f"{name:<{name_width}}  {precision:>9.2f}  {recall:>6.2f}  "
        f"{f1:>8.2f}  {support:>7d}  {accuracy:>14.2f}"
    )


def render_report(report: EvaluationReport, fmt: str = "text") -> str:
    """Render as a fixed-width table ('text') or JSON document ('json').

    Text values are rounded to 2 decimals; the JSON form keeps full
    precision and parses back losslessly.
    """
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")
    name_width = max(
        [len("Dance Class"), len("Average")] + [len(m.name) for m in report.per_class]
    )
    precision_h, recall_h, f1_h, support_h, accuracy_h = REPORT_COLUMNS
    header = (
        f"{'Dance Class':<{name_width}}  {precision_h:>9}  {recall_h:>6}  "
        f"{f1_h:>8}  {support_h:>7}  {accuracy_h:>14}"
    )
    lines = [header, "-" * len(header)]
    for m in report.per_class:
        lines.append(
            _format_row(
                m.name, m.precision, m.recall, m.f1, m.support,
                m.class_accuracy, name_width,
            )
        )
    lines.append("-" * len(header))
    lines.append(
        _format_row(
            "Average", report.avg_precision, report.avg_recall, report.avg_f1,
            report.total_support, report.average_accuracy, name_width,
        )
    )
    if report.source:
        lines.append(f"source: {report.source}")
    if report.degenerate:
        lines.append("note: some metrics had zero denominators (reported as 0)")
    return "\n".join(lines) + "\n"


def parse_report(text: str | bytes) -> EvaluationReport:
    """Inverse of render_report(fmt='json')."""
    return EvaluationReport.from_dict(json.loads(text))


def render_confusion(cm: ConfusionMatrix) -> str:
    """Text grid of counts, true classes down the rows."""
    corner = "true\\pred"
    name_width = max(len(n) for n in cm.class_names + [corner])
    col_width = max(
        [len(n) for n in cm.class_names] + [len(str(int(cm.counts.max() or 0)))]
    )
    header = f"{corner:<{name_width}}  " + "  ".join(
        f"{n:>{col_width}}" for n in cm.class_names
    )
    lines = [header]
    for name, row in zip(cm.class_names, cm.counts):
        lines.append(
            f"{name:<{name_width}}  "
            + "  ".join(f"{int(v):>{col_width}d}" for v in row)
        )
    return "\n".join(lines) + "\n"


def render_ablation(reports: dict[str, EvaluationReport], fmt: str = "text") -> str:
    """One row per feature combination: per-class accuracies + the average.

    All reports must share the same class list.
    """
    if not reports:
        raise ValueError("no reports to tabulate")
    first = next(iter(reports.values()))
    class_names = [m.name for m in first.per_class]
    for method, rep in reports.items():
        if [m.name for m in rep.per_class] != class_names:
            raise ContractError(f"report {method!r} has a different class list")
    if fmt == "json":
        doc = {
            method: {
                "class_accuracy": {
                    m.name: m.class_accuracy for m in rep.per_class
                },
                "average_accuracy": rep.average_accuracy,
            }
            for method, rep in reports.items()
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown ablation format {fmt!r}")
    method_width = max([len("Method")] + [len(m) for m in reports])
    col_width = max([len(n) for n in class_names] + [len("Average Accuracy"), 6])
    header = f"{'Method':<{method_width}}  " + "  ".join(
        f"{n:>{col_width}}" for n in class_names + ["Average Accuracy"]
    )
    lines = [header, "-" * len(header)]
    for method, rep in reports.items():
        values = [m.class_accuracy for m in rep.per_class] + [rep.average_accuracy]
        lines.append(
            f"{method:<{method_width}}  "
            + "  ".join(f"{v:>{col_width}.2f}" for v in values)
        )
    return "\n".join(lines) + "\n"
