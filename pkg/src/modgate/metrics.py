"""Confusion matrices and the precision/recall/F1 report suite.

Conventions: rows are gold, columns are predicted; any 0/0 ratio is 0 (the
published contribution table has a support-1 class that was never predicted,
which forces this convention).  Internal values are full precision; rounding
to 2 decimals (half-up) happens only when rendering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping, Sequence

from .domain import TaxonomySpec
from .errors import EmptyMatrix, LengthMismatch, UnknownLabel


def round_half_up(value: float, places: int = 2) -> float:
    quantum = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class ConfusionMatrix:
    labels: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        k = len(self.labels)
        if len(self.counts) != k or any(len(row) != k for row in self.counts):
            raise ValueError("counts must be a |labels| x |labels| matrix")
        if any(c < 0 for row in self.counts for c in row):
            raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    @property
    def trace(self) -> int:
        return sum(self.counts[i][i] for i in range(len(self.labels)))

    def support(self, label: str) -> int:
        return sum(self.counts[self.labels.index(label)])

    def predicted_total(self, label: str) -> int:
        j = self.labels.index(label)
        return sum(row[j] for row in self.counts)

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "counts": [list(r) for r in self.counts]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "ConfusionMatrix":
        return cls(
            labels=tuple(data["labels"]),
            counts=tuple(tuple(int(c) for c in row) for row in data["counts"]),
        )


def confusion_matrix(
    gold: Sequence[str], pred: Sequence[str], tax: TaxonomySpec
) -> ConfusionMatrix:
    if len(gold) != len(pred):
        raise LengthMismatch(f"gold has {len(gold)} labels, pred has {len(pred)}")
    index = {label: i for i, label in enumerate(tax.labels)}
    counts = [[0] * len(tax.labels) for _ in tax.labels]
    for g, p in zip(gold, pred):
        if g not in index:
            raise UnknownLabel(g, tax.task.value)
        if p not in index:
            raise UnknownLabel(p, tax.task.value)
        counts[index[g]][index[p]] += 1
    return ConfusionMatrix(labels=tax.labels, counts=tuple(tuple(r) for r in counts))


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class Aggregate:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    labels: tuple[str, ...]
    per_class: Mapping[str, ClassMetrics]
    accuracy: float
    macro: Aggregate
    weighted: Aggregate
    total: int

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "per_class": {
                label: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for label, m in self.per_class.items()
            },
            "accuracy": self.accuracy,
            "macro": vars(self.macro).copy(),
            "weighted": vars(self.weighted).copy(),
            "total": self.total,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "EvalReport":
        return cls(
            labels=tuple(data["labels"]),
            per_class={
                label: ClassMetrics(m["precision"], m["recall"], m["f1"], m["support"])
                for label, m in data["per_class"].items()
            },
            accuracy=data["accuracy"],
            macro=Aggregate(**data["macro"]),
            weighted=Aggregate(**data["weighted"]),
            total=data["total"],
        )


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def per_class_metrics(cm: ConfusionMatrix) -> dict[str, ClassMetrics]:
    out = {}
    for label in cm.labels:
        tp = cm.counts[cm.labels.index(label)][cm.labels.index(label)]
        precision = _ratio(tp, cm.predicted_total(label))
        recall = _ratio(tp, cm.support(label))
        f1 = _ratio(2 * precision * recall, precision + recall)
        out[label] = ClassMetrics(precision, recall, f1, cm.support(label))
    return out


def aggregate_metrics(
    per_class: Mapping[str, ClassMetrics], cm: ConfusionMatrix
) -> tuple[float, Aggregate, Aggregate]:
    """Accuracy plus macro (unweighted) and weighted (by support) averages."""
    total = cm.total
    if total == 0:
        raise EmptyMatrix("cannot aggregate an empty confusion matrix")
    k = len(cm.labels)
    accuracy = cm.trace / total
    # fsum: exact rounding makes the averages independent of class order.
    macro = Aggregate(
        math.fsum(m.precision for m in per_class.values()) / k,
        math.fsum(m.recall for m in per_class.values()) / k,
        math.fsum(m.f1 for m in per_class.values()) / k,
    )
    weighted = Aggregate(
        math.fsum(m.precision * m.support for m in per_class.values()) / total,
        math.fsum(m.recall * m.support for m in per_class.values()) / total,
        math.fsum(m.f1 * m.support for m in per_class.values()) / total,
    )
    return accuracy, macro, weighted


def evaluate(gold: Sequence[str], pred: Sequence[str], tax: TaxonomySpec) -> EvalReport:
    cm = confusion_matrix(gold, pred, tax)
    return report_from_matrix(cm)


def report_from_matrix(cm: ConfusionMatrix) -> EvalReport:
    per_class = per_class_metrics(cm)
    accuracy, macro, weighted = aggregate_metrics(per_class, cm)
    return EvalReport(
        labels=cm.labels,
        per_class=per_class,
        accuracy=accuracy,
        macro=macro,
        weighted=weighted,
        total=cm.total,
    )


def render_report(report: EvalReport) -> str:
    """Aligned text table in the published layout (2-dp, half-up)."""
    def fmt(x: float) -> str:
        return f"{round_half_up(x):.2f}"

    rows = [("Classifier", "Precision", "Recall", "F1-score", "n")]
    for label in report.labels:
        m = report.per_class[label]
        rows.append((label, fmt(m.precision), fmt(m.recall), fmt(m.f1), str(m.support)))
    rows.append(("Accuracy", "", "", fmt(report.accuracy), str(report.total)))
    rows.append(
        ("Macro avg", fmt(report.macro.precision), fmt(report.macro.recall),
         fmt(report.macro.f1), str(report.total))
    )
    rows.append(
        ("Weighted avg", fmt(report.weighted.precision), fmt(report.weighted.recall),
         fmt(report.weighted.f1), str(report.total))
    )
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    lines = []
    for r in rows:
        cells = [r[0].ljust(widths[0])] + [r[i].rjust(widths[i]) for i in range(1, 5)]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines)
