"""Per-class evaluation matching the engine's metric definitions.

Rows of the confusion matrix are true labels, columns predicted. Undefined
ratios (zero denominators) evaluate to 0. Macro averages are unweighted
class means; weighted averages are support-weighted.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Metrics:
    n_classes: int
    confusion: list[list[int]]
    precision: list[float]
    recall: list[float]
    f1: list[float]
    support: list[int]
    accuracy: float
    macro: tuple[float, float, float]
    weighted: tuple[float, float, float]
    zero_division: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "confusion": self.confusion,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "support": self.support,
            "accuracy": self.accuracy,
            "macro": list(self.macro),
            "weighted": list(self.weighted),
            "zero_division": self.zero_division,
        }


def evaluate(y_true: list[int], y_pred: list[int], n_classes: int) -> Metrics:
    if len(y_true) != len(y_pred):
        raise ValueError("length mismatch between truth and predictions")
    cm = [[0] * n_classes for _ in range(n_classes)]
    for t, p in zip(y_true, y_pred):
        cm[t][p] += 1

    total = len(y_true)
    support = [sum(row) for row in cm]
    col_sum = [sum(cm[r][c] for r in range(n_classes))
               for c in range(n_classes)]

    precision, recall, f1, zero_div = [], [], [], []
    for c in range(n_classes):
        tp = cm[c][c]
        if col_sum[c] == 0 or support[c] == 0:
            zero_div.append(c)
        p = tp / col_sum[c] if col_sum[c] else 0.0
        r = tp / support[c] if support[c] else 0.0
        precision.append(p)
        recall.append(r)
        f1.append(2 * p * r / (p + r) if (p + r) else 0.0)

    accuracy = sum(cm[c][c] for c in range(n_classes)) / total if total else 0.0
    macro = (sum(precision) / n_classes, sum(recall) / n_classes,
             sum(f1) / n_classes)
    weighted = tuple(
        sum(v[c] * support[c] for c in range(n_classes)) / total if total else 0.0
        for v in (precision, recall, f1))
    return Metrics(n_classes, cm, precision, recall, f1, support,
                   accuracy, macro, weighted, zero_div)
