"""Per-class precision/recall/F1, accuracy, macro and weighted averages, and
confusion matrices, with side-by-side model comparison tables."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np


class EvalError(Exception):
    pass


@dataclass
class ConfusionMatrix:
    counts: np.ndarray          # C x C; rows = true label, cols = predicted
    label_names: list[str]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def row_percentages(self) -> np.ndarray:
        """Row-normalized view in percent; all-zero rows stay zero."""
        sums = self.counts.sum(axis=1, keepdims=True).astype(float)
        with np.errstate(invalid="ignore", divide="ignore"):
            pct = np.where(sums > 0, 100.0 * self.counts / sums, 0.0)
        return pct


def confusion(
    true_labels: list[int],
    predicted_labels: list[int],
    label_names: list[str],
) -> ConfusionMatrix:
    if len(true_labels) != len(predicted_labels):
        raise EvalError("label lists differ in length")
    C = len(label_names)
    counts = np.zeros((C, C), dtype=np.int64)
    for t, p in zip(true_labels, predicted_labels):
        if not (0 <= t < C and 0 <= p < C):
            raise EvalError(f"label outside the label set: true={t} pred={p}")
        counts[t, p] += 1
    return ConfusionMatrix(counts, list(label_names))


@dataclass
class MetricReport:
    label_names: list[str]
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float
    macro_avg: tuple[float, float, float]
    weighted_avg: tuple[float, float, float]
    zero_division_flags: dict[str, list[str]] = field(default_factory=dict)


def metrics(cm: ConfusionMatrix) -> MetricReport:
    """Standard suite from a confusion matrix. Division-by-zero cells are
    defined as 0 and flagged per class."""
    counts = cm.counts.astype(float)
    if counts.sum() == 0:
        raise EvalError("empty confusion matrix")
    C = counts.shape[0]
    tp = np.diag(counts)
    pred_totals = counts.sum(axis=0)
    true_totals = counts.sum(axis=1)

    flags: dict[str, list[str]] = {}
    precision = np.zeros(C)
    recall = np.zeros(C)
    f1 = np.zeros(C)
    for c in range(C):
        name = cm.label_names[c]
        if pred_totals[c] > 0:
            precision[c] = tp[c] / pred_totals[c]
        else:
            flags.setdefault(name, []).append("precision")
        if true_totals[c] > 0:
            recall[c] = tp[c] / true_totals[c]
        else:
            flags.setdefault(name, []).append("recall")
        if precision[c] + recall[c] > 0:
            f1[c] = 2 * precision[c] * recall[c] / (precision[c] + recall[c])
        else:
            flags.setdefault(name, []).append("f1")

    accuracy = float(tp.sum() / counts.sum())
    support = true_totals.astype(np.int64)
    weights = support / support.sum()
    return MetricReport(
        label_names=list(cm.label_names),
        precision=precision, recall=recall, f1=f1, support=support,
        accuracy=accuracy,
        macro_avg=(float(precision.mean()), float(recall.mean()),
                   float(f1.mean())),
        weighted_avg=(float(weights @ precision), float(weights @ recall),
                      float(weights @ f1)),
        zero_division_flags=flags,
    )


def report_table(
    reports: dict[str, MetricReport],
) -> tuple[str, str]:
    """Side-by-side comparison of one or more metric reports: per-class rows
    then accuracy/macro/weighted aggregate rows. Returns (csv_text,
    aligned_text)."""
    if not reports:
        raise EvalError("no reports given")
    model_names = list(reports)
    first = reports[model_names[0]]
    for rep in reports.values():
        if rep.label_names != first.label_names:
            raise EvalError("mismatched label sets across reports")

    header = ["Topic"]
    for m in model_names:
        header += [f"{m} precision", f"{m} recall", f"{m} f1"]
    rows = [header]
    for c, name in enumerate(first.label_names):
        row = [name]
        for m in model_names:
            rep = reports[m]
            row += [f"{rep.precision[c]:.6f}", f"{rep.recall[c]:.6f}",
                    f"{rep.f1[c]:.6f}"]
        rows.append(row)
    acc_row = ["Accuracy"]
    macro_row = ["Macro avg"]
    weighted_row = ["Weighted avg"]
    for m in model_names:
        rep = reports[m]
        acc_row += [f"{rep.accuracy:.6f}", "", ""]
        macro_row += [f"{v:.6f}" for v in rep.macro_avg]
        weighted_row += [f"{v:.6f}" for v in rep.weighted_avg]
    rows += [acc_row, macro_row, weighted_row]

    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    csv_text = buf.getvalue()

    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip()
             for r in rows]
    return csv_text, "\n".join(lines) + "\n"


def confusion_to_svg(cm: ConfusionMatrix, percent: bool = True,
                     cell: int = 48) -> str:
    """Dependency-free SVG heatmap of a confusion matrix, with the underlying
    counts embedded as a data table."""
    values = cm.row_percentages() if percent else cm.counts.astype(float)
    C = len(cm.label_names)
    margin_left, margin_top = 220, 140
    width = margin_left + C * cell + 20
    height = margin_top + C * cell + 20
    vmax = values.max() if values.max() > 0 else 1.0

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" font-family="sans-serif" font-size="11">',
        "<desc>confusion-matrix;rows=true;cols=predicted</desc>",
    ]
    for i in range(C):
        for j in range(C):
            v = values[i, j]
            shade = 255 - int(200 * v / vmax)
            x = margin_left + j * cell
            y = margin_top + i * cell
            label = f"{v:.1f}" if percent else f"{int(v)}"
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                f'fill="rgb({shade},{shade},255)" stroke="white"/>')
            parts.append(
                f'<text x="{x + cell / 2}" y="{y + cell / 2 + 4}" '
                f'text-anchor="middle">{label}</text>')
    for i, name in enumerate(cm.label_names):
        y = margin_top + i * cell + cell / 2 + 4
        parts.append(f'<text x="{margin_left - 6}" y="{y}" '
                     f'text-anchor="end">{name}</text>')
        x = margin_left + i * cell + cell / 2
        parts.append(
            f'<text x="{x}" y="{margin_top - 6}" text-anchor="start" '
            f'transform="rotate(-60 {x} {margin_top - 6})">{name}</text>')
    parts.append("<metadata><![CDATA[")
    parts.append(",".join(["true\\pred"] + cm.label_names))
    for i, name in enumerate(cm.label_names):
        parts.append(",".join([name] + [str(int(c)) for c in cm.counts[i]]))
    parts.append("]]></metadata>")
    parts.append("</svg>")
    return "\n".join(parts)
