"""Confusion matrices, macro F1 / accuracy, and report rendering."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .corpus import LabelSchema


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with rows = gold class, columns = predicted class."""

    schema: LabelSchema
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class EvalReport:
    macro_f1: float
    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    confusion: ConfusionMatrix

    @property
    def schema(self) -> LabelSchema:
        return self.confusion.schema


def _indices(labels: Sequence, schema: LabelSchema) -> np.ndarray:
    return np.array(
        [lab if isinstance(lab, (int, np.integer)) else schema.index(lab) for lab in labels],
        dtype=np.int64,
    )


def confusion(gold: Sequence, predicted: Sequence, schema: LabelSchema) -> ConfusionMatrix:
    if len(gold) != len(predicted):
        raise ValueError(f"length mismatch: {len(gold)} gold vs {len(predicted)} predicted labels")
    g = _indices(gold, schema)
    p = _indices(predicted, schema)
    k = len(schema)
    for arr in (g, p):
        if arr.size and (arr.min() < 0 or arr.max() >= k):
            raise ValueError(f"label index outside task {schema.task_id}")
    counts = np.bincount(g * k + p, minlength=k * k).reshape(k, k)
    return ConfusionMatrix(schema, counts.astype(np.int64))


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num, dtype=np.float64)
    np.divide(num, den, out=out, where=den != 0)
    return out


def evaluate(cm: ConfusionMatrix) -> EvalReport:
    """Per-class P/R/F1 plus macro F1 and accuracy.

    Any vanishing denominator yields 0, and classes absent from both gold and
    predictions still count in the macro mean.
    """
    counts = cm.counts.astype(np.float64)
    total = counts.sum()
    if total <= 0:
        raise ValueError("cannot evaluate an empty confusion matrix")
    diag = np.diag(counts)
    precision = _safe_div(diag, counts.sum(axis=0))
    recall = _safe_div(diag, counts.sum(axis=1))
    f1 = _safe_div(2 * precision * recall, precision + recall)
    return EvalReport(
        macro_f1=float(f1.mean()),
        accuracy=float(diag.sum() / total),
        precision=precision,
        recall=recall,
        f1=f1,
        confusion=cm,
    )


def score(gold: Sequence, predicted: Sequence, schema: LabelSchema) -> EvalReport:
    return evaluate(confusion(gold, predicted, schema))


def percent(value: float) -> str:
    return f"{100.0 * value:.2f}%"


def parse_percent(cell: str) -> float:
    return float(cell.strip().rstrip("%")) / 100.0


def _grid(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for r in rows:
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def _csv(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def render(report: EvalReport, fmt: str = "text") -> str:
    classes = report.schema.classes
    if fmt == "csv":
        rows = [["class", "precision", "recall", "f1"]]
        for i, name in enumerate(classes):
            rows.append([name, percent(report.precision[i]), percent(report.recall[i]), percent(report.f1[i])])
        rows.append(["macro_f1", "", "", percent(report.macro_f1)])
        rows.append(["accuracy", "", "", percent(report.accuracy)])
        return _csv(rows)
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    rows = [["class", "precision", "recall", "f1"]]
    for i, name in enumerate(classes):
        rows.append([name, percent(report.precision[i]), percent(report.recall[i]), percent(report.f1[i])])
    out = _grid(rows)
    out += f"macro F1  {percent(report.macro_f1)}\naccuracy  {percent(report.accuracy)}\n\n"
    return out + render_confusion(report.confusion, "text")


def render_confusion(cm: ConfusionMatrix, fmt: str = "text") -> str:
    classes = list(cm.schema.classes)
    rows = [["gold\\pred"] + classes]
    rows += [[name] + [str(int(v)) for v in cm.counts[i]] for i, name in enumerate(classes)]
    return _csv(rows) if fmt == "csv" else _grid(rows)


def parse_report_csv(text: str) -> dict[str, dict[str, float] | float]:
    """Inverse of ``render(report, "csv")``: per-class dicts plus the two summaries."""
    rows = list(csv.reader(io.StringIO(text)))
    if rows[0] != ["class", "precision", "recall", "f1"]:
        raise ValueError("not a report CSV")
    out: dict[str, dict[str, float] | float] = {}
    for name, p, r, f in rows[1:]:
        if name in ("macro_f1", "accuracy"):
            out[name] = parse_percent(f)
        else:
            out[name] = {"precision": parse_percent(p), "recall": parse_percent(r), "f1": parse_percent(f)}
    return out


COMPARISON_COLUMNS = ("A macro F1", "A accuracy", "B macro F1", "B accuracy")


def render_comparison(results: Mapping[str, Mapping[str, EvalReport]], fmt: str = "text") -> str:
    """Rows = models (in mapping order), column pairs = (macro F1, accuracy) per task.

    Tasks missing from a row render as ``-``.
    """
    rows = [["model", *COMPARISON_COLUMNS]]
    for model, by_task in results.items():
        row = [model]
        for task in ("A", "B"):
            rep = by_task.get(task)
            row += [percent(rep.macro_f1), percent(rep.accuracy)] if rep else ["-", "-"]
        rows.append(row)
    return _csv(rows) if fmt == "csv" else _grid(rows)
