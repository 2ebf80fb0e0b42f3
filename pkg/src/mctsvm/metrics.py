"""Per-class precision/recall/F, macro-F, accuracy and confusion matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class ClassReport:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    macro_f: float
    accuracy: float
    confusion: np.ndarray  # rows: gold class, columns: predicted class

    @property
    def n_classes(self) -> int:
        return int(self.f1.size)

    def to_record(self) -> dict:
        return {
            "macro_f": self.macro_f,
            "accuracy": self.accuracy,
            "precision": self.precision.tolist(),
            "recall": self.recall.tolist(),
            "f1": self.f1.tolist(),
            "confusion": self.confusion.tolist(),
        }

    def to_text(self) -> str:
        lines = [f"macro_f\t{self.macro_f:.6f}", f"accuracy\t{self.accuracy:.6f}"]
        for y in range(self.n_classes):
            lines.append(f"class_{y}\tprecision={self.precision[y]:.6f}\t"
                         f"recall={self.recall[y]:.6f}\tf1={self.f1[y]:.6f}")
        lines.append("confusion\t" + ";".join(",".join(str(int(c)) for c in row)
                                               for row in self.confusion))
        return "\n".join(lines) + "\n"


def confusion_matrix(pred, gold, m: int) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.int64)
    gold = np.asarray(gold, dtype=np.int64)
    return np.bincount(gold * m + pred, minlength=m * m).reshape(m, m)


def _ratio(num, den):
    out = np.zeros(num.shape)
    np.divide(num, den, out=out, where=den > 0)
    return out


def evaluate(pred, gold, m: int) -> ClassReport:
    """Score predictions against gold labels over ``m`` classes.

    A class with no gold and no predicted examples has F = 0 and still
    counts in the macro average.
    """
    pred = np.asarray(pred, dtype=np.int64)
    gold = np.asarray(gold, dtype=np.int64)
    if pred.shape != gold.shape:
        raise ValueError(f"length mismatch: {pred.size} predictions, {gold.size} gold labels")
    for name, arr in (("prediction", pred), ("gold", gold)):
        if arr.size and (arr.min() < 0 or arr.max() >= m):
            raise ValueError(f"{name} label out of range for {m} classes")
    conf = confusion_matrix(pred, gold, m)
    tp = np.diag(conf).astype(float)
    precision = _ratio(tp, conf.sum(axis=0).astype(float))
    recall = _ratio(tp, conf.sum(axis=1).astype(float))
    f1 = _ratio(2 * precision * recall, precision + recall)
    accuracy = float(tp.sum() / pred.size) if pred.size else 0.0
    return ClassReport(precision, recall, f1, float(f1.mean()), accuracy, conf)
