"""Four-class confusion matrices and opportunity tolerances."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .corpus import LABELS, EmotionLabel

P_POS = EmotionLabel.OPPORTUNITY


@dataclass(frozen=True)
class ConfusionMatrix4:
    """Counts indexed ``[gold][predicted]`` in label order (S+, P+, N, A-)."""

    counts: tuple[tuple[int, ...], ...] = ((0,) * 4,) * 4

    def __post_init__(self) -> None:
        arr = np.asarray(self.counts)
        if arr.shape != (4, 4):
            raise ValueError("confusion matrix must be 4x4")
        if (arr < 0).any():
            raise ValueError("confusion counts must be non-negative")
        object.__setattr__(self, "counts", tuple(tuple(int(v) for v in row) for row in arr))

    @classmethod
    def from_array(cls, arr) -> "ConfusionMatrix4":
        return cls(tuple(map(tuple, np.asarray(arr, dtype=int))))

    def cell(self, gold: EmotionLabel, predicted: EmotionLabel) -> int:
        return self.counts[gold.index][predicted.index]

    def column(self, predicted: EmotionLabel) -> tuple[int, ...]:
        return tuple(row[predicted.index] for row in self.counts)

    def row(self, gold: EmotionLabel) -> tuple[int, ...]:
        return self.counts[gold.index]

    @property
    def total(self) -> int:
        return sum(map(sum, self.counts))

    def __add__(self, other: "ConfusionMatrix4") -> "ConfusionMatrix4":
        return ConfusionMatrix4.from_array(np.asarray(self.counts) + np.asarray(other.counts))

    def to_json(self) -> dict:
        return {"labels": [str(label) for label in LABELS], "counts": [list(r) for r in self.counts]}

    @classmethod
    def from_json(cls, data: dict) -> "ConfusionMatrix4":
        return cls(tuple(tuple(r) for r in data["counts"]))


def confusion(golds: Sequence[EmotionLabel], preds: Sequence[EmotionLabel]) -> ConfusionMatrix4:
    if len(golds) != len(preds):
        raise ValueError(f"length mismatch: {len(golds)} gold labels vs {len(preds)} predictions")
    arr = np.zeros((4, 4), dtype=int)
    for gold, pred in zip(golds, preds):
        arr[gold.index, pred.index] += 1
    return ConfusionMatrix4.from_array(arr)


def exact_tolerances(cm: ConfusionMatrix4) -> dict[str, Fraction | None]:
    """Precision, tau1, tau2 and coverage as exact fractions (None when undefined)."""
    s_pos, p_pos, neutral, a_neg = cm.column(P_POS)
    flagged = s_pos + p_pos + neutral + a_neg
    gold_p = sum(cm.row(P_POS))
    if flagged:
        out = {
            "precision": Fraction(p_pos, flagged),
            "tau1": Fraction(s_pos + p_pos, flagged),
            "tau2": Fraction(s_pos + p_pos + neutral, flagged),
        }
    else:
        out = {"precision": None, "tau1": None, "tau2": None}
    out["coverage"] = Fraction(p_pos, gold_p) if gold_p else None
    return out


def _fmt(value: float | None, digits: int = 2) -> str:
    return "n/a" if value is None else f"{100 * value:.{digits}f}"


@dataclass(frozen=True)
class ToleranceReport:
    precision: float | None
    tau1: float | None
    tau2: float | None
    coverage: float | None
    matrix: ConfusionMatrix4 | None = None

    def to_json(self) -> dict:
        out = {
            "precision": _na(self.precision),
            "tau1": _na(self.tau1),
            "tau2": _na(self.tau2),
            "coverage": _na(self.coverage),
        }
        if self.matrix is not None:
            out["matrix"] = self.matrix.to_json()
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ToleranceReport":
        def value(name):
            v = data.get(name, "n/a")
            return None if v == "n/a" else float(v)

        matrix = ConfusionMatrix4.from_json(data["matrix"]) if "matrix" in data else None
        return cls(value("precision"), value("tau1"), value("tau2"), value("coverage"), matrix)

    def row(self) -> tuple[str, str, str, str]:
        return _fmt(self.precision), _fmt(self.tau1), _fmt(self.tau2), _fmt(self.coverage)


def _na(value: float | None):
    return "n/a" if value is None else value


def tolerances(cm: ConfusionMatrix4) -> ToleranceReport:
    exact = exact_tolerances(cm)
    as_float = {k: None if v is None else float(v) for k, v in exact.items()}
    return ToleranceReport(matrix=cm, **as_float)


def mean_report(reports: Sequence[ToleranceReport]) -> ToleranceReport:
    """Macro average over reports; undefined entries are skipped."""

    def avg(name: str) -> float | None:
        values = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        return float(np.mean(values)) if values else None

    return ToleranceReport(avg("precision"), avg("tau1"), avg("tau2"), avg("coverage"))
