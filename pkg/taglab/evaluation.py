from dataclasses import dataclass
import json
from pathlib import Path
from typing import Any, Literal, Optional, Sequence, Union

import numpy as np
import polars as pl
from sklearn.metrics import confusion_matrix, f1_score

from taglab.config import logger


@dataclass(frozen=True)
class ConfusionMatrix:
    """
    Token counts with gold tags on rows and predicted tags on columns.

    Attributes
    ----------
    tags : list of str
        Row and column order.
    counts : numpy.ndarray
        ``(K, K)`` non-negative integers.
    """

    tags: list[str]
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def permute(self, tags: Sequence[str]) -> "ConfusionMatrix":
        order = [self.tags.index(tag) for tag in tags]
        return ConfusionMatrix(list(tags), self.counts[np.ix_(order, order)])


@dataclass(frozen=True)
class TagReport:
    """Per-tag precision, recall, F1 and support, plus the overall scores."""

    tags: list[str]
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    weighted_f1: float
    accuracy: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "weighted_f1": self.weighted_f1,
            "accuracy": self.accuracy,
            "per_tag": {
                tag: {
                    "precision": float(p),
                    "recall": float(r),
                    "f1": float(f),
                    "support": int(s),
                }
                for tag, p, r, f, s in zip(
                    self.tags, self.precision, self.recall, self.f1, self.support
                )
            },
        }


def confusion(
    gold: Sequence[Sequence[str]],
    pred: Sequence[Sequence[str]],
    tags: Optional[Sequence[str]] = None,
) -> ConfusionMatrix:
    """
    Accumulate a confusion matrix over sentences.

    Parameters
    ----------
    gold, pred : sequence of sequence of str
        Tag lists, sentence by sentence.
    tags : sequence of str, optional
        Row and column order. Defaults to the sorted tags seen in either input.

    Raises
    ------
    ValueError
        If the number of sentences or any sentence length differs.
    """
    if len(gold) != len(pred):
        raise ValueError(f"Got {len(gold)} gold sentences and {len(pred)} predictions")

    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise ValueError(f"Sentence {i}: {len(g)} gold tags but {len(p)} predicted")

    flat_gold = [tag for sentence in gold for tag in sentence]
    flat_pred = [tag for sentence in pred for tag in sentence]
    labels = list(tags) if tags is not None else sorted(set(flat_gold) | set(flat_pred))
    unknown = (set(flat_gold) | set(flat_pred)) - set(labels)
    if unknown:
        raise ValueError(f"Tags {sorted(unknown)} are not in the given tag order")

    if not flat_gold:
        return ConfusionMatrix(labels, np.zeros((len(labels), len(labels)), dtype=np.int64))

    counts = confusion_matrix(flat_gold, flat_pred, labels=labels)
    return ConfusionMatrix(labels, counts.astype(np.int64))


def tag_report(cm: ConfusionMatrix) -> TagReport:
    """
    Per-tag scores and their support-weighted average.

    Precision, recall and F1 are 0 whenever their denominator is 0. Each tag's
    F1 is weighted by its share of the gold tokens, so tags that never occur in
    the gold data carry no weight.

    Raises
    ------
    ValueError
        If the matrix holds no tokens.
    """
    total = cm.total
    if total == 0:
        raise ValueError("Cannot report on an empty confusion matrix.")

    counts = cm.counts.astype(np.float64)
    diag = np.diag(counts)
    support = counts.sum(axis=1)
    predicted = counts.sum(axis=0)

    precision = np.divide(diag, predicted, out=np.zeros_like(diag), where=predicted > 0)
    recall = np.divide(diag, support, out=np.zeros_like(diag), where=support > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros_like(diag), where=denom > 0)

    return TagReport(
        tags=list(cm.tags),
        precision=precision,
        recall=recall,
        f1=f1,
        support=support.astype(np.int64),
        weighted_f1=float(np.dot(support / total, f1)),
        accuracy=float(diag.sum() / total),
    )


def micro_f1(cm: ConfusionMatrix) -> float:
    """Micro-averaged F1, which for one tag per token is the accuracy."""
    total = cm.total
    if total == 0:
        raise ValueError("Cannot score an empty confusion matrix.")

    # micro P = micro R = trace / total
    return float(np.trace(cm.counts) / total)


def weighted_f1(gold: Sequence[Sequence], pred: Sequence[Sequence]) -> float:
    """Weighted macro-F1 over tag lists (symbols or ids); 0 when there are no tokens."""
    flat_gold = [tag for sentence in gold for tag in sentence]
    flat_pred = [tag for sentence in pred for tag in sentence]
    if not flat_gold:
        return 0.0
    return float(f1_score(flat_gold, flat_pred, average="weighted", zero_division=0))


def aggregate_folds(
    scores: Sequence[float], std: Literal["sample", "population"] = "sample"
) -> tuple[float, float]:
    """
    Mean and standard deviation of per-fold scores.

    Raises
    ------
    ValueError
        If fewer than two scores are given.
    """
    if len(scores) < 2:
        raise ValueError(f"Need at least 2 folds to aggregate, got {len(scores)}")

    values = np.asarray(scores, dtype=np.float64)
    ddof = 1 if std == "sample" else 0
    return float(values.mean()), float(values.std(ddof=ddof))


def top_confusions(cm: ConfusionMatrix, n: int = 10) -> list[tuple[str, str, int]]:
    """Largest off-diagonal cells as ``(gold, predicted, count)``, most frequent first."""
    cells = [
        (cm.tags[i], cm.tags[j], int(cm.counts[i, j]))
        for i in range(len(cm.tags))
        for j in range(len(cm.tags))
        if i != j and cm.counts[i, j] > 0
    ]
    cells.sort(key=lambda cell: (-cell[2], cell[0], cell[1]))
    return cells[:n]


def format_mean_std(mean: float, std: float) -> str:
    """Percentages with two decimals, e.g. ``"97.47 (0.11)"``."""
    return f"{mean * 100:.2f} ({std * 100:.2f})"


def write_report(report: dict[str, Any], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.debug(f"Wrote report to {path}")
    return path


def write_confusion_csv(cm: ConfusionMatrix, path: Union[str, Path]) -> Path:
    """Header row and first column hold tag names; cells are integer counts."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pl.DataFrame(
        {"gold": cm.tags}
        | {tag: cm.counts[:, j].astype(np.int64) for j, tag in enumerate(cm.tags)}
    )
    frame.write_csv(path)
    logger.debug(f"Wrote confusion matrix to {path}")
    return path
