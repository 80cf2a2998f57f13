"""Evaluation: character-overlap scores for span identification, micro F1
with per-class breakdown and confusion matrix for technique classification.

The span metric credits each (predicted, gold) pair with its character
overlap normalized by the measuring span's length:

    C(s, t, h) = |s intersect t| / h
    precision  = sum C(s, t, |s|) / #predicted spans
    recall     = sum C(s, t, |t|) / #gold spans

Empty denominators yield 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import CharSpan, TECHNIQUE_NAMES, TECHNIQUE_INDEX
from .errors import FormatError


@dataclass
class SIScore:
    precision: float
    recall: float
    f1: float


@dataclass
class TCScore:
    micro_f1: float
    per_class: dict[str, float]
    confusion: np.ndarray


def score_si(
    pred: dict[str, list[CharSpan]], gold: dict[str, list[CharSpan]]
) -> SIScore:
    """Character-overlap precision/recall/F1 over per-article span maps."""
    unknown = set(pred) - set(gold)
    if unknown:
        raise FormatError(f"predicted articles not in gold corpus: {sorted(unknown)}")
    prec_sum = 0.0
    rec_sum = 0.0
    n_pred = 0
    n_gold = 0
    for article, gold_spans in gold.items():
        pred_spans = pred.get(article, [])
        n_pred += len(pred_spans)
        n_gold += len(gold_spans)
        for s in pred_spans:
            for t in gold_spans:
                overlap = min(s.end, t.end) - max(s.begin, t.begin)
                if overlap > 0:
                    prec_sum += overlap / len(s)
                    rec_sum += overlap / len(t)
    precision = prec_sum / n_pred if n_pred else 0.0
    recall = rec_sum / n_gold if n_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return SIScore(precision, recall, f1)


def score_tc(pred: list[str], gold: list[str]) -> TCScore:
    """Micro F1 (accuracy for one label per instance), per-class F1s and a
    confusion matrix with gold rows and predicted columns."""
    if len(pred) != len(gold):
        raise FormatError(f"{len(pred)} predictions vs {len(gold)} gold labels")
    n = len(TECHNIQUE_NAMES)
    confusion = np.zeros((n, n), dtype=int)
    for p, g in zip(pred, gold):
        if p not in TECHNIQUE_INDEX:
            raise FormatError(f"unknown predicted technique {p!r}")
        if g not in TECHNIQUE_INDEX:
            raise FormatError(f"unknown gold technique {g!r}")
        confusion[TECHNIQUE_INDEX[g], TECHNIQUE_INDEX[p]] += 1
    correct = int(np.trace(confusion))
    micro = correct / len(gold) if gold else 0.0
    per_class = {}
    for i, name in enumerate(TECHNIQUE_NAMES):
        tp = confusion[i, i]
        fp = confusion[:, i].sum() - tp
        fn = confusion[i, :].sum() - tp
        denom = 2 * tp + fp + fn
        per_class[name] = 2 * tp / denom if denom else 0.0
    return TCScore(micro, per_class, confusion)


def write_per_class_report(path, score: TCScore) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("technique\tf1\n")
        for name in TECHNIQUE_NAMES:
            fh.write(f"{name}\t{score.per_class[name]:.4f}\n")
        fh.write(f"all\t{score.micro_f1:.4f}\n")


def write_confusion(path, score: TCScore) -> None:
    """Confusion matrix TSV; rows are true labels, columns predictions."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("gold\\pred\t" + "\t".join(TECHNIQUE_NAMES) + "\n")
        for i, name in enumerate(TECHNIQUE_NAMES):
            row = "\t".join(str(v) for v in score.confusion[i])
            fh.write(f"{name}\t{row}\n")
