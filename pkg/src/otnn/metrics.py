"""Hate-class F1, McNemar paired significance, run aggregation and the
learned-representation neighbor-voting analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import ValidationError
from .neighbors import build_index, knn_ranking_predict

SIGNIFICANCE_LEVEL = 0.05
#: chi-square(1df) critical value at the 0.05 level
CHI2_1DF_CRITICAL = 3.841458820694124


@dataclass
class EvalReport:
    """Hate-class metrics; per-seed aggregates populated for multi-run use."""

    f1_hate: float
    tp: int
    fp: int
    fn: int
    tn: int
    per_seed: list = field(default_factory=list)
    mean: float | None = None
    std: float | None = None


def f1_hate(preds, golds) -> EvalReport:
    """Precision/recall/F1 for class 1; undefined denominators give 0."""
    preds = np.asarray(preds, dtype=np.int64)
    golds = np.asarray(golds, dtype=np.int64)
    if preds.shape != golds.shape:
        raise ValidationError(
            f"prediction/gold lengths differ: {preds.shape} vs {golds.shape}"
        )
    if preds.size == 0:
        raise ValidationError("cannot score an empty prediction list")
    tp = int(np.sum((preds == 1) & (golds == 1)))
    fp = int(np.sum((preds == 1) & (golds == 0)))
    fn = int(np.sum((preds == 0) & (golds == 1)))
    tn = int(np.sum((preds == 0) & (golds == 0)))
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return EvalReport(f1, tp, fp, fn, tn)


def mcnemar(preds_a, preds_b, golds):
    """Continuity-corrected McNemar test on discordant prediction pairs.

    Returns (statistic, p_value, significant_at_0.05). The statistic is
    (|b - c| - 1)^2 / (b + c), clamped to 0 when |b - c| <= 1; with no
    discordant pairs at all the statistic is 0 and p = 1. The p-value is
    the chi-square(1df) tail, computed through the complementary error
    function (the regularized upper incomplete gamma at a = 1/2).
    """
    preds_a = np.asarray(preds_a, dtype=np.int64)
    preds_b = np.asarray(preds_b, dtype=np.int64)
    golds = np.asarray(golds, dtype=np.int64)
    if not (preds_a.shape == preds_b.shape == golds.shape):
        raise ValidationError("mcnemar requires equal-length prediction vectors")
    a_ok = preds_a == golds
    b_ok = preds_b == golds
    b = int(np.sum(a_ok & ~b_ok))
    c = int(np.sum(~a_ok & b_ok))
    if b + c == 0:
        return 0.0, 1.0, False
    corrected = max(abs(b - c) - 1, 0)
    statistic = corrected**2 / (b + c)
    p_value = math.erfc(math.sqrt(statistic / 2.0))
    return statistic, p_value, p_value < SIGNIFICANCE_LEVEL


def aggregate_runs(scores):
    """(mean, population standard deviation) of per-seed scores."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValidationError("aggregate_runs requires at least one score")
    return float(scores.mean()), float(scores.std())


def _normalized(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    return rows / np.maximum(norms, 1e-30)


def representation_knn_analysis(
    params, source: Dataset, target_test: Dataset, k_values
) -> dict:
    """Majority-vote F1 per k in the raw embedding space vs the learned space.

    Returns {"sbert": {k: f1}, "otnn": {k: f1}}. Neighbors are ranked by
    cosine similarity; the learned space applies the trained encoder to
    both corpora before ranking.
    """
    from .trainer import encode  # local import to avoid a module cycle

    if not k_values:
        raise ValidationError("k_values must be non-empty")

    raw_index = build_index(source)
    learned_src = Dataset(
        source.ids,
        source.labels,
        _normalized(encode(params, source.embeddings)),
        role=source.role,
    )
    learned_index = build_index(learned_src)
    learned_queries = _normalized(encode(params, target_test.embeddings))

    out = {"sbert": {}, "otnn": {}}
    golds = target_test.labels
    for space, index, queries in (
        ("sbert", raw_index, target_test.embeddings),
        ("otnn", learned_index, learned_queries),
    ):
        for k in k_values:
            preds = np.array(
                [knn_ranking_predict(index, q, k) for q in queries], dtype=np.int64
            )
            out[space][int(k)] = f1_hate(preds, golds).f1_hate
    return out
