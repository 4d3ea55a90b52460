"""Segmentation metrics on interior change-points (the endpoint ``T`` excluded)."""

from __future__ import annotations

from math import comb

import numpy as np


def _interior(cps, T: int | None = None) -> list[int]:
    pts = sorted(int(c) for c in cps)
    if T is not None:
        pts = [c for c in pts if 0 < c < T]
    return pts


def hausdorff(pred, truth, T: int | None = None) -> float:
    """Symmetric Hausdorff distance between two change-point sets.

    If exactly one side is empty, each point on the other side is measured
    against the stream boundaries, i.e. ``min(tau, T - tau)``; this needs
    ``T``. Two empty sets are at distance 0.
    """
    a, b = np.asarray(_interior(pred, T), dtype=float), np.asarray(_interior(truth, T), dtype=float)
    if a.size == 0 and b.size == 0:
        return 0.0
    if a.size == 0 or b.size == 0:
        if T is None:
            raise ValueError("T is required when one change-point set is empty")
        other = a if a.size else b
        return float(np.max(np.minimum(other, T - other)))
    gaps = np.abs(a[:, None] - b[None, :])
    return float(max(gaps.min(axis=1).max(), gaps.min(axis=0).max()))


def _lengths(cps, T: int) -> np.ndarray:
    return np.diff([0] + _interior(cps, T) + [T])


def rand_index(pred, truth, T: int) -> float:
    """Rand index of the two segmentations seen as clusterings of ``1..T``."""
    if T < 2:
        return 1.0
    bp = [0] + _interior(pred, T) + [T]
    bt = [0] + _interior(truth, T) + [T]
    same_both = 0
    for a0, a1 in zip(bp, bp[1:]):
        for b0, b1 in zip(bt, bt[1:]):
            overlap = min(a1, b1) - max(a0, b0)
            if overlap > 1:
                same_both += comb(overlap, 2)
    same_pred = sum(comb(int(n), 2) for n in _lengths(pred, T))
    same_truth = sum(comb(int(n), 2) for n in _lengths(truth, T))
    total = comb(T, 2)
    return (total - same_pred - same_truth + 2 * same_both) / total


def precision_recall_f1(pred, truth, margin: int = 10, T: int | None = None) -> tuple[float, float, float]:
    """Margin-tolerant precision and recall; one prediction may cover several truths.

    An empty side scores zero unless both are empty, which scores one.
    """
    a, b = _interior(pred, T), _interior(truth, T)
    if not a and not b:
        return 1.0, 1.0, 1.0
    if not a or not b:
        return 0.0, 0.0, 0.0
    gaps = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    precision = float(np.mean(gaps.min(axis=1) <= margin))
    recall = float(np.mean(gaps.min(axis=0) <= margin))
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


METRICS = ("hausdorff", "rand", "precision", "recall", "f1")


def all_metrics(pred, truth, T: int, margin: int = 10) -> dict[str, float]:
    p, r, f = precision_recall_f1(pred, truth, margin, T)
    return {
        "hausdorff": hausdorff(pred, truth, T),
        "rand": rand_index(pred, truth, T),
        "precision": p,
        "recall": r,
        "f1": f,
    }
