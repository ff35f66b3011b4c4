"""Scoring detected change points against the truth."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class EvalReport:
    tp_10: int
    fp_10: int
    tp_1: int
    fp_1: int
    hausdorff: float
    n_s: int

    @property
    def hausdorff_defined(self) -> bool:
        return not math.isnan(self.hausdorff)


def largest_segment(truth, T: int) -> int:
    b = [0, *sorted(truth), T]
    return max(hi - lo for lo, hi in zip(b, b[1:]))


def hausdorff(truth, detected, T: int) -> float:
    """Hausdorff distance between the two point sets over the longest true segment.

    Returns ``nan`` when either set is empty.
    """
    q = np.asarray(sorted(truth), dtype=float)
    qh = np.asarray(sorted(detected), dtype=float)
    if q.size == 0 or qh.size == 0:
        return math.nan
    d = np.abs(q[:, None] - qh[None, :])
    raw = max(d.min(axis=1).max(), d.min(axis=0).max())
    return float(raw / largest_segment(truth, T))


def tp_fp(truth, detected, window: int) -> tuple[int, int]:
    """One-to-one matching within ``+-window``, closest pairs first.

    Returns ``(TP, FP)``: matched true points and unmatched detections.
    """
    pairs = sorted((abs(q - d), i, k)
                   for i, q in enumerate(truth)
                   for k, d in enumerate(detected)
                   if abs(q - d) <= window)
    used_t, used_d = set(), set()
    for _, i, k in pairs:
        if i not in used_t and k not in used_d:
            used_t.add(i)
            used_d.add(k)
    return len(used_t), len(detected) - len(used_d)


def evaluate(truth, detected, T: int) -> EvalReport:
    tp10, fp10 = tp_fp(truth, detected, 10)
    tp1, fp1 = tp_fp(truth, detected, 1)
    n_s = largest_segment(truth, T)
    return EvalReport(tp10, fp10, tp1, fp1, hausdorff(truth, detected, T), n_s)


def adjacency_overlap(A_est, A_true) -> float:
    """Fraction of off-diagonal entries on which two adjacency matrices agree."""
    A_est = np.asarray(A_est)
    A_true = np.asarray(A_true)
    if A_est.shape != A_true.shape:
        raise ValueError("adjacency shapes differ")
    off = ~np.eye(A_est.shape[0], dtype=bool)
    return float(np.mean(A_est[off] == A_true[off]))
