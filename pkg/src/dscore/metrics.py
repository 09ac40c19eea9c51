"""Misclustering counts under the best label permutation."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class EvalReport:
    misclustered: int
    rate: float
    matching: tuple
    n: int
    K: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Summary:
    mean_count: float
    mean_rate: float
    stderr: float
    stderr_count: float
    min_count: int
    max_count: int
    replicates: int


def confusion(pred, truth, K: int) -> np.ndarray:
    pred, truth = np.asarray(pred, dtype=np.int64), np.asarray(truth, dtype=np.int64)
    m = np.zeros((K, K), dtype=np.int64)
    np.add.at(m, (pred, truth), 1)
    return m


def misclustering(pred, truth, K: int) -> EvalReport:
    """Smallest number of disagreements over all relabelings of ``pred``.

    ``matching[p]`` is the true label that predicted label ``p`` maps to.
    """
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.size} predicted vs {truth.size} true labels")
    for name, lab in (("pred", pred), ("truth", truth)):
        if lab.size and (lab.min() < 0 or lab.max() >= K):
            raise ValueError(f"{name} labels must lie in [0, {K})")
    n = int(pred.size)
    conf = confusion(pred, truth, K)
    rows, cols = linear_sum_assignment(conf, maximize=True)
    agree = int(conf[rows, cols].sum())
    matching = tuple(int(c) for c in cols[np.argsort(rows)])
    wrong = n - agree
    return EvalReport(wrong, wrong / n if n else 0.0, matching, n, K)


def aggregate(reports: Sequence[EvalReport], strict: bool = True) -> Summary:
    """Mean count/rate with the unbiased standard error of the mean (0 for one report).

    With ``strict`` every report must share the same ``n``; simulation
    replicates whose evaluated component size varies pass ``strict=False``.
    """
    if not reports:
        raise ValueError("no reports to aggregate")
    ns = {r.n for r in reports}
    if strict and len(ns) != 1:
        raise ValueError(f"reports disagree on n: {sorted(ns)}")
    counts = np.array([r.misclustered for r in reports], dtype=float)
    rates = np.array([r.rate for r in reports], dtype=float)
    m = len(reports)
    se = float(rates.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0
    se_c = float(counts.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0
    return Summary(float(counts.mean()), float(rates.mean()), se, se_c,
                   int(counts.min()), int(counts.max()), m)
