"""Degree-cancelling feature maps on singular vectors.

``dscore_ratio`` divides each row by its leading entry; ``dscoreq_ratio``
divides each row by its l_q norm. Both clamp to ``[-T_n, T_n]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import TheoreticalSvd
from .spectral import SingularTriple


@dataclass(frozen=True)
class RatioConfig:
    T_n: float | None = None
    q: int = 2

    def __post_init__(self):
        if self.T_n is not None and not self.T_n > 0:
            raise ValueError("T_n must be positive")
        if int(self.q) != self.q or self.q < 1:
            raise ValueError("q must be a positive integer")

    def threshold(self, n: int) -> float:
        """Natural-log default ``log n``."""
        return math.log(n) if self.T_n is None else float(self.T_n)


@dataclass(frozen=True, eq=False)
class RatioMatrix:
    data: np.ndarray
    kind: str
    config: RatioConfig
    T_n: float

    @property
    def shape(self):
        return self.data.shape


def clamped_ratio(num: np.ndarray, den: np.ndarray, t: float) -> np.ndarray:
    """``clip(num / den, -t, t)``; a zero denominator takes ``+-t`` by the
    numerator's sign and ``0 / 0`` gives 0."""
    num = np.asarray(num, dtype=float)
    den = np.broadcast_to(np.asarray(den, dtype=float), num.shape)
    out = np.empty_like(num)
    nz = den != 0
    with np.errstate(over="ignore"):  # overflow lands at +-inf and is clipped below
        out[nz] = num[nz] / den[nz]
    z = ~nz
    out[z] = np.where(num[z] > 0, t, np.where(num[z] < 0, -t, 0.0))
    return np.clip(out, -t, t)


def _lead_ratio(M: np.ndarray, t: float) -> np.ndarray:
    return clamped_ratio(M[:, 1:], M[:, :1], t)


def _row_normalize(M: np.ndarray, q: int, t: float) -> np.ndarray:
    norms = np.linalg.norm(M, ord=q, axis=1, keepdims=True)
    return clamped_ratio(M, norms, t)


def dscore_ratio(sv: SingularTriple, cfg: RatioConfig | None = None) -> RatioMatrix:
    """``[R_U, R_V]`` with ``R_U(i, k) = U_{k+1}(i) / U_1(i)``, n x (2K - 2)."""
    cfg = cfg or RatioConfig()
    K = sv.U.shape[1]
    if K < 2:
        raise ValueError("D-SCORE ratios need K >= 2")
    t = cfg.threshold(sv.U.shape[0])
    data = np.hstack([_lead_ratio(sv.U, t), _lead_ratio(sv.V, t)])
    return RatioMatrix(data, "dscore", cfg, t)


def dscoreq_ratio(sv: SingularTriple, cfg: RatioConfig | None = None) -> RatioMatrix:
    """``[R_U, R_V]`` with rows of U and V scaled to unit l_q norm, n x 2K."""
    cfg = cfg or RatioConfig()
    t = cfg.threshold(sv.U.shape[0])
    data = np.hstack([_row_normalize(sv.U, cfg.q, t), _row_normalize(sv.V, cfg.q, t)])
    return RatioMatrix(data, f"dscoreq{cfg.q}", cfg, t)


def oracle_dscore_ratio(t: TheoreticalSvd, cfg: RatioConfig | None = None) -> RatioMatrix:
    """Population ratio matrix built from the K x K factors of S.

    Row i is ``[Y_{2..K}(c_i) / Y_1(c_i), H_{2..K}(c_i) / H_1(c_i)]``: the
    heterogeneity factor of each node cancels, leaving exactly K distinct rows.
    """
    cfg = cfg or RatioConfig()
    if t.Y.shape[0] < 2:
        raise ValueError("D-SCORE ratios need K >= 2")
    if np.any(t.U[:, 0] <= 0) or np.any(t.V[:, 0] <= 0):
        raise ValueError("leading population singular vectors must be strictly positive")
    n = t.U.shape[0]
    thr = cfg.threshold(n)
    rows = np.hstack([_lead_ratio(t.Y, thr), _lead_ratio(t.H, thr)])
    return RatioMatrix(rows[t.labels], "dscore", cfg, thr)


def oracle_dscoreq_ratio(t: TheoreticalSvd, cfg: RatioConfig | None = None) -> RatioMatrix:
    """Population l_q-normalised rows: ``[Y(c_i) / |Y(c_i)|_q, H(c_i) / |H(c_i)|_q]``."""
    cfg = cfg or RatioConfig()
    thr = cfg.threshold(t.U.shape[0])
    rows = np.hstack([_row_normalize(t.Y, cfg.q, thr), _row_normalize(t.H, cfg.q, thr)])
    return RatioMatrix(rows[t.labels], f"dscoreq{cfg.q}", cfg, thr)
