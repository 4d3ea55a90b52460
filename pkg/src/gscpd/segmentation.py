"""Exact dynamic programming over l1-penalised segment costs, plus the Lasso detector.

Segments are half-open index ranges ``(a, b]`` over ``1..T`` as in the usual
change-point notation; in array terms that is ``values[a:b]``. A segmentation
always ends with ``T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .graph import GraphSignalStream
from .spectral import Psd


class SegmentationError(ValueError):
    pass


@dataclass(frozen=True)
class Segmentation:
    tau: tuple[int, ...]

    def __post_init__(self):
        tau = tuple(int(t) for t in self.tau)
        if not tau:
            raise SegmentationError("a segmentation needs at least the endpoint T")
        if tau[0] < 1 or any(b <= a for a, b in zip(tau, tau[1:])):
            raise SegmentationError(f"change-points must be strictly increasing and >= 1: {tau}")
        object.__setattr__(self, "tau", tau)

    @property
    def d(self) -> int:
        return len(self.tau)

    @property
    def T(self) -> int:
        return self.tau[-1]

    @property
    def interior(self) -> list[int]:
        return list(self.tau[:-1])

    @property
    def lengths(self) -> list[int]:
        return [b - a for a, b in self.bounds()]

    def bounds(self) -> list[tuple[int, int]]:
        starts = (0,) + self.tau[:-1]
        return list(zip(starts, self.tau))


@dataclass(frozen=True)
class PrefixTable:
    """Cumulative sums of a spectral stream and of its squares (row 0 is zero)."""

    s1: np.ndarray
    s2: np.ndarray

    @property
    def T(self) -> int:
        return self.s1.shape[0] - 1

    def sums(self, a: int, b: int) -> tuple[np.ndarray, np.ndarray, int]:
        return self.s1[b] - self.s1[a], self.s2[b] - self.s2[a], b - a


@dataclass
class DetectionResult:
    """Output of a detector.

    ``means`` is ``None`` for detectors that do not estimate segment means
    (the kernel baselines). ``path`` holds the optimal segmentation for every
    candidate number of segments, indexed by ``d - 1``.
    """

    segmentation: Segmentation
    means: np.ndarray | None
    lam: float | None
    cost_curve: np.ndarray
    selected_d: int
    path: list[Segmentation] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def change_points(self) -> list[int]:
        return list(self.segmentation.tau)


def build_prefix(ytilde: GraphSignalStream | np.ndarray) -> PrefixTable:
    y = ytilde.values if isinstance(ytilde, GraphSignalStream) else np.asarray(ytilde, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    zeros = np.zeros((1, y.shape[1]))
    s1 = np.vstack([zeros, np.cumsum(y, axis=0)])
    s2 = np.vstack([zeros, np.cumsum(y**2, axis=0)])
    return PrefixTable(s1, s2)


def soft_threshold(x, level):
    """``sign(x) * max(|x| - level, 0)``, elementwise."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - level, 0.0)


def _psd_array(psd, p: int) -> np.ndarray:
    if psd is None:
        return np.ones(p)
    vals = psd.values if isinstance(psd, Psd) else np.asarray(psd, dtype=float)
    return np.broadcast_to(vals, (p,)).astype(float)


def shrunk_mean(a: int, b: int, i: int, lam: float, psd, prefix: PrefixTable) -> float:
    """Soft-thresholded mean of frequency ``i`` over segment ``(a, b]``.

    Minimises ``n (m - mu)^2 / (T P) + lam n |mu| / T`` in ``mu``, where ``m``
    is the empirical segment mean, giving a threshold of ``lam P / 2``.
    """
    if not 0 <= a < b <= prefix.T:
        raise SegmentationError(f"invalid segment ({a}, {b}]")
    p_i = _psd_array(psd, prefix.s1.shape[1])[i]
    mbar = (prefix.s1[b, i] - prefix.s1[a, i]) / (b - a)
    return float(soft_threshold(mbar, lam * p_i / 2))


def segment_cost_l1(a: int, b: int, lam: float, psd, prefix: PrefixTable) -> float:
    """Penalised least-squares cost of segment ``(a, b]`` at its shrunk means."""
    if not 0 <= a < b <= prefix.T:
        raise SegmentationError(f"invalid segment ({a}, {b}]")
    T = prefix.T
    s1, s2, n = prefix.sums(a, b)
    P = _psd_array(psd, s1.shape[0])
    mu = soft_threshold(s1 / n, lam * P / 2)
    resid = np.maximum(s2 - 2 * mu * s1 + n * mu**2, 0.0)
    return float(np.sum(resid / (T * P) + lam * n * np.abs(mu) / T))


def l1_cost_matrix(ytilde: GraphSignalStream | np.ndarray, lam: float, psd=None) -> np.ndarray:
    """All segment costs ``cost[a, b]`` for ``0 <= a < b <= T``; ``inf`` elsewhere.

    Sums are accumulated from each start ``a`` rather than differenced from a
    global prefix, which avoids cancellation on long streams with large means.
    """
    y = ytilde.values if isinstance(ytilde, GraphSignalStream) else np.asarray(ytilde, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    T, p = y.shape
    P = _psd_array(psd, p)
    level = lam * P / 2
    out = np.full((T + 1, T + 1), np.inf)
    for a in range(T):
        tail = y[a:]
        n = np.arange(1, T - a + 1, dtype=float)[:, None]
        s1 = np.cumsum(tail, axis=0)
        s2 = np.cumsum(tail**2, axis=0)
        mu = soft_threshold(s1 / n, level)
        resid = np.maximum(s2 - 2 * mu * s1 + n * mu**2, 0.0)
        out[a, a + 1 :] = np.sum(resid / (T * P) + lam * n * np.abs(mu) / T, axis=1)
    return out


def cost_matrix_from_oracle(cost: Callable[[int, int], float], T: int) -> np.ndarray:
    out = np.full((T + 1, T + 1), np.inf)
    for a in range(T):
        for b in range(a + 1, T + 1):
            out[a, b] = cost(a, b)
    return out


@dataclass
class DPSolution:
    """Optimal segmentations and costs for ``d = 1..dmax`` (index ``d - 1``).

    Infeasible ``d`` (too many segments for the minimum length) has cost
    ``inf`` and segmentation ``None``.
    """

    costs: np.ndarray
    segmentations: list[Segmentation | None]

    @property
    def dmax(self) -> int:
        return len(self.segmentations)


def dp_segment(costs, T: int | None = None, dmax: int = 1, min_size: int = 1) -> DPSolution:
    """Exact optimal partition of ``1..T`` into ``d`` segments for each ``d <= dmax``.

    ``costs`` is either a ``(T+1) x (T+1)`` matrix indexed ``[start, end]`` or
    a callable ``cost(a, b)``. Among equal-cost solutions the one with the
    smallest last change-point wins, recursively.
    """
    if callable(costs):
        if T is None:
            raise SegmentationError("T is required with a cost oracle")
        costs = cost_matrix_from_oracle(costs, T)
    costs = np.asarray(costs, dtype=float)
    if T is None:
        T = costs.shape[0] - 1
    if costs.shape != (T + 1, T + 1):
        raise SegmentationError(f"cost matrix must be {(T + 1, T + 1)}, got {costs.shape}")
    if dmax < 1 or dmax > T:
        raise SegmentationError(f"dmax must lie in [1, T={T}], got {dmax}")

    c = costs.copy()
    if min_size > 1:
        idx = np.arange(T + 1)
        c[(idx[None, :] - idx[:, None]) < min_size] = np.inf

    table = np.full((dmax, T + 1), np.inf)
    back = np.zeros((dmax, T + 1), dtype=np.int64)
    table[0] = c[0]
    for k in range(1, dmax):
        cand = table[k - 1][:, None] + c
        back[k] = np.argmin(cand, axis=0)
        table[k] = cand[back[k], np.arange(T + 1)]

    segs: list[Segmentation | None] = []
    for k in range(dmax):
        if not np.isfinite(table[k, T]):
            segs.append(None)
            continue
        tau, t = [T], T
        for j in range(k, 0, -1):
            t = int(back[j, t])
            tau.append(t)
        segs.append(Segmentation(tuple(reversed(tau))))
    return DPSolution(table[:, T].copy(), segs)


def default_constants(p: int, T: int, L: float = 1.0) -> tuple[float, float, float]:
    """Lower-bound constants ``(lam, c1, c2)`` for a unit-variance stream."""
    if L <= math.log(2):
        raise ValueError(f"L must exceed log 2, got {L}")
    lam = 3 * math.sqrt(2) * math.sqrt(math.log(p) + L) / T
    return lam, 6 * math.sqrt(2), 3 * math.sqrt(2)


def cp_penalty(d, T: int, c1: float, c2: float):
    d = np.asarray(d, dtype=float)
    return d / T * (c1 + c2 * np.log(T / d))


def segment_means(ytilde, seg: Segmentation, lam: float, psd=None) -> np.ndarray:
    """Per-segment shrunk spectral means, one row per segment."""
    y = ytilde.values if isinstance(ytilde, GraphSignalStream) else np.asarray(ytilde, dtype=float)
    P = _psd_array(psd, y.shape[1])
    rows = [soft_threshold(y[a:b].mean(axis=0), lam * P / 2) for a, b in seg.bounds()]
    return np.vstack(rows)


def lasso_detector(
    ytilde: GraphSignalStream,
    lam: float | None = None,
    c1: float | None = None,
    c2: float | None = None,
    dmax: int = 10,
    L: float = 1.0,
    min_size: int = 1,
) -> DetectionResult:
    """Lasso-penalised detector on a standardised spectral stream (unit PSD).

    Unset constants default to the theoretical lower bounds from
    :func:`default_constants`.
    """
    T, p = ytilde.T, ytilde.p
    if dmax > T:
        raise SegmentationError(f"dmax={dmax} exceeds T={T}")
    lam0, c10, c20 = default_constants(p, T, L)
    lam = lam0 if lam is None else lam
    c1 = c10 if c1 is None else c1
    c2 = c20 if c2 is None else c2

    sol = dp_segment(l1_cost_matrix(ytilde, lam), T, dmax, min_size)
    d = np.arange(1, dmax + 1)
    crit = sol.costs + cp_penalty(d, T, c1, c2)
    k = int(np.argmin(crit))
    seg = sol.segmentations[k]
    return DetectionResult(
        segmentation=seg,
        means=segment_means(ytilde, seg, lam),
        lam=lam,
        cost_curve=sol.costs,
        selected_d=k + 1,
        path=sol.segmentations,
        diagnostics={"c1": c1, "c2": c2, "L": L, "criterion": crit.tolist()},
    )

