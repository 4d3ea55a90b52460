"""Kernel change-point baselines: Gram matrices, kernel segment costs, slope-calibrated DP."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .graph import GraphSignalStream, ShiftOperator
from .segmentation import DetectionResult, SegmentationError, dp_segment
from .selection import default_dmax, fit_slope

KERNELS = ("linear", "laplacian", "gaussian")


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "linear"
    bandwidth: float | None = None

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")


def median_heuristic(y: np.ndarray) -> float:
    """Half the median pairwise squared distance between rows."""
    if y.shape[0] < 2:
        return 1.0
    return float(np.median(pdist(y, "sqeuclidean")) / 2)


def gram(y: GraphSignalStream | np.ndarray, spec: KernelSpec, s: ShiftOperator | None = None) -> np.ndarray:
    """``T x T`` Gram matrix between the rows of ``y``.

    ``laplacian`` uses ``k(x, y) = x^T S y`` and needs the shift operator;
    ``gaussian`` uses ``exp(-|x - y|^2 / (2h))`` with ``h`` from the median
    heuristic unless fixed.
    """
    v = y.values if isinstance(y, GraphSignalStream) else np.asarray(y, dtype=float)
    if spec.kind == "linear":
        k = v @ v.T
    elif spec.kind == "laplacian":
        if s is None:
            raise ValueError("the laplacian kernel needs a shift operator")
        k = v @ s.matrix @ v.T
    else:
        h = spec.bandwidth if spec.bandwidth is not None else median_heuristic(v)
        if h <= 0:
            # all rows identical: any bandwidth gives the all-ones matrix
            h = 1.0
        k = np.exp(-squareform(pdist(v, "sqeuclidean")) / (2 * h))
    return (k + k.T) / 2


def kernel_segment_cost(a: int, b: int, k: np.ndarray) -> float:
    """``sum_t k(y_t, y_t) - (1/n) sum_{s,t} k(y_s, y_t)`` over segment ``(a, b]``."""
    if not 0 <= a < b <= k.shape[0]:
        raise SegmentationError(f"invalid segment ({a}, {b}]")
    block = k[a:b, a:b]
    return float(np.trace(block) - block.sum() / (b - a))


def kernel_cost_matrix(k: np.ndarray) -> np.ndarray:
    """Unnormalised kernel costs for all segments, built from row-cumulative sums."""
    T = k.shape[0]
    out = np.full((T + 1, T + 1), np.inf)
    diag = np.diag(k)
    for a in range(T):
        block = k[a:, a:]
        colcum = np.cumsum(block, axis=0)
        # growing the segment by row n adds 2 * sum_{s<n} k[s, n] + k[n, n]
        inner = np.cumsum(2 * np.diag(colcum) - np.diag(block))
        n = np.arange(1, T - a + 1)
        out[a, a + 1 :] = np.cumsum(diag[a:]) - inner / n
    return out


def kernel_detector(
    y: GraphSignalStream,
    spec: KernelSpec,
    dmax: int | None = None,
    s: ShiftOperator | None = None,
    regression: str = "huber",
    cutoff="auto",
    min_size: int = 1,
) -> DetectionResult:
    """DP over kernel costs (divided by ``T``) with slope-heuristic penalty.

    Only ``d/T`` and ``(d/T) log(T/d)`` are calibrated; no segment means are
    produced.
    """
    T = y.T
    dmax = default_dmax(T) if dmax is None else dmax
    if dmax > T:
        raise SegmentationError(f"dmax={dmax} exceeds T={T}")
    costs = kernel_cost_matrix(gram(y, spec, s)) / T
    sol = dp_segment(costs, T, dmax, min_size)
    d = np.arange(1, dmax + 1, dtype=float)
    f2, f3 = d / T, d / T * np.log(T / d)

    if dmax == 1:
        k2 = k3 = 0.0
        fit = None
    else:
        fit = fit_slope(sol.costs, (f2, f3), d, T, regression, cutoff)
        k2, k3 = fit.constants
    crit = sol.costs + k2 * f2 + k3 * f3
    k = int(np.argmin(crit))
    return DetectionResult(
        segmentation=sol.segmentations[k],
        means=None,
        lam=None,
        cost_curve=sol.costs,
        selected_d=k + 1,
        path=sol.segmentations,
        diagnostics={
            "kernel": spec.kind,
            "K2": k2,
            "K3": k3,
            "slope_cutoff": None if fit is None else fit.cutoff,
            "dmax": dmax,
        },
    )
