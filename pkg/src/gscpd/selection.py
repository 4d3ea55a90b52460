"""Variable-selection detector: support path, restricted DP sweep, slope heuristic."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import statsmodels.api as sm

from .graph import Graph, GraphSignalStream, SpectralBasis, build_shift_operator, eigendecompose, gft
from .segmentation import (
    DetectionResult,
    PrefixTable,
    Segmentation,
    SegmentationError,
    dp_segment,
    segment_means,
)
from .spectral import Psd, estimate_psd_filterbank, estimate_psd_ml, standardize


class CalibrationError(ValueError):
    """Not enough high-complexity models to fit the slope heuristic."""


def lasso_support(ytilde: GraphSignalStream, lam: float) -> tuple[np.ndarray, int]:
    """Frequencies kept by the entrywise Lasso at level ``lam``.

    The objective is separable; entry ``(t, i)`` survives when
    ``|y_t(i)| > lam * T / 2``. Returns a boolean mask and its size.
    """
    y = ytilde.values
    support = np.max(np.abs(y), axis=0) > lam * y.shape[0] / 2
    return support, int(support.sum())


def lse_segment_cost(a: int, b: int, support, prefix: PrefixTable) -> float:
    """Least-squares cost of ``(a, b]`` with means free on ``support`` and zero elsewhere."""
    if not 0 <= a < b <= prefix.T:
        raise SegmentationError(f"invalid segment ({a}, {b}]")
    s1, s2, n = prefix.sums(a, b)
    mask = np.asarray(support, dtype=bool)
    resid = s2.copy()
    resid[mask] = np.maximum(s2[mask] - s1[mask] ** 2 / n, 0.0)
    return float(resid.sum() / prefix.T)


def lse_cost_matrices(y: np.ndarray, supports: np.ndarray) -> np.ndarray:
    """Segment-cost matrices for several supports at once.

    ``supports`` is ``k x p`` boolean; returns ``k x (T+1) x (T+1)`` with
    ``inf`` below the diagonal.
    """
    T, p = y.shape
    sel = np.asarray(supports, dtype=float).T  # p x k
    out = np.full((sel.shape[1], T + 1, T + 1), np.inf)
    for a in range(T):
        tail = y[a:]
        n = np.arange(1, T - a + 1, dtype=float)[:, None]
        s1 = np.cumsum(tail, axis=0)
        s2 = np.cumsum(tail**2, axis=0)
        # per-frequency residuals are clipped at 0 before summing
        resid_free = np.maximum(s2 - s1**2 / n, 0.0) @ sel
        resid_zero = s2 @ (1.0 - sel)
        out[:, a, a + 1 :] = ((resid_free + resid_zero) / T).T
    return out


def default_lambda_grid(ytilde: GraphSignalStream, num: int = 30, ratio: float = 1000.0) -> np.ndarray:
    """Log-spaced grid from the empty-support level down by ``ratio``."""
    lam_max = 2 * float(np.max(np.abs(ytilde.values))) / ytilde.T
    if lam_max == 0:
        return np.zeros(1)
    return np.geomspace(lam_max / ratio, lam_max, num)


@dataclass
class ModelGrid:
    """Exact DP solutions over ``lambdas x {1..dmax}``.

    ``costs[j, d-1]`` is the restricted least-squares cost for the support at
    ``lambdas[j]``; ``support_id[j]`` points into ``supports`` so that equal
    supports share one DP solve.
    """

    T: int
    lambdas: np.ndarray
    dims: np.ndarray
    costs: np.ndarray
    supports: np.ndarray
    support_id: np.ndarray
    segmentations: list[list[Segmentation | None]]

    @property
    def dmax(self) -> int:
        return self.costs.shape[1]

    def features(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Penalty features for every cell, shaped like ``costs``."""
        d = np.arange(1, self.dmax + 1, dtype=float)[None, :]
        dm = self.dims.astype(float)[:, None]
        shape = self.costs.shape
        T = self.T
        return (
            np.broadcast_to(dm / T, shape),
            np.broadcast_to(d / T, shape),
            np.broadcast_to(d / T * np.log(T / d), shape),
        )


def sweep(ytilde: GraphSignalStream, lambdas, dmax: int, min_size: int = 1) -> ModelGrid:
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=float))
    if lambdas.size == 0:
        raise ValueError("lambda grid is empty")
    T = ytilde.T
    if dmax > T:
        raise SegmentationError(f"dmax={dmax} exceeds T={T}")

    masks, dims = [], []
    for lam in lambdas:
        mask, dm = lasso_support(ytilde, lam)
        masks.append(mask)
        dims.append(dm)
    unique: dict[bytes, int] = {}
    support_id = np.empty(len(masks), dtype=int)
    for j, mask in enumerate(masks):
        support_id[j] = unique.setdefault(mask.tobytes(), len(unique))
    supports = np.array([masks[list(support_id).index(k)] for k in range(len(unique))])

    matrices = lse_cost_matrices(ytilde.values, supports)
    solutions = [dp_segment(m, T, dmax, min_size) for m in matrices]
    costs = np.array([solutions[k].costs for k in support_id])
    segs = [solutions[k].segmentations for k in support_id]
    return ModelGrid(T, lambdas, np.array(dims), costs, supports, support_id, segs)


@dataclass(frozen=True)
class SlopeFit:
    constants: tuple[float, ...]
    coefficients: tuple[float, ...]
    intercept: float
    cutoff: float
    num_models: int
    method: str


def _robust_fit(x: np.ndarray, yv: np.ndarray, method: str) -> np.ndarray:
    design = np.column_stack([np.ones(len(yv)), x])
    if np.ptp(yv) == 0:
        return np.concatenate([[yv[0]], np.zeros(x.shape[1])])
    ols, *_ = np.linalg.lstsq(design, yv, rcond=None)
    resid = yv - design @ ols
    if np.max(np.abs(resid)) <= 1e-12 * (1.0 + np.max(np.abs(yv))):
        # exact fit: the MAD scale is zero and robust weights are undefined
        return ols
    if method == "huber":
        res = sm.RLM(yv, design, M=sm.robust.norms.HuberT(t=1.345)).fit(scale_est="mad")
    elif method == "lad":
        res = sm.QuantReg(yv, design).fit(q=0.5)
    elif method == "ols":
        return ols
    else:
        raise ValueError(f"unknown regression method {method!r}")
    return np.asarray(res.params)


def fit_slope(costs, features, d, T: int, method: str = "huber", cutoff="auto", min_models: int = 4) -> SlopeFit:
    """Slope heuristic on flat arrays of model costs and penalty features.

    Models with ``d`` above the complexity cutoff are deduplicated, the cost
    is robustly regressed on the features with an intercept, and each
    constant is ``-2`` times its slope, clamped at zero. Features that are
    constant over the retained models are not identifiable and get a zero
    constant.

    ``cutoff`` is a number, ``"strict"`` for ``0.6 T / log T``, or ``"auto"``
    which uses ``0.6 T / log T`` when at least three distinct ``d`` values lie
    above it and ``0.6 * max(d)`` otherwise.
    """
    costs = np.asarray(costs, dtype=float).ravel()
    features = np.column_stack([np.asarray(f, dtype=float).ravel() for f in features])
    d = np.asarray(d, dtype=float).ravel()
    finite = np.isfinite(costs)
    costs, features, d = costs[finite], features[finite], d[finite]

    base_cut = 0.6 * T / math.log(T)
    if cutoff == "strict":
        cut = base_cut
    elif cutoff == "auto":
        cut = base_cut if np.unique(d[d > base_cut]).size >= 3 else 0.6 * d.max(initial=0.0)
    else:
        cut = float(cutoff)

    keep = d > cut
    rows = np.unique(np.column_stack([features[keep], costs[keep]]), axis=0)
    if rows.shape[0] < min_models:
        raise CalibrationError(
            f"only {rows.shape[0]} distinct models with d > {cut:.2f}; "
            f"the slope heuristic needs {min_models}, increase dmax"
        )
    x, yv = rows[:, :-1], rows[:, -1]
    active = np.ptp(x, axis=0) > 1e-12
    coef = np.zeros(x.shape[1])
    params = _robust_fit(x[:, active], yv, method)
    coef[active] = params[1:]
    consts = tuple(float(max(-2.0 * c, 0.0)) for c in coef)
    return SlopeFit(consts, tuple(float(c) for c in coef), float(params[0]), cut, rows.shape[0], method)


def slope_heuristic(grid: ModelGrid, T: int | None = None, method: str = "huber", cutoff="auto") -> SlopeFit:
    """Calibrate ``(K1, K2, K3)`` from the high-complexity part of ``grid``."""
    T = grid.T if T is None else T
    d = np.broadcast_to(np.arange(1, grid.dmax + 1)[None, :], grid.costs.shape)
    return fit_slope(grid.costs, grid.features(), d, T, method, cutoff)


@dataclass(frozen=True)
class Selection:
    lam: float
    d: int
    dim: int
    segmentation: Segmentation
    criterion: float


def select_model(grid: ModelGrid, K1: float, K2: float, K3: float) -> Selection:
    """Penalised argmin over the grid.

    Exact ties go to the smaller ``d``, then the smaller support, then the
    smaller ``lambda``, so the result does not depend on grid order.
    """
    if grid.costs.size == 0:
        raise ValueError("empty model grid")
    f1, f2, f3 = grid.features()
    crit = grid.costs + K1 * f1 + K2 * f2 + K3 * f3
    best = np.min(crit)
    if not np.isfinite(best):
        raise ValueError("no feasible model in grid")
    js, ks = np.nonzero(crit == best)
    order = np.lexsort((grid.lambdas[js], grid.dims[js], ks))
    j, k = int(js[order[0]]), int(ks[order[0]])
    return Selection(float(grid.lambdas[j]), k + 1, int(grid.dims[j]), grid.segmentations[j][k], float(best))


@dataclass
class VarSelConfig:
    """Settings for :func:`variable_selection_detector`.

    ``w=None`` uses ``min(50, T)``; ``dmax=None`` uses ``ceil(T / log T)``
    (capped at ``T``), which leaves room above the slope-heuristic cutoff.
    """

    lambdas: np.ndarray | None = None
    num_lambdas: int = 30
    lambda_ratio: float = 1000.0
    dmax: int | None = None
    w: int | None = None
    psd_mode: str = "ml"
    psd: np.ndarray | None = None
    num_filters: int = 300
    num_probes: int = 10
    filterbank_method: str = "pooled"
    seed: int | None = 0
    gso: str = "laplacian"
    regression: str = "huber"
    cutoff: object = "auto"
    min_size: int = 1
    extra: dict = field(default_factory=dict)


def default_dmax(T: int) -> int:
    return max(1, min(T, math.ceil(T / math.log(T)))) if T > 1 else 1


def spectral_basis_for(graph: Graph | SpectralBasis, gso: str = "laplacian") -> SpectralBasis:
    if isinstance(graph, SpectralBasis):
        return graph
    return eigendecompose(build_shift_operator(graph, gso))


def estimate_psd(y: GraphSignalStream, basis: SpectralBasis, ytilde: GraphSignalStream, cfg: VarSelConfig) -> Psd:
    w = min(50, y.T) if cfg.w is None else cfg.w
    if cfg.psd_mode == "exact":
        if cfg.psd is None:
            raise ValueError("psd_mode='exact' needs the true PSD")
        return Psd.floored(cfg.psd)
    if cfg.psd_mode == "ml":
        return estimate_psd_ml(ytilde, w)
    if cfg.psd_mode == "filterbank":
        return estimate_psd_filterbank(
            basis, y, w, cfg.num_filters, cfg.num_probes, cfg.seed, cfg.filterbank_method
        )
    raise ValueError(f"unknown psd mode {cfg.psd_mode!r}")


def variable_selection_detector(
    y: GraphSignalStream, graph: Graph | SpectralBasis, config: VarSelConfig | None = None
) -> DetectionResult:
    """End-to-end detector on a vertex-domain stream.

    GFT, PSD estimate, standardisation, support sweep with exact DP, slope
    heuristic, penalised selection; segment means are the soft-thresholded
    spectral means at the selected ``lambda`` and PSD.
    """
    cfg = config or VarSelConfig()
    basis = spectral_basis_for(graph, cfg.gso)
    ytilde = gft(basis, y)
    psd = estimate_psd(y, basis, ytilde, cfg)
    ystd = standardize(ytilde, psd)

    T = y.T
    dmax = default_dmax(T) if cfg.dmax is None else cfg.dmax
    lambdas = default_lambda_grid(ystd, cfg.num_lambdas, cfg.lambda_ratio) if cfg.lambdas is None else cfg.lambdas
    grid = sweep(ystd, lambdas, dmax, cfg.min_size)
    fit = slope_heuristic(grid, T, cfg.regression, cfg.cutoff)
    sel = select_model(grid, *fit.constants)
    means = segment_means(ytilde, sel.segmentation, sel.lam, psd)

    j = int(np.flatnonzero(grid.lambdas == sel.lam)[0])
    return DetectionResult(
        segmentation=sel.segmentation,
        means=means,
        lam=sel.lam,
        cost_curve=grid.costs[j].copy(),
        selected_d=sel.d,
        path=grid.segmentations[j],
        diagnostics={
            "K1": fit.constants[0],
            "K2": fit.constants[1],
            "K3": fit.constants[2],
            "support_size": sel.dim,
            "slope_cutoff": fit.cutoff,
            "slope_models": fit.num_models,
            "regression": fit.method,
            "psd_mode": cfg.psd_mode,
            "psd_condition": psd.condition,
            "dmax": dmax,
            "num_lambdas": int(len(grid.lambdas)),
            "psd": psd.values.tolist(),
        },
    )
