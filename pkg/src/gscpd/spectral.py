"""Estimating the graph power spectral density and standardising by it."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .graph import DimensionError, GraphSignalStream, SpectralBasis, gft

FLOOR_RATIO = 1e-8


class PsdEstimationError(ValueError):
    pass


@dataclass(frozen=True)
class Psd:
    """Per-frequency variances, floored at ``FLOOR_RATIO * max``.

    ``condition`` is only set by the filter-bank estimator and holds the
    2-norm condition number of its design matrix.
    """

    values: np.ndarray
    condition: float | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1:
            raise DimensionError("psd must be a vector")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("psd entries must be finite and nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def floored(cls, raw, condition: float | None = None, floor: float | None = None) -> "Psd":
        raw = np.clip(np.asarray(raw, dtype=float), 0.0, None)
        if floor is None:
            top = raw.max() if raw.size else 0.0
            # all-zero input: fall back to an absolute floor so the PSD stays positive
            floor = FLOOR_RATIO * top if top > 0 else FLOOR_RATIO
        return cls(np.maximum(raw, floor), condition)

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class GraphFilter:
    response: np.ndarray

    def __post_init__(self):
        h = np.array(self.response, dtype=float)
        if not np.all(np.isfinite(h)):
            raise ValueError("filter response must be finite")
        h.setflags(write=False)
        object.__setattr__(self, "response", h)


def estimate_psd_ml(ytilde: GraphSignalStream, w: int) -> Psd:
    """Per-frequency sample variance (divisor ``w``) over the first ``w`` rows."""
    if ytilde.domain != "spectral":
        raise ValueError("expected a spectral-domain stream")
    if w < 2:
        raise PsdEstimationError("warm-up window must hold at least 2 observations")
    if w > ytilde.T:
        raise PsdEstimationError(f"warm-up window {w} exceeds stream length {ytilde.T}")
    head = ytilde.values[:w]
    return Psd.floored(np.mean((head - head.mean(axis=0)) ** 2, axis=0))


def gaussian_filter_bank(eigenvalues: np.ndarray, m: int) -> np.ndarray:
    """``m x p`` matrix of Gaussian band-pass gains evaluated at the eigenvalues.

    Centres are spread uniformly over the spectrum and the common width is
    ``(theta_max - theta_min) / m``.
    """
    lo, hi = float(eigenvalues.min()), float(eigenvalues.max())
    width = (hi - lo) / m
    if width <= 0:
        # single-point spectrum: one flat band
        return np.ones((m, eigenvalues.shape[0]))
    centres = np.linspace(lo, hi, m)
    return np.exp(-((eigenvalues[None, :] - centres[:, None]) ** 2) / (2 * width**2))


def estimate_psd_filterbank(
    b: SpectralBasis,
    y: GraphSignalStream,
    w: int,
    num_filters: int = 300,
    num_probes: int = 10,
    seed: int | None = 0,
    method: str = "pooled",
    cond_limit: float = 1e12,
) -> Psd:
    """Filter-bank PSD estimate from the first ``w`` vertex-domain observations.

    For Gaussian band-pass filter ``g_m`` the mean filtered energy of the
    centred warm-up rows estimates ``sum_i g_m(theta_i)^2 P(i)``. Filtered
    white noise (``num_probes`` signals per filter, drawn in filter order)
    estimates the matching per-frequency gains ``g_m(theta_i)^2``.

    ``method="pooled"`` estimates ``P(i)`` as the ratio of signal energy to
    noise energy summed over all filters, each weighted by its squared gain
    at ``theta_i``. Because every filter has its own probes, pooling averages
    the probe noise. ``method="interpolate"`` takes that ratio filter by
    filter, which estimates the PSD at the filter centre, and linearly
    interpolates the samples at the eigenvalues. ``method="nnls"`` solves the
    ``M x p`` system for ``P`` by nonnegative least squares. It is exact on
    noise-free systems but gives sparse, partly zero, estimates from noisy
    ones.

    Probe noise dominates the error when filters are narrower than the gaps
    between eigenvalues; the relative error per frequency then shrinks like
    ``1 / sqrt(num_probes)``.

    The 2-norm condition number of the gain matrix is kept on the result; a
    rank-deficient or badly conditioned system emits a ``RuntimeWarning`` in
    NNLS mode.
    """
    if y.domain != "vertex":
        raise ValueError("expected a vertex-domain stream")
    if w < 2:
        raise PsdEstimationError("warm-up window must hold at least 2 observations")
    if w > y.T:
        raise PsdEstimationError(f"warm-up window {w} exceeds stream length {y.T}")
    if num_filters < 2 or num_probes < 1:
        raise PsdEstimationError("need at least 2 filters and 1 noise probe")
    if y.p != b.num_nodes:
        raise DimensionError("stream and basis disagree on the number of nodes")

    gains = gaussian_filter_bank(b.eigenvalues, num_filters)
    head = y.values[:w]
    centred = GraphSignalStream(head - head.mean(axis=0))
    # ||g(L) y||^2 = sum_i g(theta_i)^2 yhat_i^2, evaluated in the spectral domain
    spec_power = np.mean(gft(b, centred).values ** 2, axis=0)
    energies = gains**2 @ spec_power

    # U^T w is white whenever w is, so probes are drawn directly in the spectral
    # domain; this keeps the estimate independent of the node labelling
    rng = np.random.default_rng(seed)
    design = np.empty_like(gains)
    for m in range(num_filters):
        probes = rng.standard_normal((num_probes, b.num_nodes))
        design[m] = np.mean((probes * gains[m]) ** 2, axis=0)

    sv = np.linalg.svd(design, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")

    if method == "pooled":
        # each frequency pools every filter, weighted by that filter's gain there
        num = gains.T**2 @ energies
        den = gains.T**2 @ design.sum(axis=1)
        est = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        return Psd.floored(est, condition=cond)
    if method == "interpolate":
        norms = design.sum(axis=1)
        ok = norms > 1e-12 * norms.max()
        if not np.any(ok):
            raise PsdEstimationError("every filter vanishes on the spectrum")
        lo, hi = float(b.eigenvalues.min()), float(b.eigenvalues.max())
        centres = np.linspace(lo, hi, num_filters)
        est = np.interp(b.eigenvalues, centres[ok], energies[ok] / norms[ok])
        return Psd.floored(est, condition=cond)
    if method != "nnls":
        raise ValueError(f"unknown filter-bank method {method!r}")

    if design.shape[0] < design.shape[1] or cond > cond_limit:
        warnings.warn(
            f"filter-bank system is ill-conditioned (cond={cond:.3g}, "
            f"{design.shape[0]} filters for {design.shape[1]} frequencies)",
            RuntimeWarning,
            stacklevel=2,
        )
    # column scaling keeps NNLS well behaved when gains span many decades
    scale = np.linalg.norm(design, axis=0)
    scale[scale == 0] = 1.0
    sol, _ = nnls(design / scale, energies, maxiter=50 * design.shape[1])
    return Psd.floored(sol / scale, condition=cond)


def solve_psd_system(gains_sq: np.ndarray, energies: np.ndarray) -> np.ndarray:
    """NNLS solution of ``gains_sq @ P = energies`` with no probing noise."""
    sol, _ = nnls(np.asarray(gains_sq, dtype=float), np.asarray(energies, dtype=float))
    return sol


def standardize(ytilde: GraphSignalStream, psd: Psd) -> GraphSignalStream:
    """Divide each spectral column by the square root of its PSD entry."""
    if ytilde.domain != "spectral":
        raise ValueError("expected a spectral-domain stream")
    if len(psd) != ytilde.p:
        raise DimensionError(f"psd has {len(psd)} entries for {ytilde.p} frequencies")
    return GraphSignalStream(ytilde.values / np.sqrt(psd.values), "spectral")


def apply_filter(b: SpectralBasis, f: GraphFilter, y: GraphSignalStream) -> GraphSignalStream:
    """Vertex-domain filtering ``z_t = U diag(h) U^T y_t``."""
    if y.domain != "vertex":
        raise ValueError("expected a vertex-domain stream")
    if f.response.shape != (b.num_nodes,) or y.p != b.num_nodes:
        raise DimensionError("filter length or stream width does not match the basis")
    u = b.eigenvectors
    return GraphSignalStream(((y.values @ u) * f.response) @ u.T, "vertex")
