"""Named detectors behind one entry point, shared by the CLI and the benchmark."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .graph import Graph, GraphSignalStream, SpectralBasis, build_shift_operator, eigendecompose, gft
from .kernels import KernelSpec, kernel_detector
from .segmentation import DetectionResult, lasso_detector
from .selection import VarSelConfig, default_dmax, estimate_psd, variable_selection_detector
from .spectral import standardize

METHODS = ("varsel", "lasso", "kernel-linear", "kernel-laplacian", "kernel-gaussian")

# benchmark aliases: name -> (method, psd mode override)
DETECTORS = {
    "varsel": ("varsel", "exact"),
    "varsel-approx": ("varsel", "filterbank"),
    "varsel-ml": ("varsel", "ml"),
    "lasso": ("lasso", None),
    "kernel-linear": ("kernel-linear", None),
    "kernel-laplacian": ("kernel-laplacian", None),
    "kernel-gaussian": ("kernel-gaussian", None),
}

LABELS = {
    "varsel": "Variable Selection",
    "varsel-approx": "Approx. Variable Selection",
    "varsel-ml": "Variable Selection (ML PSD)",
    "lasso": "Lasso",
    "kernel-linear": "Linear",
    "kernel-laplacian": "Laplacian",
    "kernel-gaussian": "Gaussian",
}


@dataclass
class DetectOptions:
    psd_mode: str = "ml"
    psd: np.ndarray | None = None
    w: int | None = None
    dmax: int | None = None
    lambdas: np.ndarray | None = None
    num_lambdas: int = 30
    num_filters: int = 300
    num_probes: int = 10
    filterbank_method: str = "pooled"
    seed: int | None = 0
    gso: str = "laplacian"
    regression: str = "huber"
    cutoff: object = "auto"
    min_size: int = 1
    # lasso detector overrides
    lam: float | None = None
    c1: float | None = None
    c2: float | None = None
    L: float = 1.0
    bandwidth: float | None = None

    def varsel_config(self) -> VarSelConfig:
        return VarSelConfig(
            lambdas=self.lambdas,
            num_lambdas=self.num_lambdas,
            dmax=self.dmax,
            w=self.w,
            psd_mode=self.psd_mode,
            psd=self.psd,
            num_filters=self.num_filters,
            num_probes=self.num_probes,
            filterbank_method=self.filterbank_method,
            seed=self.seed,
            gso=self.gso,
            regression=self.regression,
            cutoff=self.cutoff,
            min_size=self.min_size,
        )


def scaled_options(num_nodes: int, **overrides) -> DetectOptions:
    """Options scaled to the graph size: ``w = ceil(p/10)``, ``M = ceil(0.6 p)``.

    At 500 nodes this gives the reference warm-up of 50 and 300 filters.
    """
    base = DetectOptions(w=math.ceil(num_nodes / 10), num_filters=max(2, math.ceil(0.6 * num_nodes)))
    return replace(base, **overrides)


def run_detector(
    method: str, y: GraphSignalStream, graph: Graph | SpectralBasis, opts: DetectOptions | None = None
) -> DetectionResult:
    opts = opts or DetectOptions()
    if method == "varsel":
        return variable_selection_detector(y, graph, opts.varsel_config())
    if method == "lasso":
        basis = graph if isinstance(graph, SpectralBasis) else eigendecompose(build_shift_operator(graph, opts.gso))
        ytilde = gft(basis, y)
        cfg = opts.varsel_config()
        psd = estimate_psd(y, basis, ytilde, cfg)
        dmax = default_dmax(y.T) if opts.dmax is None else opts.dmax
        res = lasso_detector(standardize(ytilde, psd), opts.lam, opts.c1, opts.c2, dmax, opts.L, opts.min_size)
        res.diagnostics["psd_mode"] = opts.psd_mode
        return res
    if method.startswith("kernel-"):
        kind = method.split("-", 1)[1]
        s = None
        if kind == "laplacian":
            if not isinstance(graph, Graph):
                raise ValueError("the laplacian kernel needs the graph")
            s = build_shift_operator(graph, opts.gso)
        return kernel_detector(
            y, KernelSpec(kind, opts.bandwidth), opts.dmax, s, opts.regression, opts.cutoff, opts.min_size
        )
    raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def result_to_json(res: DetectionResult, T: int) -> dict:
    """Serialisable form of a detection result; ``means_sparse`` only when means exist."""
    out = {
        "change_points": res.change_points,
        "d": res.selected_d,
        "T": T,
        "lambda": res.lam,
        "cost_curve": [None if not np.isfinite(c) else float(c) for c in res.cost_curve],
        "constants": {k: v for k, v in res.diagnostics.items() if k != "psd"},
    }
    if res.means is not None:
        rows, cols = np.nonzero(res.means)
        out["means_sparse"] = [
            {"segment": int(r), "freq": int(c), "value": float(res.means[r, c])} for r, c in zip(rows, cols)
        ]
    return out
