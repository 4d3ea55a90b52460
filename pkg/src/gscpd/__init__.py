"""Change-point detection in the mean of streams of graph signals.

The stream is moved to the graph spectral domain, standardised by its power
spectral density and segmented by exact dynamic programming; the number of
change-points and the spectral sparsity are chosen by penalised model
selection calibrated with the slope heuristic.
"""

__version__ = "0.1.0"

from .graph import (
    Graph,
    GraphSignalStream,
    ShiftOperator,
    SpectralBasis,
    build_laplacian,
    eigendecompose,
    gft,
    igft,
)
from .segmentation import DetectionResult, Segmentation, dp_segment, lasso_detector
from .selection import VarSelConfig, variable_selection_detector
from .spectral import Psd, estimate_psd_filterbank, estimate_psd_ml, standardize

__all__ = [
    "DetectionResult",
    "Graph",
    "GraphSignalStream",
    "Psd",
    "Segmentation",
    "ShiftOperator",
    "SpectralBasis",
    "VarSelConfig",
    "build_laplacian",
    "dp_segment",
    "eigendecompose",
    "estimate_psd_filterbank",
    "estimate_psd_ml",
    "gft",
    "igft",
    "lasso_detector",
    "standardize",
    "variable_selection_detector",
]
