"""Graph types and the graph Fourier transform built on the shift operator.

Everything here is real-valued: for a real symmetric shift operator the
conjugate transpose of the eigenvector matrix is its plain transpose, so
``gft`` is simply ``Y @ U`` applied row-wise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal

import numpy as np

Domain = Literal["vertex", "spectral"]


class NumericalError(RuntimeError):
    """Raised when a linear-algebra routine fails to converge."""


class DimensionError(ValueError):
    """Raised when array shapes do not agree."""


@dataclass(frozen=True)
class Graph:
    """Undirected graph on nodes ``0..num_nodes-1``.

    Edges are stored as sorted ``(u, v)`` pairs with ``u < v``; weights are
    aligned with ``edges`` and default to 1.
    """

    num_nodes: int
    edges: tuple[tuple[int, int], ...] = ()
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.num_nodes < 1:
            raise ValueError("num_nodes must be positive")
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes):
                raise ValueError(f"edge ({u}, {v}) out of range for {self.num_nodes} nodes")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
        if self.weights is not None:
            if len(self.weights) != len(self.edges):
                raise ValueError("weights must align with edges")
            if any(not w > 0 for w in self.weights):
                raise ValueError("edge weights must be positive")

    @classmethod
    def from_edges(cls, num_nodes: int, edges: Iterable, weights: Iterable | None = None) -> "Graph":
        pairs = [(int(min(u, v)), int(max(u, v))) for u, v in edges]
        w = None if weights is None else tuple(float(x) for x in weights)
        return cls(num_nodes, tuple(pairs), w)

    @property
    def edge_weights(self) -> np.ndarray:
        if self.weights is None:
            return np.ones(len(self.edges))
        return np.asarray(self.weights, dtype=float)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.num_nodes, self.num_nodes))
        if self.edges:
            idx = np.asarray(self.edges)
            w = self.edge_weights
            a[idx[:, 0], idx[:, 1]] = w
            a[idx[:, 1], idx[:, 0]] = w
        return a

    def degrees(self) -> np.ndarray:
        """Unweighted node degrees."""
        deg = np.zeros(self.num_nodes, dtype=int)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def neighbors(self, node: int) -> list[int]:
        return sorted({v for u, v in self.edges if u == node} | {u for u, v in self.edges if v == node})


@dataclass(frozen=True)
class ShiftOperator:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"shift operator must be square, got {m.shape}")
        if np.max(np.abs(m - m.T), initial=0.0) > 1e-12:
            raise ValueError("shift operator must be symmetric")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def num_nodes(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SpectralBasis:
    """Eigenpairs of a shift operator, eigenvalues ascending.

    Column ``i`` of ``eigenvectors`` is paired with ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        for name in ("eigenvalues", "eigenvectors"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        p = self.eigenvalues.shape[0]
        if self.eigenvectors.shape != (p, p):
            raise DimensionError("eigenvectors must be p x p")

    @property
    def num_nodes(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass(frozen=True)
class GraphSignalStream:
    """A ``T x p`` matrix of graph signals, one row per timestamp."""

    values: np.ndarray
    domain: Domain = "vertex"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2 or v.shape[0] < 1:
            raise DimensionError(f"stream must be a non-empty T x p matrix, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("stream contains non-finite entries")
        if self.domain not in ("vertex", "spectral"):
            raise ValueError(f"unknown domain {self.domain!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


def build_laplacian(g: Graph) -> ShiftOperator:
    """Combinatorial Laplacian ``L = D - W``."""
    w = g.adjacency()
    return ShiftOperator(np.diag(w.sum(axis=1)) - w)


def build_adjacency(g: Graph) -> ShiftOperator:
    return ShiftOperator(g.adjacency())


def build_shift_operator(g: Graph, kind: str = "laplacian") -> ShiftOperator:
    if kind == "laplacian":
        return build_laplacian(g)
    if kind == "adjacency":
        return build_adjacency(g)
    raise ValueError(f"unknown shift operator kind {kind!r}")


def eigendecompose(s: ShiftOperator) -> SpectralBasis:
    """Eigendecomposition with ascending eigenvalues and a fixed sign convention.

    Each eigenvector is flipped so that its first entry with magnitude above
    1e-12 is positive. With repeated eigenvalues the basis of the eigenspace
    is whatever LAPACK returns; only ordering and signs are normalised.
    """
    try:
        theta, u = np.linalg.eigh(s.matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(theta, kind="stable")
    theta, u = theta[order], u[:, order]
    nonzero = np.abs(u) > 1e-12
    first = np.argmax(nonzero, axis=0)
    signs = np.sign(u[first, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return SpectralBasis(theta, u * signs)


def _check_columns(b: SpectralBasis, y: GraphSignalStream, domain: Domain):
    if y.domain != domain:
        raise ValueError(f"expected a {domain}-domain stream, got {y.domain}")
    if y.p != b.num_nodes:
        raise DimensionError(f"stream has {y.p} columns but basis has {b.num_nodes} nodes")


def gft(b: SpectralBasis, y: GraphSignalStream) -> GraphSignalStream:
    """Graph Fourier transform ``Y U`` of a vertex-domain stream."""
    _check_columns(b, y, "vertex")
    return GraphSignalStream(y.values @ b.eigenvectors, "spectral")


def igft(b: SpectralBasis, y: GraphSignalStream) -> GraphSignalStream:
    _check_columns(b, y, "spectral")
    return GraphSignalStream(y.values @ b.eigenvectors.T, "vertex")


def read_edge_list(path: str | Path, num_nodes: int | None = None) -> Graph:
    """Parse an edge list: ``u v`` or ``u v w`` per line, ``#`` comments.

    When ``num_nodes`` is omitted it is inferred as ``max index + 1``; a
    ``# nodes: N`` header line written by :func:`write_edge_list` takes
    precedence over inference.
    """
    edges, weights, weighted = [], [], False
    header_nodes = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("nodes:"):
                    header_nodes = int(body.split(":", 1)[1])
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise ValueError(f"{path}:{lineno}: expected 'u v' or 'u v w', got {line!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            weighted |= len(parts) == 3
            edges.append((u, v))
            weights.append(w)
    if num_nodes is None:
        num_nodes = header_nodes
    if num_nodes is None:
        num_nodes = 1 + max((max(e) for e in edges), default=0)
    return Graph.from_edges(num_nodes, edges, weights if weighted else None)


def write_edge_list(g: Graph, path: str | Path) -> None:
    lines = [f"# nodes: {g.num_nodes}"]
    for (u, v), w in zip(g.edges, g.edge_weights):
        lines.append(f"{u} {v}" if g.weights is None else f"{u} {v} {w:.10g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
