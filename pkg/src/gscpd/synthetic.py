"""Synthetic streams of graph signals with planted mean changes.

Two scenarios:

* ``I``: Erdos-Renyi graph, filter ``1 / (log(theta + 10) + 1)``, a Poisson
  number of changes, means built from the low-frequency eigenvectors with a
  random subset of spectral coefficients redrawn at every change.
* ``II``: Barabasi-Albert graph, Gamma-density filter, four changes that
  move vertex-domain means, first around the main hub and later at the
  top hubs or at random nodes.

Noise is white Gaussian noise passed through the scenario filter, so it is
stationary on the graph Laplacian.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .graph import Graph, GraphSignalStream, build_laplacian, eigendecompose, write_edge_list
from .spectral import GraphFilter, apply_filter


class GenerationError(RuntimeError):
    pass


@dataclass
class ScenarioConfig:
    scenario: str = "I"
    num_nodes: int = 500
    seed: int = 0
    gap_mean: float = 20.0
    gap_floor: int = 30
    er_prob: float = 0.3
    ba_m: int = 4
    coef_range: float = 5.0
    cp_rate: float = 5.0
    # scenario I; None scales with num_nodes as p/5 and p/25 (100 and 20 at p=500)
    active_modes: int | None = None
    changed_coefs: int | None = None
    # scenario II
    initial_modes: int = 20
    random_nodes: int = 20
    top_hubs: int = 5

    def __post_init__(self):
        if self.scenario not in ("I", "II"):
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.num_nodes < 2:
            raise ValueError("num_nodes must be at least 2")
        if not 0 < self.er_prob < 1 and self.er_prob != 1:
            raise ValueError("er_prob must lie in (0, 1]")
        if self.scenario == "II" and self.num_nodes <= self.ba_m:
            raise ValueError("BA graphs need more nodes than the attachment count")
        if self.active_modes is None:
            self.active_modes = max(1, round(self.num_nodes / 5))
        if self.changed_coefs is None:
            self.changed_coefs = max(1, round(self.num_nodes / 25))


@dataclass
class GroundTruth:
    change_points: list[int]
    means: np.ndarray
    filter_response: np.ndarray
    seed: int
    extra: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return self.change_points[-1]

    @property
    def interior(self) -> list[int]:
        return self.change_points[:-1]

    @property
    def psd(self) -> np.ndarray:
        return self.filter_response**2


def _rngs(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _connected(p: int, edges: np.ndarray) -> bool:
    if p == 1:
        return True
    if len(edges) == 0:
        return False
    adj = csr_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(p, p))
    return connected_components(adj, directed=False)[0] == 1


def gen_er(p: int, prob: float, seed: int, max_tries: int = 100) -> Graph:
    """Connected Erdos-Renyi graph; redraws up to ``max_tries`` times."""
    iu, ju = np.triu_indices(p, k=1)
    for rng in _rngs(seed, max_tries):
        keep = rng.random(iu.shape[0]) < prob
        edges = np.column_stack([iu[keep], ju[keep]])
        if _connected(p, edges):
            return Graph(p, tuple(map(tuple, edges.tolist())))
    raise GenerationError(f"no connected G({p}, {prob}) graph in {max_tries} draws")


def gen_ba(p: int, m: int, seed: int) -> Graph:
    """Preferential attachment grown from an ``m``-node clique.

    Every new node links to ``m`` distinct existing nodes drawn with
    probability proportional to degree.
    """
    if m < 1 or p <= m:
        raise ValueError("need 1 <= m < p")
    rng = np.random.default_rng(seed)
    edges = [(u, v) for u in range(m) for v in range(u + 1, m)]
    deg = np.zeros(p)
    deg[:m] = m - 1
    for node in range(m, p):
        weights = deg[:node]
        total = weights.sum()
        probs = weights / total if total > 0 else None
        targets = rng.choice(node, size=m, replace=False, p=probs)
        for t in sorted(int(x) for x in targets):
            edges.append((t, node))
            deg[t] += 1
        deg[node] = m
    return Graph(p, tuple(edges))


def filter_shape(scenario: str, eigenvalues) -> np.ndarray:
    theta = np.asarray(eigenvalues, dtype=float)
    if scenario == "I":
        return 1.0 / (np.log(theta + 10.0) + 1.0)
    if scenario == "II":
        return stats.gamma.pdf(theta, a=20, scale=1 / 5)
    raise ValueError(f"unknown scenario {scenario!r}")


def scenario_filter(scenario: str, eigenvalues) -> GraphFilter:
    """Scenario response scaled to unit average power, ``sum h^2 / p = 1``."""
    h = filter_shape(scenario, eigenvalues)
    power = np.mean(h**2)
    if power <= 0:
        raise GenerationError("filter vanishes on the whole spectrum")
    return GraphFilter(h / np.sqrt(power))


def gen_changepoints(scenario: str, seed: int | np.random.Generator, cfg: ScenarioConfig | None = None):
    """Interior change-points and horizon ``T``.

    Scenario I draws a Poisson count (redrawn while zero); scenario II has
    four changes. Gaps are ``floor + round(Exp(mean))``, with one extra gap
    after the last change.
    """
    cfg = cfg or ScenarioConfig(scenario=scenario)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if scenario == "I":
        count = 0
        while count == 0:
            count = int(rng.poisson(cfg.cp_rate))
    elif scenario == "II":
        count = 4
    else:
        raise ValueError(f"unknown scenario {scenario!r}")
    gaps = cfg.gap_floor + np.rint(rng.exponential(cfg.gap_mean, size=count + 1)).astype(int)
    bounds = np.cumsum(gaps)
    return bounds[:-1].tolist(), int(bounds[-1])


def _hubs(g: Graph, k: int) -> list[int]:
    deg = g.degrees()
    order = np.lexsort((np.arange(g.num_nodes), -deg))
    return [int(i) for i in order[:k]]


def _scenario_means(cfg: ScenarioConfig, g: Graph, u: np.ndarray, n_segments: int, rng) -> tuple[np.ndarray, list]:
    p, r = cfg.num_nodes, cfg.coef_range
    touched: list[list[int]] = []
    if cfg.scenario == "I":
        active = min(cfg.active_modes, p)
        coefs = np.zeros(p)
        coefs[:active] = rng.uniform(-r, r, active)
        spectral = [coefs.copy()]
        for _ in range(n_segments - 1):
            idx = np.sort(rng.choice(active, size=min(cfg.changed_coefs, active), replace=False))
            coefs[idx] = rng.uniform(-r, r, idx.size)
            spectral.append(coefs.copy())
            touched.append(idx.tolist())
        return np.array(spectral) @ u.T, touched

    k0 = min(cfg.initial_modes, p)
    coefs = np.zeros(p)
    coefs[:k0] = rng.uniform(-r, r, k0)
    mean = u @ coefs
    rows = [mean.copy()]
    hub = _hubs(g, 1)[0]
    for j in range(n_segments - 1):
        if j == 0:
            nodes = sorted({hub, *g.neighbors(hub)})
        elif j == 1:
            nodes = sorted(_hubs(g, cfg.top_hubs))
        else:
            nodes = sorted(rng.choice(p, size=min(cfg.random_nodes, p), replace=False).tolist())
        mean[nodes] = rng.uniform(-r, r, len(nodes))
        rows.append(mean.copy())
        touched.append([int(x) for x in nodes])
    return np.array(rows), touched


def gen_scenario(cfg: ScenarioConfig) -> tuple[GraphSignalStream, Graph, GroundTruth]:
    g_rng, cp_rng, mean_rng, noise_rng = _rngs(cfg.seed, 4)
    graph_seed = int(g_rng.integers(2**31))
    if cfg.scenario == "I":
        g = gen_er(cfg.num_nodes, cfg.er_prob, graph_seed)
    else:
        g = gen_ba(cfg.num_nodes, cfg.ba_m, graph_seed)
    basis = eigendecompose(build_laplacian(g))
    filt = scenario_filter(cfg.scenario, basis.eigenvalues)

    interior, T = gen_changepoints(cfg.scenario, cp_rng, cfg)
    tau = interior + [T]
    seg_means, touched = _scenario_means(cfg, g, basis.eigenvectors, len(tau), mean_rng)
    lengths = np.diff([0] + tau)
    mu = np.repeat(seg_means, lengths, axis=0)

    white = GraphSignalStream(noise_rng.standard_normal((T, cfg.num_nodes)))
    noise = apply_filter(basis, filt, white).values
    y = GraphSignalStream(mu + noise)
    truth = GroundTruth(tau, seg_means, filt.response, cfg.seed, {"changed": touched})
    return y, g, truth


def write_matrix_csv(values: np.ndarray, path: str | Path) -> None:
    np.savetxt(path, values, fmt="%.10g", delimiter=",", newline="\n", encoding="utf-8")


def read_matrix_csv(path: str | Path) -> np.ndarray:
    """Header-free numeric CSV; errors carry the offending line number."""
    rows, width = [], None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                row = [float(x) for x in line.split(",")]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValueError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.array(rows)


def write_bundle(out: str | Path, cfg: ScenarioConfig, y: GraphSignalStream, g: Graph, truth: GroundTruth) -> dict:
    """Write signal, edge list, ground truth and manifest into ``out``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "signal": out / "signal.csv",
        "edges": out / "edges.txt",
        "truth": out / "truth.json",
        "manifest": out / "manifest.json",
    }
    write_matrix_csv(y.values, paths["signal"])
    write_edge_list(g, paths["edges"])
    _write_json(paths["truth"], {"change_points": truth.interior, "T": truth.T, "seed": truth.seed})
    _write_json(
        paths["manifest"],
        {
            "config": asdict(cfg),
            "T": truth.T,
            "num_nodes": g.num_nodes,
            "num_edges": len(g.edges),
            "files": {k: v.name for k, v in paths.items() if k != "manifest"},
            "filter_response": truth.filter_response.tolist(),
            "psd": truth.psd.tolist(),
        },
    )
    return {k: str(v) for k, v in paths.items()}


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8", newline="\n")
