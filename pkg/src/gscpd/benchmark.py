"""Multi-instance benchmark producing a table of mean (std) metrics per detector."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .metrics import METRICS, all_metrics
from .pipeline import DETECTORS, LABELS, DetectOptions, run_detector, scaled_options
from .synthetic import ScenarioConfig, gen_scenario

THREADS_ENV = "GSCPD_THREADS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class MetricsReport:
    scenario: str
    num_nodes: int
    n_instances: int
    base_seed: int
    margin: int
    summary: dict[str, dict[str, dict[str, float]]]
    instances: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "num_nodes": self.num_nodes,
            "n_instances": self.n_instances,
            "base_seed": self.base_seed,
            "margin": self.margin,
            "summary": self.summary,
            "instances": self.instances,
        }

    def mean(self, detector: str, metric: str) -> float:
        return self.summary[detector][metric]["mean"]

    def to_text(self) -> str:
        head = f"{'Detector':<30}" + "".join(f"{m.capitalize():>16}" for m in METRICS)
        lines = [f"Scenario {self.scenario} (p={self.num_nodes}, {self.n_instances} instances)", head, "-" * len(head)]
        for name, stats in self.summary.items():
            cells = "".join(f"{stats[m]['mean']:>9.2f} ({stats[m]['std']:.2f})" for m in METRICS)
            lines.append(f"{LABELS.get(name, name):<30}{cells}")
        return "\n".join(lines) + "\n"


def _one_instance(args) -> dict:
    cfg, detectors, opts, margin = args
    y, g, truth = gen_scenario(cfg)
    row = {"seed": cfg.seed, "T": truth.T, "truth": truth.interior, "results": {}}
    for name in detectors:
        method, psd_mode = DETECTORS[name]
        o = opts
        if psd_mode is not None:
            o = replace(opts, psd_mode=psd_mode, psd=truth.psd if psd_mode == "exact" else None)
        elif opts.psd_mode == "exact":
            o = replace(opts, psd=truth.psd)
        res = run_detector(method, y, g, o)
        pred = res.segmentation.interior
        row["results"][name] = {"pred": pred, **all_metrics(pred, truth.interior, truth.T, margin)}
    return row


def summarize(instances: list[dict], detectors) -> dict:
    out = {}
    for name in detectors:
        out[name] = {}
        for m in METRICS:
            vals = np.array([inst["results"][name][m] for inst in instances], dtype=float)
            out[name][m] = {"mean": float(vals.mean()), "std": float(vals.std())}
    return out


def run_benchmark(
    config: ScenarioConfig,
    detectors=("varsel",),
    n_instances: int = 50,
    opts: DetectOptions | None = None,
    margin: int = 10,
    workers: int | None = None,
    instance_fn: Callable | None = None,
) -> MetricsReport:
    """Run every detector on ``n_instances`` scenarios seeded ``config.seed + i``.

    ``opts`` defaults to :func:`scaled_options` for the configured graph
    size. ``instance_fn`` replaces the per-instance worker, mainly for stub
    detectors in tests.
    """
    for name in detectors:
        if name not in DETECTORS and instance_fn is None:
            raise ValueError(f"unknown detector {name!r}; choose from {', '.join(DETECTORS)}")
    opts = opts or scaled_options(config.num_nodes)
    jobs = [(replace(config, seed=config.seed + i), tuple(detectors), opts, margin) for i in range(n_instances)]
    fn = instance_fn or _one_instance
    workers = default_workers() if workers is None else workers
    if workers > 1 and n_instances > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            instances = list(pool.map(fn, jobs))
    else:
        instances = [fn(job) for job in jobs]
    return MetricsReport(
        config.scenario,
        config.num_nodes,
        n_instances,
        config.seed,
        margin,
        summarize(instances, detectors),
        instances,
    )
