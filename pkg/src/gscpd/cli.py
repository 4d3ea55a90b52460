"""Command-line interface: ``simulate``, ``detect``, ``evaluate``, ``benchmark``.

Exit status is 0 on success, 2 on usage errors and 1 on runtime errors.
Matrices are header-free CSV (``%.10g``); everything structured is JSON.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import __version__
from .benchmark import THREADS_ENV, run_benchmark
from .graph import GraphSignalStream, read_edge_list
from .metrics import all_metrics
from .pipeline import DETECTORS, METHODS, DetectOptions, result_to_json, run_detector, scaled_options
from .synthetic import ScenarioConfig, gen_scenario, read_matrix_csv, write_bundle

log = logging.getLogger("gscpd")


def _write_json(path: str | Path, obj) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8", newline="\n")


def _read_json(path: str | Path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _parse_lambdas(text: str | None):
    if text is None:
        return None
    return np.array([float(x) for x in text.split(",") if x.strip()])


def _load_psd(path: str) -> np.ndarray:
    obj = _read_json(path)
    if isinstance(obj, dict):
        if "psd" not in obj:
            raise ValueError(f"{path}: no 'psd' entry")
        obj = obj["psd"]
    return np.asarray(obj, dtype=float)


def _add_detect_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("detector options")
    g.add_argument("--psd-mode", choices=("exact", "ml", "filterbank"), default=None,
                   help="PSD source (default: ml; exact needs --psd)")
    g.add_argument("--w", type=int, default=None, help="warm-up window length")
    g.add_argument("--dmax", type=int, default=None, help="maximum number of segments")
    g.add_argument("--lambdas", default=None, help="comma-separated lambda grid")
    g.add_argument("--num-lambdas", type=int, default=30)
    g.add_argument("--num-filters", type=int, default=None)
    g.add_argument("--num-probes", type=int, default=10)
    g.add_argument("--filterbank-method", choices=("pooled", "interpolate", "nnls"), default="pooled")
    g.add_argument("--regression", choices=("huber", "lad", "ols"), default="huber")
    g.add_argument("--min-size", type=int, default=1)
    g.add_argument("--gso", choices=("laplacian", "adjacency"), default="laplacian")
    g.add_argument("--lam", type=float, default=None, help="lasso detector: penalty level")
    g.add_argument("--c1", type=float, default=None)
    g.add_argument("--c2", type=float, default=None)
    g.add_argument("--L", type=float, default=1.0)
    g.add_argument("--bandwidth", type=float, default=None, help="gaussian kernel bandwidth")


def _options(args, num_nodes: int, scaled: bool) -> DetectOptions:
    base = scaled_options(num_nodes) if scaled else DetectOptions()
    over = {
        "w": args.w,
        "dmax": args.dmax,
        "lambdas": _parse_lambdas(args.lambdas),
        "num_lambdas": args.num_lambdas,
        "num_probes": args.num_probes,
        "filterbank_method": args.filterbank_method,
        "regression": args.regression,
        "min_size": args.min_size,
        "gso": args.gso,
        "lam": args.lam,
        "c1": args.c1,
        "c2": args.c2,
        "L": args.L,
        "bandwidth": args.bandwidth,
        "seed": args.seed,
    }
    if args.psd_mode is not None:
        over["psd_mode"] = args.psd_mode
    if args.num_filters is not None:
        over["num_filters"] = args.num_filters
    for k, v in over.items():
        if v is not None:
            setattr(base, k, v)
    return base


def _options_json(opts: DetectOptions) -> dict:
    out = {}
    for f in fields(opts):
        v = getattr(opts, f.name)
        if f.name == "psd":
            v = None if v is None else "<provided>"
        elif isinstance(v, np.ndarray):
            v = v.tolist()
        out[f.name] = v
    return out


def cmd_simulate(args) -> int:
    cfg = ScenarioConfig(scenario=args.scenario, num_nodes=args.nodes, seed=args.seed)
    y, g, truth = gen_scenario(cfg)
    paths = write_bundle(args.out, cfg, y, g, truth)
    log.info("wrote %s", ", ".join(paths.values()))
    print(json.dumps({"T": truth.T, "change_points": truth.interior, "files": paths}))
    return 0


def cmd_detect(args) -> int:
    values = read_matrix_csv(args.signal)
    graph = read_edge_list(args.edges)
    if graph.num_nodes != values.shape[1]:
        raise ValueError(f"signal has {values.shape[1]} columns but the graph has {graph.num_nodes} nodes")
    y = GraphSignalStream(values)
    opts = _options(args, graph.num_nodes, scaled=False)
    if args.psd is not None:
        opts.psd = _load_psd(args.psd)
        if args.psd_mode is None:
            opts.psd_mode = "exact"
    if opts.psd_mode == "exact" and opts.psd is None:
        raise ValueError("--psd-mode exact needs --psd (a JSON list or a simulate manifest)")
    res = run_detector(args.method, y, graph, opts)
    out = result_to_json(res, y.T)
    out["method"] = args.method
    out["config"] = {"signal": str(args.signal), "edges": str(args.edges), **_options_json(opts)}
    _write_json(args.out, out)
    print(json.dumps({"change_points": out["change_points"], "d": out["d"]}))
    return 0


def _change_points(obj, T: int | None) -> list[int]:
    cps = obj["change_points"] if isinstance(obj, dict) else obj
    return [int(c) for c in cps if T is None or 0 < int(c) < T]


def cmd_evaluate(args) -> int:
    pred_obj, truth_obj = _read_json(args.pred), _read_json(args.truth)
    T = args.T
    for obj in (truth_obj, pred_obj):
        if T is None and isinstance(obj, dict) and "T" in obj:
            T = int(obj["T"])
    if T is None:
        raise ValueError("horizon T unknown: pass --T or include 'T' in a JSON file")
    pred, truth = _change_points(pred_obj, T), _change_points(truth_obj, T)
    metrics = all_metrics(pred, truth, T, args.margin)
    report = {"T": T, "margin": args.margin, "pred": pred, "truth": truth, **metrics}
    if args.out:
        _write_json(args.out, report)
    print(json.dumps(report))
    return 0


def cmd_benchmark(args) -> int:
    cfg = ScenarioConfig(scenario=args.scenario, num_nodes=args.nodes, seed=args.seed)
    # with --psd-mode exact the harness supplies each instance's true PSD
    opts = _options(args, args.nodes, scaled=True)
    detectors = [d.strip() for d in args.detectors.split(",") if d.strip()]
    report = run_benchmark(cfg, detectors, args.instances, opts, args.margin, args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = report.to_json()
    payload["config"] = {"scenario": asdict(cfg), "detectors": detectors, "options": _options_json(opts)}
    _write_json(out / "report.json", payload)
    (out / "report.txt").write_text(report.to_text(), encoding="utf-8", newline="\n")
    sys.stdout.write(report.to_text())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gscpd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic scenario bundle")
    p.add_argument("--scenario", choices=("I", "II"), default="I")
    p.add_argument("--nodes", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", help="detect change-points in a signal CSV")
    p.add_argument("--signal", required=True, help="T x p CSV, one row per timestamp")
    p.add_argument("--edges", required=True, help="edge list ('u v [w]' per line)")
    p.add_argument("--method", choices=METHODS, default="varsel")
    p.add_argument("--psd", default=None, help="JSON list or manifest with a 'psd' entry")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="result JSON path")
    _add_detect_options(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("evaluate", help="score predicted change-points against the truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--margin", type=int, default=10)
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="simulate, detect and evaluate over many instances")
    p.add_argument("--scenario", choices=("I", "II"), default="I")
    p.add_argument("--nodes", type=int, default=500)
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--seed", type=int, default=0, help="base seed; instance i uses seed + i")
    p.add_argument("--detectors", default="varsel,varsel-approx,kernel-linear,kernel-laplacian,kernel-gaussian",
                   help=f"comma-separated subset of: {', '.join(DETECTORS)}")
    p.add_argument("--margin", type=int, default=10)
    p.add_argument("--workers", type=int, default=None, help=f"worker processes (default ${THREADS_ENV} or 1)")
    p.add_argument("--out", required=True, help="output directory for report.json and report.txt")
    _add_detect_options(p)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"gscpd {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
