"""Command-line entry point: simulate, fit, eval, benchmark.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 data error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig
from .evaluation import aggregate, report, reports_csv
from .events import StreamError, ingest_stream, load_stopwords, write_stream
from .generator import generate, make_scenario
from .smc import fit_sequence

log = logging.getLogger("dhstream")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

VARIANTS = {
    "full": {},
    "vendor-ablated": {"use_vendor": False},
    "content-only": {"use_vendor": False, "use_time": False},
}


class NumericalError(RuntimeError):
    pass


def _dump_json(obj, path: Path):
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config)
    seed = getattr(args, "seed", None)
    if seed is not None:
        cfg = cfg.override("smc", seed=seed).override("generator", seed=seed)
    if getattr(args, "particles", None) is not None:
        cfg = cfg.override("smc", num_particles=args.particles)
    ablate = {}
    if getattr(args, "ablate_vendor", False):
        ablate["use_vendor"] = False
    if getattr(args, "ablate_content", False):
        ablate["use_content"] = False
    if getattr(args, "ablate_time", False):
        ablate["use_time"] = False
    if ablate:
        cfg = cfg.override("smc", **ablate)
    return cfg


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    if args.scenario is not None:
        cfg = cfg.override("generator", scenario=args.scenario)
    if args.events is not None:
        if args.events < 1:
            raise ConfigError(["invalid value for 'generator.num_events': must be >= 1"])
        cfg = cfg.override("generator", num_events=args.events)
    sim = generate(cfg.generator())
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_stream(sim.stream, out)
    sidecar = Path(args.sidecar) if args.sidecar else out.with_suffix(".truth.json")
    sim.write_sidecar(sidecar)
    log.info("wrote %d events from %d sources to %s", len(sim.stream), len(sim.truth), out)
    return EXIT_OK


def _ingest(cfg: RunConfig, path):
    stop = cfg.data["input"]["stopwords"]
    stopwords = load_stopwords(stop) if stop else frozenset()
    stream, _, _ = ingest_stream(path, cfg.data["input"]["origin"], stopwords)
    return stream


def cmd_fit(args) -> int:
    cfg = _load_config(args)
    stream = _ingest(cfg, args.stream)
    if len(stream) == 0:
        raise StreamError(f"{args.stream}: no events")
    result = fit_sequence(stream, **cfg.fit_kwargs())
    if not math.isfinite(result.log_weight):
        raise NumericalError("particle weight is not finite")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(result.to_dict(), out / "labels.json")
    result.write_trace_csv(out / "intensity_trace.csv")
    log.info("%d events -> %d clusters; wrote %s", len(stream), result.num_clusters, out)
    return EXIT_OK


def _read_labels(path) -> list[int]:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise StreamError(f"{path}: invalid JSON ({exc.msg})") from None
    labels = obj.get("labels") if isinstance(obj, dict) else obj
    if not isinstance(labels, list) or not all(isinstance(x, int) for x in labels):
        raise StreamError(f"{path}: expected a 'labels' array of integers")
    return labels


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    if len(args.labels) != len(args.stream):
        raise ConfigError(["--labels and --stream need the same number of paths"])
    ev = cfg.data["evaluation"]
    reports = []
    for lab_path, stream_path in zip(args.labels, args.stream):
        stream = _ingest(cfg, stream_path)
        labels = _read_labels(lab_path)
        if len(labels) != len(stream):
            raise StreamError(f"{lab_path}: {len(labels)} labels for {len(stream)} events in {stream_path}")
        reports.append(report(labels, stream, ev["cv_top_k"], ev["cv_window"],
                              ev["silhouette_distance"], name=Path(stream_path).stem))
    rows = list(reports)
    if args.aggregate:
        rows.append(aggregate(reports))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    doc = {"sequences": [r.to_dict() for r in reports]}
    if args.aggregate:
        doc["mean"] = rows[-1].to_dict()
    _dump_json(doc, out)
    out.with_suffix(".csv").write_text(reports_csv(rows), encoding="utf-8")
    sys.stdout.write(reports_csv(rows))
    return EXIT_OK


def run_seed(task) -> dict:
    """One benchmark cell: simulate a scenario and fit every variant."""
    scenario, run_seed_value, num_events, num_sources, cfg_data = task
    cfg = RunConfig.from_dict(cfg_data)
    gen = make_scenario(scenario, num_events, num_sources, run_seed_value,
                        kernels=cfg.kernels(), base_intensity=cfg.data["hawkes"]["base_intensity"])
    stream = generate(gen).stream
    kwargs = cfg.fit_kwargs()
    kwargs["trace_step"] = 0
    out = {}
    for variant, flags in VARIANTS.items():
        smc = replace(kwargs["config"], seed=run_seed_value, **flags)
        res = fit_sequence(stream, **{**kwargs, "config": smc})
        r = report(res, stream)
        out[variant] = {"ars": r.ars, "nmi": r.nmi, "v_score": r.v_score, "h_score": r.h_score,
                        "H_hat": r.H_hat}
    out["H"] = len(set(stream.truth_labels))
    return out


def benchmark(cfg: RunConfig, base_seed: int = 0, workers: int | None = None) -> list[dict]:
    b = cfg.data["benchmark"]
    workers = workers or b["workers"]
    tasks = []
    for scenario in b["scenarios"]:
        for i in range(b["seeds"]):
            seed = int(np.random.SeedSequence([base_seed, i]).generate_state(1)[0])
            tasks.append((scenario, seed, b["num_events"], b["num_sources"], cfg.to_dict()))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_seed, tasks))
    else:
        results = [run_seed(t) for t in tasks]
    rows = []
    for scenario in b["scenarios"]:
        cells = [r for t, r in zip(tasks, results) if t[0] == scenario]
        for variant in VARIANTS:
            row = {"scenario": scenario, "variant": variant, "runs": len(cells)}
            for metric in ("ars", "nmi", "v_score", "h_score", "H_hat"):
                vals = np.array([c[variant][metric] for c in cells], dtype=float)
                row[metric] = (float(vals.mean()), float(vals.std(ddof=1)) if vals.size > 1 else 0.0)
            row["values_nmi"] = [c[variant]["nmi"] for c in cells]
            rows.append(row)
    return rows


def format_benchmark(rows: list[dict]) -> str:
    head = f"{'scenario':<12} {'approach':<15} {'ARS':>15} {'NMI':>15} {'V-score':>15} {'H-score':>15} {'H_hat':>12}"
    lines = [head, "-" * len(head)]
    for r in rows:
        cells = [f"{r[m][0]:.4f}±{r[m][1]:.4f}" for m in ("ars", "nmi", "v_score", "h_score")]
        lines.append(f"{r['scenario']:<12} {r['variant']:<15} " + " ".join(f"{c:>15}" for c in cells)
                     + f" {r['H_hat'][0]:>6.1f}±{r['H_hat'][1]:<4.1f}")
    return "\n".join(lines)


def cmd_benchmark(args) -> int:
    cfg = _load_config(args)
    if args.seeds is not None:
        cfg = cfg.override("benchmark", seeds=args.seeds)
    if args.events is not None:
        cfg = cfg.override("benchmark", num_events=args.events)
    if args.scenarios:
        cfg = cfg.override("benchmark", scenarios=args.scenarios)
    rows = benchmark(cfg, base_seed=args.seed or 0, workers=args.workers)
    table = format_benchmark(rows)
    print(table)
    if args.out:
        _dump_json(rows, Path(args.out))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dhstream", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int)

    p = sub.add_parser("simulate", help="generate a labelled synthetic stream")
    common(p)
    p.add_argument("--out", required=True, help="output JSONL path")
    p.add_argument("--sidecar", help="true-parameter JSON (default: <out>.truth.json)")
    p.add_argument("--scenario", help="override generator.scenario")
    p.add_argument("--events", type=int, help="override generator.num_events")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="cluster a stream into hidden sources")
    common(p)
    p.add_argument("--stream", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--particles", type=int)
    p.add_argument("--ablate-vendor", action="store_true")
    p.add_argument("--ablate-content", action="store_true")
    p.add_argument("--ablate-time", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="score labels against a stream")
    common(p)
    p.add_argument("--labels", nargs="+", required=True)
    p.add_argument("--stream", nargs="+", required=True)
    p.add_argument("--out", required=True, help="report JSON path (CSV written alongside)")
    p.add_argument("--aggregate", action="store_true", help="append a mean row over sequences")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("benchmark", help="compare model variants on synthetic scenarios")
    common(p)
    p.add_argument("--particles", type=int)
    p.add_argument("--seeds", type=int)
    p.add_argument("--events", type=int)
    p.add_argument("--scenarios", nargs="+")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="write rows as JSON")
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StreamError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
