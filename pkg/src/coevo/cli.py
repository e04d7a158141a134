"""Command-line entry point: ``coevo sparsify | optimize | report``.

Exit codes: 0 success, 1 configuration or usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, from_dict, load_config, to_dict
from .datasets import DatasetUnavailable, load_dataset
from .graph import EdgeListError, Graph, load_edge_list
from .layout import Layout, LayoutKind, compute_layout
from .mllm import AuthError, Cassette, VisionClient
from .render import RenderSpec, render
from .sparsify import SparsifyConfig, Strategy, sparsify
from .stats import mean_sd, mean_sem_curve, wilcoxon_rank_sum
from .tasks import SetTaskReport, build_domains, run_immunization, run_influence_maximization
from .validation import ValidationLog, validity_stats, write_validity_csv

logger = logging.getLogger("coevo")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _load_graph(path: str | None, name: str | None) -> Graph:
    if path:
        return load_edge_list(path)
    if name:
        return load_dataset(name)
    raise ConfigError("network", "give an edge-list path or a dataset name")


# sparsify


def cmd_sparsify(args) -> int:
    g = _load_graph(args.input, args.network)
    cfg = SparsifyConfig(args.nodes, args.edges, Strategy(args.strategy), args.seed)
    dom = sparsify(g, cfg, name=args.name or "")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dom.save(out / f"{dom.name}.json")
    print(f"{dom.name}: {len(dom)} nodes, {dom.subgraph.edge_count} edges -> {out / (dom.name + '.json')}")
    for kind in args.render or ():
        lk = LayoutKind(Layout(kind), rng_seed=args.seed)
        view = render(dom.subgraph, compute_layout(dom.subgraph, lk), RenderSpec(), (), lk)
        view.save_png(out / f"{dom.name}_{kind}.png")
        view.save_svg(out / f"{dom.name}_{kind}.svg")
    return EXIT_OK


# optimize


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    data = to_dict(cfg)
    if args.mode:
        data["mode"] = args.mode
    if args.operator:
        data["operator"]["kind"] = args.operator
    if args.seeds is not None:
        data["seeds"] = list(range(1, args.seeds + 1))
    if args.generations is not None:
        data["evo"]["generations"] = args.generations
    if args.input:
        data["network"]["path"] = args.input
    if args.network:
        data["network"]["name"] = args.network
    if args.cassette:
        data["mllm"]["cassette"] = args.cassette
    if args.cassette_mode:
        data["mllm"]["cassette_mode"] = args.cassette_mode
    return from_dict(RunConfig, data)


def _make_client(cfg: RunConfig) -> VisionClient | None:
    if cfg.operator.kind != "mllm":
        return None
    m = cfg.mllm
    if m.cassette_mode != "replay":
        try:
            m.endpoint.api_key()
        except AuthError as exc:
            raise ConfigError("mllm.endpoint.api_key_env", str(exc)) from exc
    cassette = Cassette(m.cassette) if m.cassette else None
    return VisionClient(m.endpoint, cassette, m.cassette_mode)


def _write_trace(path: Path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["generation", "best", "mean", "std"])
        for r in trace:
            w.writerow([r.generation, repr(r.best), repr(r.mean), repr(r.std)])


def global_best_curve(report: SetTaskReport) -> list[float]:
    traces = list(report.traces.values())
    return [max(t[i].best for t in traces) for i in range(len(traces[0]))]


def _run_seed(cfg: RunConfig, g: Graph, domains, seed: int, client, log: ValidationLog) -> SetTaskReport:
    tcfg = cfg.set_task_config(seed)
    runner = run_influence_maximization if cfg.task == "im" else run_immunization
    return runner(g, tcfg, domains, client, None, log)


def cmd_optimize(args) -> int:
    cfg = load_config(args.config) if args.config else RunConfig()
    cfg = _apply_overrides(cfg, args)
    client = _make_client(cfg)
    g = _load_graph(cfg.network.path, cfg.network.name)
    out = Path(args.out)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    net = cfg.network.name or Path(cfg.network.path).stem
    domains = build_domains(g, cfg.set_task_config(cfg.seeds[0]))
    if cfg.mode == "single":
        domains = domains[:1]
    label = args.label or f"{cfg.mode}-{cfg.operator.kind}"

    logs = {s: ValidationLog(network=net) for s in cfg.seeds}

    def one(seed):
        return seed, _run_seed(cfg, g, domains, seed, client, logs[seed])

    if cfg.jobs > 1:
        with ThreadPoolExecutor(cfg.jobs) as ex:
            results = dict(ex.map(one, cfg.seeds))
    else:
        results = dict(map(one, cfg.seeds))

    finals = []
    for seed in cfg.seeds:
        rep = results[seed]
        curve = global_best_curve(rep)
        finals.append(rep.fitness)
        with open(out / "traces" / f"seed_{seed}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["generation", "best"])
            for gen, v in enumerate(curve):
                w.writerow([gen, repr(v)])
        for name, trace in rep.traces.items():
            _write_trace(out / "traces" / f"seed_{seed}_{name}.csv", trace)
        if rep.coop is not None:
            with open(out / "traces" / f"seed_{seed}_pool.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["generation", "action", "domain", "fitness", "pool_size"])
                for e in rep.coop.pool_history:
                    w.writerow([e.generation, e.action, e.domain, "" if e.fitness is None else repr(e.fitness), e.pool_size])

    merged = ValidationLog(network=net)
    for s in cfg.seeds:
        merged.extend(logs[s])
    if merged.events:
        write_validity_csv(validity_stats(merged.events), out / "validity.csv")
    if merged.mutations:
        with open(out / "mutations.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sparsification", "layout", "removed", "added", "removed_degree", "added_degree"])
            for m in merged.mutations:
                w.writerow([m.sparsification, m.layout, m.removed, m.added, m.removed_degree, m.added_degree])

    mean, sd = mean_sd(finals)
    summary = {
        "network": net,
        "label": label,
        "seeds": list(cfg.seeds),
        "final_best": {str(s): results[s].fitness for s in cfg.seeds},
        "best_sets": {str(s): sorted(results[s].best) for s in cfg.seeds},
        "mean": mean,
        "sd": sd,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    manifest = {
        "version": __version__,
        "config": to_dict(cfg),
        "network": {"name": cfg.network.name, "path": cfg.network.path, "nodes": len(g), "edges": g.edge_count},
        "domains": [d.to_manifest() for d in domains],
        "operator": cfg.operator.kind,
        "cassette": cfg.mllm.cassette if cfg.operator.kind == "mllm" else None,
        "label": label,
        "decisions": {
            "vote_threshold": cfg.operator.ensemble_config().vote_threshold,
            "mutation_vote": "sets",
            "low_degree_percentile": 10,
            "repair": "drop-invalid then fill (betweenness or parents' union)",
        },
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"{net} {label}: {mean:.4f} ± {sd:.4f} over {len(finals)} seeds -> {out}")
    return EXIT_OK


# report


def _read_run(run_dir: Path) -> dict:
    summary_path = run_dir / "summary.json"
    if not summary_path.exists():
        raise FileNotFoundError(f"missing run artifact {summary_path}")
    summary = json.loads(summary_path.read_text())
    curves = []
    for seed in summary["seeds"]:
        with open(run_dir / "traces" / f"seed_{seed}.csv") as fh:
            curves.append([float(r["best"]) for r in csv.DictReader(fh)])
    summary["curves"] = curves
    summary["dir"] = run_dir
    return summary


def cmd_report(args) -> int:
    runs = [_read_run(Path(d)) for d in args.runs]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for r in runs:
        with open(out / f"curve_{r['network']}_{r['label']}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["generation", "mean", "sem"])
            for gen, (m, s) in enumerate(mean_sem_curve(r["curves"])):
                w.writerow([gen, repr(m), repr(s)])
    labels = sorted({r["label"] for r in runs})
    reference = args.reference or labels[-1]
    if reference not in labels:
        raise ConfigError("reference", f"{reference!r} is not one of {labels}")
    by_net: dict[str, dict[str, dict]] = {}
    for r in runs:
        by_net.setdefault(r["network"], {})[r["label"]] = r
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["network", *labels])
        for net in sorted(by_net):
            row = [net]
            ref = by_net[net].get(reference)
            for label in labels:
                r = by_net[net].get(label)
                if r is None:
                    row.append("")
                    continue
                vals = [r["final_best"][str(s)] for s in r["seeds"]]
                m, sd = mean_sd(vals)
                cell = f"{m:.4f}±{sd:.4f}"
                if ref is not None and label != reference:
                    ref_vals = [ref["final_best"][str(s)] for s in ref["seeds"]]
                    try:
                        cell += f"({wilcoxon_rank_sum(vals, ref_vals).verdict})"
                    except ValueError:
                        cell += "(n/a)"
                row.append(cell)
            w.writerow(row)
    validity_rows = []
    for r in runs:
        p = r["dir"] / "validity.csv"
        if p.exists():
            with open(p) as fh:
                rows = list(csv.reader(fh))
            if not validity_rows:
                validity_rows.append(rows[0])
            validity_rows.extend(rows[1:])
    if validity_rows:
        with open(out / "validity.csv", "w", newline="") as fh:
            csv.writer(fh).writerows(validity_rows)
    print(f"report for {len(runs)} runs -> {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="coevo", description="Cooperative evolutionary optimization on sparsified graphs.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sparsify", help="build a sparsified domain manifest")
    s.add_argument("--input", help="edge-list file")
    s.add_argument("--network", help="dataset name from the data directory")
    s.add_argument("--strategy", choices=[x.value for x in Strategy], default="degree")
    s.add_argument("--nodes", type=int, default=50)
    s.add_argument("--edges", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--name")
    s.add_argument("--out", default="domains")
    s.add_argument("--render", action="append", choices=[x.value for x in Layout])
    s.set_defaults(func=cmd_sparsify)

    o = sub.add_parser("optimize", help="run optimization over seeds")
    o.add_argument("--config")
    o.add_argument("--mode", choices=["single", "coop"])
    o.add_argument("--operator", choices=["vanilla", "mock", "mllm"])
    o.add_argument("--seeds", type=int)
    o.add_argument("--generations", type=int)
    o.add_argument("--input")
    o.add_argument("--network")
    o.add_argument("--cassette")
    o.add_argument("--cassette-mode", choices=["live", "record", "replay"])
    o.add_argument("--label")
    o.add_argument("--out", default="run")
    o.set_defaults(func=cmd_optimize)

    r = sub.add_parser("report", help="aggregate run directories")
    r.add_argument("runs", nargs="+")
    r.add_argument("--reference")
    r.add_argument("--out", default="report")
    r.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DatasetUnavailable, EdgeListError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - top-level boundary
        logger.exception("run failed")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
