"""Command-line front end.

Every output file gets a ``<name>.meta.json`` sidecar recording the command
and the configuration that produced it. ``--threads`` and ``--output-dir``
are left out of the sidecars: they never change results.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from comcons import __version__
from comcons import io as cio
from comcons.compare import consensus_nmi, ensemble_nmi, nmi, NORMALIZATIONS
from comcons.consistency import consistency_degree_correlation, consistency_report
from comcons.detect import Algorithm, DetectionConfig, detect, modularity
from comcons.ensemble import (
    ConsensusMode,
    ConvergenceError,
    consensus_cluster,
    tau_grid,
    tau_sweep,
)
from comcons.graph import (
    GraphError,
    ParseError,
    aggregate_by_attribute,
    largest_connected_component,
    load_attributes,
    load_edge_list,
    stats,
    write_edge_list,
)

log = logging.getLogger("comcons")

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_NUMERIC = 0, 1, 2, 3
OUTPUT_DIR_ENV = "COMCONS_OUTPUT_DIR"
AUTO_EDGE_RESTRICTED_ABOVE = 100_000


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    attributes: str | None = None
    n: int = 100
    gamma: float = 1.0
    tau: float | None = None
    tau_grid: list[float] = field(default_factory=lambda: tau_grid())
    theta: float = 0.9
    kappa: float = 0.9
    phi: float = 0.5
    seed: int = 0
    algorithm: str = Algorithm.LEIDEN_REFINED.value
    mode: str = "auto"
    output_dir: str = field(default=".", metadata={"replay": False})
    top_k: int = 3
    max_iterations: int = 10
    max_passes: int = 64
    fine_tune_budget: int = DetectionConfig.fine_tune_budget
    reattach: bool = True
    lcc: bool = True
    threads: int = field(default=1, metadata={"replay": False})

    def validate(self) -> None:
        for name in ("theta", "kappa", "phi"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise UsageError(f"--{name} must lie in [0, 1]")
        if self.tau is not None and not 0.0 <= self.tau <= 1.0:
            raise UsageError("--tau must lie in [0, 1]")
        if any(not 0.0 <= t <= 1.0 for t in self.tau_grid) or not self.tau_grid:
            raise UsageError("--tau-grid values must lie in [0, 1]")
        if not self.phi < self.kappa:
            raise UsageError("--phi must be smaller than --kappa")
        if self.n < 2:
            raise UsageError("--n must be at least 2")
        if self.gamma <= 0:
            raise UsageError("--gamma must be positive")
        if self.seed < 0:
            raise UsageError("--seed must be non-negative")
        if self.fine_tune_budget < 0:
            raise UsageError("--fine-tune-budget must be non-negative")
        if self.threads < 1:
            raise UsageError("--threads must be at least 1")

    def replay(self) -> dict:
        """Config fields that can change results (so not threads or output_dir)."""
        return {f.name: v for f, v in zip(fields(self), asdict(self).values()) if f.metadata.get("replay", True)}

    def detection(self) -> DetectionConfig:
        return DetectionConfig(self.seed, self.gamma, Algorithm(self.algorithm), self.max_passes, self.fine_tune_budget)


class _Outputs:
    def __init__(self, cfg: RunConfig):
        self.dir = Path(cfg.output_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.cfg = cfg
        self.written: list[str] = []

    def path(self, name: str) -> Path:
        self.written.append(name)
        cio.write_json(
            self.dir / f"{name}.meta.json",
            {"file": name, "command": self.cfg.command, "config": self.cfg.replay(), "version": __version__},
        )
        return self.dir / name


def _load_graph(cfg: RunConfig):
    if cfg.input is None:
        raise UsageError("--input is required")
    g = load_edge_list(cfg.input)
    if g.dropped_self_loops:
        log.info("dropped %d self-loops", g.dropped_self_loops)
    if cfg.attributes:
        g = g.with_attributes(load_attributes(cfg.attributes))
    if cfg.lcc and g.n_nodes:
        g = largest_connected_component(g)
    return g


def _mode(cfg: RunConfig, g) -> ConsensusMode:
    if cfg.mode == "auto":
        return ConsensusMode.EDGE_RESTRICTED if g.n_edges > AUTO_EDGE_RESTRICTED_ABOVE else ConsensusMode.FULL
    return ConsensusMode(cfg.mode)


def cmd_stats(cfg: RunConfig) -> int:
    g = _load_graph(cfg)
    st = stats(g).as_dict()
    st["dropped_self_loops"] = g.dropped_self_loops
    out = _Outputs(cfg)
    cio.write_json(out.path("stats.json"), st)
    print(" ".join(f"{k}={cio.fmt(v)}" for k, v in st.items()))
    return EXIT_OK


def cmd_detect(cfg: RunConfig) -> int:
    g = _load_graph(cfg)
    p = detect(g, cfg.detection())
    q = modularity(g, p, cfg.gamma)
    out = _Outputs(cfg)
    cio.write_partition(out.path("partition.csv"), g, p)
    payload = {"modularity": q, "communities": p.n_communities, "seed": cfg.seed, "stats": stats(g).as_dict()}
    cio.write_json(out.path("detect.json"), payload)
    print(f"communities={p.n_communities} modularity={q!r}")
    return EXIT_OK


def _run_consensus(cfg: RunConfig, g, out: _Outputs):
    """Consensus (swept or fixed tau) plus all the ensemble diagnostics."""
    dcfg = cfg.detection()
    mode = _mode(cfg, g)
    if cfg.tau is None:
        sweep = tau_sweep(
            g, dcfg, cfg.n, cfg.tau_grid, cfg.seed, mode, cfg.max_iterations, cfg.reattach, cfg.threads
        )
        first, first_cm = sweep.first_ensemble, sweep.first_matrix
        best = sweep.best
        partition, tau, iterations = best.partition, best.tau, best.iterations
        cio.write_csv(
            out.path("tau_sweep.csv"),
            ["tau", "modularity", "iterations", "communities", "selected"],
            (
                (e.tau, e.modularity, e.iterations, e.partition.n_communities, k == sweep.best_index)
                for k, e in enumerate(sweep.entries)
            ),
        )
    else:
        res = consensus_cluster(
            g, dcfg, cfg.n, cfg.tau, cfg.seed, mode, cfg.max_iterations, cfg.reattach, cfg.threads
        )
        first, first_cm = res.first_ensemble, res.first_matrix
        partition, tau, iterations = res.partition, res.tau, res.iterations

    q_cons = modularity(g, partition, cfg.gamma)
    mean_nmi, unique = ensemble_nmi(first)
    mods = np.asarray(first.modularities)
    diagnostics = {
        "unique_partitions": unique,
        "mean_modularity": math.fsum(first.modularities) / first.n,
        "min_modularity": float(mods.min()),
        "max_modularity": float(mods.max()),
        "consensus_modularity": q_cons,
        "consensus_within_run_band": bool(mods.min() <= q_cons <= mods.max()),
        "mean_nmi": mean_nmi,
        "mean_consensus_nmi": consensus_nmi(partition, first),
        "tau": tau,
        "iterations": iterations,
        "consensus_communities": partition.n_communities,
        "mode": mode.value,
        "n": cfg.n,
    }
    if not diagnostics["consensus_within_run_band"]:
        log.warning("consensus modularity %r lies outside the individual-run band", q_cons)
    cio.write_partition(out.path("consensus_partition.csv"), g, partition)
    cio.write_consensus_matrix(out.path("consensus_matrix.tsv"), first_cm)
    cio.write_json(out.path("ensemble_manifest.json"), cio.ensemble_manifest(first, mode, tau))
    cio.write_csv(
        out.path("modularities.csv"),
        ["rank", "modularity", "consensus_modularity"],
        ((r, q, q_cons) for r, q in enumerate(sorted(first.modularities))),
    )
    cio.write_json(out.path("diagnostics.json"), diagnostics)
    return partition, first_cm, diagnostics


def cmd_consensus(cfg: RunConfig) -> int:
    g = _load_graph(cfg)
    out = _Outputs(cfg)
    try:
        _, _, diag = _run_consensus(cfg, g, out)
    except ConvergenceError as err:
        last = err.last
        cio.write_json(
            out.path("nonconvergence.json"),
            {
                "error": str(err),
                "unique_partitions": last.unique_count(),
                "seeds": list(last.seeds),
                "modularities": list(last.modularities),
            },
        )
        raise
    print(
        f"tau={diag['tau']!r} iterations={diag['iterations']} communities={diag['consensus_communities']} "
        f"consensus_modularity={diag['consensus_modularity']!r}"
    )
    return EXIT_OK


def cmd_consistency(cfg: RunConfig, partition_path: str | None, matrix_path: str | None) -> int:
    g = _load_graph(cfg)
    out = _Outputs(cfg)
    if (partition_path is None) != (matrix_path is None):
        raise UsageError("--partition and --matrix must be given together")
    if partition_path is not None:
        partition = cio.read_partition(partition_path, g)
        mode = ConsensusMode.FULL if cfg.mode == "auto" else ConsensusMode(cfg.mode)
        cm = cio.read_consensus_matrix(matrix_path, g, mode)
    else:
        partition, cm, _ = _run_consensus(cfg, g, out)
    rep = consistency_report(g, partition, cm, cfg.theta, cfg.kappa, cfg.phi, cfg.top_k)
    corr = consistency_degree_correlation(g, rep.consistency) if g.n_nodes >= 3 else None
    cio.write_node_report(out.path("node_report.csv"), rep)
    cio.write_community_summary(out.path("community_summary.csv"), rep)
    correlation = {"theta": cfg.theta, "kappa": cfg.kappa, "phi": cfg.phi, "n_nodes": g.n_nodes}
    if corr is not None:
        cio.write_histogram(out.path("histogram.csv"), corr)
        correlation.update(spearman_rho=corr.rho, p_value=corr.pvalue, defined=corr.defined)
    correlation["edge_consistency"] = rep.extra.get("edge_consistency", {})
    cio.write_json(out.path("correlation.json"), correlation)
    counts = {c: int(np.sum(rep.classification == c)) for c in ("hard-core", "core", "fringe", "other")}
    print(" ".join(f"{k}={v}" for k, v in counts.items()))
    return EXIT_OK


def cmd_aggregate(cfg: RunConfig, key: str) -> int:
    if not cfg.attributes:
        raise UsageError("--attributes is required")
    cfg.lcc = False
    g = _load_graph(cfg)
    agg = aggregate_by_attribute(g, key)
    if agg.n_edges == 0:
        log.warning("aggregated graph has no edges (all weight fell inside groups)")
    out = _Outputs(cfg)
    with open(out.path("aggregated.tsv"), "w", encoding="utf-8", newline="") as fh:
        write_edge_list(agg, fh)
    cio.write_json(
        out.path("aggregate.json"),
        {
            "key": key,
            "nodes": agg.n_nodes,
            "edges": agg.n_edges,
            "total_weight": agg.total_weight,
            "dropped_self_loop_weight": agg.dropped_self_loop_weight,
        },
    )
    print(f"nodes={agg.n_nodes} edges={agg.n_edges} dropped_self_loop_weight={agg.dropped_self_loop_weight!r}")
    return EXIT_OK


def cmd_nmi(cfg: RunConfig, a: str, b: str, normalization: str) -> int:
    p1, p2 = cio.standalone_partitions(a, b)
    value = nmi(p1, p2, normalization)
    out = _Outputs(cfg)
    cio.write_json(out.path("nmi.json"), {"nmi": value, "normalization": normalization})
    print(repr(value))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_grid(text: str) -> list[float]:
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            return tau_grid(start, stop, step)
        return [round(float(x), 12) for x in text.split(",")]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}: {err}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="comcons", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, detection=True):
        p.add_argument("--input", help="edge list, source<TAB>target[<TAB>weight]")
        p.add_argument("--attributes", help="node attribute CSV node_id,attr_key,attr_value")
        p.add_argument(
            "--output-dir",
            default=os.environ.get(OUTPUT_DIR_ENV, "."),
            help=f"where to write outputs (default ${OUTPUT_DIR_ENV} or .)",
        )
        p.add_argument("--no-lcc", dest="lcc", action="store_false", help="keep all components")
        if detection:
            p.add_argument("--seed", type=int, default=0, help="(master) random seed")
            p.add_argument("--gamma", type=float, default=1.0, help="modularity resolution")
            p.add_argument(
                "--algorithm", choices=[a.value for a in Algorithm], default=Algorithm.LEIDEN_REFINED.value
            )
            p.add_argument("--max-passes", type=int, default=64)
            p.add_argument(
                "--fine-tune-budget", type=int, default=DetectionConfig.fine_tune_budget,
                help="run Kernighan-Lin fine-tuning when nodes*(nodes+edges) is at most this (0 disables)",
            )

    def ensemble(p):
        p.add_argument("--n", type=int, default=100, help="runs per ensemble")
        p.add_argument("--tau", type=float, help="fixed consensus threshold (default: sweep the grid)")
        p.add_argument("--tau-grid", type=_parse_grid, default=tau_grid(), help="start:stop:step or a,b,c")
        p.add_argument("--mode", choices=["auto", "full", "edge-restricted"], default="auto")
        p.add_argument("--max-iterations", type=int, default=10)
        p.add_argument("--no-reattach", dest="reattach", action="store_false",
                       help="leave nodes isolated by thresholding unattached")
        p.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")

    p = sub.add_parser("stats", help="node/edge counts and mean degrees")
    common(p, detection=False)

    p = sub.add_parser("detect", help="one seeded community detection run")
    common(p)

    p = sub.add_parser("consensus", help="ensemble + consensus clustering")
    common(p)
    ensemble(p)

    p = sub.add_parser("consistency", help="membership consistency, cores and fringes")
    common(p)
    ensemble(p)
    p.add_argument("--theta", type=float, default=0.9, help="edge consistency threshold")
    p.add_argument("--kappa", type=float, default=0.9, help="core threshold")
    p.add_argument("--phi", type=float, default=0.5, help="fringe threshold")
    p.add_argument("--top-k", type=int, default=3, help="heaviest nodes listed per community")
    p.add_argument("--partition", help="consensus partition CSV (skips recomputation)")
    p.add_argument("--matrix", help="first-iteration consensus matrix TSV")

    p = sub.add_parser("aggregate", help="collapse nodes by attribute value")
    common(p, detection=False)
    p.add_argument("--key", required=True, help="attribute key to aggregate on")

    p = sub.add_parser("nmi", help="NMI between two partition CSVs")
    p.add_argument("--a", required=True, help="first partition CSV")
    p.add_argument("--b", required=True, help="second partition CSV")
    p.add_argument("--normalization", choices=NORMALIZATIONS, default="arithmetic")
    p.add_argument("--output-dir", default=os.environ.get(OUTPUT_DIR_ENV, "."))
    return parser


def _config(args) -> RunConfig:
    fields = {f for f in RunConfig.__dataclass_fields__}
    values = {k: v for k, v in vars(args).items() if k in fields and v is not None}
    return RunConfig(**values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        cfg.validate()
        if args.command == "stats":
            return cmd_stats(cfg)
        if args.command == "detect":
            return cmd_detect(cfg)
        if args.command == "consensus":
            return cmd_consensus(cfg)
        if args.command == "consistency":
            return cmd_consistency(cfg, args.partition, args.matrix)
        if args.command == "aggregate":
            return cmd_aggregate(cfg, args.key)
        if args.command == "nmi":
            return cmd_nmi(cfg, args.a, args.b, args.normalization)
    except UsageError as err:
        print(f"comcons: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (GraphError, ParseError, OSError) as err:
        print(f"comcons: error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except (ConvergenceError, ValueError, ArithmeticError) as err:
        print(f"comcons: error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
