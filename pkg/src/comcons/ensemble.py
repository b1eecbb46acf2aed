"""Ensembles of seeded detections and iterated consensus clustering."""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from comcons.detect import DetectionConfig, Partition, detect, modularity
from comcons.graph import GraphError, WeightedGraph


class ConsensusMode(str, enum.Enum):
    FULL = "full"
    EDGE_RESTRICTED = "edge-restricted"


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, last: "EnsembleResult"):
        super().__init__(message)
        self.last = last


def derive_seed(master: int, *path: int) -> int:
    """64-bit seed for the stream at ``path`` below ``master`` (SeedSequence spawn keys)."""
    if master < 0:
        raise ValueError("master seed must be non-negative")
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    graph: WeightedGraph
    partitions: tuple[Partition, ...]
    modularities: tuple[float, ...]
    seeds: tuple[int, ...]
    resolution: float = 1.0

    @property
    def n(self) -> int:
        return len(self.partitions)

    def labels(self) -> np.ndarray:
        """Runs × nodes label matrix."""
        return np.stack([p.labels for p in self.partitions])

    def unique_count(self) -> int:
        return len({p.key() for p in self.partitions})

    def is_unanimous(self) -> bool:
        return self.unique_count() == 1


def run_ensemble(
    g: WeightedGraph,
    cfg: DetectionConfig = DetectionConfig(),
    n: int = 100,
    master_seed: int = 0,
    threads: int = 1,
    stream: Sequence[int] = (),
) -> EnsembleResult:
    """``n`` independent detections with seeds ``derive_seed(master, *stream, i)``.

    Runs may execute on a thread pool; results are collected by run index,
    so the output does not depend on ``threads``.
    """
    if n < 2:
        raise ValueError(f"an ensemble needs at least 2 runs, got {n}")
    seeds = tuple(derive_seed(master_seed, *stream, i) for i in range(n))
    configs = [cfg.with_seed(s) for s in seeds]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partitions = tuple(pool.map(lambda c: detect(g, c), configs))
    else:
        partitions = tuple(detect(g, c) for c in configs)
    mods = tuple(modularity(g, p, cfg.resolution) for p in partitions)
    return EnsembleResult(g, partitions, mods, seeds, cfg.resolution)


@dataclass(frozen=True, eq=False)
class ConsensusMatrix:
    """Integer co-occurrence counts for node pairs ``i < j``.

    Full mode stores every pair co-clustered at least once. Edge-restricted
    mode stores exactly the edges of the source graph, zero counts included.
    """

    mode: ConsensusMode
    graph: WeightedGraph
    i: np.ndarray
    j: np.ndarray
    counts: np.ndarray
    n: int

    @property
    def n_pairs(self) -> int:
        return len(self.counts)

    @property
    def values(self) -> np.ndarray:
        return self.counts / self.n

    def keys(self) -> np.ndarray:
        return self.i * self.graph.n_nodes + self.j

    def count_of(self, a, b) -> np.ndarray:
        """Counts for pairs (a, b); pairs not stored count 0."""
        a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
        q = np.minimum(a, b) * self.graph.n_nodes + np.maximum(a, b)
        keys = self.keys()
        pos = np.searchsorted(keys, q)
        pos = np.minimum(pos, max(len(keys) - 1, 0))
        found = (keys[pos] == q) if len(keys) else np.zeros(q.shape, bool)
        return np.where(found, self.counts[pos] if len(keys) else 0, 0)

    def contains(self, a, b) -> np.ndarray:
        a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
        q = np.minimum(a, b) * self.graph.n_nodes + np.maximum(a, b)
        keys = self.keys()
        if not len(keys):
            return np.zeros(q.shape, bool)
        pos = np.minimum(np.searchsorted(keys, q), len(keys) - 1)
        return keys[pos] == q

    def edge_values(self, g: WeightedGraph) -> np.ndarray:
        """c_ij for every edge of ``g``; ``g`` must share the matrix's node set."""
        if g.node_ids != self.graph.node_ids:
            raise GraphError("consensus matrix and graph have different node sets")
        if self.mode is ConsensusMode.EDGE_RESTRICTED:
            present = self.contains(g.src, g.dst)
            if not present.all():
                k = int(np.flatnonzero(~present)[0])
                a, b = g.node_ids[g.src[k]], g.node_ids[g.dst[k]]
                raise GraphError(f"edge {a}-{b} missing from edge-restricted consensus matrix")
        return self.count_of(g.src, g.dst) / self.n


def consensus_matrix(er: EnsembleResult, mode: ConsensusMode | str = ConsensusMode.FULL) -> ConsensusMatrix:
    mode = ConsensusMode(mode)
    g = er.graph
    n_nodes = g.n_nodes
    if mode is ConsensusMode.EDGE_RESTRICTED:
        counts = np.zeros(g.n_edges, dtype=np.int64)
        for p in er.partitions:
            counts += p.labels[g.src] == p.labels[g.dst]
        return ConsensusMatrix(mode, g, g.src.copy(), g.dst.copy(), counts, er.n)

    chunks = []
    for p in er.partitions:
        for members in p.communities():
            if len(members) < 2:
                continue
            a, b = np.triu_indices(len(members), k=1)
            chunks.append(members[a] * n_nodes + members[b])
    if chunks:
        keys, counts = np.unique(np.concatenate(chunks), return_counts=True)
    else:
        keys, counts = np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return ConsensusMatrix(mode, g, keys // n_nodes, keys % n_nodes, counts.astype(np.int64), er.n)


def threshold_filter(cm: ConsensusMatrix, tau: float, reattach: bool = True) -> WeightedGraph:
    """Graph of pairs with c_ij >= tau, weighted by c_ij.

    With ``reattach``, a node left without edges is joined to its partner of
    highest c_ij (lowest index on ties) if it has any partner with c_ij > 0.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    c = cm.values
    live = cm.counts > 0
    keep = live & (c >= tau)
    u, v, w = cm.i[keep], cm.j[keep], c[keep]
    if reattach:
        n_nodes = cm.graph.n_nodes
        covered = np.zeros(n_nodes, dtype=bool)
        covered[u] = covered[v] = True
        node = np.concatenate([cm.i[live], cm.j[live]])
        partner = np.concatenate([cm.j[live], cm.i[live]])
        cval = np.concatenate([c[live], c[live]])
        lonely = ~covered[node]
        node, partner, cval = node[lonely], partner[lonely], cval[lonely]
        order = np.lexsort((partner, -cval, node))
        node, partner, cval = node[order], partner[order], cval[order]
        first = np.ones(len(node), dtype=bool)
        first[1:] = node[1:] != node[:-1]
        a, b, cval = node[first], partner[first], cval[first]
        # two lonely nodes may pick each other; keep that pair once
        _, once = np.unique(np.minimum(a, b) * n_nodes + np.maximum(a, b), return_index=True)
        u = np.concatenate([u, a[once]])
        v = np.concatenate([v, b[once]])
        w = np.concatenate([w, cval[once]])
    return WeightedGraph.from_edges(cm.graph.node_ids, u, v, w)


@dataclass(frozen=True, eq=False)
class ConsensusResult:
    partition: Partition
    first_matrix: ConsensusMatrix
    iterations: int
    first_ensemble: EnsembleResult
    tau: float
    mode: ConsensusMode


def consensus_cluster(
    g: WeightedGraph,
    cfg: DetectionConfig = DetectionConfig(),
    n: int = 100,
    tau: float = 0.5,
    master_seed: int = 0,
    mode: ConsensusMode | str = ConsensusMode.FULL,
    max_iterations: int = 10,
    reattach: bool = True,
    threads: int = 1,
    first_ensemble: EnsembleResult | None = None,
) -> ConsensusResult:
    """Iterate ensemble -> consensus matrix -> threshold until all runs agree.

    The same ``tau`` is used at every iteration. Iteration ``t > 1`` draws
    its run seeds from the stream ``(t - 1,)`` under ``master_seed``.
    """
    if n < 2:
        raise ValueError(f"an ensemble needs at least 2 runs, got {n}")
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    mode = ConsensusMode(mode)
    ensemble = first_ensemble
    if ensemble is None:
        ensemble = run_ensemble(g, cfg, n, master_seed, threads)
    if ensemble.graph is not g or ensemble.n != n:
        raise ValueError("first ensemble was not computed on this graph with this n")
    first = ensemble
    first_cm = consensus_matrix(ensemble, mode)
    cm = first_cm
    for it in range(1, max_iterations + 1):
        if ensemble.is_unanimous():
            part = Partition.of(g, ensemble.partitions[0].labels)
            return ConsensusResult(part, first_cm, it, first, tau, mode)
        if it == max_iterations:
            break
        if it > 1:
            cm = consensus_matrix(ensemble, mode)
        current = threshold_filter(cm, tau, reattach)
        if current.n_edges == 0:
            # no pair ever co-clustered: every node alone, nothing left to disagree on
            part = Partition.of(g, np.arange(g.n_nodes))
            return ConsensusResult(part, first_cm, it, first, tau, mode)
        ensemble = run_ensemble(current, cfg, n, master_seed, threads, stream=(it,))
    raise ConvergenceError(
        f"consensus did not converge within {max_iterations} iterations "
        f"({ensemble.unique_count()} distinct partitions in the last ensemble)",
        ensemble,
    )


@dataclass(frozen=True)
class SweepEntry:
    tau: float
    partition: Partition
    modularity: float
    iterations: int


@dataclass(frozen=True, eq=False)
class TauSweep:
    entries: tuple[SweepEntry, ...]
    first_ensemble: EnsembleResult
    first_matrix: ConsensusMatrix
    best_index: int

    @property
    def best(self) -> SweepEntry:
        return self.entries[self.best_index]


def tau_grid(start: float = 0.1, stop: float = 0.9, step: float = 0.1) -> list[float]:
    """Inclusive grid, rounded so that e.g. 0.3 is the literal 0.3."""
    if step <= 0:
        raise ValueError("step must be positive")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 12) for k in range(count)]


def tau_sweep(
    g: WeightedGraph,
    cfg: DetectionConfig = DetectionConfig(),
    n: int = 100,
    taus: Sequence[float] = tuple(tau_grid()),
    master_seed: int = 0,
    mode: ConsensusMode | str = ConsensusMode.FULL,
    max_iterations: int = 10,
    reattach: bool = True,
    threads: int = 1,
) -> TauSweep:
    """Consensus at each tau from one shared first ensemble.

    Each consensus partition is scored on the original graph; the best is
    the highest modularity, smallest tau on ties.
    """
    taus = list(taus)
    if not taus:
        raise ValueError("tau grid is empty")
    for t in taus:
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"tau must lie in [0, 1], got {t}")
    first = run_ensemble(g, cfg, n, master_seed, threads)
    entries = []
    first_cm = None
    for t in taus:
        res = consensus_cluster(
            g, cfg, n, t, master_seed, mode, max_iterations, reattach, threads, first_ensemble=first
        )
        first_cm = res.first_matrix
        entries.append(SweepEntry(t, res.partition, modularity(g, res.partition, cfg.resolution), res.iterations))
    best = max(range(len(entries)), key=lambda k: (entries[k].modularity, -entries[k].tau))
    return TauSweep(tuple(entries), first, first_cm, best)
