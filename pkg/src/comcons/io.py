"""Reading and writing the CSV/TSV/JSON artifacts.

Floats are written with ``repr`` and JSON with sorted keys, so identical
results serialise to identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from comcons.consistency import ConsistencyReport, DegreeCorrelation
from comcons.detect import Partition
from comcons.ensemble import ConsensusMatrix, ConsensusMode, EnsembleResult
from comcons.graph import GraphError, ParseError, WeightedGraph

MATRIX_COLUMNS = ["node_i", "node_j", "count", "n", "c_ij"]
NODE_REPORT_COLUMNS = [
    "node_id", "community", "weighted_degree", "consistency", "classification", "mean_edge_consistency",
]
SUMMARY_COLUMNS = [
    "community", "size", "mean_consistency", "hard_core", "hard_core_fraction",
    "core", "core_fraction", "fringe", "heaviest_nodes",
]
HISTOGRAM_COLUMNS = [
    "degree_bin_low", "degree_bin_high", "consistency_bin_low", "consistency_bin_high", "count",
]


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if math.isnan(v) or math.isinf(v) else v
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence], delimiter: str = ",") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(x) for x in row])


def write_partition(path: Path, g: WeightedGraph, p: Partition) -> None:
    p.check_bound(g)
    write_csv(path, ["node_id", "community"], zip(g.node_ids, p.labels))


def read_partition_table(path) -> tuple[list[str], list[str]]:
    ids, labels = [], []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["node_id", "community"]:
            raise ParseError(f"{path}: expected header node_id,community", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"{path}: expected 2 columns", lineno)
            ids.append(row[0])
            labels.append(row[1])
    if len(set(ids)) != len(ids):
        raise ParseError(f"{path}: duplicate node ids")
    return ids, labels


def read_partition(path, g: WeightedGraph) -> Partition:
    ids, labels = read_partition_table(path)
    if set(ids) != set(g.node_ids):
        raise GraphError(f"{path}: partition node set does not match the graph")
    return Partition.from_mapping(g, dict(zip(ids, labels)))


def standalone_partitions(path_a, path_b) -> tuple[Partition, Partition]:
    """Two partition CSVs aligned on the first file's node order."""
    ids_a, lab_a = read_partition_table(path_a)
    ids_b, lab_b = read_partition_table(path_b)
    if set(ids_a) != set(ids_b):
        raise GraphError("partitions cover different node sets")
    fp = hashlib.sha256("\0".join(ids_a).encode("utf-8")).hexdigest()[:16]
    lookup = dict(zip(ids_b, lab_b))
    return Partition(np.unique(lab_a, return_inverse=True)[1].ravel(), fp), Partition(
        np.unique([lookup[i] for i in ids_a], return_inverse=True)[1].ravel(), fp
    )


def write_consensus_matrix(path: Path, cm: ConsensusMatrix) -> None:
    ids = cm.graph.node_ids
    rows = (
        (ids[a], ids[b], int(c), cm.n, float(c) / cm.n)
        for a, b, c in zip(cm.i.tolist(), cm.j.tolist(), cm.counts.tolist())
    )
    write_csv(path, MATRIX_COLUMNS, rows, delimiter="\t")


def read_consensus_matrix(path, g: WeightedGraph, mode: ConsensusMode | str = ConsensusMode.FULL) -> ConsensusMatrix:
    mode = ConsensusMode(mode)
    index = g.index
    pairs, counts, ns = [], [], set()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader, None)
        if header != MATRIX_COLUMNS:
            raise ParseError(f"{path}: expected header {' '.join(MATRIX_COLUMNS)}", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise ParseError(f"{path}: expected 5 columns", lineno)
            a, b = row[0], row[1]
            if a not in index or b not in index:
                raise GraphError(f"{path}: line {lineno} names a node not in the graph")
            try:
                count, n = int(row[2]), int(row[3])
            except ValueError:
                raise ParseError(f"{path}: non-integer count", lineno) from None
            if not 0 <= count <= n:
                raise ParseError(f"{path}: count outside [0, n]", lineno)
            i, j = index[a], index[b]
            pairs.append((min(i, j), max(i, j)))
            counts.append(count)
            ns.add(n)
    if len(ns) != 1:
        raise ParseError(f"{path}: expected one run count n, found {sorted(ns)}")
    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    keys = arr[:, 0] * g.n_nodes + arr[:, 1]
    order = np.argsort(keys, kind="stable")
    if len(np.unique(keys)) != len(keys):
        raise ParseError(f"{path}: duplicate node pairs")
    return ConsensusMatrix(
        mode, g, arr[order, 0], arr[order, 1], np.asarray(counts, dtype=np.int64)[order], ns.pop()
    )


def write_node_report(path: Path, rep: ConsistencyReport) -> None:
    mean_edge = rep.mean_edge_consistency
    if mean_edge is None:
        mean_edge = [float("nan")] * len(rep.node_ids)
    rows = zip(rep.node_ids, rep.community, rep.strength, rep.consistency, rep.classification, mean_edge)
    write_csv(path, NODE_REPORT_COLUMNS, rows)


def write_community_summary(path: Path, rep: ConsistencyReport) -> None:
    rows = (
        (c.community, c.size, c.mean_consistency, c.hard_core, c.hard_core_fraction,
         c.core, c.core_fraction, c.fringe, ";".join(c.heaviest))
        for c in rep.communities
    )
    write_csv(path, SUMMARY_COLUMNS, rows)


def write_histogram(path: Path, corr: DegreeCorrelation) -> None:
    write_csv(path, HISTOGRAM_COLUMNS, corr.histogram_rows())


def ensemble_manifest(er: EnsembleResult, mode: ConsensusMode, tau) -> dict:
    return {
        "n": er.n,
        "seeds": list(er.seeds),
        "modularities": list(er.modularities),
        "unique_partitions": er.unique_count(),
        "mode": mode.value,
        "tau": tau,
    }
