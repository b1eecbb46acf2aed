"""Partition similarity via normalised mutual information."""

from __future__ import annotations

import math

import numpy as np

from comcons.detect import Partition
from comcons.ensemble import EnsembleResult
from comcons.graph import GraphError

NORMALIZATIONS = ("arithmetic", "max", "geometric", "joint")


def contingency(p1: Partition, p2: Partition) -> np.ndarray:
    if p1.n_nodes != p2.n_nodes or p1.fingerprint != p2.fingerprint:
        raise GraphError("partitions are not over the same node set")
    table = np.zeros((p1.n_communities, p2.n_communities), dtype=np.int64)
    np.add.at(table, (p1.labels, p2.labels), 1)
    return table


def _entropy(counts: np.ndarray, total: int) -> float:
    p = counts[counts > 0] / total
    return float(-np.sum(p * np.log(p)))


def nmi(p1: Partition, p2: Partition, normalization: str = "arithmetic") -> float:
    """Mutual information over a mean of the two entropies (natural log).

    Two single-community partitions score 1; if exactly one is trivial the
    score is 0.
    """
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"unknown normalization {normalization!r}")
    table = contingency(p1, p2)
    if np.array_equal(p1.labels, p2.labels):
        return 1.0
    total = int(table.sum())
    h1 = _entropy(table.sum(axis=1), total)
    h2 = _entropy(table.sum(axis=0), total)
    if h1 == 0.0 and h2 == 0.0:
        return 1.0
    if h1 == 0.0 or h2 == 0.0:
        return 0.0
    nz = table[table > 0].astype(np.float64)
    rows, cols = np.nonzero(table)
    a = table.sum(axis=1)[rows].astype(np.float64)
    b = table.sum(axis=0)[cols].astype(np.float64)
    mi = float(np.sum(nz / total * np.log(nz * total / (a * b))))
    if normalization == "arithmetic":
        denom = 0.5 * (h1 + h2)
    elif normalization == "max":
        denom = max(h1, h2)
    elif normalization == "geometric":
        denom = math.sqrt(h1 * h2)
    else:
        denom = _entropy(nz, total)
    return min(1.0, max(0.0, mi / denom))


def ensemble_nmi(er: EnsembleResult, normalization: str = "arithmetic") -> tuple[float, int]:
    """Mean NMI over all unordered run pairs, and the number of distinct partitions."""
    parts = er.partitions
    # identical partitions score exactly 1; evaluate each distinct pair once
    keys = [p.key() for p in parts]
    distinct: dict[bytes, int] = {}
    for k in keys:
        distinct.setdefault(k, len(distinct))
    reps = {}
    for p, k in zip(parts, keys):
        reps.setdefault(distinct[k], p)
    ids = [distinct[k] for k in keys]
    cache: dict[tuple[int, int], float] = {}
    terms = []
    for a in range(len(parts)):
        for b in range(a + 1, len(parts)):
            x, y = sorted((ids[a], ids[b]))
            if x == y:
                terms.append(1.0)
                continue
            if (x, y) not in cache:
                cache[(x, y)] = nmi(reps[x], reps[y], normalization)
            terms.append(cache[(x, y)])
    return math.fsum(terms) / len(terms), len(distinct)


def consensus_nmi(consensus: Partition, er: EnsembleResult, normalization: str = "arithmetic") -> float:
    return math.fsum(nmi(consensus, p, normalization) for p in er.partitions) / er.n
