"""Node-level membership consistency, cores and fringes.

Everything here reads the consensus matrix of the *first* ensemble, the
one computed on the original graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from comcons.detect import Partition
from comcons.ensemble import ConsensusMatrix
from comcons.graph import GraphError, WeightedGraph

HARD_CORE, CORE, FRINGE, OTHER = "hard-core", "core", "fringe", "other"


def pair_consistency(c):
    """2 |c - 1/2|: 1 when a pair is always or never together, 0 at a coin flip."""
    arr = np.asarray(c, dtype=np.float64)
    if np.any((arr < 0.0) | (arr > 1.0)) or np.any(np.isnan(arr)):
        raise ValueError("consensus values must lie in [0, 1]")
    out = 2.0 * np.abs(arr - 0.5)
    return float(out) if out.ndim == 0 else out


def edge_consistency(g: WeightedGraph, cm: ConsensusMatrix) -> np.ndarray:
    """Pair consistency of every edge of ``g``, computed from integer counts.

    ``|2 count - n| / n`` is exact where ``2 |count/n - 1/2|`` is not
    (95 of 100 would give 0.8999999999999999).
    """
    cm.edge_values(g)  # node-set and coverage checks
    counts = cm.count_of(g.src, g.dst)
    return np.abs(2 * counts - cm.n) / cm.n


def _per_node_mean(g: WeightedGraph, per_edge: np.ndarray, empty: float = 1.0) -> np.ndarray:
    acc = np.bincount(g.src, weights=per_edge, minlength=g.n_nodes)
    acc += np.bincount(g.dst, weights=per_edge, minlength=g.n_nodes)
    deg = g.degree
    out = np.full(g.n_nodes, empty)
    has = deg > 0
    out[has] = acc[has] / deg[has]
    return out


def membership_consistency(g: WeightedGraph, cm: ConsensusMatrix, theta: float = 0.9) -> np.ndarray:
    """Fraction of each node's edges whose pair consistency is at least ``theta``.

    Edges are counted, not weighted. Isolated nodes get 1.0.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    ok = (edge_consistency(g, cm) >= theta).astype(np.float64)
    return _per_node_mean(g, ok)


def mean_edge_consistency(g: WeightedGraph, cm: ConsensusMatrix) -> np.ndarray:
    """Plain mean of incident edge consistencies (reported, never used to classify)."""
    return _per_node_mean(g, edge_consistency(g, cm))


def edge_consistency_quantiles(g: WeightedGraph, cm: ConsensusMatrix, qs=(0.01, 0.05, 0.1, 0.25, 0.5)) -> dict:
    s = edge_consistency(g, cm)
    out = {f"q{q:g}": float(np.quantile(s, q)) for q in qs} if len(s) else {}
    out["mean"] = float(s.mean()) if len(s) else float("nan")
    out["distinct_values"] = sorted(float(x) for x in np.unique(s))[:50]
    return out


def classify_cores(consistencies, kappa: float = 0.9, phi: float = 0.5) -> np.ndarray:
    if not (phi < kappa <= 1.0):
        raise ValueError(f"need phi < kappa <= 1, got phi={phi}, kappa={kappa}")
    s = np.asarray(consistencies, dtype=np.float64)
    out = np.full(s.shape, OTHER, dtype=object)
    out[s < phi] = FRINGE
    out[s >= kappa] = CORE
    out[s == 1.0] = HARD_CORE
    return out


@dataclass(frozen=True)
class CommunitySummary:
    community: int
    size: int
    mean_consistency: float
    hard_core: int
    core: int
    fringe: int
    heaviest: tuple[str, ...]

    @property
    def hard_core_fraction(self) -> float:
        return self.hard_core / self.size

    @property
    def core_fraction(self) -> float:
        return self.core / self.size


@dataclass(frozen=True, eq=False)
class ConsistencyReport:
    node_ids: tuple[str, ...]
    community: np.ndarray
    strength: np.ndarray
    consistency: np.ndarray
    classification: np.ndarray
    communities: tuple[CommunitySummary, ...]
    theta: float
    kappa: float
    phi: float
    mean_edge_consistency: np.ndarray | None = None
    extra: dict = field(default_factory=dict)


def community_descriptives(
    g: WeightedGraph,
    partition: Partition,
    consistencies,
    classifications,
    k: int = 3,
    theta: float = float("nan"),
    kappa: float = 0.9,
    phi: float = 0.5,
) -> ConsistencyReport:
    partition.check_bound(g)
    s = np.asarray(consistencies, dtype=np.float64)
    cls = np.asarray(classifications, dtype=object)
    if s.shape != (g.n_nodes,) or cls.shape != (g.n_nodes,):
        raise GraphError("consistency and classification arrays must cover every node")
    strength = g.strength
    summaries = []
    for c, members in enumerate(partition.communities()):
        vals = s[members]
        hard = int(np.sum(cls[members] == HARD_CORE))
        core = hard + int(np.sum(cls[members] == CORE))
        fringe = int(np.sum(cls[members] == FRINGE))
        ranked = sorted(members.tolist(), key=lambda i: (-strength[i], g.node_ids[i]))
        summaries.append(
            CommunitySummary(
                community=c,
                size=len(members),
                mean_consistency=math.fsum(vals.tolist()) / len(members),
                hard_core=hard,
                core=core,
                fringe=fringe,
                heaviest=tuple(g.node_ids[i] for i in ranked[:k]),
            )
        )
    return ConsistencyReport(
        g.node_ids, partition.labels, strength, s, cls, tuple(summaries), theta, kappa, phi
    )


def consistency_report(
    g: WeightedGraph,
    partition: Partition,
    cm: ConsensusMatrix,
    theta: float = 0.9,
    kappa: float = 0.9,
    phi: float = 0.5,
    k: int = 3,
) -> ConsistencyReport:
    s = membership_consistency(g, cm, theta)
    cls = classify_cores(s, kappa, phi)
    rep = community_descriptives(g, partition, s, cls, k, theta, kappa, phi)
    return ConsistencyReport(
        rep.node_ids, rep.community, rep.strength, rep.consistency, rep.classification,
        rep.communities, theta, kappa, phi,
        mean_edge_consistency=mean_edge_consistency(g, cm),
        extra={"edge_consistency": edge_consistency_quantiles(g, cm)},
    )


def spearman(x, y) -> tuple[float, float]:
    """Spearman rho with average ranks and the t-approximation p-value.

    Returns (nan, nan) when either input is constant.
    """
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    n = len(x)
    if n != len(y):
        raise ValueError("inputs differ in length")
    if n < 3:
        raise ValueError("need at least 3 observations")
    rx, ry = sps.rankdata(x), sps.rankdata(y)
    dx, dy = rx - rx.mean(), ry - ry.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return float("nan"), float("nan")
    rho = float(dx @ dy) / math.sqrt(sxx * syy)
    rho = min(1.0, max(-1.0, rho))
    if abs(rho) == 1.0:
        return rho, 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return rho, float(2.0 * sps.t.sf(abs(t), n - 2))


@dataclass(frozen=True, eq=False)
class DegreeCorrelation:
    rho: float
    pvalue: float
    n: int
    degree_edges: np.ndarray
    consistency_edges: np.ndarray
    counts: np.ndarray

    @property
    def defined(self) -> bool:
        return not math.isnan(self.rho)

    def histogram_rows(self):
        for a in range(len(self.degree_edges) - 1):
            for b in range(len(self.consistency_edges) - 1):
                yield (
                    float(self.degree_edges[a]), float(self.degree_edges[a + 1]),
                    float(self.consistency_edges[b]), float(self.consistency_edges[b + 1]),
                    int(self.counts[a, b]),
                )


def consistency_degree_correlation(
    g: WeightedGraph, consistencies, degree_bins: int = 20, consistency_bins: int = 10
) -> DegreeCorrelation:
    """Spearman between weighted degree and consistency, plus 2D histogram counts.

    Degree bins are log-spaced over the positive strengths; consistency bins
    split [0, 1] evenly.
    """
    s = np.asarray(consistencies, dtype=np.float64)
    k = g.strength
    rho, p = spearman(k, s)
    pos = k > 0
    lo, hi = (float(k[pos].min()), float(k[pos].max())) if pos.any() else (1.0, 1.0)
    if hi <= lo:
        hi = lo * 1.0000001 + 1e-12
    deg_edges = np.geomspace(lo, hi, degree_bins + 1)
    deg_edges[0], deg_edges[-1] = lo, hi
    con_edges = np.linspace(0.0, 1.0, consistency_bins + 1)
    counts, _, _ = np.histogram2d(k[pos], s[pos], bins=[deg_edges, con_edges])
    return DegreeCorrelation(rho, p, len(s), deg_edges, con_edges, counts.astype(np.int64))
