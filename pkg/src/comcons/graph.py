"""Weighted undirected graphs: parsing, preprocessing and aggregation.

Nodes carry opaque string ids and get dense indices in first-appearance
order. Edges are stored once per unordered pair with ``src < dst``, sorted
lexicographically, so two graphs built from the same input are identical
down to the byte.
"""

from __future__ import annotations

import csv
import hashlib
import io
import os
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components


class GraphError(ValueError):
    """Invalid graph input or an operation undefined on this graph."""


class EmptyGraphError(GraphError):
    pass


class ParseError(GraphError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    node_ids: tuple[str, ...]
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    attributes: tuple[Mapping[str, str], ...] | None = None
    dropped_self_loops: int = 0
    dropped_self_loop_weight: float = 0.0

    @classmethod
    def from_edges(
        cls,
        node_ids: Sequence[str],
        u: Iterable[int],
        v: Iterable[int],
        w: Iterable[float] | None = None,
        attributes: Sequence[Mapping[str, str]] | None = None,
    ) -> "WeightedGraph":
        """Build a graph from index pairs, merging duplicates and dropping self-loops."""
        node_ids = tuple(str(x) for x in node_ids)
        if len(set(node_ids)) != len(node_ids):
            raise GraphError("node ids must be unique")
        u = np.asarray(list(u) if not isinstance(u, np.ndarray) else u, dtype=np.int64)
        v = np.asarray(list(v) if not isinstance(v, np.ndarray) else v, dtype=np.int64)
        if w is None:
            w = np.ones(len(u), dtype=np.float64)
        else:
            w = np.asarray(list(w) if not isinstance(w, np.ndarray) else w, dtype=np.float64)
        if not (len(u) == len(v) == len(w)):
            raise GraphError("edge arrays must have equal length")
        n = len(node_ids)
        if len(u) and (u.min() < 0 or v.min() < 0 or u.max() >= n or v.max() >= n):
            raise GraphError("edge endpoint out of range")
        if len(w) and not np.all(w > 0):
            raise GraphError("edge weights must be strictly positive")

        loops = u == v
        n_loops = int(loops.sum())
        loop_weight = float(w[loops].sum())
        u, v, w = u[~loops], v[~loops], w[~loops]
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        src, dst, weight = _merge_pairs(lo, hi, w, n)
        if attributes is not None:
            attributes = tuple(dict(a) for a in attributes)
            if len(attributes) != n:
                raise GraphError("one attribute map per node required")
        return cls(node_ids, src, dst, weight, attributes, n_loops, loop_weight)

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @property
    def total_weight(self) -> float:
        """m in the modularity formula: sum of edge weights."""
        return float(self.weight.sum())

    @cached_property
    def index(self) -> dict[str, int]:
        return {node: i for i, node in enumerate(self.node_ids)}

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Symmetric adjacency as (indptr, indices, data), neighbours sorted."""
        n = self.n_nodes
        rows = np.concatenate([self.src, self.dst])
        cols = np.concatenate([self.dst, self.src])
        data = np.concatenate([self.weight, self.weight])
        order = np.lexsort((cols, rows))
        rows, cols, data = rows[order], cols[order], data[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        return indptr, cols.astype(np.int64), data.astype(np.float64)

    @cached_property
    def strength(self) -> np.ndarray:
        """Weighted degree k_i."""
        k = np.bincount(self.src, weights=self.weight, minlength=self.n_nodes)
        k += np.bincount(self.dst, weights=self.weight, minlength=self.n_nodes)
        return k

    @cached_property
    def degree(self) -> np.ndarray:
        """Unweighted degree (number of distinct neighbours)."""
        d = np.bincount(self.src, minlength=self.n_nodes)
        d += np.bincount(self.dst, minlength=self.n_nodes)
        return d.astype(np.int64)

    @cached_property
    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(str(self.n_nodes).encode())
        for node in self.node_ids:
            h.update(node.encode("utf-8"))
            h.update(b"\0")
        h.update(self.src.astype("<i8").tobytes())
        h.update(self.dst.astype("<i8").tobytes())
        h.update(self.weight.astype("<f8").tobytes())
        return h.hexdigest()[:16]

    def neighbors(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        indptr, indices, data = self.csr
        return indices[indptr[i]:indptr[i + 1]], data[indptr[i]:indptr[i + 1]]

    def edge_keys(self) -> np.ndarray:
        """Edges encoded as ``src * n_nodes + dst`` (sorted, unique)."""
        return self.src * self.n_nodes + self.dst

    def subgraph(self, nodes: Sequence[int]) -> "WeightedGraph":
        """Induced subgraph; ``nodes`` order fixes the new node order."""
        nodes = np.asarray(nodes, dtype=np.int64)
        remap = np.full(self.n_nodes, -1, dtype=np.int64)
        remap[nodes] = np.arange(len(nodes))
        keep = (remap[self.src] >= 0) & (remap[self.dst] >= 0)
        attrs = None
        if self.attributes is not None:
            attrs = [self.attributes[i] for i in nodes]
        return WeightedGraph.from_edges(
            [self.node_ids[i] for i in nodes],
            remap[self.src[keep]],
            remap[self.dst[keep]],
            self.weight[keep],
            attributes=attrs,
        )

    def with_attributes(self, table: Mapping[str, Mapping[str, str]]) -> "WeightedGraph":
        attrs = tuple(dict(table.get(node, {})) for node in self.node_ids)
        return WeightedGraph(
            self.node_ids, self.src, self.dst, self.weight, attrs,
            self.dropped_self_loops, self.dropped_self_loop_weight,
        )

    def to_scipy(self) -> sp.csr_matrix:
        indptr, indices, data = self.csr
        return sp.csr_matrix((data, indices, indptr), shape=(self.n_nodes, self.n_nodes))


def _merge_pairs(lo: np.ndarray, hi: np.ndarray, w: np.ndarray, n: int):
    if len(lo) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), np.zeros(0, dtype=np.float64)
    keys = lo * max(n, 1) + hi
    # stable sort keeps summation order equal to input order
    order = np.argsort(keys, kind="stable")
    keys, w = keys[order], w[order]
    uniq, start = np.unique(keys, return_index=True)
    weight = np.add.reduceat(w, start)
    return uniq // max(n, 1), uniq % max(n, 1), weight


@dataclass(frozen=True)
class GraphStats:
    nodes: int
    edges: int
    mean_degree: float
    mean_weighted_degree: float

    def as_dict(self) -> dict:
        return {
            "nodes": self.nodes,
            "edges": self.edges,
            "mean_degree": self.mean_degree,
            "mean_weighted_degree": self.mean_weighted_degree,
        }


def stats(g: WeightedGraph) -> GraphStats:
    if g.n_nodes == 0:
        return GraphStats(0, 0, 0.0, 0.0)
    return GraphStats(
        nodes=g.n_nodes,
        edges=g.n_edges,
        mean_degree=2.0 * g.n_edges / g.n_nodes,
        mean_weighted_degree=2.0 * g.total_weight / g.n_nodes,
    )


def _open_text(source) -> tuple[IO[str], bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, encoding="utf-8", newline=""), True
    if isinstance(source, io.TextIOBase):
        return source, False
    return io.TextIOWrapper(source, encoding="utf-8", newline=""), False


def load_edge_list(source, delimiter: str = "\t", comment: str = "#") -> WeightedGraph:
    """Parse ``source<TAB>target[<TAB>weight]`` lines.

    ``source`` may be a path, a binary stream or a text stream. Duplicate
    pairs are merged by summing weights; self-loops are dropped and counted
    on the returned graph.
    """
    stream, owned = _open_text(source)
    index: dict[str, int] = {}
    u: list[int] = []
    v: list[int] = []
    w: list[float] = []
    seen_data = False
    try:
        for lineno, raw in enumerate(stream, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith(comment):
                continue
            seen_data = True
            parts = line.split(delimiter)
            if len(parts) not in (2, 3):
                raise ParseError(f"expected 2 or 3 columns, got {len(parts)}", lineno)
            a, b = parts[0].strip(), parts[1].strip()
            if not a or not b:
                raise ParseError("empty node id", lineno)
            weight = 1.0
            if len(parts) == 3:
                try:
                    weight = float(parts[2])
                except ValueError:
                    raise ParseError(f"non-numeric weight {parts[2]!r}", lineno) from None
                if not np.isfinite(weight) or weight <= 0:
                    raise ParseError(f"weight must be positive, got {parts[2]!r}", lineno)
            for node in (a, b):
                if node not in index:
                    index[node] = len(index)
            u.append(index[a])
            v.append(index[b])
            w.append(weight)
    finally:
        if owned:
            stream.close()
    if not seen_data:
        raise EmptyGraphError("edge list contains no edges")
    return WeightedGraph.from_edges(list(index), u, v, w)


def write_edge_list(g: WeightedGraph, stream: IO[str]) -> None:
    for a, b, w in zip(g.src, g.dst, g.weight):
        stream.write(f"{g.node_ids[a]}\t{g.node_ids[b]}\t{format_weight(w)}\n")


def format_weight(w: float) -> str:
    w = float(w)
    return str(int(w)) if w.is_integer() and abs(w) < 2**53 else repr(w)


def load_attributes(source) -> dict[str, dict[str, str]]:
    """Read a ``node_id,attr_key,attr_value`` CSV (with header)."""
    stream, owned = _open_text(source)
    table: dict[str, dict[str, str]] = {}
    try:
        reader = csv.reader(stream)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["node_id", "attr_key", "attr_value"]:
            raise ParseError("expected header node_id,attr_key,attr_value", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 columns, got {len(row)}", lineno)
            table.setdefault(row[0], {})[row[1]] = row[2]
    finally:
        if owned:
            stream.close()
    return table


def largest_connected_component(g: WeightedGraph) -> WeightedGraph:
    if g.n_nodes == 0:
        raise EmptyGraphError("largest connected component of an empty graph")
    n_comp, labels = connected_components(g.to_scipy(), directed=False)
    if n_comp == 1:
        return g
    sizes = np.bincount(labels, minlength=n_comp)
    # first node index of each component; the earliest wins among the largest ties
    first = np.full(n_comp, g.n_nodes, dtype=np.int64)
    np.minimum.at(first, labels, np.arange(g.n_nodes))
    best = min(np.flatnonzero(sizes == sizes.max()), key=lambda c: first[c])
    return g.subgraph(np.flatnonzero(labels == best))


def aggregate_by_attribute(g: WeightedGraph, key: str) -> WeightedGraph:
    """Collapse nodes sharing an attribute value into one node.

    Edges inside a group become self-loops and are dropped; their weight is
    reported in ``dropped_self_loop_weight`` (together with any loops the
    input had already dropped).
    """
    values: list[str] = []
    for i, node in enumerate(g.node_ids):
        attrs = g.attributes[i] if g.attributes is not None else {}
        if key not in attrs:
            raise GraphError(f"node {node!r} has no attribute {key!r}")
        values.append(attrs[key])
    group_ids: dict[str, int] = {}
    group = np.empty(g.n_nodes, dtype=np.int64)
    for i, val in enumerate(values):
        group[i] = group_ids.setdefault(val, len(group_ids))
    agg = WeightedGraph.from_edges(list(group_ids), group[g.src], group[g.dst], g.weight)
    return WeightedGraph(
        agg.node_ids, agg.src, agg.dst, agg.weight, None,
        g.dropped_self_loops + agg.dropped_self_loops,
        g.dropped_self_loop_weight + agg.dropped_self_loop_weight,
    )


def is_connected_subset(g: WeightedGraph, nodes: Sequence[int]) -> bool:
    """Whether ``nodes`` induce a connected subgraph of ``g``."""
    nodes = list(nodes)
    if len(nodes) <= 1:
        return True
    members = set(nodes)
    seen = {nodes[0]}
    stack = [nodes[0]]
    while stack:
        i = stack.pop()
        for j in g.neighbors(i)[0]:
            j = int(j)
            if j in members and j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == len(members)
