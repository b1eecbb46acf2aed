"""Seeded synthetic graphs with planted communities, for benchmarks and tests."""

from __future__ import annotations

import numpy as np

from comcons.graph import WeightedGraph


def powerlaw_sizes(
    n_nodes: int, exponent: float, size_range: tuple[int, int], rng: np.random.Generator
) -> np.ndarray:
    """Community sizes drawn as in the LFR benchmark.

    Sizes follow a discrete power law p(s) ~ s^-exponent on ``size_range``
    and are drawn until they cover ``n_nodes``; the excess is taken off the
    largest communities, keeping them at or above the range minimum where
    the total allows it.
    """
    lo, hi = size_range
    if not 1 <= lo <= hi:
        raise ValueError(f"bad size range {size_range}")
    if n_nodes < lo:
        raise ValueError("fewer nodes than the smallest allowed community")
    support = np.arange(lo, hi + 1)
    pmf = support.astype(np.float64) ** -exponent
    pmf /= pmf.sum()
    sizes: list[int] = []
    while sum(sizes) < n_nodes:
        sizes.append(int(rng.choice(support, p=pmf)))
    sizes = np.array(sorted(sizes, reverse=True), dtype=np.int64)
    excess = int(sizes.sum()) - n_nodes
    for i in range(len(sizes)):
        cut = min(excess, sizes[i] - lo)
        sizes[i] -= cut
        excess -= cut
    if excess:
        # the last draw overshot by less than a community; fold it away
        sizes = sizes[sizes > 0]
        sizes[-1] -= excess
        if sizes[-1] < 1:
            sizes = sizes[:-1]
    return sizes


def planted_partition(
    n_nodes: int,
    n_edges: int,
    n_communities: int | None = None,
    mixing: float = 0.2,
    size_exponent: float | None = None,
    size_range: tuple[int, int] = (10, 50),
    seed: int = 0,
) -> tuple[WeightedGraph, np.ndarray]:
    """Unit-weight graph with ``n_edges`` distinct edges and planted blocks.

    A fraction ``mixing`` of edges joins different blocks. Either give
    ``n_communities`` (blocks as equal as possible) or ``size_exponent``,
    which draws LFR-style power-law block sizes within ``size_range``.
    Returns the graph and the planted block of every node.
    """
    rng = np.random.default_rng(seed)
    if (n_communities is None) == (size_exponent is None):
        raise ValueError("give exactly one of n_communities and size_exponent")
    if size_exponent is None:
        sizes = np.full(n_communities, n_nodes // n_communities)
        sizes[: n_nodes % n_communities] += 1
    else:
        sizes = powerlaw_sizes(n_nodes, size_exponent, size_range, rng)
        n_communities = len(sizes)
    block = rng.permutation(np.repeat(np.arange(n_communities), sizes))
    by_block = np.argsort(block, kind="stable")
    offset = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    pair_weight = sizes.astype(np.float64) * (sizes - 1)
    pair_weight /= pair_weight.sum()

    n_inter = int(round(mixing * n_edges))
    intra_room = int(np.sum(sizes * (sizes - 1) // 2))
    inter_room = n_nodes * (n_nodes - 1) // 2 - intra_room
    if n_edges - n_inter > intra_room or n_inter > inter_room:
        raise ValueError("too many edges for the block sizes and mixing requested")
    keys = np.zeros(0, dtype=np.int64)
    want_intra, want_inter = n_edges - n_inter, n_inter
    for _ in range(100):
        have = block[keys // n_nodes] == block[keys % n_nodes]
        need_intra = want_intra - int(have.sum())
        need_inter = want_inter - int((~have).sum())
        if need_intra <= 0 and need_inter <= 0:
            break
        new = []
        if need_intra > 0:
            cs = rng.choice(n_communities, size=2 * need_intra + 8, p=pair_weight)
            a = by_block[offset[cs] + rng.integers(0, sizes[cs])]
            b = by_block[offset[cs] + rng.integers(0, sizes[cs])]
            ok = a != b
            lo, hi = np.minimum(a[ok], b[ok]), np.maximum(a[ok], b[ok])
            cand = np.unique(lo * n_nodes + hi)
            cand = rng.permutation(np.setdiff1d(cand, keys))[:need_intra]
            new.append(cand)
        if need_inter > 0:
            a = rng.integers(0, n_nodes, 2 * need_inter + 8)
            b = rng.integers(0, n_nodes, 2 * need_inter + 8)
            ok = block[a] != block[b]
            lo, hi = np.minimum(a[ok], b[ok]), np.maximum(a[ok], b[ok])
            cand = np.unique(lo * n_nodes + hi)
            cand = rng.permutation(np.setdiff1d(cand, keys))[:need_inter]
            new.append(cand)
        keys = np.union1d(keys, np.concatenate(new))
    else:
        raise RuntimeError("could not place the requested number of edges")
    g = WeightedGraph.from_edges([f"n{i}" for i in range(n_nodes)], keys // n_nodes, keys % n_nodes)
    return g, block


def random_connected_graph(n_nodes: int, p: float, rng: np.random.Generator, weighted: bool = False) -> WeightedGraph:
    """G(n, p) plus a random spanning tree, so the result is connected.

    With ``weighted`` each drawn edge gets an integer weight in 1..4; an edge
    drawn by both the tree and G(n, p) carries the sum.
    """
    perm = rng.permutation(n_nodes)
    u = [int(perm[i]) for i in range(1, n_nodes)]
    v = [int(perm[rng.integers(0, i)]) for i in range(1, n_nodes)]
    for a in range(n_nodes):
        for b in range(a + 1, n_nodes):
            if rng.random() < p:
                u.append(a)
                v.append(b)
    w = rng.integers(1, 5, len(u)).astype(float) if weighted else None
    return WeightedGraph.from_edges([str(i) for i in range(n_nodes)], u, v, w)
