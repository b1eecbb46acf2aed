"""Compiled inner loops for modularity optimisation.

All kernels work on a symmetric CSR adjacency without self-loops plus a
separate strength vector (which does include self-loop weight at
aggregated levels). Community labels must lie in ``[0, n_nodes)``. Gains
are expressed in weight units: moving node ``i`` into community ``c``
changes ``2m * Q`` by ``2 * (w_ic - gamma * tot_c * k_i / 2m)``.
"""

import numpy as np
from numba import njit

MAX_SWEEPS = 10_000


@njit(cache=True, nogil=True)
def local_move(indptr, indices, data, strength, comm, order, gamma, two_m, eps):
    """Greedy single-node moves in ``order`` until a full sweep changes nothing.

    Mutates ``comm`` in place and returns the number of moves made. Each node
    goes to the neighbouring community with the largest gain (lowest label on
    ties) or to an empty community, but only when that strictly beats staying.
    """
    n = strength.shape[0]
    tot = np.zeros(n)
    size = np.zeros(n, dtype=np.int64)
    for i in range(n):
        tot[comm[i]] += strength[i]
        size[comm[i]] += 1
    empty = np.empty(n, dtype=np.int64)
    n_empty = 0
    for c in range(n - 1, -1, -1):
        if size[c] == 0:
            empty[n_empty] = c
            n_empty += 1

    neigh_w = np.zeros(n)
    stamp = np.full(n, -1, dtype=np.int64)
    neigh = np.empty(n, dtype=np.int64)
    tick = 0
    moves = 0
    for sweep in range(MAX_SWEEPS):
        moved = 0
        for idx in range(n):
            i = order[idx]
            ki = strength[i]
            ci = comm[i]
            tick += 1
            nn = 0
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                c = comm[j]
                if stamp[c] != tick:
                    stamp[c] = tick
                    neigh_w[c] = 0.0
                    neigh[nn] = c
                    nn += 1
                neigh_w[c] += data[p]
            tot[ci] -= ki
            size[ci] -= 1
            scale = gamma * ki / two_m
            stay = -tot[ci] * scale
            if stamp[ci] == tick:
                stay += neigh_w[ci]
            best_c = -1
            best = -np.inf
            for q in range(nn):
                c = neigh[q]
                if c == ci:
                    continue
                gain = neigh_w[c] - tot[c] * scale
                if gain > best + eps or (gain >= best - eps and c < best_c):
                    if gain > best:
                        best = gain
                    best_c = c
            target = ci
            target_gain = stay
            if best_c >= 0 and best > target_gain + eps:
                target = best_c
                target_gain = best
            # an empty community has gain 0
            if size[ci] > 0 and n_empty > 0 and target_gain < -eps:
                n_empty -= 1
                target = empty[n_empty]
            tot[target] += ki
            size[target] += 1
            if target != ci:
                comm[i] = target
                moved += 1
                if size[ci] == 0:
                    empty[n_empty] = ci
                    n_empty += 1
        moves += moved
        if moved == 0:
            break
    return moves


@njit(cache=True, nogil=True)
def refine(indptr, indices, data, strength, comm, order, uniforms, gamma, two_m, eps, randomness):
    """Split each community of ``comm`` into connected sub-communities.

    Starts from singletons. Visiting nodes in ``order``, a node that is
    still a singleton and well connected to its community may join an
    adjacent, well-connected sub-community of the same community with
    non-negative gain; the target is drawn with probability proportional
    to ``exp(dQ / randomness)`` using ``uniforms[idx]``. Nodes only join
    sub-communities they touch, so every sub-community is connected.
    """
    n = strength.shape[0]
    ref = np.arange(n)
    tot = strength.copy()
    single = np.ones(n, dtype=np.bool_)
    # total strength per community, and per sub-community weight to the
    # rest of its community
    comm_tot = np.zeros(n)
    for i in range(n):
        comm_tot[comm[i]] += strength[i]
    ext = np.zeros(n)
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            if comm[indices[p]] == comm[i]:
                ext[i] += data[p]
    neigh_w = np.zeros(n)
    stamp = np.full(n, -1, dtype=np.int64)
    neigh = np.empty(n, dtype=np.int64)
    gains = np.empty(n)
    for idx in range(n):
        i = order[idx]
        if not single[i]:
            continue
        ki = strength[i]
        ci = comm[i]
        # node must be well connected to the rest of its community
        if ext[i] < gamma * ki * (comm_tot[ci] - ki) / two_m - eps:
            continue
        nn = 0
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if comm[j] != ci:
                continue
            c = ref[j]
            if stamp[c] != i:
                stamp[c] = i
                neigh_w[c] = 0.0
                neigh[nn] = c
                nn += 1
            neigh_w[c] += data[p]
        scale = gamma * ki / two_m
        n_ok = 0
        best = 0.0
        for q in range(nn):
            c = neigh[q]
            # target must be well connected to the rest of the community
            if ext[c] < gamma * tot[c] * (comm_tot[ci] - tot[c]) / two_m - eps:
                continue
            gain = neigh_w[c] - (tot[c]) * scale
            if gain < -eps:
                continue
            neigh[n_ok] = c
            gains[n_ok] = gain
            if gain > best:
                best = gain
            n_ok += 1
        if n_ok == 0:
            continue
        # dQ = 2 * gain / two_m; subtract the max before exponentiating
        total = 0.0
        for q in range(n_ok):
            gains[q] = np.exp((gains[q] - best) * 2.0 / two_m / randomness)
            total += gains[q]
        r = uniforms[idx] * total
        pick = n_ok - 1
        acc = 0.0
        for q in range(n_ok):
            acc += gains[q]
            if r < acc:
                pick = q
                break
        c = neigh[pick]
        ref[i] = c
        # external weight of the merged sub-community: edges between i and c turn internal
        ext[c] += ext[i] - 2.0 * neigh_w[c]
        tot[c] += ki
        tot[i] = 0.0
        single[i] = False
        single[c] = False
    return ref


@njit(cache=True, nogil=True)
def fine_tune(indptr, indices, data, strength, comm, gamma, two_m, eps, max_passes):
    """Kernighan-Lin style passes over single-node moves.

    Each pass moves every node exactly once, always taking the best move
    still available even when it lowers Q, then rolls back to the best
    state seen along the way. Passes repeat while they improve Q. Costs
    O(n * (n + E)) per pass. Mutates ``comm``; returns the total gain in
    units of Q.
    """
    n = strength.shape[0]
    tot = np.zeros(n)
    size = np.zeros(n, dtype=np.int64)
    neigh_w = np.zeros(n)
    stamp = np.full(n, -1, dtype=np.int64)
    neigh = np.empty(n, dtype=np.int64)
    moved = np.zeros(n, dtype=np.bool_)
    hist_node = np.empty(n, dtype=np.int64)
    hist_from = np.empty(n, dtype=np.int64)
    total_gain = 0.0
    tick = 0
    for _ in range(max_passes):
        tot[:] = 0.0
        size[:] = 0
        for i in range(n):
            tot[comm[i]] += strength[i]
            size[comm[i]] += 1
        moved[:] = False
        cur = 0.0
        best_q = 0.0
        best_step = -1
        last = -1
        for step in range(n):
            mv_node = -1
            mv_to = -1
            mv_gain = -np.inf
            for i in range(n):
                if moved[i]:
                    continue
                ki = strength[i]
                ci = comm[i]
                tick += 1
                nn = 0
                for p in range(indptr[i], indptr[i + 1]):
                    c = comm[indices[p]]
                    if stamp[c] != tick:
                        stamp[c] = tick
                        neigh_w[c] = 0.0
                        neigh[nn] = c
                        nn += 1
                    neigh_w[c] += data[p]
                scale = gamma * ki / two_m
                w_own = neigh_w[ci] if stamp[ci] == tick else 0.0
                leave = -(w_own - (tot[ci] - ki) * scale)
                for q in range(nn):
                    c = neigh[q]
                    if c == ci:
                        continue
                    gain = leave + neigh_w[c] - tot[c] * scale
                    if gain > mv_gain + eps:
                        mv_gain = gain
                        mv_node = i
                        mv_to = c
                if size[ci] > 1 and leave > mv_gain + eps:
                    # move to an empty community
                    for c in range(n):
                        if size[c] == 0:
                            mv_gain = leave
                            mv_node = i
                            mv_to = c
                            break
            if mv_node < 0:
                break
            ci = comm[mv_node]
            ki = strength[mv_node]
            tot[ci] -= ki
            size[ci] -= 1
            tot[mv_to] += ki
            size[mv_to] += 1
            comm[mv_node] = mv_to
            moved[mv_node] = True
            hist_node[step] = mv_node
            hist_from[step] = ci
            cur += 2.0 * mv_gain / two_m
            if cur > best_q + eps / two_m:
                best_q = cur
                best_step = step
            last = step
        # roll back every move after the best prefix
        for step in range(last, best_step, -1):
            comm[hist_node[step]] = hist_from[step]
        if best_step < 0:
            break
        total_gain += best_q
    return total_gain
