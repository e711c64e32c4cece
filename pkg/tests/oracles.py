"""Slow reference implementations the fast library code is checked against.

Everything here favors obviousness over speed: dense matrices, explicit
BFS, and quadratic scans, kept free of the library's own shortcuts.
"""

import numpy as np


def dense_degroot(n, weights, seeds, iterations):
    """Belief vector after synchronous averaging, via a dense matrix power.

    ``weights`` maps (reposter, credited) -> repost count, reposter != credited;
    the diagonal holds each user's original-post count. Rows with no mass
    keep their own belief.
    """
    m = np.zeros((n, n), dtype=float)
    for (u, v), w in weights.items():
        m[u, v] += float(w)
    for u in range(n):
        s = m[u].sum()
        if s > 0:
            m[u] /= s
        else:
            m[u, u] = 1.0
    b = np.zeros(n, dtype=float)
    b[list(seeds)] = 1.0
    power = np.linalg.matrix_power(m, iterations)
    return power @ b


def wiener_bfs(parents):
    """Average pairwise distance over ordered pairs, by BFS from every node.

    ``parents`` lists the parent node id of nodes 1..n-1 (node 0 is the
    root). Returns 0.0 for trees with fewer than two nodes.
    """
    n = len(parents) + 1
    if n <= 1:
        return 0.0
    adj = [[] for _ in range(n)]
    for child, parent in enumerate(parents, start=1):
        adj[parent].append(child)
        adj[child].append(parent)
    total = 0
    for s in range(n):
        dist = [-1] * n
        dist[s] = 0
        queue = [s]
        while queue:
            nxt = []
            for v in queue:
                for w in adj[v]:
                    if dist[w] < 0:
                        dist[w] = dist[v] + 1
                        nxt.append(w)
            queue = nxt
        total += sum(dist)
    return total / (n * (n - 1))


def brute_tree_metrics(parents):
    """(size, depth, breadth, avg_depth) recomputed by walking to the root."""
    n = len(parents) + 1
    depths = [0] * n
    for node in range(1, n):
        d = 0
        v = node
        while v != 0:
            v = parents[v - 1]
            d += 1
        depths[node] = d
    counts = {}
    for d in depths:
        counts[d] = counts.get(d, 0) + 1
    return n, max(depths), max(counts.values()), sum(depths) / n


def brute_ks_d(a, b):
    """sup |ECDF_a - ECDF_b| evaluated at every sample point by counting."""
    a = list(a)
    b = list(b)
    best = 0.0
    for x in a + b:
        fa = sum(1 for v in a if v <= x) / len(a)
        fb = sum(1 for v in b if v <= x) / len(b)
        best = max(best, abs(fa - fb))
    return best


def brute_ccdf(values, x):
    values = list(values)
    return sum(1 for v in values if v >= x) / len(values)


def brute_cascade(snapshot, root_post):
    """Independent influence-tree reconstruction by quadratic scanning.

    For each repost event in time order, every user already in the tree is
    tested as a candidate: the reposter must follow them and their event
    must be strictly earlier. The earliest-event candidate wins, ties going
    to the smaller user index. Returns (members, parent_of, time_of,
    removed) with members keyed by user index.
    """
    root_user = int(snapshot.author[root_post])
    root_ts = int(snapshot.ts[root_post])
    time_of = {root_user: root_ts}
    parent_of = {root_user: None}
    settled = {root_user}   # users whose first repost was already processed
    removed = 0
    for e in snapshot.reposts_of(root_post):
        u = int(snapshot.author[e])
        t = int(snapshot.ts[e])
        if u in settled:
            continue
        settled.add(u)
        followed = set(snapshot.followees(u).tolist())
        best = None
        for w, wt in time_of.items():
            if w in followed and wt < t:
                if best is None or (wt, w) < best:
                    best = (wt, w)
        if best is None:
            removed += 1
            continue
        time_of[u] = t
        parent_of[u] = best[1]
    return set(time_of), parent_of, time_of, removed
