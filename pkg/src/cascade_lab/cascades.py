"""Influence-tree reconstruction and cascade measurement.

A cascade is the set of reposts descending from one original post. Each
reposter is attributed to their first exposure: among the in-tree users they
follow whose event strictly precedes the repost, the one with the earliest
event time becomes the parent (ties broken by smaller user index). Reposters
with no qualifying exposure are removed from the tree and counted.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .diffusion import KH, NH
from .model import PostKind, Snapshot

METRIC_NAMES = ("size", "depth", "breadth", "avg_depth", "virality")
SUBSETS = ("all", "attachments", "in_group", "in_topic")

_REMOVED = -1  # entry-table marker for reposters excluded from the tree


@dataclass(frozen=True)
class CascadeTree:
    """One reconstructed influence tree.

    Node 0 is the root; reposters are nodes 1..k in attachment (event time)
    order, so every parent node id is smaller than its children's.
    """

    root_post: int
    root_user: int
    root_ts: int
    users: np.ndarray    # int32 reposter user index per non-root node
    times: np.ndarray    # int64 event timestamp per non-root node
    parents: np.ndarray  # int32 parent node id per non-root node
    depths: np.ndarray   # int32 depth per non-root node (root is 0)
    removed: int

    @property
    def size(self) -> int:
        return 1 + len(self.users)

    def all_depths(self) -> np.ndarray:
        """Depths of every node, root first."""
        return np.concatenate([np.zeros(1, dtype=np.int32), self.depths])


@dataclass(frozen=True)
class CascadeMetrics:
    root_post: int
    root_user: int
    size: int
    depth: int
    breadth: int
    avg_depth: float
    virality: float
    removed: int


@dataclass(frozen=True)
class PopulationFilter:
    """Which labeled users' originals become cascade roots."""

    group: str                # "KH" or "NH"
    subset: str = "all"       # all | attachments | in_group | in_topic

    def __post_init__(self):
        if self.group not in ("KH", "NH"):
            raise ValueError(f"unknown group {self.group!r}")
        if self.subset not in SUBSETS:
            raise ValueError(f"unknown subset {self.subset!r}")


def build_cascade(snapshot: Snapshot, root_post: int) -> CascadeTree:
    """Reconstruct the influence tree for one original post.

    Reposts are replayed in event-time order; a user's first repost decides
    their fate (attached or removed) and later reposts by the same user are
    ignored. Exposure requires a strictly earlier event by a followed in-tree
    user, the root included.
    """
    if snapshot.kind[root_post] != PostKind.ORIGINAL:
        raise ValueError(
            f"post {snapshot.post_ids[root_post]!r} is not an original"
        )
    root_user = int(snapshot.author[root_post])
    root_ts = int(snapshot.ts[root_post])
    author = snapshot.author
    ts = snapshot.ts

    # user -> node id; event time is tracked per node
    entry = {root_user: 0}
    node_time = [root_ts]
    node_depth = [0]
    users: list = []
    times: list = []
    parents: list = []
    depths: list = []
    removed = 0

    for e in snapshot.reposts_of(root_post):
        u = int(author[e])
        if u in entry:
            continue
        t = int(ts[e])
        best_node = -1
        best_time = 0
        for w in snapshot.followees(u).tolist():
            node = entry.get(w, _REMOVED)
            if node < 0:
                continue
            wt = node_time[node]
            # followees scan ascending by user index, so a strict < keeps the
            # smaller-index candidate on equal event times
            if wt < t and (best_node < 0 or wt < best_time):
                best_node = node
                best_time = wt
        if best_node < 0:
            removed += 1
            entry[u] = _REMOVED
            continue
        node = len(node_time)
        entry[u] = node
        node_time.append(t)
        node_depth.append(node_depth[best_node] + 1)
        users.append(u)
        times.append(t)
        parents.append(best_node)
        depths.append(node_depth[node])

    return CascadeTree(
        root_post=root_post, root_user=root_user, root_ts=root_ts,
        users=np.asarray(users, dtype=np.int32),
        times=np.asarray(times, dtype=np.int64),
        parents=np.asarray(parents, dtype=np.int32),
        depths=np.asarray(depths, dtype=np.int32),
        removed=removed,
    )


def structural_virality(tree: CascadeTree) -> float:
    """Mean pairwise distance over ordered node pairs; 0 for size <= 1.

    Computed in O(n) from subtree sizes: each edge separates s vs n-s nodes
    and contributes s*(n-s) unordered pairs at +1 distance each.
    """
    n = tree.size
    if n <= 1:
        return 0.0
    sizes = np.ones(n, dtype=np.int64)
    parents = tree.parents
    for i in range(n - 2, -1, -1):  # node i+1 has parent parents[i] < i+1
        sizes[parents[i]] += sizes[i + 1]
    sub = sizes[1:]
    unordered = int((sub * (n - sub)).sum())
    return 2.0 * unordered / (n * (n - 1))


def compute_metrics(tree: CascadeTree) -> CascadeMetrics:
    """Size, max depth, max breadth, average depth (root included), virality."""
    n = tree.size
    if n == 1:
        return CascadeMetrics(
            tree.root_post, tree.root_user, 1, 0, 1, 0.0, 0.0, tree.removed
        )
    depths = tree.depths
    max_depth = int(depths.max())
    breadth = int(np.bincount(tree.all_depths()).max())
    avg_depth = float(depths.sum()) / n
    return CascadeMetrics(
        root_post=tree.root_post, root_user=tree.root_user,
        size=n, depth=max_depth, breadth=breadth, avg_depth=avg_depth,
        virality=structural_virality(tree), removed=tree.removed,
    )


def temporal_profile(tree: CascadeTree, metric: str) -> list:
    """(value, elapsed seconds) series while replaying the cascade.

    Integer metrics (size, depth, breadth) record the first time each value
    is reached; avg_depth and virality are sampled after every event. The
    final value always equals the finished cascade's metric.
    """
    if metric not in METRIC_NAMES:
        raise ValueError(f"unknown metric {metric!r}")
    root_ts = tree.root_ts
    k = len(tree.users)

    if metric == "size":
        series = [(1, 0)]
        for i in range(k):
            series.append((i + 2, int(tree.times[i]) - root_ts))
        return series
    if metric == "depth":
        series = [(0, 0)]
        cur = 0
        for i in range(k):
            d = int(tree.depths[i])
            while cur < d:
                cur += 1
                series.append((cur, int(tree.times[i]) - root_ts))
        return series
    if metric == "breadth":
        series = [(1, 0)]
        counts = {0: 1}
        cur = 1
        for i in range(k):
            d = int(tree.depths[i])
            counts[d] = counts.get(d, 0) + 1
            if counts[d] > cur:
                cur = counts[d]
                series.append((cur, int(tree.times[i]) - root_ts))
        return series
    if metric == "avg_depth":
        series = [(0.0, 0)]
        depth_sum = 0
        for i in range(k):
            depth_sum += int(tree.depths[i])
            series.append((depth_sum / (i + 2), int(tree.times[i]) - root_ts))
        return series
    return _virality_series(tree)


def _virality_series(tree: CascadeTree) -> list:
    """Virality after each event, via incremental pairwise-distance sums.

    Attaching leaf x under p adds sum_y dist(p,y) + t to the unordered total,
    and sum_y dist(p,y) = t*depth(p) + sum_depths - 2 * sum of subtree counts
    along root->p (root excluded). Subtree counts are kept per node and
    bumped along x's ancestor path, so each event costs O(depth).
    """
    series = [(0.0, 0)]
    k = len(tree.users)
    parent_node = np.concatenate([np.full(1, -1, dtype=np.int32), tree.parents])
    cnt = np.zeros(k + 1, dtype=np.int64)  # current subtree size per node
    cnt[0] = 1
    unordered = 0
    depth_sum = 0
    t_nodes = 1
    for i in range(k):
        node = i + 1
        path_cnt = 0
        a = int(tree.parents[i])
        while a > 0:  # root excluded from the path sum
            path_cnt += int(cnt[a])
            a = int(parent_node[a])
        dist_p = t_nodes * int(tree.depths[i] - 1) + depth_sum - 2 * path_cnt
        unordered += dist_p + t_nodes
        a = node
        while a >= 0:
            cnt[a] += 1
            a = int(parent_node[a])
        depth_sum += int(tree.depths[i])
        t_nodes += 1
        series.append((2.0 * unordered / (t_nodes * (t_nodes - 1)),
                       int(tree.times[i]) - tree.root_ts))
    return series


def filter_population(
    snapshot: Snapshot, labels: np.ndarray, flt: PopulationFilter
) -> np.ndarray:
    """Root-post indices: originals of the requested label, subset applied."""
    code = KH if flt.group == "KH" else NH
    mask = (snapshot.kind == PostKind.ORIGINAL) & (labels[snapshot.author] == code)
    if flt.subset == "attachments":
        mask &= snapshot.has_attachment
    elif flt.subset == "in_group":
        mask &= snapshot.group >= 0
    elif flt.subset == "in_topic":
        mask &= snapshot.topic >= 0
    return np.nonzero(mask)[0].astype(np.int64)


@dataclass
class DepthMix:
    depth: int
    kh_fraction: float
    nh_fraction: float
    reposters: int


def early_adopter_profile(trees, labels: np.ndarray) -> list:
    """Per-depth KH and NH fractions among reposters, depths >= 1.

    Fractions are relative to all reposters at that depth across the given
    trees; depths with no reposters are omitted.
    """
    total: dict = {}
    kh_cnt: dict = {}
    nh_cnt: dict = {}
    for tree in trees:
        for u, d in zip(tree.users.tolist(), tree.depths.tolist()):
            total[d] = total.get(d, 0) + 1
            lab = labels[u]
            if lab == KH:
                kh_cnt[d] = kh_cnt.get(d, 0) + 1
            elif lab == NH:
                nh_cnt[d] = nh_cnt.get(d, 0) + 1
    return [
        DepthMix(
            depth=d,
            kh_fraction=kh_cnt.get(d, 0) / total[d],
            nh_fraction=nh_cnt.get(d, 0) / total[d],
            reposters=total[d],
        )
        for d in sorted(total)
    ]


@dataclass
class CascadeBatch:
    metrics: list = field(default_factory=list)   # CascadeMetrics, in root order
    trees: dict = field(default_factory=dict)     # root -> CascadeTree, size >= 2 only


def measure_cascades(
    snapshot: Snapshot,
    roots: np.ndarray,
    threads: int = 1,
    collect_trees: bool = False,
) -> CascadeBatch:
    """Build and measure many cascades; identical output for any thread count.

    Roots with no resolved reposts short-circuit to the single-node metrics.
    The remainder are reconstructed against the shared immutable snapshot,
    in parallel when ``threads > 1``, and reassembled in root order.
    """
    roots = np.asarray(roots)
    lo = np.searchsorted(snapshot.repost_origins, roots, side="left")
    hi = np.searchsorted(snapshot.repost_origins, roots, side="right")
    busy = roots[hi > lo]

    def work(root: int):
        tree = build_cascade(snapshot, int(root))
        return int(root), tree, compute_metrics(tree)

    results: dict = {}
    if threads > 1 and len(busy) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for root, tree, m in pool.map(work, busy, chunksize=256):
                results[root] = (tree, m)
    else:
        for root in busy:
            r, tree, m = work(root)
            results[r] = (tree, m)

    batch = CascadeBatch()
    authors = snapshot.author
    for root in roots.tolist():
        hit = results.get(root)
        if hit is None:
            batch.metrics.append(CascadeMetrics(
                root, int(authors[root]), 1, 0, 1, 0.0, 0.0, 0
            ))
        else:
            tree, m = hit
            batch.metrics.append(m)
            if collect_trees and tree.size >= 2:
                batch.trees[root] = tree
    return batch
