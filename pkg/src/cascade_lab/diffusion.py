"""Repost network, row-stochastic belief network, and iterated belief averaging.

The repost network counts how often each user reposted each author
(transitively crediting the ultimately reposted original) plus a self-loop
equal to the user's original-post count. The belief network reverses and
row-normalizes it so that influence flows author -> reposter, and belief
updates are synchronous convex combinations of the previous iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .model import PostKind, Snapshot

ROW_SUM_TOL = 1e-9

UNLABELED, KH, NH = 0, 1, 2
LABEL_NAMES = {UNLABELED: "unlabeled", KH: "KH", NH: "NH"}

DEFAULT_STRATA = (0.25, 0.50, 0.75)


@dataclass(frozen=True)
class RepostNetwork:
    """Weighted user digraph: edge u->v counts reposts by u of v's originals."""

    n_users: int
    src: np.ndarray        # int32 reposter
    dst: np.ndarray        # int32 reposted author, src != dst
    weight: np.ndarray     # int64 repost counts
    self_loop: np.ndarray  # int64 original-post count per user
    self_reposts_skipped: int = 0
    unresolved_skipped: int = 0

    def out_strength(self) -> np.ndarray:
        """Total outgoing weight per user, self-loop included."""
        s = self.self_loop.astype(np.int64).copy()
        np.add.at(s, self.src, self.weight)
        return s

    def edge_weight(self, u: int, v: int) -> int:
        if u == v:
            return int(self.self_loop[u])
        mask = (self.src == u) & (self.dst == v)
        return int(self.weight[mask].sum())


@dataclass(frozen=True)
class BeliefNetwork:
    """Row-stochastic influence matrix M: new_belief = M @ belief.

    Row u holds the weights with which u adopts others' beliefs; users with
    no outgoing repost weight keep self-retention exactly 1.
    """

    matrix: sp.csr_matrix

    @property
    def n_users(self) -> int:
        return self.matrix.shape[0]

    def influence(self, on: int, of: int) -> float:
        return float(self.matrix[on, of])

    def self_retention(self, u: int) -> float:
        return float(self.matrix[u, u])


@dataclass
class BeliefState:
    beliefs: np.ndarray          # float64 in [0, 1]
    iterations: int
    seeds: np.ndarray            # int32 user indices
    strata: np.ndarray | None = None   # int8 in {0,1,2,3}
    labels: np.ndarray | None = None   # int8 in {UNLABELED, KH, NH}
    trajectory: list = field(default_factory=list)  # per-iteration copies, optional


def build_repost_network(
    snapshot: Snapshot, kinds: tuple = (PostKind.REPOST,)
) -> RepostNetwork:
    """Aggregate resolved repost events into weighted user->author edges.

    Self-reposts are skipped so the self-loop stays exactly the original-post
    count; unresolved chains (dangling or ending in a reply/quote) are skipped
    and counted.
    """
    ev_mask = np.isin(snapshot.kind, np.asarray(kinds, dtype=np.int8))
    ev = np.nonzero(ev_mask)[0]
    origin = snapshot.origin[ev]
    resolved = origin >= 0
    unresolved_skipped = int(np.count_nonzero(~resolved))
    ev = ev[resolved]
    reposter = snapshot.author[ev].astype(np.int64)
    credited = snapshot.author[snapshot.origin[ev]].astype(np.int64)

    not_self = reposter != credited
    self_reposts_skipped = int(np.count_nonzero(~not_self))
    reposter = reposter[not_self]
    credited = credited[not_self]

    n = snapshot.n_users
    pair = reposter * n + credited
    uniq, counts = np.unique(pair, return_counts=True)
    return RepostNetwork(
        n_users=n,
        src=(uniq // n).astype(np.int32),
        dst=(uniq % n).astype(np.int32),
        weight=counts.astype(np.int64),
        self_loop=snapshot.original_count.astype(np.int64),
        self_reposts_skipped=self_reposts_skipped,
        unresolved_skipped=unresolved_skipped,
    )


def build_belief_network(repost: RepostNetwork) -> BeliefNetwork:
    """Normalize each user's outgoing repost weights into influence weights.

    Row u of the result is ``weight(u->v)/S(u)`` for every reposted author v
    plus ``self_loop(u)/S(u)`` self-retention; rows with S(u)=0 get
    self-retention 1. Every row is checked to sum to 1 within 1e-9.
    """
    n = repost.n_users
    strength = repost.out_strength().astype(np.float64)
    safe = np.where(strength > 0, strength, 1.0)

    diag_w = np.where(
        strength > 0, repost.self_loop.astype(np.float64) / safe, 1.0
    )
    rows = np.concatenate([repost.src, np.arange(n, dtype=np.int32)])
    cols = np.concatenate([repost.dst, np.arange(n, dtype=np.int32)])
    vals = np.concatenate([repost.weight / safe[repost.src], diag_w])
    m = sp.csr_matrix(
        sp.coo_matrix((vals, (rows, cols)), shape=(n, n)), copy=False
    )
    m.sum_duplicates()

    row_sums = np.asarray(m.sum(axis=1)).ravel()
    worst = float(np.abs(row_sums - 1.0).max()) if n else 0.0
    if worst > ROW_SUM_TOL:
        raise ValueError(f"belief network row sums off by {worst:.3e}")
    return BeliefNetwork(m)


def run_degroot(
    network: BeliefNetwork,
    seeds,
    iterations: int = 5,
    clamp_seeds: bool = False,
    record_trajectory: bool = False,
) -> BeliefState:
    """Synchronous belief averaging from a binary seed assignment.

    Seeds start at belief 1, everyone else at 0. Each iteration computes the
    whole new vector from the previous one; with ``clamp_seeds`` the seed
    entries are reset to 1 after every iteration.
    """
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    seeds = np.asarray(seeds, dtype=np.int32)
    n = network.n_users
    beliefs = np.zeros(n, dtype=np.float64)
    beliefs[seeds] = 1.0
    trajectory = [beliefs.copy()] if record_trajectory else []
    m = network.matrix
    for _ in range(iterations):
        beliefs = m @ beliefs
        np.clip(beliefs, 0.0, 1.0, out=beliefs)
        if clamp_seeds:
            beliefs[seeds] = 1.0
        if record_trajectory:
            trajectory.append(beliefs.copy())
    return BeliefState(
        beliefs=beliefs, iterations=iterations, seeds=seeds, trajectory=trajectory
    )


def stratify(state: BeliefState, bounds: tuple = DEFAULT_STRATA) -> np.ndarray:
    """Assign strata 0..3 by belief quartile; the top stratum includes 1.0."""
    strata = np.digitize(state.beliefs, np.asarray(bounds), right=False).astype(np.int8)
    state.strata = strata
    return strata


def classify_users(
    state: BeliefState,
    snapshot: Snapshot,
    hate_threshold: float = 0.75,
    nonhate_threshold: float = 0.25,
    min_posts: int = 5,
) -> np.ndarray:
    """KH/NH labels from belief thresholds plus the minimum-post constraint.

    KH: belief >= hate_threshold; NH: belief < nonhate_threshold; both require
    at least ``min_posts`` posts of any kind, everyone else stays unlabeled.
    """
    enough = snapshot.post_count >= min_posts
    labels = np.full(snapshot.n_users, UNLABELED, dtype=np.int8)
    labels[(state.beliefs >= hate_threshold) & enough] = KH
    labels[(state.beliefs < nonhate_threshold) & enough] = NH
    state.labels = labels
    return labels
