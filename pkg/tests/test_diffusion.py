"""Repost network construction and belief averaging."""

import numpy as np
import pytest

from cascade_lab import (
    KH, NH, UNLABELED, PostKind,
    build_belief_network, build_repost_network, classify_users, run_degroot,
    stratify,
)
from cascade_lab.diffusion import RepostNetwork, DEFAULT_STRATA
from helpers import make_snapshot, post
from oracles import dense_degroot


def three_user_snapshot():
    """A posts originals; B and C each repost A and post their own.

    Influence on A: B reposted A 9 times against 3 own originals, C 5
    times against 10 own originals.
    """
    posts = [post(f"a{i}", "A", 100 + i) for i in range(17)]
    posts += [post(f"b{i}", "B", 300 + i) for i in range(3)]
    posts += [post(f"c{i}", "C", 400 + i) for i in range(10)]
    posts += [
        post(f"rb{i}", "B", 500 + i, kind="repost", parent=f"a{i}")
        for i in range(9)
    ]
    posts += [
        post(f"rc{i}", "C", 600 + i, kind="repost", parent=f"a{i}")
        for i in range(5)
    ]
    return make_snapshot(posts)


def test_three_user_network_weights():
    snap = three_user_snapshot()
    net = build_repost_network(snap)
    a, b, c = (snap.user_index(u) for u in "ABC")
    assert net.self_loop[a] == 17
    assert net.self_loop[b] == 3
    assert net.self_loop[c] == 10
    assert net.edge_weight(b, a) == 9
    assert net.edge_weight(c, a) == 5
    assert net.edge_weight(a, b) == 0


def test_three_user_single_iteration_beliefs():
    snap = three_user_snapshot()
    belief = build_belief_network(build_repost_network(snap))
    a, b, c = (snap.user_index(u) for u in "ABC")
    state = run_degroot(belief, np.array([a]), iterations=1)
    assert abs(state.beliefs[a] - 1.0) <= 1e-9
    assert abs(state.beliefs[b] - 0.75) <= 1e-9
    assert abs(state.beliefs[c] - 1.0 / 3.0) <= 1e-9


def test_influence_weights_normalized():
    snap = three_user_snapshot()
    belief = build_belief_network(build_repost_network(snap))
    a, b, c = (snap.user_index(u) for u in "ABC")
    assert belief.influence(on=b, of=a) == pytest.approx(0.75)
    assert belief.self_retention(b) == pytest.approx(0.25)
    assert belief.influence(on=c, of=a) == pytest.approx(1.0 / 3.0)
    assert belief.self_retention(a) == pytest.approx(1.0)


def test_isolated_user_keeps_belief():
    # a post-less, repost-less user has no row mass; identity row instead
    posts = [post("a", "A", 10)]
    snap = make_snapshot(posts, [("B", "A")])
    belief = build_belief_network(build_repost_network(snap))
    b = snap.user_index("B")
    state = run_degroot(belief, np.array([b]), iterations=4)
    assert state.beliefs[b] == pytest.approx(1.0)


def test_iterations_zero_returns_seed_vector():
    snap = three_user_snapshot()
    belief = build_belief_network(build_repost_network(snap))
    a = snap.user_index("A")
    state = run_degroot(belief, np.array([a]), iterations=0)
    want = np.zeros(3)
    want[a] = 1.0
    np.testing.assert_array_equal(state.beliefs, want)
    with pytest.raises(ValueError):
        run_degroot(belief, np.array([a]), iterations=-1)


def random_repost_network(rng, n):
    self_loop = rng.integers(0, 4, size=n)
    pairs = {}
    for _ in range(rng.integers(1, 4 * n)):
        u, v = int(rng.integers(n)), int(rng.integers(n))
        if u != v:
            pairs[(u, v)] = pairs.get((u, v), 0) + int(rng.integers(1, 6))
    if pairs:
        src = np.array([p[0] for p in pairs], dtype=np.int32)
        dst = np.array([p[1] for p in pairs], dtype=np.int32)
        w = np.array(list(pairs.values()), dtype=np.int64)
    else:
        src = np.empty(0, dtype=np.int32)
        dst = np.empty(0, dtype=np.int32)
        w = np.empty(0, dtype=np.int64)
    net = RepostNetwork(
        n_users=n, src=src, dst=dst, weight=w,
        self_loop=self_loop.astype(np.int64),
        self_reposts_skipped=0, unresolved_skipped=0,
    )
    weights = dict(pairs)
    for u in range(n):
        if self_loop[u]:
            weights[(u, u)] = int(self_loop[u])
    return net, weights


def test_degroot_matches_dense_oracle():
    rng = np.random.default_rng(42)
    for _ in range(40):
        n = int(rng.integers(2, 30))
        net, weights = random_repost_network(rng, n)
        belief = build_belief_network(net)
        k = int(rng.integers(1, max(2, n // 2)))
        seeds = rng.choice(n, size=k, replace=False)
        iters = int(rng.integers(0, 7))
        state = run_degroot(belief, seeds, iterations=iters)
        want = dense_degroot(n, weights, seeds.tolist(), iters)
        np.testing.assert_allclose(state.beliefs, want, atol=1e-9)


def test_matrix_rows_sum_to_one():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(2, 40))
        net, _ = random_repost_network(rng, n)
        belief = build_belief_network(net)
        sums = np.asarray(belief.matrix.sum(axis=1)).ravel()
        np.testing.assert_allclose(sums, 1.0, atol=1e-9)


def test_beliefs_stay_in_unit_interval():
    rng = np.random.default_rng(9)
    for _ in range(20):
        n = int(rng.integers(2, 30))
        net, _ = random_repost_network(rng, n)
        belief = build_belief_network(net)
        seeds = rng.choice(n, size=max(1, n // 3), replace=False)
        state = run_degroot(belief, seeds, iterations=6)
        assert np.all(state.beliefs >= 0.0)
        assert np.all(state.beliefs <= 1.0)


def test_clamped_seeds_stay_at_one():
    snap = three_user_snapshot()
    belief = build_belief_network(build_repost_network(snap))
    a, b, _ = (snap.user_index(u) for u in "ABC")
    clamped = run_degroot(belief, np.array([b]), iterations=5,
                          clamp_seeds=True)
    assert clamped.beliefs[b] == 1.0
    free = run_degroot(belief, np.array([b]), iterations=5)
    assert free.beliefs[b] < 1.0


def test_trajectory_recording():
    snap = three_user_snapshot()
    belief = build_belief_network(build_repost_network(snap))
    a = snap.user_index("A")
    state = run_degroot(belief, np.array([a]), iterations=3,
                        record_trajectory=True)
    assert len(state.trajectory) == 4     # initial vector plus each round
    np.testing.assert_array_equal(state.trajectory[-1], state.beliefs)


def test_self_repost_not_an_edge():
    posts = [
        post("a", "A", 10),
        post("r", "A", 20, kind="repost", parent="a"),
    ]
    net = build_repost_network(make_snapshot(posts))
    assert net.src.size == 0
    assert net.self_reposts_skipped == 1
    assert net.self_loop[0] == 1          # originals only, not the repost


def test_unresolved_reposts_skipped():
    posts = [
        post("a", "A", 10),
        post("q", "B", 20, kind="reply", parent="a", body="x"),
        post("r", "C", 30, kind="repost", parent="q"),
    ]
    net = build_repost_network(make_snapshot(posts))
    assert net.src.size == 0
    assert net.unresolved_skipped == 1


def test_repost_of_repost_credits_origin_author():
    posts = [
        post("a", "A", 10),
        post("r1", "B", 20, kind="repost", parent="a"),
        post("r2", "C", 30, kind="repost", parent="r1"),
    ]
    snap = make_snapshot(posts)
    net = build_repost_network(snap)
    a, b, c = (snap.user_index(u) for u in "ABC")
    assert net.edge_weight(c, a) == 1     # credited to the origin author
    assert net.edge_weight(c, b) == 0


def test_network_kinds_flag_includes_quotes():
    posts = [
        post("a", "A", 10),
        post("q", "B", 20, kind="quote", parent="a", body="x"),
    ]
    snap = make_snapshot(posts)
    assert build_repost_network(snap).src.size == 0
    net = build_repost_network(
        snap, kinds=(PostKind.REPOST, PostKind.QUOTE)
    )
    a, b = snap.user_index("A"), snap.user_index("B")
    assert net.edge_weight(b, a) == 1


def test_stratify_quartile_boundaries():
    state = run_degroot(
        build_belief_network(build_repost_network(three_user_snapshot())),
        np.array([0]), iterations=0,
    )
    state.beliefs = np.array([0.0, 0.24999, 0.25])
    strata = stratify(state, DEFAULT_STRATA)
    assert strata.tolist() == [0, 0, 1]
    state.beliefs = np.array([0.5, 0.75, 1.0])
    assert stratify(state, DEFAULT_STRATA).tolist() == [2, 3, 3]


def test_classify_thresholds_and_min_posts():
    posts = [post(f"p{u}{i}", u, 10 + i)
             for u in ("A", "B", "C", "D") for i in range(5)]
    posts += [post("x", "E", 99)]          # E has a single post
    snap = make_snapshot(posts)
    belief = build_belief_network(build_repost_network(snap))
    state = run_degroot(belief, np.array([0]), iterations=0)
    idx = {u: snap.user_index(u) for u in "ABCDE"}
    state.beliefs = np.zeros(5)
    state.beliefs[idx["A"]] = 0.75   # at the hate threshold: inclusive
    state.beliefs[idx["B"]] = 0.7499
    state.beliefs[idx["C"]] = 0.25   # at the non-hate threshold: excluded
    state.beliefs[idx["D"]] = 0.2499
    state.beliefs[idx["E"]] = 0.9    # too few posts
    labels = classify_users(state, snap)
    assert labels[idx["A"]] == KH
    assert labels[idx["B"]] == UNLABELED
    assert labels[idx["C"]] == UNLABELED
    assert labels[idx["D"]] == NH
    assert labels[idx["E"]] == UNLABELED
