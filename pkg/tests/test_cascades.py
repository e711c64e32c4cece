"""Influence-tree reconstruction, metrics, and profiles."""

import numpy as np
import pytest

from cascade_lab import (
    KH, NH, PopulationFilter, build_cascade, compute_metrics,
    early_adopter_profile, filter_population, measure_cascades,
    structural_virality, temporal_profile,
)
from cascade_lab.cascades import CascadeTree
from helpers import make_snapshot, post
from oracles import brute_cascade, brute_tree_metrics, wiener_bfs


def test_first_exposure_wins_over_recent():
    # C follows both A (the root, earlier event) and B (reposted later);
    # the earlier exposure is the chosen influencer.
    posts = [
        post("root", "A", 100),
        post("rb", "B", 200, kind="repost", parent="root"),
        post("rc", "C", 300, kind="repost", parent="root"),
    ]
    snap = make_snapshot(posts, [("B", "A"), ("C", "A"), ("C", "B")])
    tree = build_cascade(snap, snap.post_index("root"))
    c = snap.user_index("C")
    assert tree.size == 3
    idx = tree.users.tolist().index(c)
    assert tree.parents[idx] == 0          # attached to the root, not to B
    assert tree.depths[idx] == 1


def test_chain_and_star_metrics():
    chain = [
        post("root", "u0", 100),
        post("r1", "u1", 110, kind="repost", parent="root"),
        post("r2", "u2", 120, kind="repost", parent="root"),
    ]
    snap = make_snapshot(chain, [("u1", "u0"), ("u2", "u1")])
    m = compute_metrics(build_cascade(snap, snap.post_index("root")))
    assert (m.size, m.depth, m.breadth) == (3, 2, 1)
    assert m.avg_depth == pytest.approx(1.0)
    assert m.virality == pytest.approx(8.0 / 6.0)

    star = [post("root", "u0", 100)] + [
        post(f"r{i}", f"u{i}", 100 + i, kind="repost", parent="root")
        for i in range(1, 5)
    ]
    snap = make_snapshot(star, [(f"u{i}", "u0") for i in range(1, 5)])
    m = compute_metrics(build_cascade(snap, snap.post_index("root")))
    assert (m.size, m.depth, m.breadth) == (5, 1, 4)
    assert m.avg_depth == pytest.approx(0.8)
    assert m.virality == pytest.approx(2 * 4 / 5)


def test_star_virality_closed_form():
    for k in range(1, 11):
        posts = [post("root", "u0", 100)] + [
            post(f"r{i}", f"u{i}", 200 + i, kind="repost", parent="root")
            for i in range(1, k + 1)
        ]
        follows = [(f"u{i}", "u0") for i in range(1, k + 1)]
        snap = make_snapshot(posts, follows)
        tree = build_cascade(snap, snap.post_index("root"))
        assert structural_virality(tree) == pytest.approx(2 * k / (k + 1))


def test_single_node_tree():
    snap = make_snapshot([post("root", "u0", 100)])
    tree = build_cascade(snap, 0)
    m = compute_metrics(tree)
    assert (m.size, m.depth, m.breadth, m.avg_depth, m.virality, m.removed) \
        == (1, 0, 1, 0.0, 0.0, 0)


def test_non_original_root_rejected():
    posts = [
        post("root", "u0", 100),
        post("r", "u1", 200, kind="repost", parent="root"),
    ]
    snap = make_snapshot(posts, [("u1", "u0")])
    with pytest.raises(ValueError):
        build_cascade(snap, snap.post_index("r"))


def test_same_second_exposure_does_not_qualify():
    posts = [
        post("root", "u0", 100),
        post("r", "u1", 100, kind="repost", parent="root"),
    ]
    snap = make_snapshot(posts, [("u1", "u0")])
    tree = build_cascade(snap, snap.post_index("root"))
    assert tree.size == 1
    assert tree.removed == 1


def test_reposter_following_nobody_is_removed():
    posts = [
        post("root", "u0", 100),
        post("r", "u1", 200, kind="repost", parent="root"),
    ]
    snap = make_snapshot(posts)    # no follow edges at all
    tree = build_cascade(snap, snap.post_index("root"))
    assert tree.size == 1 and tree.removed == 1


def test_duplicate_reposter_first_wins():
    posts = [
        post("root", "u0", 100),
        post("r1", "u1", 200, kind="repost", parent="root"),
        post("r2", "u1", 300, kind="repost", parent="root"),
    ]
    snap = make_snapshot(posts, [("u1", "u0")])
    tree = build_cascade(snap, snap.post_index("root"))
    assert tree.size == 2
    assert tree.times.tolist() == [200]


def test_removed_user_stays_removed():
    # u1's first repost precedes any exposure; the later one is ignored
    posts = [
        post("root", "u0", 100),
        post("r1", "u1", 100, kind="repost", parent="root"),
        post("r2", "u1", 300, kind="repost", parent="root"),
    ]
    snap = make_snapshot(posts, [("u1", "u0")])
    tree = build_cascade(snap, snap.post_index("root"))
    assert tree.size == 1
    assert tree.removed == 1


def test_equal_time_candidates_take_smaller_index():
    # B and D repost in the same second; C follows only them
    posts = [
        post("root", "A", 100),
        post("rb", "B", 200, kind="repost", parent="root"),
        post("rd", "D", 200, kind="repost", parent="root"),
        post("rc", "C", 300, kind="repost", parent="root"),
    ]
    follows = [("B", "A"), ("D", "A"), ("C", "B"), ("C", "D")]
    snap = make_snapshot(posts, follows)
    tree = build_cascade(snap, snap.post_index("root"))
    c = snap.user_index("C")
    idx = tree.users.tolist().index(c)
    parent_user = tree.users[tree.parents[idx] - 1] if tree.parents[idx] else None
    want = min(snap.user_index("B"), snap.user_index("D"))
    assert tree.parents[idx] != 0
    assert parent_user == want


def random_corpus(rng, n_users=12, n_roots=3):
    follows = []
    for u in range(n_users):
        for v in range(n_users):
            if u != v and rng.random() < 0.25:
                follows.append((f"u{u:02d}", f"u{v:02d}"))
    posts = []
    for i in range(n_roots):
        author = int(rng.integers(n_users))
        posts.append(post(f"o{i}", f"u{author:02d}", int(rng.integers(100, 160))))
    for j in range(int(rng.integers(5, 45))):
        author = int(rng.integers(n_users))
        root = int(rng.integers(n_roots))
        ts = int(rng.integers(100, 400))
        posts.append(
            post(f"r{j:03d}", f"u{author:02d}", ts, kind="repost",
                 parent=f"o{root}")
        )
    return make_snapshot(posts, follows)


def test_random_cascades_match_brute_oracle():
    rng = np.random.default_rng(1234)
    for _ in range(120):
        snap = random_corpus(rng)
        for root in np.nonzero(snap.kind == 0)[0].tolist():
            tree = build_cascade(snap, root)
            members, parent_of, time_of, removed = brute_cascade(snap, root)
            got_users = {tree.root_user} | set(tree.users.tolist())
            assert got_users == members
            assert tree.removed == removed
            for i, u in enumerate(tree.users.tolist()):
                p = tree.parents[i]
                p_user = tree.root_user if p == 0 else int(tree.users[p - 1])
                assert parent_of[u] == p_user
                assert time_of[u] == tree.times[i]


def test_tree_invariants_on_random_builds():
    rng = np.random.default_rng(77)
    for _ in range(40):
        snap = random_corpus(rng, n_users=15, n_roots=2)
        for root in np.nonzero(snap.kind == 0)[0].tolist():
            tree = build_cascade(snap, root)
            k = len(tree.users)
            assert len(set(tree.users.tolist())) == k
            for i in range(k):
                p = int(tree.parents[i])
                assert 0 <= p <= i
                p_t = tree.root_ts if p == 0 else int(tree.times[p - 1])
                p_d = 0 if p == 0 else int(tree.depths[p - 1])
                assert p_t < int(tree.times[i])
                assert tree.depths[i] == p_d + 1


def test_metrics_match_brute_recomputation():
    rng = np.random.default_rng(5)
    for _ in range(60):
        snap = random_corpus(rng)
        for root in np.nonzero(snap.kind == 0)[0].tolist():
            tree = build_cascade(snap, root)
            m = compute_metrics(tree)
            n, d, b, ad = brute_tree_metrics(tree.parents.tolist())
            assert (m.size, m.depth, m.breadth) == (n, d, b)
            assert m.avg_depth == pytest.approx(ad)
            assert m.virality == pytest.approx(
                wiener_bfs(tree.parents.tolist()), abs=1e-12
            )


def test_temporal_profile_examples():
    posts = [
        post("root", "u0", 1000),
        post("r1", "u1", 1010, kind="repost", parent="root"),
        post("r2", "u2", 1020, kind="repost", parent="root"),
    ]
    snap = make_snapshot(posts, [("u1", "u0"), ("u2", "u1")])
    tree = build_cascade(snap, snap.post_index("root"))
    assert temporal_profile(tree, "size") == [(1, 0), (2, 10), (3, 20)]
    assert temporal_profile(tree, "depth") == [(0, 0), (1, 10), (2, 20)]
    assert temporal_profile(tree, "breadth") == [(1, 0)]
    avg = temporal_profile(tree, "avg_depth")
    assert avg[0] == (0.0, 0)
    assert avg[-1][0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        temporal_profile(tree, "momentum")


def test_temporal_series_consistent_with_final_metrics():
    rng = np.random.default_rng(88)
    for _ in range(25):
        snap = random_corpus(rng, n_users=18, n_roots=1)
        root = int(np.nonzero(snap.kind == 0)[0][0])
        tree = build_cascade(snap, root)
        m = compute_metrics(tree)
        for metric, want in (
            ("size", m.size), ("depth", m.depth), ("breadth", m.breadth),
            ("avg_depth", m.avg_depth), ("virality", m.virality),
        ):
            series = temporal_profile(tree, metric)
            assert series[-1][0] == pytest.approx(want)
            values = [v for v, _ in series]
            elapsed = [e for _, e in series]
            assert elapsed == sorted(elapsed)
            if metric in ("size", "depth", "breadth"):
                assert values == sorted(values)
                assert values == list(range(values[0], values[-1] + 1))


def test_virality_series_matches_prefix_recomputation():
    rng = np.random.default_rng(31)
    snap = random_corpus(rng, n_users=20, n_roots=1)
    root = int(np.nonzero(snap.kind == 0)[0][0])
    tree = build_cascade(snap, root)
    series = temporal_profile(tree, "virality")
    assert len(series) == len(tree.users) + 1
    for i in range(len(tree.users) + 1):
        prefix = CascadeTree(
            root_post=tree.root_post, root_user=tree.root_user,
            root_ts=tree.root_ts,
            users=tree.users[:i], times=tree.times[:i],
            parents=tree.parents[:i], depths=tree.depths[:i],
            removed=0,
        )
        assert series[i][0] == pytest.approx(
            wiener_bfs(prefix.parents.tolist()), abs=1e-12
        )


def test_early_adopter_profile_fractions():
    posts = [
        post("root", "A", 100),
        post("r1", "B", 200, kind="repost", parent="root"),
        post("r2", "C", 300, kind="repost", parent="root"),
        post("r3", "D", 400, kind="repost", parent="r1"),
    ]
    follows = [("B", "A"), ("C", "A"), ("D", "B")]
    snap = make_snapshot(posts, follows)
    tree = build_cascade(snap, snap.post_index("root"))
    labels = np.zeros(snap.n_users, dtype=np.int8)
    labels[snap.user_index("B")] = KH
    labels[snap.user_index("C")] = NH
    # D stays unlabeled
    rows = early_adopter_profile([tree], labels)
    assert [r.depth for r in rows] == [1, 2]
    d1 = rows[0]
    assert d1.reposters == 2
    assert d1.kh_fraction == pytest.approx(0.5)
    assert d1.nh_fraction == pytest.approx(0.5)
    d2 = rows[1]
    assert d2.reposters == 1
    assert d2.kh_fraction == 0.0 and d2.nh_fraction == 0.0


def test_filter_population_subsets():
    posts = [
        post("k1", "K", 100),
        post("k2", "K", 110, attachment=True),
        post("k3", "K", 120, group_id="g"),
        post("k4", "K", 130, topic_id="t"),
        post("k5", "K", 140, kind="reply", parent="k1", body="x"),
        post("k6", "K", 150, kind="quote", parent="k1", body="y"),
        post("n1", "N", 200),
        post("u1", "U", 300),
    ]
    snap = make_snapshot(posts)
    labels = np.zeros(snap.n_users, dtype=np.int8)
    labels[snap.user_index("K")] = KH
    labels[snap.user_index("N")] = NH

    def ids(group, subset="all"):
        roots = filter_population(snap, labels, PopulationFilter(group, subset))
        return sorted(snap.post_ids[r] for r in roots.tolist())

    assert ids("KH") == ["k1", "k2", "k3", "k4"]   # replies/quotes excluded
    assert ids("KH", "attachments") == ["k2"]
    assert ids("KH", "in_group") == ["k3"]
    assert ids("KH", "in_topic") == ["k4"]
    assert ids("NH") == ["n1"]
    with pytest.raises(ValueError):
        PopulationFilter("XX")
    with pytest.raises(ValueError):
        PopulationFilter("KH", "weekly")


def test_measure_cascades_threads_and_fast_path():
    rng = np.random.default_rng(6)
    snap = random_corpus(rng, n_users=16, n_roots=4)
    roots = np.nonzero(snap.kind == 0)[0]
    one = measure_cascades(snap, roots, threads=1, collect_trees=True)
    four = measure_cascades(snap, roots, threads=4, collect_trees=True)
    assert one.metrics == four.metrics
    assert set(one.trees) == set(four.trees)
    for m in one.metrics:
        direct = compute_metrics(build_cascade(snap, m.root_post))
        assert m == direct
    for root, tree in one.trees.items():
        assert tree.size >= 2
