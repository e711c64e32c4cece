"""
Rebuilding an influence tree from repost timestamps
===================================================

Reposts name the original post, not the account that actually exposed the
reposter. The tree is recovered by replaying reposts in time order and
attaching each reposter under the followed, already-infected user with the
earliest event; reposters with no prior exposure among their followees are
removed.
"""

import json

from cascade_lab import (
    build_cascade, build_snapshot, compute_metrics, ingest_follows,
    ingest_posts, temporal_profile,
)


def event(pid, uid, ts, kind="original", parent=None):
    obj = {"post_id": pid, "user_id": uid, "ts": ts, "kind": kind}
    if parent:
        obj["parent_id"] = parent
    return json.dumps(obj)


# A originates; B reposts quickly; C follows both A and B and reposts
# later; D follows only B; E follows nobody relevant and gets removed
lines = [
    event("root", "A", 1000),
    event("r1", "B", 1060, "repost", "root"),
    event("r2", "C", 1200, "repost", "root"),
    event("r3", "D", 1500, "repost", "root"),
    event("r4", "E", 1800, "repost", "root"),
]
follows = ["follower_id,followee_id",
           "B,A", "C,A", "C,B", "D,B", "E,Z"]

precs, pdiag = ingest_posts(lines)
frecs, fdiag = ingest_follows(follows)
snap = build_snapshot(precs, frecs, pdiag.merged(fdiag))

tree = build_cascade(snap, snap.post_index("root"))

# C saw the post from A (t=1000) before B's repost (t=1060), so the
# earlier exposure wins even though both are candidates
print("attachment order (node 0 is the root):")
for i, u in enumerate(tree.users.tolist(), start=1):
    p = tree.parents[i - 1]
    pname = "root" if p == 0 else snap.user_ids[tree.users[p - 1]]
    print(f"  node {i}: {snap.user_ids[u]} under {pname}, "
          f"depth {tree.depths[i - 1]}, t={tree.times[i - 1]}")
print("removed reposters:", tree.removed)

m = compute_metrics(tree)
print(f"size={m.size} depth={m.depth} breadth={m.breadth} "
      f"avg_depth={m.avg_depth:.3f} virality={m.virality:.3f}")

# the same metrics as growth curves, elapsed seconds since the root
for metric in ("size", "depth", "virality"):
    print(metric, "series:",
          [(round(v, 3), e) for v, e in temporal_profile(tree, metric)])
