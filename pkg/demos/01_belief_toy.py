"""
Belief averaging on a three-user repost network
===============================================

A posts originals only. B reposts A 9 times against 3 originals of its
own; C reposts A 5 times against 10 originals. Seeding A at belief 1 and
averaging once should leave A at 1, pull B to 9/12 = 0.75 and C to
5/15 = 1/3.
"""

import json

import numpy as np

from cascade_lab import (
    build_belief_network, build_repost_network, build_snapshot,
    ingest_follows, ingest_posts, run_degroot, stratify,
)

# assemble the event log inline; reposts carry the reposted post's id
posts = [{"post_id": f"a{i}", "user_id": "A", "ts": 100 + i,
          "kind": "original"} for i in range(17)]
posts += [{"post_id": f"b{i}", "user_id": "B", "ts": 300 + i,
           "kind": "original"} for i in range(3)]
posts += [{"post_id": f"c{i}", "user_id": "C", "ts": 400 + i,
           "kind": "original"} for i in range(10)]
posts += [{"post_id": f"rb{i}", "user_id": "B", "ts": 500 + i,
           "kind": "repost", "parent_id": f"a{i}"} for i in range(9)]
posts += [{"post_id": f"rc{i}", "user_id": "C", "ts": 600 + i,
           "kind": "repost", "parent_id": f"a{i}"} for i in range(5)]

precs, pdiag = ingest_posts(json.dumps(p) for p in posts)
frecs, fdiag = ingest_follows(["follower_id,followee_id"])
snap = build_snapshot(precs, frecs, pdiag.merged(fdiag))

# edge u -> v counts u's reposts credited to v; the self-loop counts
# u's own originals
net = build_repost_network(snap)
a, b, c = (snap.user_index(u) for u in "ABC")
print("repost weights: B->A", net.edge_weight(b, a),
      " C->A", net.edge_weight(c, a))
print("self-loops:", {u: int(net.self_loop[i])
                      for u, i in zip("ABC", (a, b, c))})

# normalize each row into a convex combination and average once
belief = build_belief_network(net)
state = run_degroot(belief, seeds=np.array([a]), iterations=1)
for name, idx in zip("ABC", (a, b, c)):
    print(f"belief({name}) after 1 iteration = {state.beliefs[idx]:.6f}")

# more iterations keep pulling B and C toward their influencer
state5 = run_degroot(belief, seeds=np.array([a]), iterations=5)
print("after 5 iterations:",
      np.round(state5.beliefs[[a, b, c]], 4).tolist())

# quartile strata: 0 = [0, .25), ..., 3 = [.75, 1]
print("strata:", stratify(state5).tolist())
