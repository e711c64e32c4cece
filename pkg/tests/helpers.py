"""Shared fixture builders for the test suite."""

import json

from cascade_lab import build_snapshot, ingest_follows, ingest_posts


def post(pid, uid, ts, kind="original", parent=None, **extra):
    obj = {"post_id": pid, "user_id": uid, "ts": ts, "kind": kind}
    if parent is not None:
        obj["parent_id"] = parent
    obj.update(extra)
    return obj


def make_snapshot(posts, follows=()):
    """Snapshot from dicts (see ``post``) and (follower, followee) pairs."""
    plines = [json.dumps(p) for p in posts]
    flines = ["follower_id,followee_id"]
    flines += [f"{a},{b}" for a, b in follows]
    precs, pdiag = ingest_posts(plines)
    frecs, fdiag = ingest_follows(flines)
    return build_snapshot(precs, frecs, pdiag.merged(fdiag))


def chain_posts(user_count, base_ts=1000):
    """One original per user u0..u{n-1}, a second apart."""
    return [post(f"p{i}", f"u{i}", base_ts + i) for i in range(user_count)]
