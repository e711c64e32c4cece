"""File ingestion and snapshot construction.

Posts arrive as JSONL (one object per line), follower edges as a two-column
CSV with header ``follower_id,followee_id``. Malformed records are counted
and skipped, never fatal; an unreadable source is fatal. All external ids are
kept as strings here and interned to dense indices by :func:`build_snapshot`.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .model import (
    DANGLING,
    ENGAGEMENT_COLUMNS,
    KIND_FROM_NAME,
    NO_PARENT,
    IngestDiagnostics,
    IngestError,
    PostKind,
    Snapshot,
)

FOLLOWS_HEADER = ["follower_id", "followee_id"]

_NAN = float("nan")


@dataclass
class PostRecords:
    """Accepted post records in ingest order, still keyed by external ids."""

    ids: list = field(default_factory=list)
    users: list = field(default_factory=list)
    ts: list = field(default_factory=list)
    kinds: list = field(default_factory=list)
    parents: list = field(default_factory=list)      # str or None
    attachments: list = field(default_factory=list)
    groups: list = field(default_factory=list)       # str or None
    topics: list = field(default_factory=list)
    bodies: list = field(default_factory=list)       # str or None
    engagement: dict = field(default_factory=dict)   # col -> list of float

    def __len__(self) -> int:
        return len(self.ids)


@dataclass
class FollowRecords:
    """Deduplicated directed follow edges (follower, followee), ingest order."""

    edges: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.edges)


def _iter_lines(source):
    if isinstance(source, (str, os.PathLike)):
        try:
            f = open(source, "r", encoding="utf-8")
        except OSError as e:
            raise IngestError(f"cannot read {source}: {e}") from e
        with f:
            yield from f
    elif hasattr(source, "read"):
        yield from source
    else:
        yield from source


def _as_ts(value):
    """Integer seconds; integral floats accepted, bools and negatives rejected."""
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value if value >= 0 else None
    if isinstance(value, float) and math.isfinite(value) and value == int(value):
        iv = int(value)
        return iv if iv >= 0 else None
    return None


def ingest_posts(source) -> tuple[PostRecords, IngestDiagnostics]:
    """Parse a JSONL post stream.

    Duplicate post ids keep the first occurrence; schema violations are
    counted per record and skipped. Dangling parent references are counted
    once the whole stream is known (the post itself is still stored).
    """
    recs = PostRecords()
    diag = IngestDiagnostics()
    seen: dict = {}
    eng = recs.engagement

    for line in _iter_lines(source):
        if not line.strip():
            continue
        diag.posts_in += 1
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            diag.malformed_lines += 1
            continue
        if not isinstance(obj, dict):
            diag.malformed_lines += 1
            continue

        pid = obj.get("post_id")
        uid = obj.get("user_id")
        ts = _as_ts(obj.get("ts"))
        kind = KIND_FROM_NAME.get(obj.get("kind"))
        parent = obj.get("parent_id")
        attach = obj.get("attachment", False)
        if (
            not isinstance(pid, str) or not pid
            or not isinstance(uid, str) or not uid
            or ts is None or kind is None
            or not isinstance(attach, bool)
        ):
            diag.malformed_lines += 1
            continue
        # parent present iff kind is not original
        if kind == PostKind.ORIGINAL:
            if parent is not None:
                diag.malformed_lines += 1
                continue
        elif not isinstance(parent, str) or not parent:
            diag.malformed_lines += 1
            continue
        group = obj.get("group_id")
        topic = obj.get("topic_id")
        body = obj.get("body")
        if (
            (group is not None and not isinstance(group, str))
            or (topic is not None and not isinstance(topic, str))
            or (body is not None and not isinstance(body, str))
        ):
            diag.malformed_lines += 1
            continue
        if pid in seen:
            diag.duplicate_post_ids += 1
            continue

        seen[pid] = len(recs.ids)
        recs.ids.append(pid)
        recs.users.append(uid)
        recs.ts.append(ts)
        recs.kinds.append(int(kind))
        recs.parents.append(parent)
        recs.attachments.append(attach)
        recs.groups.append(group)
        recs.topics.append(topic)
        recs.bodies.append(body)
        n = len(recs.ids)
        for col in ENGAGEMENT_COLUMNS:
            v = obj.get(col)
            ok = isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)
            if ok and col not in eng:
                eng[col] = [_NAN] * (n - 1)
            if col in eng:
                eng[col].append(float(v) if ok else _NAN)

    diag.posts_accepted = len(recs.ids)
    for parent in recs.parents:
        if parent is not None and parent not in seen:
            diag.dangling_parents += 1
    return recs, diag


def ingest_follows(source) -> tuple[FollowRecords, IngestDiagnostics]:
    """Parse the follower-edge CSV. Requires the two-column header row."""
    recs = FollowRecords()
    diag = IngestDiagnostics()
    reader = csv.reader(_iter_lines(source))
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError("follows source is empty (missing header)") from None
    if [h.strip() for h in header] != FOLLOWS_HEADER:
        raise IngestError(f"follows header must be {','.join(FOLLOWS_HEADER)!r}")

    seen = set()
    for row in reader:
        if not row:
            continue
        diag.edges_in += 1
        if len(row) != 2 or not row[0] or not row[1]:
            diag.malformed_lines += 1
            continue
        follower, followee = row[0], row[1]
        if follower == followee:
            diag.self_follows_dropped += 1
            continue
        edge = (follower, followee)
        if edge in seen:
            diag.duplicate_edges += 1
            continue
        seen.add(edge)
        recs.edges.append(edge)
    diag.edges_accepted = len(recs.edges)
    return recs, diag


def build_snapshot(
    posts: PostRecords,
    follows: FollowRecords,
    diagnostics: IngestDiagnostics | None = None,
) -> Snapshot:
    """Intern, sort, resolve, and freeze one corpus into a :class:`Snapshot`.

    Users mentioned only in posts or only in edges are both present. Posts
    are ordered by (timestamp, ingest order); repost chains are resolved
    transitively to their ultimately reposted original, with cycles and
    chains ending in replies/quotes marked unresolved.
    """
    n_posts = len(posts)
    if n_posts == 0:
        raise IngestError("empty post store: nothing to analyze")
    diag = diagnostics if diagnostics is not None else IngestDiagnostics()

    # users interned by first appearance: post authors, then edge endpoints
    user_index: dict = {}
    user_ids: list = []

    def intern_user(uid: str) -> int:
        i = user_index.get(uid)
        if i is None:
            i = len(user_ids)
            user_index[uid] = i
            user_ids.append(uid)
        return i

    author_raw = np.fromiter(
        (intern_user(u) for u in posts.users), dtype=np.int32, count=n_posts
    )
    edges_arr = np.empty((len(follows.edges), 2), dtype=np.int32)
    for k, (a, b) in enumerate(follows.edges):
        edges_arr[k, 0] = intern_user(a)
        edges_arr[k, 1] = intern_user(b)
    n_users = len(user_ids)

    # timestamp-stable order, then dense post indices in that order
    ts_raw = np.asarray(posts.ts, dtype=np.int64)
    order = np.argsort(ts_raw, kind="stable")
    ts = ts_raw[order]
    author = author_raw[order]
    kind = np.asarray(posts.kinds, dtype=np.int8)[order]
    has_attachment = np.asarray(posts.attachments, dtype=bool)[order]
    post_ids = [posts.ids[i] for i in order]
    bodies = [posts.bodies[i] for i in order]
    post_index = {p: i for i, p in enumerate(post_ids)}

    group_ids, group = _intern_optional([posts.groups[i] for i in order])
    topic_ids, topic = _intern_optional([posts.topics[i] for i in order])

    parent = np.full(n_posts, NO_PARENT, dtype=np.int32)
    for i, src in enumerate(order):
        p = posts.parents[src]
        if p is not None:
            parent[i] = post_index.get(p, DANGLING)

    origin = _resolve_origins(kind, parent)
    repost_mask = (kind == PostKind.REPOST)
    unresolved = int(np.count_nonzero(repost_mask & (origin < 0)))

    resolved_reposts = np.nonzero(repost_mask & (origin >= 0))[0]
    sub_origin = origin[resolved_reposts]
    grp_order = np.lexsort((resolved_reposts, ts[resolved_reposts], sub_origin))
    repost_events = resolved_reposts[grp_order].astype(np.int32)
    repost_origins = sub_origin[grp_order].astype(np.int32)

    engagement = {
        col: np.asarray(vals, dtype=np.float64)[order]
        for col, vals in posts.engagement.items()
    }

    out_indptr, out_indices = _csr(edges_arr[:, 0], edges_arr[:, 1], n_users)
    in_indptr, in_indices = _csr(edges_arr[:, 1], edges_arr[:, 0], n_users)

    post_count = np.bincount(author, minlength=n_users).astype(np.int32)
    original_count = np.bincount(
        author[kind == PostKind.ORIGINAL], minlength=n_users
    ).astype(np.int32)
    first = np.full(n_users, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(first, author, ts)
    first_post_ts = np.where(post_count > 0, first, np.int64(-1))

    return Snapshot(
        user_ids=user_ids, post_ids=post_ids,
        group_ids=group_ids, topic_ids=topic_ids,
        author=author, ts=ts, kind=kind, parent=parent, origin=origin,
        has_attachment=has_attachment, group=group, topic=topic,
        bodies=bodies, engagement=engagement,
        follow_out_indptr=out_indptr, follow_out_indices=out_indices,
        follow_in_indptr=in_indptr, follow_in_indices=in_indices,
        first_post_ts=first_post_ts, post_count=post_count,
        original_count=original_count, corpus_end_ts=int(ts[-1]),
        repost_events=repost_events, repost_origins=repost_origins,
        unresolved_reposts=unresolved, diagnostics=diag,
    )


def load_snapshot(posts_path, follows_path) -> Snapshot:
    """Convenience: ingest both sources and build the snapshot."""
    posts, pdiag = ingest_posts(posts_path)
    follows, fdiag = ingest_follows(follows_path)
    return build_snapshot(posts, follows, pdiag.merged(fdiag))


def _intern_optional(values: list) -> tuple[list, np.ndarray]:
    table: dict = {}
    ids: list = []
    out = np.full(len(values), -1, dtype=np.int32)
    for i, v in enumerate(values):
        if v is None:
            continue
        j = table.get(v)
        if j is None:
            j = len(ids)
            table[v] = j
            ids.append(v)
        out[i] = j
    return ids, out


def _resolve_origins(kind: np.ndarray, parent: np.ndarray) -> np.ndarray:
    """Chase parent chains through reposts; memoized, cycle-safe.

    origin[i] = i for originals; for other kinds, the parent if it is an
    original, the parent's origin if the parent is a repost, else DANGLING.
    """
    n = len(kind)
    origin = np.full(n, NO_PARENT, dtype=np.int32)
    origin[kind == PostKind.ORIGINAL] = np.nonzero(kind == PostKind.ORIGINAL)[0]
    done = (kind == PostKind.ORIGINAL)

    for i in range(n):
        if done[i]:
            continue
        # path[0] may be any non-original; every appended ancestor is a repost,
        # so all entries share the same resolved origin
        path = [i]
        cur = i
        result = DANGLING
        while True:
            p = parent[cur]
            if p < 0:
                break  # dangling reference
            if kind[p] == PostKind.ORIGINAL:
                result = p
                break
            if kind[p] != PostKind.REPOST:
                break  # chain terminates at a reply/quote: no reposted original
            if done[p]:
                result = origin[p]
                break
            if p in path:
                break  # defensive: malformed input forming a cycle
            path.append(p)
            cur = p
        for node in path:
            origin[node] = result
            done[node] = True
    return origin


def _csr(src: np.ndarray, dst: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((dst, src))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, dst[order].astype(np.int32)
