"""Domain model: post events, the follower graph, and the immutable snapshot.

All analytics run against a :class:`Snapshot`, a frozen, densely indexed view
of one corpus. External string identifiers are interned to contiguous int32
indices at construction time; every downstream module works on those indices
and translates back only at export boundaries.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field, fields
from enum import IntEnum

import numpy as np

SNAPSHOT_MAGIC = b"CLSNAP01"
SNAPSHOT_VERSION = 1

# Engagement columns recognized in the post JSONL; all optional.
ENGAGEMENT_COLUMNS = ("likes", "dislikes", "score", "reply_count", "repost_count")

# Sentinels used in dense index arrays.
NO_PARENT = -1      # post has no parent (originals)
DANGLING = -2       # parent id never ingested, or repost chain unresolvable


class PipelineError(Exception):
    """Base class for fatal errors raised by this package."""


class IngestError(PipelineError):
    """Unreadable or structurally unusable input."""


class LexiconError(PipelineError):
    """Lexicon file empty or malformed beyond per-line recovery."""


class ConfigError(PipelineError):
    """Invalid generator or pipeline configuration."""


class PostKind(IntEnum):
    ORIGINAL = 0
    REPOST = 1
    REPLY = 2
    QUOTE = 3


KIND_FROM_NAME = {
    "original": PostKind.ORIGINAL,
    "repost": PostKind.REPOST,
    "reply": PostKind.REPLY,
    "quote": PostKind.QUOTE,
}
KIND_NAMES = {v: k for k, v in KIND_FROM_NAME.items()}


@dataclass
class IngestDiagnostics:
    """Per-ingest rejection and repair counters.

    Conservation: for the post stream, ``posts_accepted + malformed_lines +
    duplicate_post_ids == posts_in``; for the edge stream,
    ``edges_accepted + malformed_lines + duplicate_edges +
    self_follows_dropped == edges_in``. Dangling parents do not reject a
    record: the post is stored, the unresolvable reference is only counted.
    """

    posts_in: int = 0
    posts_accepted: int = 0
    edges_in: int = 0
    edges_accepted: int = 0
    malformed_lines: int = 0
    duplicate_post_ids: int = 0
    dangling_parents: int = 0
    duplicate_edges: int = 0
    self_follows_dropped: int = 0

    def merged(self, other: "IngestDiagnostics") -> "IngestDiagnostics":
        out = IngestDiagnostics()
        for f in fields(IngestDiagnostics):
            setattr(out, f.name, getattr(self, f.name) + getattr(other, f.name))
        return out

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(IngestDiagnostics)}


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Snapshot:
    """Immutable corpus view. Built once by :func:`cascade_lab.ingest.build_snapshot`.

    Posts are stored in timestamp order (stable in ingest order for ties);
    ``parent`` and ``origin`` hold dense post indices with ``NO_PARENT`` /
    ``DANGLING`` sentinels. ``origin`` resolves repost chains transitively to
    the ultimately reposted original post, and is what cascade and
    repost-network construction credit.
    """

    # string tables (dense index -> external id)
    user_ids: list
    post_ids: list
    group_ids: list
    topic_ids: list

    # per-post arrays, timestamp-ordered
    author: np.ndarray          # int32
    ts: np.ndarray              # int64 seconds
    kind: np.ndarray            # int8 PostKind
    parent: np.ndarray          # int32 post index / NO_PARENT / DANGLING
    origin: np.ndarray          # int32 resolved original / NO_PARENT / DANGLING
    has_attachment: np.ndarray  # bool
    group: np.ndarray           # int32 group index or -1
    topic: np.ndarray           # int32 topic index or -1
    bodies: list                # str or None per post

    # optional engagement columns actually present in the input
    engagement: dict            # name -> float64 array (NaN where absent)

    # follower graph, CSR over users, neighbor lists sorted ascending
    follow_out_indptr: np.ndarray   # who each user follows
    follow_out_indices: np.ndarray
    follow_in_indptr: np.ndarray    # who follows each user
    follow_in_indices: np.ndarray

    # per-user aggregates
    first_post_ts: np.ndarray   # int64, -1 for post-less users
    post_count: np.ndarray      # int32, all kinds
    original_count: np.ndarray  # int32, kind == original only
    corpus_end_ts: int

    # repost grouping: repost event indices sorted by (origin, ts, index)
    repost_events: np.ndarray   # int32 post indices of resolved reposts
    repost_origins: np.ndarray  # int32 origin post index, ascending

    unresolved_reposts: int
    diagnostics: IngestDiagnostics

    _user_index: dict = field(default_factory=dict, repr=False, compare=False)
    _post_index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for f in fields(Snapshot):
            v = getattr(self, f.name)
            if isinstance(v, np.ndarray):
                _frozen(v)
        self._user_index.update({u: i for i, u in enumerate(self.user_ids)})
        self._post_index.update({p: i for i, p in enumerate(self.post_ids)})

    # -- basic accessors ---------------------------------------------------

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    @property
    def n_posts(self) -> int:
        return len(self.post_ids)

    def user_index(self, external_id: str) -> int:
        return self._user_index[external_id]

    def post_index(self, external_id: str) -> int:
        return self._post_index[external_id]

    def followees(self, u: int) -> np.ndarray:
        return self.follow_out_indices[self.follow_out_indptr[u]:self.follow_out_indptr[u + 1]]

    def followers(self, u: int) -> np.ndarray:
        return self.follow_in_indices[self.follow_in_indptr[u]:self.follow_in_indptr[u + 1]]

    @property
    def follower_count(self) -> np.ndarray:
        return np.diff(self.follow_in_indptr)

    @property
    def following_count(self) -> np.ndarray:
        return np.diff(self.follow_out_indptr)

    @property
    def n_follow_edges(self) -> int:
        return int(self.follow_out_indices.shape[0])

    def reposts_of(self, root_post: int) -> np.ndarray:
        """Resolved repost events of one original, in (ts, event index) order."""
        lo = np.searchsorted(self.repost_origins, root_post, side="left")
        hi = np.searchsorted(self.repost_origins, root_post, side="right")
        return self.repost_events[lo:hi]

    def activity_span_seconds(self, u: int) -> int:
        """Seconds from the user's first post to the corpus end; -1 if post-less."""
        first = int(self.first_post_ts[u])
        if first < 0:
            return -1
        return int(self.corpus_end_ts) - first

    # -- binary cache ------------------------------------------------------

    _ARRAY_FIELDS = (
        "author", "ts", "kind", "parent", "origin", "has_attachment",
        "group", "topic",
        "follow_out_indptr", "follow_out_indices",
        "follow_in_indptr", "follow_in_indices",
        "first_post_ts", "post_count", "original_count",
        "repost_events", "repost_origins",
    )
    _JSON_FIELDS = ("user_ids", "post_ids", "group_ids", "topic_ids", "bodies")

    def save(self, path) -> None:
        """Write a versioned binary cache. Byte-deterministic for equal inputs."""
        with open(path, "wb") as f:
            f.write(SNAPSHOT_MAGIC)
            header = {
                "version": SNAPSHOT_VERSION,
                "corpus_end_ts": int(self.corpus_end_ts),
                "unresolved_reposts": int(self.unresolved_reposts),
                "diagnostics": self.diagnostics.to_dict(),
                "engagement_columns": sorted(self.engagement),
            }
            _write_json_block(f, header)
            for name in self._ARRAY_FIELDS:
                np.save(f, getattr(self, name))
            for name in sorted(self.engagement):
                np.save(f, self.engagement[name])
            for name in self._JSON_FIELDS:
                _write_json_block(f, getattr(self, name))

    @classmethod
    def load(cls, path) -> "Snapshot":
        with open(path, "rb") as f:
            magic = f.read(len(SNAPSHOT_MAGIC))
            if magic != SNAPSHOT_MAGIC:
                raise IngestError(f"{path}: not a snapshot cache (bad magic)")
            header = _read_json_block(f)
            if header.get("version") != SNAPSHOT_VERSION:
                raise IngestError(
                    f"{path}: unsupported snapshot version {header.get('version')}"
                )
            arrays = {name: np.load(f) for name in cls._ARRAY_FIELDS}
            engagement = {name: np.load(f) for name in header["engagement_columns"]}
            lists = {name: _read_json_block(f) for name in cls._JSON_FIELDS}
            diag = IngestDiagnostics(**header["diagnostics"])
            return cls(
                user_ids=lists["user_ids"], post_ids=lists["post_ids"],
                group_ids=lists["group_ids"], topic_ids=lists["topic_ids"],
                bodies=lists["bodies"], engagement=engagement,
                corpus_end_ts=header["corpus_end_ts"],
                unresolved_reposts=header["unresolved_reposts"],
                diagnostics=diag, **arrays,
            )


def _write_json_block(f: io.BufferedWriter, obj) -> None:
    data = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    f.write(len(data).to_bytes(8, "little"))
    f.write(data)


def _read_json_block(f: io.BufferedReader):
    n = int.from_bytes(f.read(8), "little")
    return json.loads(f.read(n).decode("utf-8"))
