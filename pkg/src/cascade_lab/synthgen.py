"""Synthetic follow graphs and event logs with a planted hateful community.

Everything is drawn from one numpy Generator seeded by the config, so a
fixed seed reproduces the output files byte for byte. The planted class
assignment is written alongside the corpus and serves as ground truth for
end-to-end pipeline checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .model import ConfigError

BASE_EPOCH = 1483228800  # 2017-01-01T00:00:00Z
SECONDS_PER_DAY = 86400

DEFAULT_KEYWORDS = ("kike", "paki", "beached whale")

_FILLER = (
    "the", "a", "this", "that", "today", "here", "now", "look", "see",
    "news", "people", "thing", "story", "post", "day", "time", "real",
    "good", "bad", "big", "new", "old", "right", "true", "talk", "read",
)


@dataclass(frozen=True)
class GenConfig:
    n_users: int = 10000
    hate_fraction: float = 0.05
    homophily: float = 0.9          # chance a follow / repost stays in-class
    mean_follows: float = 20.0
    hate_posts_per_day: float = 2.5
    normal_posts_per_day: float = 0.15
    hate_repost_prob: float = 0.45
    normal_repost_prob: float = 0.25
    keyword_prob: float = 0.6       # per hateful original
    duration_days: float = 21.0
    seed: int = 0
    discover_prob: float = 0.05     # repost found off-feed, not via a followee
    reply_prob: float = 0.1
    quote_prob: float = 0.05
    attachment_prob: float = 0.15
    group_prob: float = 0.1
    topic_prob: float = 0.1
    n_groups: int = 20
    n_topics: int = 30
    engagement: bool = True
    hate_like_rate: float = 2.5     # mean likes per hateful user's post
    normal_like_rate: float = 1.5
    keywords: tuple = DEFAULT_KEYWORDS

    def validate(self) -> None:
        if self.n_users < 2:
            raise ConfigError("n_users must be at least 2")
        if not 0.0 < self.hate_fraction < 1.0:
            raise ConfigError("hate_fraction must be in (0,1)")
        for name in ("homophily", "hate_repost_prob", "normal_repost_prob",
                     "keyword_prob", "reply_prob", "quote_prob",
                     "attachment_prob", "group_prob", "topic_prob",
                     "discover_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0,1], got {v}")
        if self.reply_prob + self.quote_prob > 1.0:
            raise ConfigError("reply_prob + quote_prob must not exceed 1")
        for name in ("mean_follows", "hate_posts_per_day",
                     "normal_posts_per_day", "duration_days",
                     "hate_like_rate", "normal_like_rate"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.mean_follows >= self.n_users:
            raise ConfigError(
                f"mean_follows ({self.mean_follows}) must be below "
                f"n_users ({self.n_users})"
            )
        if self.n_groups < 1 or self.n_topics < 1:
            raise ConfigError("n_groups and n_topics must be at least 1")
        if not self.keywords:
            raise ConfigError("keywords must be non-empty")

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["keywords"] = list(self.keywords)
        return d


def config_from_mapping(pairs: dict, base: GenConfig = None) -> GenConfig:
    """Apply string key=value overrides onto a config, with type coercion."""
    base = base or GenConfig()
    types = {f.name: f.type for f in fields(GenConfig)}
    updates = {}
    for key, raw in pairs.items():
        if key not in types:
            raise ConfigError(f"unknown generator option {key!r}")
        if key == "keywords":
            value = tuple(
                t.strip() for t in str(raw).split(";") if t.strip()
            )
        elif key in ("n_users", "seed", "n_groups", "n_topics"):
            value = int(raw)
        elif key == "engagement":
            value = str(raw).strip().lower() in ("1", "true", "yes", "on")
        else:
            value = float(raw)
        updates[key] = value
    cfg = replace(base, **updates)
    cfg.validate()
    return cfg


def load_config_file(path, base: GenConfig = None) -> GenConfig:
    """Read a key=value config file; '#' starts a comment."""
    pairs = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    return config_from_mapping(pairs, base)


@dataclass(slots=True)
class _Event:
    user: int
    ts: int
    kind: str = "original"
    parent: int = -1      # event index of parent, -1 for originals
    body: str = None
    attachment: bool = False
    group: str = None
    topic: str = None
    likes: int = 0
    dislikes: int = 0
    reply_count: int = 0
    repost_count: int = 0


@dataclass(frozen=True)
class GenResult:
    posts_path: Path
    follows_path: Path
    truth_path: Path
    n_users: int
    n_events: int
    n_edges: int
    n_hateful: int

    def to_dict(self) -> dict:
        return {
            "posts": str(self.posts_path),
            "follows": str(self.follows_path),
            "truth": str(self.truth_path),
            "n_users": self.n_users,
            "n_events": self.n_events,
            "n_edges": self.n_edges,
            "n_hateful": self.n_hateful,
        }


def _sample_follows(cfg: GenConfig, rng, hateful: np.ndarray) -> list:
    """Directed follow edges via preferential attachment with homophily.

    Each class keeps a pool where a user appears once per follower gained
    (plus once initially), so drawing uniformly from the pool is
    proportional to in-degree + 1.
    """
    pools = {
        True: list(np.nonzero(hateful)[0]),
        False: list(np.nonzero(~hateful)[0]),
    }
    degree = rng.poisson(cfg.mean_follows, size=cfg.n_users)
    np.clip(degree, 1, cfg.n_users - 1, out=degree)
    class_draw = rng.random(int(degree.sum()))
    edges = []
    pos = 0
    for u in range(cfg.n_users):
        mine = bool(hateful[u])
        chosen = set()
        for _ in range(int(degree[u])):
            same = class_draw[pos] < cfg.homophily
            pos += 1
            pool = pools[mine if same else not mine]
            for _ in range(24):  # rejection for self-loops and repeats
                v = int(pool[rng.integers(len(pool))])
                if v != u and v not in chosen:
                    chosen.add(v)
                    pool.append(v)
                    edges.append((u, v))
                    break
    return edges


def _event_times(cfg: GenConfig, rng, hateful: np.ndarray):
    """Per-user Poisson event counts with uniform arrival seconds.

    Returns (users, times) sorted chronologically; each user's timestamps
    strictly increase (equal draws are bumped forward a second).
    """
    rates = np.where(hateful, cfg.hate_posts_per_day, cfg.normal_posts_per_day)
    counts = rng.poisson(rates * cfg.duration_days)
    horizon = int(cfg.duration_days * SECONDS_PER_DAY)
    users = []
    times = []
    for u in range(cfg.n_users):
        k = int(counts[u])
        if k == 0:
            continue
        t = np.sort(rng.integers(0, horizon, size=k))
        # minimal strictly increasing sequence >= t: t-j must be non-decreasing
        steps = np.arange(k)
        t = np.maximum.accumulate(t - steps) + steps
        users.append(np.full(k, u, dtype=np.int64))
        times.append(t + BASE_EPOCH)
    if not users:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    users = np.concatenate(users)
    times = np.concatenate(times)
    order = np.lexsort((users, times))
    return users[order], times[order]


def generate(cfg: GenConfig, out_dir) -> GenResult:
    """Write posts.jsonl, follows.csv, and truth.csv under ``out_dir``."""
    cfg.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)

    n_hate = max(1, round(cfg.n_users * cfg.hate_fraction))
    if n_hate >= cfg.n_users:
        raise ConfigError("hate_fraction leaves no normal users")
    perm = rng.permutation(cfg.n_users)
    hateful = np.zeros(cfg.n_users, dtype=bool)
    hateful[perm[:n_hate]] = True

    edges = _sample_follows(cfg, rng, hateful)
    followees_same: list = [[] for _ in range(cfg.n_users)]
    followees_cross: list = [[] for _ in range(cfg.n_users)]
    for u, v in edges:
        if hateful[u] == hateful[v]:
            followees_same[u].append(v)
        else:
            followees_cross[u].append(v)

    ev_users, ev_times = _event_times(cfg, rng, hateful)
    events = _populate_events(cfg, rng, hateful, ev_users, ev_times,
                              followees_same, followees_cross)
    _backfill_counters(events)

    posts_path = out / "posts.jsonl"
    follows_path = out / "follows.csv"
    truth_path = out / "truth.csv"
    _write_posts(cfg, events, posts_path)
    with open(follows_path, "w", newline="") as f:
        f.write("follower_id,followee_id\n")
        for u, v in edges:
            f.write(f"u{u:06d},u{v:06d}\n")
    with open(truth_path, "w", newline="") as f:
        f.write("user_id,class\n")
        for u in range(cfg.n_users):
            cls = "hateful" if hateful[u] else "normal"
            f.write(f"u{u:06d},{cls}\n")

    return GenResult(
        posts_path=posts_path, follows_path=follows_path,
        truth_path=truth_path, n_users=cfg.n_users, n_events=len(events),
        n_edges=len(edges), n_hateful=int(n_hate),
    )


def _populate_events(cfg, rng, hateful, ev_users, ev_times,
                     followees_same, followees_cross) -> list:
    """Decide kind, parent, and content for each chronological event slot."""
    # most recent original-or-repost per user, as an event index
    last_cascade: dict = {}
    cascade_log: list = []   # every original/repost event index, time order
    events: list = []
    n_events = len(ev_users)
    kind_draw = rng.random(n_events)
    mix_draw = rng.random(n_events)
    class_pref = rng.random(n_events)
    discover_draw = rng.random(n_events)

    for i in range(n_events):
        u = int(ev_users[i])
        t = int(ev_times[i])
        is_hate = bool(hateful[u])
        repost_p = cfg.hate_repost_prob if is_hate else cfg.normal_repost_prob

        parent = -1
        kind = "original"
        if kind_draw[i] < repost_p:
            if discover_draw[i] < cfg.discover_prob and cascade_log:
                for _ in range(4):  # off-feed discovery, any recent post
                    j = cascade_log[int(rng.integers(len(cascade_log)))]
                    if events[j].ts < t and events[j].user != u:
                        parent = j
                        break
            if parent < 0:
                parent = _pick_source(
                    u, t, class_pref[i] < cfg.homophily, last_cascade,
                    followees_same, followees_cross, events, rng,
                )
            if parent >= 0:
                kind = "repost"
        if kind == "original":
            m = mix_draw[i]
            if m < cfg.reply_prob or m < cfg.reply_prob + cfg.quote_prob:
                alt = _pick_source(
                    u, t, class_pref[i] < cfg.homophily, last_cascade,
                    followees_same, followees_cross, events, rng,
                )
                if alt >= 0:
                    parent = alt
                    kind = "reply" if m < cfg.reply_prob else "quote"

        ev = _Event(user=u, ts=t, kind=kind, parent=parent)
        if kind != "repost":
            ev.body = _make_body(cfg, rng, is_hate and kind == "original")
            ev.attachment = bool(rng.random() < cfg.attachment_prob)
            if rng.random() < cfg.group_prob:
                ev.group = f"g{rng.integers(cfg.n_groups):03d}"
            if rng.random() < cfg.topic_prob:
                ev.topic = f"t{rng.integers(cfg.n_topics):03d}"
        if cfg.engagement:
            rate = cfg.hate_like_rate if is_hate else cfg.normal_like_rate
            ev.likes = int(rng.poisson(rate))
            ev.dislikes = int(rng.poisson(0.1))
        idx = len(events)
        events.append(ev)
        if kind in ("original", "repost"):
            last_cascade[u] = idx
            cascade_log.append(idx)
    return events


def _pick_source(u, t, prefer_same, last_cascade, followees_same,
                 followees_cross, events, rng):
    """Event index of a followee's latest cascade post before t, or -1.

    The preferred class (own class with probability h) is tried first, the
    other class as fallback, so reposts exist whenever any followee has
    posted.
    """
    first = followees_same[u] if prefer_same else followees_cross[u]
    second = followees_cross[u] if prefer_same else followees_same[u]
    for group in (first, second):
        eligible = []
        for v in group:
            j = last_cascade.get(v, -1)
            if j >= 0 and events[j].ts < t:
                eligible.append(j)
        if eligible:
            if len(eligible) == 1:
                return eligible[0]
            return eligible[int(rng.integers(len(eligible)))]
    return -1


def _make_body(cfg, rng, plant_keyword: bool) -> str:
    k = int(rng.integers(3, 9))
    words = [_FILLER[int(rng.integers(len(_FILLER)))] for _ in range(k)]
    if plant_keyword and rng.random() < cfg.keyword_prob:
        kw = cfg.keywords[int(rng.integers(len(cfg.keywords)))]
        words.insert(int(rng.integers(len(words) + 1)), kw)
    return " ".join(words)


def _backfill_counters(events: list) -> None:
    """Set reply_count and repost_count from the generated events."""
    for ev in events:
        if ev.parent < 0:
            continue
        if ev.kind == "repost":
            events[ev.parent].repost_count += 1
        elif ev.kind == "reply":
            events[ev.parent].reply_count += 1


def _write_posts(cfg: GenConfig, events: list, path: Path) -> None:
    with open(path, "w") as f:
        for i, ev in enumerate(events):
            obj = {
                "post_id": f"p{i:08d}",
                "user_id": f"u{ev.user:06d}",
                "ts": ev.ts,
                "kind": ev.kind,
            }
            if ev.parent >= 0:
                obj["parent_id"] = f"p{ev.parent:08d}"
            if ev.body is not None:
                obj["body"] = ev.body
            if ev.attachment:
                obj["attachment"] = True
            if ev.group is not None:
                obj["group_id"] = ev.group
            if ev.topic is not None:
                obj["topic_id"] = ev.topic
            if cfg.engagement:
                obj["likes"] = ev.likes
                obj["dislikes"] = ev.dislikes
                obj["score"] = ev.likes - ev.dislikes
                obj["reply_count"] = ev.reply_count
                obj["repost_count"] = ev.repost_count
            f.write(json.dumps(obj, separators=(",", ":")) + "\n")
