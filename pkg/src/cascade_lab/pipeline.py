"""End-to-end orchestration: ingest, label, cascade, stats, artifacts.

Stages are computed lazily and cached on the Pipeline object so single-step
front ends reuse work, and the full run writes every artifact plus a
manifest. The manifest is written last; its presence certifies a complete
run. Nothing in any artifact depends on wall-clock time or thread count,
so reruns and different ``--threads`` values are byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field, fields
from functools import cached_property
from pathlib import Path

import numpy as np

from . import cascades as casc
from . import diffusion, lexicon as lex, stats
from .ingest import load_snapshot
from .model import PipelineError, PostKind, KIND_FROM_NAME, Snapshot

logger = logging.getLogger(__name__)

GROUPS = ("KH", "NH")


@dataclass
class RunConfig:
    posts: str = None
    follows: str = None
    snapshot: str = None          # binary cache; alternative to posts+follows
    lexicon: str = None           # None -> packaged sample lexicon
    out_dir: str = "out"
    iterations: int = 5
    hate_threshold: float = 0.75
    nonhate_threshold: float = 0.25
    min_posts: int = 5
    seed_min_posts: int = 10
    clamp_seeds: bool = False
    strata: tuple = diffusion.DEFAULT_STRATA
    network_kinds: tuple = ("repost",)
    threads: int = 1
    fmt: str = "csv"
    plots: bool = False
    temporal_top: int = 50        # largest cascades per group get series rows

    def validate(self) -> None:
        if self.snapshot is None and (self.posts is None or self.follows is None):
            raise PipelineError("need posts+follows paths or a snapshot cache")
        if self.fmt not in ("csv", "json"):
            raise PipelineError(f"unknown format {self.fmt!r}")
        if self.iterations < 0:
            raise PipelineError("iterations must be >= 0")
        if self.threads < 1:
            raise PipelineError("threads must be >= 1")
        if not 0.0 <= self.nonhate_threshold <= self.hate_threshold <= 1.0:
            raise PipelineError(
                "need 0 <= nonhate_threshold <= hate_threshold <= 1"
            )
        for k in self.network_kinds:
            if k not in KIND_FROM_NAME:
                raise PipelineError(f"unknown post kind {k!r}")

    def to_manifest_dict(self) -> dict:
        """Parameters as recorded in the manifest.

        Thread count and output directory are excluded: neither may affect
        any output byte, so runs with different values stay comparable.
        """
        d = {}
        for f in fields(self):
            if f.name in ("threads", "out_dir"):
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = list(v)
            d[f.name] = v
        return d


def _fmt_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_table(out_dir: Path, name: str, rows: list, columns: list,
                fmt: str = "csv") -> Path:
    """Write one tabular artifact as CSV or JSON lines.

    ``rows`` are dicts; missing keys and None values become empty cells
    (CSV) or nulls (JSON). Column order is fixed by ``columns``.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path = out_dir / f"{name}.json"
        with open(path, "w", newline="") as f:
            for row in rows:
                obj = {c: row.get(c) for c in columns}
                f.write(json.dumps(obj, separators=(",", ":")) + "\n")
        return path
    path = out_dir / f"{name}.csv"
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt_cell(row.get(c)) for c in columns])
    return path


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Pipeline:
    """Lazily evaluated pipeline over one input corpus."""

    def __init__(self, cfg: RunConfig):
        cfg.validate()
        self.cfg = cfg
        self.out_dir = Path(cfg.out_dir)
        self.artifacts: dict = {}    # name -> Path, in creation order
        self.manifest_path: Path = None

    # -- stages ------------------------------------------------------------

    @cached_property
    def snapshot(self) -> Snapshot:
        if self.cfg.snapshot is not None:
            return Snapshot.load(self.cfg.snapshot)
        return load_snapshot(self.cfg.posts, self.cfg.follows)

    @cached_property
    def lexicon(self) -> lex.Lexicon:
        path = self.cfg.lexicon or lex.default_lexicon_path()
        return lex.load_lexicon(path)

    @cached_property
    def tags(self) -> lex.ExplicitHateTags:
        return lex.tag_explicit_hate(self.snapshot, self.lexicon)

    @cached_property
    def seeds(self) -> np.ndarray:
        seeds = lex.select_seed_users(self.tags, self.cfg.seed_min_posts)
        if seeds.size == 0:
            raise PipelineError(
                "no seed users: no account has enough keyword posts "
                f"(threshold {self.cfg.seed_min_posts})"
            )
        return seeds

    @cached_property
    def belief_state(self) -> diffusion.BeliefState:
        kinds = tuple(KIND_FROM_NAME[k] for k in self.cfg.network_kinds)
        net = diffusion.build_repost_network(self.snapshot, kinds=kinds)
        belief = diffusion.build_belief_network(net)
        state = diffusion.run_degroot(
            belief, self.seeds, iterations=self.cfg.iterations,
            clamp_seeds=self.cfg.clamp_seeds,
        )
        diffusion.stratify(state, self.cfg.strata)
        return state

    @cached_property
    def labels(self) -> np.ndarray:
        return diffusion.classify_users(
            self.belief_state, self.snapshot,
            hate_threshold=self.cfg.hate_threshold,
            nonhate_threshold=self.cfg.nonhate_threshold,
            min_posts=self.cfg.min_posts,
        )

    @cached_property
    def batches(self) -> dict:
        """group -> (roots array, CascadeBatch with trees for size >= 2)."""
        out = {}
        for group in GROUPS:
            roots = casc.filter_population(
                self.snapshot, self.labels, casc.PopulationFilter(group)
            )
            batch = casc.measure_cascades(
                self.snapshot, roots, threads=self.cfg.threads,
                collect_trees=True,
            )
            out[group] = (roots, batch)
        return out

    def subset_roots(self, group: str, subset: str) -> np.ndarray:
        return casc.filter_population(
            self.snapshot, self.labels, casc.PopulationFilter(group, subset)
        )

    # -- artifact emitters -------------------------------------------------

    def _write(self, name: str, rows: list, columns: list) -> Path:
        path = write_table(self.out_dir, name, rows, columns, self.cfg.fmt)
        self.artifacts[name] = path
        return path

    def emit_labels(self) -> Path:
        state = self.belief_state
        labels = self.labels
        snap = self.snapshot
        rows = [
            {
                "user_id": snap.user_ids[u],
                "belief": float(state.beliefs[u]),
                "stratum": int(state.strata[u]),
                "label": diffusion.LABEL_NAMES[int(labels[u])],
                "posts": int(snap.post_count[u]),
            }
            for u in range(snap.n_users)
        ]
        return self._write(
            "labels", rows, ["user_id", "belief", "stratum", "label", "posts"]
        )

    def _cascade_rows(self, group: str, roots=None) -> list:
        _, batch = self.batches[group]
        snap = self.snapshot
        keep = None if roots is None else set(np.asarray(roots).tolist())
        rows = []
        for m in batch.metrics:
            if keep is not None and m.root_post not in keep:
                continue
            rows.append({
                "root_post_id": snap.post_ids[m.root_post],
                "root_user_id": snap.user_ids[m.root_user],
                "label": group,
                "size": m.size, "depth": m.depth, "breadth": m.breadth,
                "avg_depth": m.avg_depth, "virality": m.virality,
                "removed": m.removed,
            })
        return rows

    _CASCADE_COLS = [
        "root_post_id", "root_user_id", "label", "size", "depth",
        "breadth", "avg_depth", "virality", "removed",
    ]

    def emit_cascades(self, subset: str = "all", name: str = "cascades") -> Path:
        rows = []
        for group in GROUPS:
            roots = None if subset == "all" else self.subset_roots(group, subset)
            rows.extend(self._cascade_rows(group, roots))
        return self._write(name, rows, self._CASCADE_COLS)

    def emit_temporal(self) -> Path:
        snap = self.snapshot
        rows = []
        for group in GROUPS:
            _, batch = self.batches[group]
            big = sorted(
                (m for m in batch.metrics if m.size >= 2),
                key=lambda m: (-m.size, m.root_post),
            )[: self.cfg.temporal_top]
            for m in big:
                tree = batch.trees[m.root_post]
                pid = snap.post_ids[m.root_post]
                for metric in casc.METRIC_NAMES:
                    for value, elapsed in casc.temporal_profile(tree, metric):
                        rows.append({
                            "root_post_id": pid, "metric": metric,
                            "value": value, "elapsed_s": elapsed,
                        })
        return self._write(
            "temporal", rows, ["root_post_id", "metric", "value", "elapsed_s"]
        )

    def emit_early_adopters(self) -> Path:
        rows = []
        for group in GROUPS:
            _, batch = self.batches[group]
            mix = casc.early_adopter_profile(
                batch.trees.values(), self.labels
            )
            for row in mix:
                rows.append({
                    "group": group, "depth": row.depth,
                    "kh_fraction": row.kh_fraction,
                    "nh_fraction": row.nh_fraction,
                    "reposters": row.reposters,
                })
        return self._write(
            "early_adopters", rows,
            ["group", "depth", "kh_fraction", "nh_fraction", "reposters"],
        )

    def metrics_by_subset(self, subset: str) -> dict:
        out = {}
        for group in GROUPS:
            _, batch = self.batches[group]
            if subset == "all":
                out[group] = list(batch.metrics)
            else:
                keep = set(self.subset_roots(group, subset).tolist())
                out[group] = [m for m in batch.metrics if m.root_post in keep]
        return out

    def emit_summary(self) -> Path:
        rows = []
        for subset in casc.SUBSETS:
            for r in stats.summarize(self.metrics_by_subset(subset), subset):
                rows.append({
                    "metric": r.metric, "subset": r.subset,
                    "mean_kh": r.mean_kh, "median_kh": r.median_kh,
                    "n_kh": r.n_kh,
                    "mean_nh": r.mean_nh, "median_nh": r.median_nh,
                    "n_nh": r.n_nh,
                    "ks_d": r.ks_d, "ks_p": r.ks_p,
                    "significant": r.significant,
                })
        return self._write(
            "summary", rows,
            ["metric", "subset", "mean_kh", "median_kh", "n_kh",
             "mean_nh", "median_nh", "n_nh", "ks_d", "ks_p", "significant"],
        )

    def emit_ccdf(self) -> Path:
        rows = []
        series = {}
        by_all = self.metrics_by_subset("all")
        for metric in casc.METRIC_NAMES:
            for group in GROUPS:
                values = [getattr(m, metric) for m in by_all[group]]
                if not values:
                    logger.warning("ccdf %s/%s skipped: no cascades",
                                   metric, group)
                    continue
                x, p = stats.ccdf(values)
                series[(metric, group)] = (x, p)
                for xi, pi in zip(x.tolist(), p.tolist()):
                    rows.append({
                        "metric": metric, "group": group, "x": xi, "p": pi,
                    })
        path = self._write("ccdf", rows, ["metric", "group", "x", "p"])
        if self.cfg.plots:
            for metric in casc.METRIC_NAMES:
                per = {
                    g: series[(metric, g)]
                    for g in GROUPS if (metric, g) in series
                }
                if not per:
                    continue
                svg = self.out_dir / f"ccdf_{metric}.svg"
                stats.plot_ccdfs(per, svg, title=metric)
                self.artifacts[f"ccdf_{metric}.svg"] = svg
        return path

    def emit_accounts(self) -> tuple:
        snap = self.snapshot
        labeled = np.nonzero(self.labels != diffusion.UNLABELED)[0]
        feats = stats.account_table(snap, labeled)
        rows = []
        for f in feats:
            rows.append({
                "user_id": snap.user_ids[f.user],
                "label": diffusion.LABEL_NAMES[int(self.labels[f.user])],
                "posts": f.posts, "followers": f.followers,
                "followings": f.followings, "span_days": f.span_days,
                "post": f.post, "follower": f.follower,
                "following": f.following, "like": f.like,
                "dislike": f.dislike, "score": f.score, "reply": f.reply,
                "repost": f.repost, "ff": f.ff,
            })
        table = self._write(
            "accounts", rows,
            ["user_id", "label", "posts", "followers", "followings",
             "span_days", "post", "follower", "following", "like",
             "dislike", "score", "reply", "repost", "ff"],
        )
        srows = []
        for r in stats.account_summary(feats, self.labels):
            srows.append({
                "feature": r.feature,
                "mean_kh": r.mean_kh, "mean_nh": r.mean_nh,
                "median_kh": r.median_kh, "median_nh": r.median_nh,
                "ks_d": r.ks_d, "ks_p": r.ks_p,
            })
        summary = self._write(
            "accounts_summary", srows,
            ["feature", "mean_kh", "mean_nh", "median_kh", "median_nh",
             "ks_d", "ks_p"],
        )
        return table, summary

    def emit_network(self) -> Path:
        net = stats.network_characteristics(self.snapshot, self.labels)
        pairs = [
            ("total_nodes", net.total_nodes),
            ("total_edges", net.total_edges),
            ("kh_nodes", net.kh.nodes), ("kh_edges", net.kh.edges),
            ("kh_density", net.kh.density),
            ("kh_reciprocity", net.kh.reciprocity),
            ("nh_nodes", net.nh.nodes), ("nh_edges", net.nh.edges),
            ("nh_density", net.nh.density),
            ("nh_reciprocity", net.nh.reciprocity),
            ("density_ratio", net.density_ratio),
            ("rate_kh_kh", net.rate_kh_kh), ("rate_kh_nh", net.rate_kh_nh),
            ("rate_nh_kh", net.rate_nh_kh), ("rate_nh_nh", net.rate_nh_nh),
            ("nh_to_kh_ratio", net.nh_to_kh_ratio),
            ("kh_to_kh_ratio", net.kh_to_kh_ratio),
        ]
        rows = [{"key": k, "value": v} for k, v in pairs]
        return self._write("network", rows, ["key", "value"])

    # -- manifest ----------------------------------------------------------

    def _input_digests(self) -> dict:
        out = {}
        for name in ("posts", "follows", "snapshot", "lexicon"):
            p = getattr(self.cfg, name)
            if p is None and name == "lexicon":
                p = lex.default_lexicon_path()
            if p is None:
                continue
            p = Path(p)
            out[name] = {
                "path": str(p), "sha256": _sha256(p),
                "bytes": p.stat().st_size,
            }
        return out

    def counts(self) -> dict:
        snap = self.snapshot
        out = {
            "users": snap.n_users,
            "posts": snap.n_posts,
            "follow_edges": snap.n_follow_edges,
            "unresolved_reposts": snap.unresolved_reposts,
            "seeds": int(self.seeds.size),
            "kh_users": int((self.labels == diffusion.KH).sum()),
            "nh_users": int((self.labels == diffusion.NH).sum()),
            "diagnostics": self.snapshot.diagnostics.to_dict(),
        }
        for group in GROUPS:
            roots, batch = self.batches[group]
            out[f"{group.lower()}_roots"] = int(roots.size)
            out[f"{group.lower()}_removed"] = int(
                sum(m.removed for m in batch.metrics)
            )
        return out

    def write_manifest(self) -> Path:
        digests = {}
        for name, path in sorted(self.artifacts.items()):
            digests[name] = {
                "path": str(path.relative_to(self.out_dir)),
                "sha256": _sha256(path),
                "bytes": path.stat().st_size,
            }
        manifest = {
            "parameters": self.cfg.to_manifest_dict(),
            "inputs": self._input_digests(),
            "counts": self.counts(),
            "artifacts": digests,
        }
        path = self.out_dir / "manifest.json"
        with open(path, "w", newline="") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write("\n")
        return path


def run_pipeline(cfg: RunConfig) -> Pipeline:
    """Execute every stage and write all artifacts plus the manifest."""
    pipe = Pipeline(cfg)
    pipe.emit_labels()
    pipe.emit_cascades()
    pipe.emit_temporal()
    pipe.emit_early_adopters()
    pipe.emit_summary()
    pipe.emit_ccdf()
    pipe.emit_accounts()
    pipe.emit_network()
    pipe.manifest_path = pipe.write_manifest()
    return pipe
