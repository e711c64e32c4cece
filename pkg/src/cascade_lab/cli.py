"""Command-line front end.

Each analysis is independently invocable; ``run`` / ``report`` execute the
whole pipeline and finish by writing the manifest. Fatal errors print one
machine-parsable JSON line on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields
from pathlib import Path

from . import synthgen
from .model import ConfigError, IngestError, LexiconError, PipelineError
from .pipeline import Pipeline, RunConfig, run_pipeline

ENV_OUT_DIR = "CASCADE_LAB_OUT"

_FATAL = (PipelineError, IngestError, LexiconError, ConfigError,
          ValueError, OSError)


def _default_out() -> str:
    return os.environ.get(ENV_OUT_DIR, "out")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--posts", help="posts JSONL path")
    p.add_argument("--follows", help="follower-edge CSV path")
    p.add_argument("--snapshot", help="binary snapshot cache path")
    p.add_argument("--lexicon", help="keyword lexicon path")
    p.add_argument("--out", help="output directory "
                   f"(default ${ENV_OUT_DIR} or ./out)")
    p.add_argument("--config", help="key=value config file; flags win")
    p.add_argument("--format", choices=("csv", "json"), dest="fmt",
                   help="tabular artifact format (default csv)")
    p.add_argument("--threads", type=int, help="worker threads (default 1)")
    p.add_argument("--iterations", type=int, help="belief update rounds")
    p.add_argument("--hate-threshold", type=float, dest="hate_threshold")
    p.add_argument("--nonhate-threshold", type=float, dest="nonhate_threshold")
    p.add_argument("--min-posts", type=int, dest="min_posts",
                   help="post floor for labeling a user")
    p.add_argument("--seed-min-posts", type=int, dest="seed_min_posts",
                   help="keyword-post floor for seed users")
    p.add_argument("--clamp-seeds", action="store_true", default=None,
                   dest="clamp_seeds",
                   help="pin seed beliefs at 1 between iterations")
    p.add_argument("--strata", help="comma-separated stratum bounds")
    p.add_argument("--network-kinds", dest="network_kinds",
                   help="post kinds feeding the repost network "
                   "(comma-separated, default repost)")
    p.add_argument("--temporal-top", type=int, dest="temporal_top",
                   help="cascades per group given temporal series")
    p.add_argument("--plots", action="store_true", default=None,
                   help="also write SVG CCDF plots")


_TUPLE_KEYS = {"strata": float, "network_kinds": str}
_RC_FIELDS = {f.name: f for f in fields(RunConfig)}


def _coerce(name: str, raw):
    if not isinstance(raw, str):
        return raw
    if name in _TUPLE_KEYS:
        cast = _TUPLE_KEYS[name]
        return tuple(cast(t.strip()) for t in raw.split(",") if t.strip())
    typ = _RC_FIELDS[name].type
    if typ == "int":
        return int(raw)
    if typ == "float":
        return float(raw)
    if typ == "bool":
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return raw


def _build_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        for lineno, line in enumerate(
            Path(args.config).read_text().splitlines(), 1
        ):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise PipelineError(
                    f"{args.config}:{lineno}: expected key=value"
                )
            key, raw = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key == "format":
                key = "fmt"
            if key not in _RC_FIELDS:
                raise PipelineError(f"unknown config key {key!r}")
            values[key] = _coerce(key, raw)
    for name in _RC_FIELDS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = _coerce(name, flag)
    if "out_dir" not in values:
        values["out_dir"] = args.out if args.out else _default_out()
    return RunConfig(**values)


def _read_piped_inputs(cfg: RunConfig) -> RunConfig:
    """Fill missing input paths from a JSON line on stdin (synth output)."""
    if cfg.posts or cfg.snapshot or sys.stdin.isatty():
        return cfg
    line = sys.stdin.readline().strip()
    if not line:
        return cfg
    obj = json.loads(line)
    cfg.posts = cfg.posts or obj.get("posts")
    cfg.follows = cfg.follows or obj.get("follows")
    return cfg


def _emit_json_line(obj: dict, stream=None) -> None:
    (stream or sys.stdout).write(json.dumps(obj, sort_keys=True) + "\n")


# -- subcommand bodies -----------------------------------------------------

def _cmd_ingest(args) -> int:
    cfg = _build_config(args)
    pipe = Pipeline(cfg)
    snap = pipe.snapshot
    cache = Path(cfg.out_dir) / "snapshot.bin"
    cache.parent.mkdir(parents=True, exist_ok=True)
    snap.save(cache)
    _emit_json_line({
        "snapshot": str(cache),
        "users": snap.n_users,
        "posts": snap.n_posts,
        "follow_edges": snap.n_follow_edges,
        "unresolved_reposts": snap.unresolved_reposts,
        "diagnostics": snap.diagnostics.to_dict(),
    })
    return 0


def _cmd_label(args) -> int:
    pipe = Pipeline(_build_config(args))
    path = pipe.emit_labels()
    _emit_json_line({
        "labels": str(path),
        "seeds": int(pipe.seeds.size),
        "kh_users": int((pipe.labels == 1).sum()),
        "nh_users": int((pipe.labels == 2).sum()),
    })
    return 0


def _cmd_cascades(args) -> int:
    pipe = Pipeline(_build_config(args))
    pipe.emit_cascades()
    pipe.emit_temporal()
    pipe.emit_early_adopters()
    _emit_json_line({k: str(v) for k, v in pipe.artifacts.items()})
    return 0


def _cmd_metrics(args) -> int:
    pipe = Pipeline(_build_config(args))
    path = pipe.emit_cascades(subset=args.filter)
    _emit_json_line({"cascades": str(path), "filter": args.filter})
    return 0


def _cmd_stats(args) -> int:
    pipe = Pipeline(_build_config(args))
    pipe.emit_summary()
    pipe.emit_ccdf()
    _emit_json_line({k: str(v) for k, v in pipe.artifacts.items()})
    return 0


def _cmd_network(args) -> int:
    pipe = Pipeline(_build_config(args))
    path = pipe.emit_network()
    _emit_json_line({"network": str(path)})
    return 0


def _cmd_accounts(args) -> int:
    pipe = Pipeline(_build_config(args))
    if args.user:
        from .stats import account_characteristics
        snap = pipe.snapshot
        u = snap.user_index(args.user)
        f = account_characteristics(snap, u)
        _emit_json_line({
            "user_id": args.user, "posts": f.posts,
            "followers": f.followers, "followings": f.followings,
            "span_days": f.span_days, "post": f.post,
            "follower": f.follower, "following": f.following,
            "like": f.like, "dislike": f.dislike, "score": f.score,
            "reply": f.reply, "repost": f.repost, "ff": f.ff,
        })
        return 0
    table, summary = pipe.emit_accounts()
    _emit_json_line({"accounts": str(table), "accounts_summary": str(summary)})
    return 0


def _cmd_synth(args) -> int:
    base = synthgen.GenConfig()
    if args.config:
        base = synthgen.load_config_file(args.config, base)
    overrides = {}
    for name in ("n_users", "hate_fraction", "homophily", "mean_follows",
                 "duration_days", "seed", "keyword_prob"):
        v = getattr(args, name, None)
        if v is not None:
            overrides[name] = v
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set needs key=value, got {item!r}")
        key, raw = item.split("=", 1)
        overrides[key.strip().replace("-", "_")] = raw.strip()
    cfg = synthgen.config_from_mapping(
        {k: str(v) for k, v in overrides.items()}, base
    )
    out = args.out if args.out else _default_out()
    result = synthgen.generate(cfg, out)
    _emit_json_line(result.to_dict())
    return 0


def _cmd_run(args, piped: bool) -> int:
    cfg = _build_config(args)
    if piped:
        cfg = _read_piped_inputs(cfg)
    pipe = run_pipeline(cfg)
    _emit_json_line({
        "manifest": str(pipe.manifest_path),
        "artifacts": len(pipe.artifacts),
        "out_dir": str(pipe.out_dir),
    })
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cascade-lab",
        description="Reconstruct repost cascades and compare hateful vs "
        "non-hateful diffusion",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    for name, help_ in (
        ("ingest", "parse inputs and write a binary snapshot cache"),
        ("label", "run belief propagation and write user labels"),
        ("cascades", "write per-cascade, temporal, and adopter artifacts"),
        ("metrics", "write per-cascade metrics for a population subset"),
        ("stats", "write summary and CCDF artifacts"),
        ("network", "write follow-graph characteristics of labeled users"),
        ("accounts", "write account characteristics"),
        ("report", "run the full pipeline and write the manifest"),
        ("run", "full pipeline; reads synth output from stdin if piped"),
    ):
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        if name == "metrics":
            p.add_argument("--filter", default="all",
                           choices=("all", "attachments", "in_group",
                                    "in_topic"),
                           help="population subset for root posts")
        if name == "accounts":
            p.add_argument("--user", help="print one user's features as JSON")

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="key=value generator config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--users", type=int, dest="n_users")
    p.add_argument("--hate-fraction", type=float, dest="hate_fraction")
    p.add_argument("--homophily", type=float)
    p.add_argument("--mean-follows", type=float, dest="mean_follows")
    p.add_argument("--duration-days", type=float, dest="duration_days")
    p.add_argument("--keyword-prob", type=float, dest="keyword_prob")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any other generator option")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "ingest":
            return _cmd_ingest(args)
        if args.command == "label":
            return _cmd_label(args)
        if args.command == "cascades":
            return _cmd_cascades(args)
        if args.command == "metrics":
            return _cmd_metrics(args)
        if args.command == "stats":
            return _cmd_stats(args)
        if args.command == "network":
            return _cmd_network(args)
        if args.command == "accounts":
            return _cmd_accounts(args)
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command == "report":
            return _cmd_run(args, piped=False)
        if args.command == "run":
            return _cmd_run(args, piped=True)
        raise PipelineError(f"unknown command {args.command!r}")
    except _FATAL as exc:
        _emit_json_line(
            {"error": type(exc).__name__, "message": str(exc)},
            stream=sys.stderr,
        )
        return 2


if __name__ == "__main__":
    sys.exit(main())
