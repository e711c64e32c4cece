"""Reconstruction and comparison of repost cascades on follower networks.

The library ingests post/follow logs, labels hateful and non-hateful users
by belief averaging over the repost network, rebuilds per-post influence
trees, and compares the two populations' diffusion, account, and network
statistics. ``cascade-lab`` exposes the same steps on the command line.
"""

from .model import (
    ConfigError,
    IngestDiagnostics,
    IngestError,
    LexiconError,
    PipelineError,
    PostKind,
    Snapshot,
)
from .ingest import build_snapshot, ingest_follows, ingest_posts, load_snapshot
from .lexicon import (
    Lexicon,
    default_lexicon_path,
    load_lexicon,
    match_post,
    select_seed_users,
    tag_explicit_hate,
    tokenize,
)
from .diffusion import (
    KH,
    NH,
    UNLABELED,
    BeliefNetwork,
    BeliefState,
    RepostNetwork,
    build_belief_network,
    build_repost_network,
    classify_users,
    run_degroot,
    stratify,
)
from .cascades import (
    CascadeMetrics,
    CascadeTree,
    PopulationFilter,
    build_cascade,
    compute_metrics,
    early_adopter_profile,
    filter_population,
    measure_cascades,
    structural_virality,
    temporal_profile,
)
from .stats import (
    AccountFeatures,
    KsResult,
    NetworkCharacteristics,
    account_characteristics,
    account_summary,
    account_table,
    ccdf,
    ks_two_sample,
    network_characteristics,
    summarize,
)
from .synthgen import GenConfig, generate
from .pipeline import Pipeline, RunConfig, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "BeliefNetwork", "BeliefState", "CascadeMetrics", "CascadeTree",
    "ConfigError", "GenConfig", "IngestDiagnostics", "IngestError",
    "KH", "KsResult", "Lexicon", "LexiconError", "NH",
    "NetworkCharacteristics", "Pipeline", "PipelineError",
    "PopulationFilter", "PostKind", "RepostNetwork", "RunConfig",
    "Snapshot", "UNLABELED", "AccountFeatures",
    "account_characteristics", "account_summary", "account_table",
    "build_belief_network", "build_cascade", "build_repost_network",
    "build_snapshot", "ccdf", "classify_users", "compute_metrics",
    "default_lexicon_path", "early_adopter_profile", "filter_population",
    "generate", "ingest_follows", "ingest_posts", "ks_two_sample",
    "load_lexicon", "load_snapshot", "match_post", "measure_cascades",
    "network_characteristics", "run_degroot", "run_pipeline",
    "select_seed_users", "stratify", "structural_virality", "summarize",
    "tag_explicit_hate", "temporal_profile", "tokenize",
]
