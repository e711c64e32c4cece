"""Population statistics over cascades, accounts, and the follow graph.

CCDFs use the P(X >= x) convention so the largest observed value keeps
nonzero probability on log axes. The two-sample KS test computes the exact
D statistic by a merged scan and the asymptotic Kolmogorov p-value, which
is all the downstream p < 0.01 significance calls need.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cascades import METRIC_NAMES
from .diffusion import KH, NH, LABEL_NAMES
from .model import Snapshot

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400.0
SIGNIFICANCE_LEVEL = 0.01

PER_DAY_FEATURES = ("post", "follower", "following")
PER_POST_FEATURES = ("like", "dislike", "score", "reply", "repost")
_ENGAGEMENT_FOR_FEATURE = {
    "like": "likes",
    "dislike": "dislikes",
    "score": "score",
    "reply": "reply_count",
    "repost": "repost_count",
}
ACCOUNT_FEATURES = PER_DAY_FEATURES + PER_POST_FEATURES + ("ff",)


def ccdf(samples) -> tuple:
    """Empirical P(X >= x) at each distinct sample value.

    Returns (values ascending, probabilities); the first probability is 1
    and the sequence is non-increasing.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise ValueError("ccdf of an empty sample")
    values, counts = np.unique(arr, return_counts=True)
    # count of samples >= x = n minus count strictly below x
    below = np.concatenate([[0], np.cumsum(counts)[:-1]])
    probs = (arr.size - below) / arr.size
    return values, probs


@dataclass(frozen=True)
class KsResult:
    statistic: float
    pvalue: float

    @property
    def significant(self) -> bool:
        return self.pvalue < SIGNIFICANCE_LEVEL


def _kolmogorov_sf(lam: float) -> float:
    """Q(lam) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lam^2), truncated."""
    if lam <= 0.0:
        return 1.0
    total = 0.0
    for k in range(1, 101):
        term = 2.0 * (-1.0) ** (k - 1) * math.exp(-2.0 * k * k * lam * lam)
        total += term
        if abs(term) < 1e-10:
            return min(max(total, 0.0), 1.0)
    return 1.0  # series failed to settle; smallest lam values belong here


def ks_two_sample(a, b) -> KsResult:
    """Two-sample Kolmogorov-Smirnov test.

    D is the exact supremum of |ECDF_a - ECDF_b| over the pooled sample
    points; the p-value uses the asymptotic Kolmogorov distribution with
    effective size n_a*n_b/(n_a+n_b).
    """
    xa = np.sort(np.asarray(a, dtype=float))
    xb = np.sort(np.asarray(b, dtype=float))
    na, nb = xa.size, xb.size
    if na == 0 or nb == 0:
        raise ValueError("ks_two_sample needs non-empty samples")
    pooled = np.concatenate([xa, xb])
    cdf_a = np.searchsorted(xa, pooled, side="right") / na
    cdf_b = np.searchsorted(xb, pooled, side="right") / nb
    d = float(np.abs(cdf_a - cdf_b).max())
    if d == 0.0:
        return KsResult(0.0, 1.0)
    lam = math.sqrt(na * nb / (na + nb)) * d
    return KsResult(d, _kolmogorov_sf(lam))


@dataclass(frozen=True)
class SummaryRow:
    metric: str
    subset: str
    mean_kh: float
    median_kh: float
    n_kh: int
    mean_nh: float
    median_nh: float
    n_nh: int
    ks_d: float
    ks_p: float
    significant: bool


def summarize(metrics_by_group: dict, subset: str = "all") -> list:
    """Table rows comparing KH and NH cascade metric distributions.

    ``metrics_by_group`` maps "KH"/"NH" to lists of CascadeMetrics. One row
    per metric; if either group is empty the row is omitted with a warning.
    """
    rows = []
    kh = metrics_by_group.get("KH", [])
    nh = metrics_by_group.get("NH", [])
    for metric in METRIC_NAMES:
        a = np.array([getattr(m, metric) for m in kh], dtype=float)
        b = np.array([getattr(m, metric) for m in nh], dtype=float)
        if a.size == 0 or b.size == 0:
            logger.warning(
                "summary row %s/%s omitted: empty group (KH=%d, NH=%d)",
                metric, subset, a.size, b.size,
            )
            continue
        ks = ks_two_sample(a, b)
        rows.append(SummaryRow(
            metric=metric, subset=subset,
            mean_kh=float(a.mean()), median_kh=float(np.median(a)), n_kh=a.size,
            mean_nh=float(b.mean()), median_nh=float(np.median(b)), n_nh=b.size,
            ks_d=ks.statistic, ks_p=ks.pvalue, significant=ks.significant,
        ))
    return rows


@dataclass(frozen=True)
class AccountFeatures:
    """Activity rates for one user.

    Per-day rates divide by the span from the user's first post to the end
    of the corpus (clamped to one day); per-post rates divide engagement
    totals by the user's post count. Missing inputs yield None.
    """

    user: int
    posts: int
    followers: int
    followings: int
    span_days: Optional[float]
    post: Optional[float]
    follower: Optional[float]
    following: Optional[float]
    like: Optional[float]
    dislike: Optional[float]
    score: Optional[float]
    reply: Optional[float]
    repost: Optional[float]
    ff: Optional[float]


def account_table(snapshot: Snapshot, users) -> list:
    """AccountFeatures for many users, computed with corpus-wide passes.

    Engagement totals are accumulated per author in one bincount per column,
    so cost is O(posts + users) regardless of how many users are asked for.
    """
    users = np.asarray(users, dtype=np.int64)
    n = snapshot.n_users
    posts = snapshot.post_count
    followers = snapshot.follower_count
    followings = snapshot.following_count
    span_days = np.maximum(
        (snapshot.corpus_end_ts - snapshot.first_post_ts) / SECONDS_PER_DAY, 1.0
    )

    sums = {}
    for feature, column in _ENGAGEMENT_FOR_FEATURE.items():
        values = snapshot.engagement.get(column)
        if values is not None:
            sums[feature] = np.bincount(
                snapshot.author, weights=np.nan_to_num(values), minlength=n
            )

    out = []
    for u in users.tolist():
        n_posts = int(posts[u])
        n_fol = int(followers[u])
        n_ing = int(followings[u])
        ff = n_fol / n_ing if n_ing > 0 else None
        if n_posts == 0:
            out.append(AccountFeatures(
                user=u, posts=0, followers=n_fol, followings=n_ing,
                span_days=None, post=None, follower=None, following=None,
                like=None, dislike=None, score=None, reply=None, repost=None,
                ff=ff,
            ))
            continue
        days = float(span_days[u])
        per_post = {
            feature: (float(sums[feature][u]) / n_posts
                      if feature in sums else None)
            for feature in _ENGAGEMENT_FOR_FEATURE
        }
        out.append(AccountFeatures(
            user=u, posts=n_posts, followers=n_fol, followings=n_ing,
            span_days=days,
            post=n_posts / days,
            follower=n_fol / days,
            following=n_ing / days,
            ff=ff,
            **per_post,
        ))
    return out


def account_characteristics(snapshot: Snapshot, user: int) -> AccountFeatures:
    """Per-day and per-post activity features for one user."""
    return account_table(snapshot, [user])[0]


@dataclass(frozen=True)
class AccountSummaryRow:
    feature: str
    mean_kh: float
    mean_nh: float
    median_kh: float
    median_nh: float
    ks_d: Optional[float]
    ks_p: Optional[float]


def account_summary(features: list, labels: np.ndarray) -> list:
    """Per-class mean/median of each account feature, with a KS comparison.

    Users whose feature is absent are skipped for that feature; a feature
    with an empty side is omitted with a warning.
    """
    kh_feats = [f for f in features if labels[f.user] == KH]
    nh_feats = [f for f in features if labels[f.user] == NH]
    rows = []
    for name in ACCOUNT_FEATURES:
        a = np.array(
            [getattr(f, name) for f in kh_feats if getattr(f, name) is not None],
            dtype=float,
        )
        b = np.array(
            [getattr(f, name) for f in nh_feats if getattr(f, name) is not None],
            dtype=float,
        )
        if a.size == 0 or b.size == 0:
            logger.warning("account feature %s omitted: empty class", name)
            continue
        ks = ks_two_sample(a, b)
        rows.append(AccountSummaryRow(
            feature=name,
            mean_kh=float(a.mean()), mean_nh=float(b.mean()),
            median_kh=float(np.median(a)), median_nh=float(np.median(b)),
            ks_d=ks.statistic, ks_p=ks.pvalue,
        ))
    return rows


def directed_density(nodes: int, edges: int) -> float:
    """E / (N (N - 1)); zero when fewer than two nodes."""
    if nodes < 2:
        return 0.0
    return edges / (nodes * (nodes - 1))


@dataclass(frozen=True)
class ClassSubgraph:
    nodes: int
    edges: int
    density: float
    reciprocity: float


@dataclass(frozen=True)
class NetworkCharacteristics:
    total_nodes: int
    total_edges: int
    kh: ClassSubgraph
    nh: ClassSubgraph
    rate_kh_kh: float
    rate_kh_nh: float
    rate_nh_kh: float
    rate_nh_nh: float
    # how much likelier an NH user follows a KH user than the reverse
    nh_to_kh_ratio: float
    # how much likelier a KH user follows KH than NH
    kh_to_kh_ratio: float

    @property
    def density_ratio(self) -> float:
        if self.nh.density == 0.0:
            return math.inf
        return self.kh.density / self.nh.density


def _reciprocity(src: np.ndarray, dst: np.ndarray, n: int) -> float:
    if src.size == 0:
        return 0.0
    code = src.astype(np.int64) * n + dst.astype(np.int64)
    rev = dst.astype(np.int64) * n + src.astype(np.int64)
    mutual = int(np.isin(code, rev, assume_unique=True).sum())
    return mutual / src.size


def network_characteristics(
    snapshot: Snapshot, labels: np.ndarray
) -> NetworkCharacteristics:
    """Follow-graph structure of the labeled population.

    Works on the subgraph induced on KH and NH users: per-class density and
    reciprocity, the four class-conditional follow rates, and the two
    likelihood ratios built on them.
    """
    n_kh = int((labels == KH).sum())
    n_nh = int((labels == NH).sum())
    if n_kh == 0 or n_nh == 0:
        raise ValueError(
            f"need both label classes, got KH={n_kh} NH={n_nh}"
        )

    out_deg = np.diff(snapshot.follow_out_indptr)
    src = np.repeat(np.arange(snapshot.n_users, dtype=np.int64), out_deg)
    dst = snapshot.follow_out_indices.astype(np.int64)
    src_lab = labels[src]
    dst_lab = labels[dst]
    keep = (src_lab != 0) & (dst_lab != 0)
    src, dst = src[keep], dst[keep]
    src_lab, dst_lab = src_lab[keep], dst_lab[keep]

    def count(sl: int, dl: int) -> int:
        return int(((src_lab == sl) & (dst_lab == dl)).sum())

    e_kk = count(KH, KH)
    e_kn = count(KH, NH)
    e_nk = count(NH, KH)
    e_nn = count(NH, NH)

    kk_mask = (src_lab == KH) & (dst_lab == KH)
    nn_mask = (src_lab == NH) & (dst_lab == NH)
    kh_sub = ClassSubgraph(
        nodes=n_kh, edges=e_kk,
        density=directed_density(n_kh, e_kk),
        reciprocity=_reciprocity(src[kk_mask], dst[kk_mask], snapshot.n_users),
    )
    nh_sub = ClassSubgraph(
        nodes=n_nh, edges=e_nn,
        density=directed_density(n_nh, e_nn),
        reciprocity=_reciprocity(src[nn_mask], dst[nn_mask], snapshot.n_users),
    )

    rate_kk = directed_density(n_kh, e_kk)
    rate_nn = directed_density(n_nh, e_nn)
    rate_kn = e_kn / (n_kh * n_nh)
    rate_nk = e_nk / (n_nh * n_kh)

    nh_to_kh = rate_nk / rate_kn if rate_kn > 0 else math.inf
    kh_to_kh = rate_kk / rate_kn if rate_kn > 0 else math.inf

    return NetworkCharacteristics(
        total_nodes=n_kh + n_nh,
        total_edges=e_kk + e_kn + e_nk + e_nn,
        kh=kh_sub, nh=nh_sub,
        rate_kh_kh=rate_kk, rate_kh_nh=rate_kn,
        rate_nh_kh=rate_nk, rate_nh_nh=rate_nn,
        nh_to_kh_ratio=nh_to_kh, kh_to_kh_ratio=kh_to_kh,
    )


def plot_ccdfs(series: dict, out_path, title: str = "") -> None:
    """Write one log-log CCDF figure with a line per (metric, group) series.

    ``series`` maps a legend label to (x, p) arrays from ccdf(). Matplotlib
    is imported lazily so headless runs without it still work elsewhere.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for name in sorted(series):
        x, p = series[name]
        x = np.asarray(x, dtype=float)
        keep = x > 0  # log axis drops nonpositive support
        ax.loglog(x[keep], np.asarray(p)[keep], marker=".", markersize=3,
                  linewidth=1.0, label=name)
    ax.set_xlabel("value")
    ax.set_ylabel("P(X ≥ x)")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=7)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)


def label_name(code: int) -> str:
    return LABEL_NAMES[code]
