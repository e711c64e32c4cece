"""Keyword lexicon loading, explicit-hate tagging, and seed-user selection.

Matching is deliberately strict: ASCII-folded lowercase tokens split on any
non-alphanumeric run, unigrams on token equality, bigrams on adjacent token
pairs. No stemming, no substring matches ("paki" never fires on "pakistan").
"""

from __future__ import annotations

import os
import re
import unicodedata
from dataclasses import dataclass

import numpy as np

from .model import LexiconError, Snapshot

_TOKEN_RE = re.compile(r"[a-z0-9]+")

try:
    from importlib.resources import files as _pkg_files
except ImportError:  # pragma: no cover
    _pkg_files = None


def default_lexicon_path() -> str:
    """Path of the sample lexicon shipped with the package."""
    return str(_pkg_files("cascade_lab").joinpath("data/lexicon.txt"))


def tokenize(text: str) -> list[str]:
    """ASCII-fold, lowercase, and split on non-alphanumeric runs."""
    folded = (
        unicodedata.normalize("NFKD", text)
        .encode("ascii", "ignore")
        .decode("ascii")
        .lower()
    )
    return _TOKEN_RE.findall(folded)


@dataclass(frozen=True)
class Lexicon:
    unigrams: frozenset
    bigrams: frozenset  # of (first, second) token pairs

    def __len__(self) -> int:
        return len(self.unigrams) + len(self.bigrams)

    def terms(self) -> list[str]:
        return sorted(self.unigrams) + sorted(" ".join(b) for b in self.bigrams)


def load_lexicon(source) -> Lexicon:
    """Read one term per line; ``#`` starts a comment, blanks are ignored.

    Terms are normalized to 1 or 2 tokens; lines yielding more are rejected
    with an error naming them. An empty effective lexicon is fatal.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as f:
            lines = f.readlines()
    else:
        lines = list(source)

    unigrams = set()
    bigrams = set()
    bad: list = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = tokenize(line)
        if len(tokens) == 1:
            unigrams.add(tokens[0])
        elif len(tokens) == 2:
            bigrams.add(tuple(tokens))
        else:
            bad.append(f"line {lineno}: {line!r}")
    if bad:
        raise LexiconError(
            "lexicon terms must normalize to 1 or 2 tokens; rejected "
            + "; ".join(bad)
        )
    if not unigrams and not bigrams:
        raise LexiconError("lexicon is empty after normalization")
    return Lexicon(frozenset(unigrams), frozenset(bigrams))


def match_post(lexicon: Lexicon, body: str | None) -> list[str]:
    """Matched terms for one post body, unique, in order of first match."""
    if not body:
        return []
    tokens = tokenize(body)
    hits: list = []
    seen = set()
    for i, tok in enumerate(tokens):
        if tok in lexicon.unigrams and tok not in seen:
            seen.add(tok)
            hits.append(tok)
        if i + 1 < len(tokens):
            pair = (tok, tokens[i + 1])
            if pair in lexicon.bigrams and pair not in seen:
                seen.add(pair)
                hits.append(" ".join(pair))
    return hits


@dataclass(frozen=True)
class ExplicitHateTags:
    """Per-post keyword flags and per-user counts of keyword-bearing posts."""

    post_flag: np.ndarray          # bool per post
    user_keyword_posts: np.ndarray  # int32 per user

    @property
    def flagged_posts(self) -> int:
        return int(np.count_nonzero(self.post_flag))

    def flagged_fraction(self) -> float:
        return self.flagged_posts / len(self.post_flag)


def tag_explicit_hate(snapshot: Snapshot, lexicon: Lexicon) -> ExplicitHateTags:
    """Flag every post whose body matches the lexicon; all kinds are scanned."""
    flags = np.zeros(snapshot.n_posts, dtype=bool)
    per_user = np.zeros(snapshot.n_users, dtype=np.int32)
    author = snapshot.author
    for i, body in enumerate(snapshot.bodies):
        if body and match_post(lexicon, body):
            flags[i] = True
            per_user[author[i]] += 1
    flags.setflags(write=False)
    per_user.setflags(write=False)
    return ExplicitHateTags(flags, per_user)


def select_seed_users(tags: ExplicitHateTags, min_keyword_posts: int = 10) -> np.ndarray:
    """Users with at least ``min_keyword_posts`` keyword-bearing posts (inclusive)."""
    return np.nonzero(tags.user_keyword_posts >= min_keyword_posts)[0].astype(np.int32)
