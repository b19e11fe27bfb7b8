"""Lexicon polarity scores and per-hashtag positive/negative averages."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .ingest import Corpus
from .textproc import canonical, normalize


@dataclass(frozen=True)
class SentimentScore:
    pos: float
    neg: float


@dataclass(frozen=True)
class HashtagRow:
    hashtag: str
    tweets: int
    avg_pos: float
    avg_neg: float


def load_lexicon(path: str | Path) -> dict[str, float]:
    lexicon: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected token<TAB>polarity")
            token = canonical(parts[0].strip())
            try:
                polarity = float(parts[1])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: polarity {parts[1]!r} is not a number") from None
            if not -1.0 <= polarity <= 1.0:
                raise ValueError(f"{path}:{lineno}: polarity {polarity} outside [-1, 1]")
            lexicon[token] = polarity
    return lexicon


def score_text(tokens: Sequence[str], lexicon: Mapping[str, float]) -> SentimentScore:
    hits = [lexicon[t] for t in tokens if t in lexicon]
    p = math.fsum(hits) / len(hits) if hits else 0.0
    return SentimentScore((1.0 + p) / 2.0, (1.0 - p) / 2.0)


def hashtag_averages(
    corpus: Corpus, lexicon: Mapping[str, float], keep_urls: bool = False
) -> list[HashtagRow]:
    """One row per hashtag: tweet count and mean per-tweet pos/neg scores.

    Rows are ordered by tweet count (descending), then hashtag.
    """
    pos: dict[str, list[float]] = {}
    neg: dict[str, list[float]] = {}
    for rec in corpus.records:
        if not rec.hashtags:
            continue
        s = score_text(normalize(rec.text, keep_urls=keep_urls), lexicon)
        for tag in rec.hashtags:
            pos.setdefault(tag, []).append(s.pos)
            neg.setdefault(tag, []).append(s.neg)
    rows = [
        HashtagRow(tag, len(pos[tag]), math.fsum(pos[tag]) / len(pos[tag]), math.fsum(neg[tag]) / len(neg[tag]))
        for tag in pos
    ]
    rows.sort(key=lambda r: (-r.tweets, r.hashtag))
    return rows


def demo_lexicon_path() -> Path:
    return Path(__file__).with_name("data") / "demo_lexicon.tsv"


def load_demo_lexicon(path: Optional[str | Path] = None) -> dict[str, float]:
    return load_lexicon(path or demo_lexicon_path())
