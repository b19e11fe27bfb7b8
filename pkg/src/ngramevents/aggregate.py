"""Per-bucket n-gram counting and the statistics derived from it."""

from __future__ import annotations

import heapq
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat
from typing import Callable, Iterable, Optional, Sequence

from .ingest import Corpus, TweetRecord, bucket_of
from .textproc import BadN, _check_n, extract_ngrams, normalize


class UnknownGram(KeyError):
    pass


@dataclass
class NGramStats:
    gram: str
    n: int
    total_count: int
    bucket_counts: dict[int, int]
    distinct_tweets: int
    distinct_accounts: int

    @property
    def first_bucket(self) -> int:
        return min(self.bucket_counts)

    @property
    def last_bucket(self) -> int:
        return max(self.bucket_counts)


@dataclass
class _Table:
    """Counts for a single n. Every field merges by sum or union."""

    buckets: dict[int, Counter] = field(default_factory=dict)
    totals: Counter = field(default_factory=Counter)
    tweets: Counter = field(default_factory=Counter)
    gram_accounts: set = field(default_factory=set)

    def merge(self, other: "_Table") -> None:
        for b, counts in other.buckets.items():
            mine = self.buckets.get(b)
            if mine is None:
                self.buckets[b] = Counter(counts)
            else:
                mine.update(counts)
        self.totals.update(other.totals)
        self.tweets.update(other.tweets)
        self.gram_accounts |= other.gram_accounts


@dataclass
class TokenOptions:
    keep_urls: bool = False
    segmenter: Optional[Callable[[str], Sequence[str]]] = None

    def tokens(self, text: str) -> list[str]:
        return normalize(text, keep_urls=self.keep_urls, segmenter=self.segmenter)


class AggregateIndex:
    def __init__(self, nmin: int, nmax: int, granularity: str = "day"):
        _check_n(nmin)
        _check_n(nmax)
        if nmin > nmax:
            raise BadN(f"nmin {nmin} > nmax {nmax}")
        self.nmin, self.nmax = nmin, nmax
        self.granularity = granularity
        self.tables = {n: _Table() for n in range(nmin, nmax + 1)}
        self._accounts: dict[int, Counter] = {}
        self._series: dict[int, dict[str, dict[int, int]]] = {}
        self._daily: dict[tuple[int, int], dict[int, list[str]]] = {}

    # -- building -----------------------------------------------------------

    def add(self, tokens: Sequence[str], bucket: int, account: str) -> None:
        for n, table in self.tables.items():
            grams = extract_ngrams(tokens, n)
            if not grams:
                continue
            counts = table.buckets.get(bucket)
            if counts is None:
                counts = table.buckets[bucket] = Counter()
            counts.update(grams)
            table.totals.update(grams)
            uniq = set(grams)
            table.tweets.update(uniq)
            table.gram_accounts.update(zip(uniq, repeat(account)))
        self._invalidate()

    def merge(self, other: "AggregateIndex") -> None:
        if (other.nmin, other.nmax, other.granularity) != (self.nmin, self.nmax, self.granularity):
            raise ValueError("cannot merge indexes with different n ranges or granularity")
        for n, table in self.tables.items():
            table.merge(other.tables[n])
        self._invalidate()

    def _invalidate(self) -> None:
        self._accounts.clear()
        self._series.clear()
        self._daily.clear()

    # -- queries ------------------------------------------------------------

    def table(self, n: int) -> _Table:
        _check_n(n)
        if n not in self.tables:
            raise BadN(f"n={n} is outside the indexed range [{self.nmin}, {self.nmax}]")
        return self.tables[n]

    def grams(self, n: int) -> list[str]:
        return sorted(self.table(n).totals)

    def __contains__(self, gram: str) -> bool:
        n = len(gram.split(" "))
        return n in self.tables and gram in self.tables[n].totals

    def is_empty(self) -> bool:
        return all(not t.totals for t in self.tables.values())

    def bucket_range(self) -> Optional[tuple[int, int]]:
        keys = [b for t in self.tables.values() for b in t.buckets]
        return (min(keys), max(keys)) if keys else None

    def distinct_accounts(self, n: int) -> Counter:
        acc = self._accounts.get(n)
        if acc is None:
            acc = self._accounts[n] = Counter(g for g, _ in self.table(n).gram_accounts)
        return acc

    def series(self, n: int) -> dict[str, dict[int, int]]:
        """gram -> {bucket: count} for every gram of length n (cached)."""
        out = self._series.get(n)
        if out is None:
            out = {}
            table = self.table(n)
            for b in sorted(table.buckets):
                for g, c in table.buckets[b].items():
                    out.setdefault(g, {})[b] = c
            self._series[n] = out
        return out

    def stats(self, gram: str) -> NGramStats:
        n = len(gram.split(" "))
        if n not in self.tables or gram not in self.tables[n].totals:
            raise UnknownGram(gram)
        table = self.tables[n]
        if n in self._series:
            counts = dict(self._series[n][gram])
        else:
            counts = {b: table.buckets[b][gram] for b in sorted(table.buckets) if gram in table.buckets[b]}
        return NGramStats(
            gram=gram,
            n=n,
            total_count=table.totals[gram],
            bucket_counts=counts,
            distinct_tweets=table.tweets[gram],
            distinct_accounts=self.distinct_accounts(n)[gram],
        )

    def all_stats(self, n: int) -> list[NGramStats]:
        table = self.table(n)
        accounts = self.distinct_accounts(n)
        series = self.series(n)
        return [
            NGramStats(g, n, table.totals[g], dict(series[g]), table.tweets[g], accounts[g])
            for g in sorted(table.totals)
        ]

    def daily_top(self, n: int, m: int) -> dict[int, list[str]]:
        """Bucket -> top-m grams of that bucket (cached per n, m)."""
        key = (n, m)
        out = self._daily.get(key)
        if out is None:
            table = self.table(n)
            out = {b: [g for g, _ in _rank(table.buckets[b].items(), m)] for b in sorted(table.buckets)}
            self._daily[key] = out
        return out


def _rank(items: Iterable[tuple[str, int]], k: int) -> list[tuple[str, int]]:
    return heapq.nsmallest(k, items, key=lambda kv: (-kv[1], kv[0]))


def _partial(
    records: Sequence[TweetRecord], nmin: int, nmax: int, granularity: str, options: TokenOptions
) -> AggregateIndex:
    index = AggregateIndex(nmin, nmax, granularity)
    for rec in records:
        index.add(options.tokens(rec.text), bucket_of(rec.timestamp, granularity), rec.account_id)
    return index


def build_index(
    corpus: Corpus,
    nmin: int = 2,
    nmax: int = 5,
    options: Optional[TokenOptions] = None,
    workers: int = 1,
) -> AggregateIndex:
    """Count every n-gram of every record for n in [nmin, nmax].

    With ``workers > 1`` the records are split into contiguous shards counted
    in separate processes and merged; the merge only sums counters and unions
    sets, so the result does not depend on the shard layout.
    """
    options = options or TokenOptions()
    index = AggregateIndex(nmin, nmax, corpus.granularity)
    records = corpus.records
    if workers <= 1 or len(records) < 2:
        return _partial(records, nmin, nmax, corpus.granularity, options)
    shards = min(workers, len(records))
    size = -(-len(records) // shards)
    chunks = [records[i : i + size] for i in range(0, len(records), size)]
    with ProcessPoolExecutor(max_workers=shards) as pool:
        parts = pool.map(
            _partial,
            chunks,
            repeat(nmin),
            repeat(nmax),
            repeat(corpus.granularity),
            repeat(options),
        )
        for part in parts:
            index.merge(part)
    return index


def top_k(
    index: AggregateIndex, n: int, k: int, scope: Optional[tuple[int, int]] = None
) -> list[tuple[str, int]]:
    """The k most frequent n-grams, ties broken by gram text.

    ``scope`` is an inclusive bucket range; counts are re-summed from the
    per-bucket tables over it.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    table = index.table(n)
    if scope is None:
        counts: Counter = table.totals
    else:
        lo, hi = scope
        selected = [table.buckets[b] for b in sorted(table.buckets) if lo <= b <= hi]
        if len(selected) == 1:
            counts = selected[0]
        else:
            counts = Counter()
            for c in selected:
                counts.update(c)
    return _rank(counts.items(), k)


def timeline(index: AggregateIndex, gram: str) -> list[tuple[int, int]]:
    """Zero-filled per-bucket counts over the gram's first..last bucket."""
    st = index.stats(gram)
    return [(b, st.bucket_counts.get(b, 0)) for b in range(st.first_bucket, st.last_bucket + 1)]
