"""Count/duration/density metrics, candidate filters and event ranking."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .aggregate import AggregateIndex, NGramStats, top_k

BURST = "Burst"
SUSTAINED = "Sustained"


class ConfigError(ValueError):
    pass


class OracleUnavailable(RuntimeError):
    pass


@dataclass(frozen=True)
class ThresholdConfig:
    min_distinct_tweets: int = 10
    min_distinct_accounts: int = 5
    top_m: int = 10
    min_consecutive: int = 3
    burst_min_count: int = 1000
    burst_max_duration: int = 31
    sustained_min_count: int = 500
    sustained_min_duration: int = 90

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{f.name} must be an integer >= 1, got {value!r}")
        if self.burst_max_duration >= self.sustained_min_duration:
            raise ConfigError("burst_max_duration must be smaller than sustained_min_duration")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_mapping(cls, values: Mapping[str, object]) -> "ThresholdConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown threshold keys: {', '.join(sorted(unknown))}")
        parsed = {}
        for key, value in values.items():
            try:
                parsed[key] = int(value)
            except (TypeError, ValueError):
                raise ConfigError(f"{key} must be an integer, got {value!r}") from None
        return cls(**parsed)


@dataclass(frozen=True)
class EventCandidate:
    gram: str
    total_count: int
    distinct_tweets: int
    distinct_accounts: int
    raw_duration: int
    effective_duration: int
    density: float
    category: str
    peak_bucket: int
    window: tuple[int, int]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "EventCandidate":
        kw = {f.name: d[f.name] for f in fields(cls)}
        kw["window"] = tuple(kw["window"])
        return cls(**kw)


def duration(stats: NGramStats) -> tuple[int, int]:
    raw = stats.last_bucket - stats.first_bucket
    return raw, raw + 1


def density(stats: NGramStats) -> float:
    return stats.total_count / duration(stats)[1]


def peak_bucket(stats: NGramStats) -> int:
    # earliest bucket wins ties
    return min(stats.bucket_counts, key=lambda b: (-stats.bucket_counts[b], b))


def consecutive_top_m(
    daily_top_lists: Mapping[int, Sequence[str]], gram: str, m: int, run: int
) -> bool:
    """True if ``gram`` ranks within the first m of at least ``run`` consecutive buckets.

    A bucket missing from ``daily_top_lists`` counts as a bucket where the
    gram is absent.
    """
    streak, prev = 0, None
    for b in sorted(daily_top_lists):
        if gram in daily_top_lists[b][:m]:
            streak = streak + 1 if prev is not None and b == prev + 1 else 1
            prev = b
            if streak >= run:
                return True
        else:
            streak, prev = 0, None
    return False


def classify(stats: NGramStats, cfg: ThresholdConfig) -> Optional[str]:
    eff = duration(stats)[1]
    if stats.total_count >= cfg.burst_min_count and eff <= cfg.burst_max_duration:
        return BURST
    if stats.total_count >= cfg.sustained_min_count and eff >= cfg.sustained_min_duration:
        return SUSTAINED
    return None


def load_oracle(path: str | Path) -> dict[str, float]:
    """Read a ``query,score`` CSV into a lowercase lookup table."""
    table: dict[str, float] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].startswith("#"):
                continue
            if lineno == 1 and row[0].strip().lower() == "query":
                continue
            if len(row) != 2:
                raise ConfigError(f"{path}:{lineno}: expected query,score")
            try:
                score = float(row[1])
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: score {row[1]!r} is not a number") from None
            if not 0 <= score <= 100:
                raise ConfigError(f"{path}:{lineno}: score {score} outside [0, 100]")
            table[row[0].strip().lower()] = score
    return table


def confirm_popularity(gram: str, oracle: Optional[Mapping[str, float]]) -> Optional[float]:
    if oracle is None:
        return None
    return oracle.get(gram.strip().lower())


def _candidate(stats: NGramStats, category: str) -> EventCandidate:
    raw, eff = duration(stats)
    return EventCandidate(
        gram=stats.gram,
        total_count=stats.total_count,
        distinct_tweets=stats.distinct_tweets,
        distinct_accounts=stats.distinct_accounts,
        raw_duration=raw,
        effective_duration=eff,
        density=stats.total_count / eff,
        category=category,
        peak_bucket=peak_bucket(stats),
        window=(stats.first_bucket, stats.last_bucket),
    )


def detect_events(
    index: AggregateIndex,
    cfg: Optional[ThresholdConfig] = None,
    oracle: Optional[Mapping[str, float]] = None,
    require_confirmation: bool = False,
    popularity_floor: Optional[float] = None,
) -> list[EventCandidate]:
    """Filter and rank event candidates over every n in the index.

    A gram survives when it reaches the tweet and account floors, sits in the
    per-bucket top-m of its own n for ``min_consecutive`` consecutive buckets,
    and classifies as Burst or Sustained. With an oracle and either
    ``require_confirmation`` or a ``popularity_floor``, the gram also needs an
    oracle score of at least the floor (0 when only confirmation is required).
    Ranking is by density, then total count, then gram text.
    """
    cfg = cfg or ThresholdConfig()
    if require_confirmation and oracle is None:
        raise OracleUnavailable("popularity confirmation requested but no oracle table given")
    floor = popularity_floor
    if floor is None and require_confirmation:
        floor = 0.0
    min_count = min(cfg.burst_min_count, cfg.sustained_min_count)
    out: list[EventCandidate] = []
    for n in range(index.nmin, index.nmax + 1):
        table = index.tables[n]
        accounts = index.distinct_accounts(n)
        # cheap floors first; classify needs at least min_count occurrences
        pool = [
            g
            for g, c in table.totals.items()
            if c >= min_count
            and table.tweets[g] >= cfg.min_distinct_tweets
            and accounts[g] >= cfg.min_distinct_accounts
        ]
        if not pool:
            continue
        daily = index.daily_top(n, cfg.top_m)
        for gram in sorted(pool):
            stats = index.stats(gram)
            category = classify(stats, cfg)
            if category is None:
                continue
            if not consecutive_top_m(daily, gram, cfg.top_m, cfg.min_consecutive):
                continue
            if floor is not None and oracle is not None:
                score = confirm_popularity(gram, oracle)
                if score is None or score < floor:
                    continue
            out.append(_candidate(stats, category))
    out.sort(key=lambda c: (-c.density, -c.total_count, c.gram))
    return out


def scatter_data(index: AggregateIndex, n: int, k: int) -> list[tuple[str, int, int]]:
    """(gram, effective duration, count) rows for the k most frequent n-grams."""
    rows = []
    for gram, count in top_k(index, n, k):
        rows.append((gram, duration(index.stats(gram))[1], count))
    return rows
