"""Synthetic corpora with injected events, and scoring of detector output against them.

Generation is fully determined by the spec. Random draws come from
``numpy.random.Generator(PCG64(seed))`` in this fixed order:

1. background, vectorised over all background tweets: day, second of day,
   token count, account index; then one uniform per token, mapped to a
   vocabulary rank by inverse CDF (``searchsorted(cdf, u, side="right")``)
   over weights ``rank ** -zipf_exponent`` for ranks 1..vocab_size;
2. each injected event in list order, vectorised over its occurrences:
   day offset, second of day, total token count, then filler token uniforms,
   then the insert position of the gram inside the filler.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .detect import EventCandidate
from .ingest import SECONDS_PER_BUCKET, Corpus, TweetRecord

GENERATOR_ID = "numpy.random.PCG64"
ALGORITHM_ID = "ngramevents-synth/1"
DEFAULT_EPOCH_DAY = 16740  # 2015-11-01 UTC


class BadSpec(ValueError):
    pass


@dataclass(frozen=True)
class Background:
    tweets: int = 10000
    vocab_size: int = 5000
    zipf_exponent: float = 1.1
    tokens_min: int = 6
    tokens_max: int = 14
    accounts: int = 2000


@dataclass(frozen=True)
class InjectedEvent:
    gram: tuple[str, ...]
    start_bucket: int
    duration_buckets: int
    occurrences: int
    account_spread: int

    @property
    def text(self) -> str:
        return " ".join(self.gram)


@dataclass(frozen=True)
class SyntheticSpec:
    seed: int
    days: int
    background: Background = field(default_factory=Background)
    injected_events: tuple[InjectedEvent, ...] = ()
    epoch_day: int = DEFAULT_EPOCH_DAY

    def __post_init__(self) -> None:
        validate(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> "SyntheticSpec":
        try:
            bg = Background(**d.get("background", {}))
            events = tuple(
                InjectedEvent(
                    gram=tuple(e["gram"]),
                    start_bucket=e["start_bucket"],
                    duration_buckets=e["duration_buckets"],
                    occurrences=e["occurrences"],
                    account_spread=e["account_spread"],
                )
                for e in d.get("injected_events", ())
            )
            return cls(
                seed=d["seed"],
                days=d["days"],
                background=bg,
                injected_events=events,
                epoch_day=d.get("epoch_day", DEFAULT_EPOCH_DAY),
            )
        except (KeyError, TypeError) as exc:
            raise BadSpec(f"invalid synthetic spec: {exc}") from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["injected_events"] = [dict(asdict(e), gram=list(e.gram)) for e in self.injected_events]
        return d


def validate(spec: SyntheticSpec) -> None:
    bg = spec.background
    ints = {
        "seed": spec.seed,
        "days": spec.days,
        "background.tweets": bg.tweets,
        "background.vocab_size": bg.vocab_size,
        "background.tokens_min": bg.tokens_min,
        "background.tokens_max": bg.tokens_max,
        "background.accounts": bg.accounts,
        "epoch_day": spec.epoch_day,
    }
    for name, value in ints.items():
        if not isinstance(value, int) or isinstance(value, bool):
            raise BadSpec(f"{name} must be an integer")
    if spec.seed < 0 or spec.days < 1 or spec.epoch_day < 0:
        raise BadSpec("seed and epoch_day must be >= 0 and days >= 1")
    if bg.tweets < 0 or bg.vocab_size < 1 or bg.accounts < 1:
        raise BadSpec("background sizes must be positive")
    if not 1 <= bg.tokens_min <= bg.tokens_max:
        raise BadSpec("need 1 <= tokens_min <= tokens_max")
    if not bg.zipf_exponent >= 0:
        raise BadSpec("zipf_exponent must be >= 0")
    for i, ev in enumerate(spec.injected_events):
        where = f"injected_events[{i}]"
        if not 2 <= len(ev.gram) <= 5:
            raise BadSpec(f"{where}: gram length must be in [2, 5]")
        if any(not isinstance(t, str) or not t.isalnum() or t != t.lower() for t in ev.gram):
            raise BadSpec(f"{where}: gram tokens must be lowercase alphanumeric strings")
        if ev.occurrences < 1:
            raise BadSpec(f"{where}: occurrences must be >= 1")
        if ev.duration_buckets < 1 or ev.start_bucket < 0:
            raise BadSpec(f"{where}: bad window")
        if ev.start_bucket + ev.duration_buckets > spec.days:
            raise BadSpec(f"{where}: window does not fit in [0, {spec.days})")
        if not 1 <= ev.account_spread <= ev.occurrences:
            raise BadSpec(f"{where}: account_spread must be in [1, occurrences]")


def vocabulary(size: int) -> list[str]:
    return [f"t{rank}" for rank in range(1, size + 1)]


def _zipf_cdf(size: int, exponent: float) -> np.ndarray:
    weights = np.arange(1, size + 1, dtype=np.float64) ** -exponent
    cdf = np.cumsum(weights)
    return cdf / cdf[-1]


def _draw_tokens(rng: np.random.Generator, cdf: np.ndarray, count: int) -> np.ndarray:
    idx = np.searchsorted(cdf, rng.random(count), side="right")
    return np.minimum(idx, len(cdf) - 1)


def generate(spec: SyntheticSpec) -> Corpus:
    bg = spec.background
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    cdf = _zipf_cdf(bg.vocab_size, bg.zipf_exponent)
    vocab = vocabulary(bg.vocab_size)
    base = spec.epoch_day * SECONDS_PER_BUCKET["day"]
    records: list[TweetRecord] = []

    t = bg.tweets
    days = rng.integers(0, spec.days, size=t)
    secs = rng.integers(0, 86400, size=t)
    lengths = rng.integers(bg.tokens_min, bg.tokens_max + 1, size=t)
    accounts = rng.integers(0, bg.accounts, size=t)
    words = _draw_tokens(rng, cdf, int(lengths.sum()))
    pos = 0
    for i in range(t):
        L = int(lengths[i])
        text = " ".join(vocab[w] for w in words[pos : pos + L])
        pos += L
        records.append(
            TweetRecord(
                tweet_id=f"bg{i:07d}",
                account_id=f"u{int(accounts[i])}",
                timestamp=base + int(days[i]) * 86400 + int(secs[i]),
                text=text,
            )
        )

    for k, ev in enumerate(spec.injected_events):
        occ = ev.occurrences
        offsets = rng.integers(0, ev.duration_buckets, size=occ)
        secs = rng.integers(0, 86400, size=occ)
        totals = rng.integers(bg.tokens_min, bg.tokens_max + 1, size=occ)
        fill = np.maximum(totals - len(ev.gram), 0)
        words = _draw_tokens(rng, cdf, int(fill.sum()))
        inserts = rng.integers(0, fill + 1)
        pos = 0
        for j in range(occ):
            F = int(fill[j])
            filler = [vocab[w] for w in words[pos : pos + F]]
            pos += F
            at = int(inserts[j])
            tokens = filler[:at] + list(ev.gram) + filler[at:]
            records.append(
                TweetRecord(
                    tweet_id=f"ev{k:02d}-{j:06d}",
                    account_id=f"e{k}a{j % ev.account_spread}",
                    timestamp=base + (ev.start_bucket + int(offsets[j])) * 86400 + int(secs[j]),
                    text=" ".join(tokens),
                )
            )

    records.sort(key=lambda r: (r.timestamp, r.tweet_id))
    return Corpus(records, "day")


def corpus_metadata(spec: SyntheticSpec) -> dict:
    return {"generator": GENERATOR_ID, "algorithm": ALGORITHM_ID, "spec": spec.to_dict()}


@dataclass
class EvalReport:
    true_positives: int
    false_positives: int
    false_negatives: int
    precision: float
    recall: float
    f1: float
    matches: list[dict]

    def to_dict(self) -> dict:
        return asdict(self)


def injected_window(
    event: InjectedEvent, spec: SyntheticSpec, granularity: str = "day"
) -> tuple[int, int]:
    """Absolute bucket range covered by an injected event."""
    per_day = SECONDS_PER_BUCKET["day"] // SECONDS_PER_BUCKET[granularity]
    first_day = spec.epoch_day + event.start_bucket
    return first_day * per_day, (first_day + event.duration_buckets) * per_day - 1


def evaluate(
    candidates: Sequence[EventCandidate],
    spec: SyntheticSpec,
    window_slack: int = 1,
    granularity: str = "day",
) -> EvalReport:
    """Greedy one-to-one matching of ranked candidates against injected events.

    A candidate matches an unmatched event with the same gram text whose window,
    widened by ``window_slack`` buckets on both sides, overlaps the candidate's.
    """
    windows = [injected_window(ev, spec, granularity) for ev in spec.injected_events]
    matched: dict[int, int] = {}
    tp = fp = 0
    for rank, cand in enumerate(candidates):
        lo, hi = cand.window
        hit: Optional[int] = None
        for i, ev in enumerate(spec.injected_events):
            if i in matched or ev.text != cand.gram:
                continue
            wlo, whi = windows[i]
            if lo <= whi + window_slack and hi >= wlo - window_slack:
                hit = i
                break
        if hit is None:
            fp += 1
        else:
            matched[hit] = rank
            tp += 1
    fn = len(spec.injected_events) - tp
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    rows = [
        {
            "event": i,
            "gram": ev.text,
            "window": list(windows[i]),
            "matched_rank": matched.get(i),
            "candidate_window": list(candidates[matched[i]].window) if i in matched else None,
        }
        for i, ev in enumerate(spec.injected_events)
    ]
    return EvalReport(tp, fp, fn, precision, recall, f1, rows)
