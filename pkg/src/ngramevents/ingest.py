"""Load timestamped posts from JSONL/CSV files into a sorted, de-duplicated corpus."""

from __future__ import annotations

import csv
import json
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

SECONDS_PER_BUCKET = {"day": 86400, "hour": 3600}
FORMATS = ("jsonl", "csv")
CSV_COLUMNS = ("tweet_id", "account_id", "timestamp", "text", "hashtags")

HASHTAG_RE = re.compile(r"(?<![\w&])#(\w+)")


class MalformedRecord(ValueError):
    """A line that cannot be turned into a TweetRecord."""


class MissingField(MalformedRecord):
    pass


class BadTimestamp(MalformedRecord):
    pass


@dataclass(frozen=True)
class TweetRecord:
    tweet_id: str
    account_id: str
    timestamp: int
    text: str
    hashtags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "tweet_id": self.tweet_id,
            "account_id": self.account_id,
            "timestamp": self.timestamp,
            "text": self.text,
            "hashtags": list(self.hashtags),
        }


@dataclass
class Corpus:
    records: list[TweetRecord]
    granularity: str = "day"
    origin_bucket: Optional[int] = None

    def __post_init__(self) -> None:
        if self.granularity not in SECONDS_PER_BUCKET:
            raise ValueError(f"unknown granularity {self.granularity!r}")
        if self.records and self.origin_bucket is None:
            self.origin_bucket = bucket_of(self.records[0].timestamp, self.granularity)

    def __len__(self) -> int:
        return len(self.records)

    def bucket(self, record: TweetRecord) -> int:
        return bucket_of(record.timestamp, self.granularity)

    def bucket_range(self) -> Optional[tuple[int, int]]:
        if not self.records:
            return None
        return self.bucket(self.records[0]), self.bucket(self.records[-1])

    def filter_hashtag(self, tag: str) -> "Corpus":
        tag = tag.lstrip("#").lower()
        kept = [r for r in self.records if tag in r.hashtags]
        return Corpus(kept, self.granularity)


@dataclass
class IngestReport:
    total: int = 0
    accepted: int = 0
    duplicates: int = 0
    malformed: int = 0
    out_of_window: int = 0
    errors: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "accepted": self.accepted,
            "duplicates": self.duplicates,
            "malformed": self.malformed,
            "out_of_window": self.out_of_window,
            "empty": self.accepted == 0,
            "errors": self.errors,
        }


def bucket_of(timestamp: int, granularity: str = "day") -> int:
    return timestamp // SECONDS_PER_BUCKET[granularity]


def hashtags_in(text: str) -> tuple[str, ...]:
    text = unicodedata.normalize("NFC", text)
    return _clean_tags(m.group(1) for m in HASHTAG_RE.finditer(text))


def _clean_tags(tags: Iterable[str]) -> tuple[str, ...]:
    out: list[str] = []
    for tag in tags:
        tag = unicodedata.normalize("NFC", str(tag)).strip().lstrip("#").lower()
        if not tag:
            continue
        if any(ch.isspace() for ch in tag) or "#" in tag:
            raise MalformedRecord(f"invalid hashtag {tag!r}")
        if tag not in out:
            out.append(tag)
    return tuple(out)


def _parse_timestamp(value) -> int:
    if isinstance(value, bool):
        raise BadTimestamp(f"timestamp must be an integer, got {value!r}")
    if isinstance(value, int):
        ts = value
    elif isinstance(value, str) and value.strip().lstrip("-").isdigit():
        ts = int(value.strip())
    else:
        raise BadTimestamp(f"timestamp must be an integer, got {value!r}")
    if ts < 0:
        raise BadTimestamp(f"negative timestamp {ts}")
    return ts


def _build(fields: dict) -> TweetRecord:
    for name in ("tweet_id", "timestamp", "text"):
        value = fields.get(name)
        if value is None or (name != "timestamp" and str(value) == ""):
            raise MissingField(f"missing field {name!r}")
    text = fields["text"]
    if not isinstance(text, str):
        raise MalformedRecord("text must be a string")
    tags = fields.get("hashtags")
    if tags is None or tags == "":
        hashtags = hashtags_in(text)
    else:
        if isinstance(tags, str):
            tags = tags.split()
        elif not isinstance(tags, list):
            raise MalformedRecord("hashtags must be a list or a space-separated string")
        hashtags = _clean_tags(tags)
    account = fields.get("account_id")
    return TweetRecord(
        tweet_id=str(fields["tweet_id"]),
        account_id="" if account is None else str(account),
        timestamp=_parse_timestamp(fields["timestamp"]),
        text=text,
        hashtags=hashtags,
    )


def parse_record(line: str, fmt: str = "jsonl") -> TweetRecord:
    """Parse one JSONL object or one CSV row into a validated record.

    CSV columns are ``tweet_id,account_id,timestamp,text[,hashtags]`` where the
    optional hashtags column is space separated. Without an explicit hashtags
    field, hashtags are taken from ``#`` tokens in the text.
    """
    if fmt == "jsonl":
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(f"invalid JSON: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise MalformedRecord("JSONL line is not an object")
        return _build(obj)
    if fmt == "csv":
        try:
            rows = list(csv.reader([line], strict=True))
        except csv.Error as exc:
            raise MalformedRecord(f"invalid CSV: {exc}") from None
        if len(rows) != 1:
            raise MalformedRecord("expected exactly one CSV row")
        row = rows[0]
        if len(row) < 4:
            raise MissingField(f"expected at least 4 columns, got {len(row)}")
        if len(row) > 5:
            raise MalformedRecord(f"expected at most 5 columns, got {len(row)}")
        return _build(dict(zip(CSV_COLUMNS, row)))
    raise ValueError(f"unknown format {fmt!r}")


def guess_format(path: str | Path) -> str:
    return "csv" if str(path).lower().endswith(".csv") else "jsonl"


def _data_lines(lines: Iterable[str]) -> Iterator[tuple[int, str]]:
    # '#' lines carry artifact metadata; blank lines are ignored
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        yield lineno, line


def collect(
    lines: Iterable[str],
    fmt: str = "jsonl",
    window: Optional[Sequence[int]] = None,
    granularity: str = "day",
    source: str = "<input>",
    max_errors: int = 20,
) -> tuple[Corpus, IngestReport]:
    report = IngestReport()
    seen: set[str] = set()
    kept: list[TweetRecord] = []
    first = True
    for lineno, line in _data_lines(lines):
        if first and fmt == "csv" and line.split(",", 1)[0].strip() == "tweet_id":
            first = False
            continue
        first = False
        report.total += 1
        try:
            rec = parse_record(line, fmt)
        except MalformedRecord as exc:
            report.malformed += 1
            if len(report.errors) < max_errors:
                report.errors.append(
                    {"file": source, "line": lineno, "error": type(exc).__name__, "message": str(exc)}
                )
            continue
        if rec.tweet_id in seen:
            report.duplicates += 1
            continue
        seen.add(rec.tweet_id)
        if window is not None and not (window[0] <= rec.timestamp <= window[1]):
            report.out_of_window += 1
            continue
        kept.append(rec)
    kept.sort(key=lambda r: (r.timestamp, r.tweet_id))
    report.accepted = len(kept)
    return Corpus(kept, granularity), report


def load_corpus(
    path: str | Path,
    fmt: Optional[str] = None,
    window: Optional[Sequence[int]] = None,
    granularity: str = "day",
) -> tuple[Corpus, IngestReport]:
    """Read a corpus file, skipping and counting malformed lines.

    Duplicate ids keep their first occurrence in file order; the window is an
    inclusive ``[start, end]`` range of epoch seconds.
    """
    fmt = fmt or guess_format(path)
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    with open(path, encoding="utf-8", newline="") as fh:
        return collect(fh, fmt, window, granularity, source=str(path))


def dump_jsonl(records: Iterable[TweetRecord], fh, header: Optional[list[str]] = None) -> None:
    for line in header or ():
        fh.write(f"# {line}\n")
    for rec in records:
        fh.write(json.dumps(rec.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
