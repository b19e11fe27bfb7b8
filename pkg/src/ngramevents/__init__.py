"""Event detection from n-gram time series of short social-media posts."""

__version__ = "0.1.0"

from .aggregate import AggregateIndex, NGramStats, build_index, timeline, top_k
from .detect import EventCandidate, ThresholdConfig, classify, density, detect_events, duration
from .ingest import Corpus, TweetRecord, bucket_of, load_corpus, parse_record
from .textproc import extract_ngrams, normalize, segment_hashtag

__all__ = [
    "AggregateIndex",
    "Corpus",
    "EventCandidate",
    "NGramStats",
    "ThresholdConfig",
    "TweetRecord",
    "bucket_of",
    "build_index",
    "classify",
    "density",
    "detect_events",
    "duration",
    "extract_ngrams",
    "load_corpus",
    "normalize",
    "parse_record",
    "segment_hashtag",
    "timeline",
    "top_k",
]
