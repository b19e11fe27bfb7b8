"""Tokenization, n-gram extraction and hashtag word-break segmentation."""

from __future__ import annotations

import math
import re
import unicodedata
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

NMIN, NMAX = 1, 5

# Chunks treated as links and dropped unless keep_urls is set.
URL_RE = re.compile(r"^(?:https?://|www\.|pic\.twitter\.com/)|(?:^|[^\w])t\.co/", re.IGNORECASE)
# An alphanumeric run, remembering whether a '#' sits right before it.
WORD_RE = re.compile(r"(#?)([^\W_]+)")


class BadN(ValueError):
    pass


def _check_n(n: int) -> None:
    if not isinstance(n, int) or not NMIN <= n <= NMAX:
        raise BadN(f"n must be an integer in [{NMIN}, {NMAX}], got {n!r}")


def canonical(text: str) -> str:
    return unicodedata.normalize("NFC", unicodedata.normalize("NFC", text).lower())


def normalize(
    text: str,
    keep_urls: bool = False,
    segmenter: Optional[Callable[[str], Sequence[str]]] = None,
) -> list[str]:
    """Lowercased alphanumeric tokens of ``text``.

    Every character that is not a letter or digit separates tokens, so
    apostrophes split ("don't" -> don, t) and '#'/'@' prefixes vanish while the
    word itself is kept. Stop words are kept. With ``segmenter`` set, words
    written as hashtags are replaced by the segmenter's output.
    """
    tokens: list[str] = []
    for chunk in canonical(text).split():
        if not keep_urls and URL_RE.search(chunk):
            continue
        for m in WORD_RE.finditer(chunk):
            word = m.group(2)
            if segmenter is not None and m.group(1):
                tokens.extend(segmenter(word))
            else:
                tokens.append(word)
    return tokens


def extract_ngrams(tokens: Sequence[str], n: int) -> list[str]:
    _check_n(n)
    return [" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def load_dictionary(path: str | Path) -> dict[str, float]:
    """Read ``word<TAB>weight`` lines; blank lines and '#' comments are skipped."""
    words: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected word<TAB>weight")
            word, weight = canonical(parts[0].strip()), float(parts[1])
            if not word or weight <= 0 or not math.isfinite(weight):
                raise ValueError(f"{path}:{lineno}: bad entry {line!r}")
            words[word] = words.get(word, 0.0) + weight
    return words


def _word_scores(dictionary: Mapping[str, float]) -> dict[str, float]:
    total = math.fsum(dictionary.values())
    return {w: math.log(f / total) for w, f in dictionary.items() if f > 0}


def _better(a: tuple[float, list[str]], b: tuple[float, list[str]]) -> bool:
    # higher score, then fewer words, then lexicographically smaller split
    if a[0] != b[0]:
        return a[0] > b[0]
    if len(a[1]) != len(b[1]):
        return len(a[1]) < len(b[1])
    return a[1] < b[1]


def segment_hashtag(
    tag: str, dictionary: Mapping[str, float], scores: Optional[Mapping[str, float]] = None
) -> list[str]:
    """Split a concatenated hashtag into dictionary words.

    Each word scores the log of its relative frequency and the split with the
    largest total wins. If no split covers the whole tag, ``[tag]`` is returned.
    """
    if scores is None:
        scores = _word_scores(dictionary)
    if not scores:
        return [tag]
    longest = max(map(len, scores))
    best: list[Optional[tuple[float, list[str]]]] = [None] * (len(tag) + 1)
    best[0] = (0.0, [])
    for end in range(1, len(tag) + 1):
        for start in range(max(0, end - longest), end):
            prev = best[start]
            word = tag[start:end]
            if prev is None or word not in scores:
                continue
            cand = (prev[0] + scores[word], prev[1] + [word])
            if best[end] is None or _better(cand, best[end]):
                best[end] = cand
    result = best[len(tag)]
    return [tag] if result is None else result[1]


class HashtagSegmenter:
    """Callable wrapper that caches segmentations for one dictionary."""

    def __init__(self, dictionary: Mapping[str, float]):
        self.dictionary = dict(dictionary)
        self._scores = _word_scores(self.dictionary)
        self._cache: dict[str, list[str]] = {}

    def __call__(self, tag: str) -> list[str]:
        hit = self._cache.get(tag)
        if hit is None:
            hit = self._cache[tag] = segment_hashtag(tag, self.dictionary, self._scores)
        return hit

    def __getstate__(self):
        return {"dictionary": self.dictionary}

    def __setstate__(self, state):
        self.__init__(state["dictionary"])


def demo_dictionary_path() -> Path:
    return Path(__file__).with_name("data") / "demo_dictionary.tsv"
