"""Command line entry point: ``ngramevents <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .aggregate import TokenOptions, UnknownGram, build_index, timeline, top_k
from .detect import (
    ConfigError,
    EventCandidate,
    OracleUnavailable,
    ThresholdConfig,
    detect_events,
    load_oracle,
    scatter_data,
)
from .ingest import SECONDS_PER_BUCKET, Corpus, MalformedRecord, dump_jsonl, load_corpus
from .sentiment import demo_lexicon_path, hashtag_averages, load_lexicon
from .synthbench import BadSpec, SyntheticSpec, corpus_metadata, evaluate, generate
from .textproc import BadN, HashtagSegmenter, demo_dictionary_path, load_dictionary

log = logging.getLogger("ngramevents")

SUBCOMMANDS = ("ingest", "ngrams", "timeline", "scatter", "detect", "sentiment", "synth", "eval")
# execution-only settings that must not change artifact bytes
NOT_ECHOED = {"threads", "func", "verbose"}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


@dataclass
class RunConfig:
    subcommand: str
    options: dict
    inputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "tool": "ngramevents",
            "version": __version__,
            "subcommand": self.subcommand,
            "config": self.options,
            "inputs": self.inputs,
        }


def sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def read_config_file(path: str | Path) -> dict[str, str]:
    """``key = value`` lines with '#' comments."""
    values: dict[str, str] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise DataError(f"{path}:{lineno}: empty key")
        values[key] = value
    return values


# -- argument parsing -------------------------------------------------------


def _corpus_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--in", dest="input", required=True, help="corpus file (.jsonl or .csv)")
    p.add_argument("--format", choices=("jsonl", "csv"), help="input format (default: from suffix)")
    p.add_argument("--start", type=int, help="drop records before this epoch second")
    p.add_argument("--end", type=int, help="drop records after this epoch second")
    p.add_argument("--granularity", choices=tuple(SECONDS_PER_BUCKET), default="day")
    p.add_argument("--filter-hashtag", help="only use records carrying this hashtag")


def _text_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--keep-urls", action="store_true", help="tokenize URLs instead of dropping them")
    p.add_argument(
        "--segment-hashtags",
        metavar="DICT",
        help="split hashtags into words with a word<TAB>weight dictionary ('demo' for the bundled one)",
    )
    p.add_argument("--threads", type=int, default=1, help="worker processes for counting")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ngramevents", description="N-gram time-series event detection for short posts.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", metavar="{" + ",".join(SUBCOMMANDS) + "}", parser_class=_Parser)

    p = sub.add_parser("ingest", help="validate and clean a corpus file")
    _corpus_args(p)
    p.add_argument("--out", help="write the cleaned corpus as JSONL")
    p.add_argument("--report", help="ingestion report path (default: stdout)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("ngrams", help="top-k n-gram table as CSV")
    _corpus_args(p)
    _text_args(p)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--scope", type=int, nargs=2, metavar=("FIRST", "LAST"), help="inclusive bucket range")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ngrams)

    p = sub.add_parser("timeline", help="per-bucket counts of one gram")
    _corpus_args(p)
    _text_args(p)
    p.add_argument("--gram", required=True)
    p.add_argument("--gnuplot", action="store_true", help="whitespace-separated output with a date column")
    p.add_argument("--out")
    p.set_defaults(func=cmd_timeline)

    p = sub.add_parser("scatter", help="duration vs count for the top-k n-grams")
    _corpus_args(p)
    _text_args(p)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--k", type=int, default=138)
    p.add_argument("--out")
    p.set_defaults(func=cmd_scatter)

    p = sub.add_parser("detect", help="ranked event candidates")
    _corpus_args(p)
    _text_args(p)
    p.add_argument("--nmin", type=int)
    p.add_argument("--nmax", type=int)
    p.add_argument("--config", help="key = value threshold file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one setting")
    p.add_argument("--oracle", help="popularity table CSV (query,score)")
    p.add_argument("--require-confirmation", action="store_true")
    p.add_argument("--popularity-floor", type=float)
    p.add_argument("--out", help="output path; .csv writes CSV, anything else JSON")
    p.add_argument("--out-format", choices=("json", "csv"))
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("sentiment", help="per-hashtag average polarity")
    _corpus_args(p)
    p.add_argument("--keep-urls", action="store_true")
    p.add_argument("--lexicon", help="token<TAB>polarity file (default: bundled demo lexicon)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sentiment)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--spec", required=True)
    p.add_argument("--seed", type=int, help="override the spec's seed")
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="score candidates against a synthetic spec")
    p.add_argument("--candidates", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--slack", type=int, default=1)
    p.add_argument("--granularity", choices=tuple(SECONDS_PER_BUCKET), default="day")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)
    return parser


# -- helpers ----------------------------------------------------------------


def _options(args: argparse.Namespace, **extra) -> dict:
    opts = {k: v for k, v in sorted(vars(args).items()) if k not in NOT_ECHOED and k != "subcommand"}
    opts.update(extra)
    return opts


def _inputs(**paths: Optional[str]) -> dict:
    out = {}
    for name, path in paths.items():
        if path is None:
            continue
        try:
            out[name] = {"path": str(path), "sha256": sha256(path)}
        except OSError as exc:
            raise DataError(f"{path}: {exc.strerror}") from None
    return out


def _load(args: argparse.Namespace) -> tuple[Corpus, dict]:
    window = None
    if args.start is not None or args.end is not None:
        window = (args.start if args.start is not None else 0, args.end if args.end is not None else 2**63)
    try:
        corpus, report = load_corpus(args.input, args.format, window, args.granularity)
    except OSError as exc:
        raise DataError(f"{args.input}: {exc.strerror}") from None
    for err in report.errors:
        log.warning("%s:%s: %s: %s", err["file"], err["line"], err["error"], err["message"])
    if getattr(args, "filter_hashtag", None):
        corpus = corpus.filter_hashtag(args.filter_hashtag)
    if not corpus.records:
        log.warning("%s: no records accepted", args.input)
    return corpus, report.to_dict()


def _token_options(args: argparse.Namespace) -> TokenOptions:
    segmenter = None
    path = getattr(args, "segment_hashtags", None)
    if path:
        path = demo_dictionary_path() if path == "demo" else path
        try:
            segmenter = HashtagSegmenter(load_dictionary(path))
        except OSError as exc:
            raise DataError(f"{path}: {exc.strerror}") from None
        except ValueError as exc:
            raise DataError(str(exc)) from None
    return TokenOptions(keep_urls=args.keep_urls, segmenter=segmenter)


def _dict_input(args: argparse.Namespace) -> Optional[str]:
    path = getattr(args, "segment_hashtags", None)
    return str(demo_dictionary_path()) if path == "demo" else path


@contextmanager
def _sink(path: Optional[str]):
    if path is None:
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None
    with fh:
        yield fh


def _write_csv(path: Optional[str], run: RunConfig, header: Sequence[str], rows) -> None:
    buf = io.StringIO()
    buf.write("# " + json.dumps(run.to_dict(), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    with _sink(path) as fh:
        fh.write(buf.getvalue())


def _write_json(path: Optional[str], run: RunConfig, payload: dict) -> None:
    doc = {"meta": run.to_dict(), **payload}
    with _sink(path) as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def _fmt(x: float) -> str:
    return repr(float(x))


# -- subcommands ------------------------------------------------------------


def cmd_ingest(args) -> None:
    corpus, report = _load(args)
    run = RunConfig("ingest", _options(args), _inputs(corpus=args.input))
    if args.out:
        with _sink(args.out) as fh:
            dump_jsonl(corpus.records, fh, header=[json.dumps(run.to_dict(), sort_keys=True)])
    _write_json(args.report, run, {"report": report})


def cmd_ngrams(args) -> None:
    corpus, _ = _load(args)
    index = build_index(corpus, args.n, args.n, _token_options(args), workers=args.threads)
    rows = top_k(index, args.n, args.k, tuple(args.scope) if args.scope else None)
    run = RunConfig("ngrams", _options(args), _inputs(corpus=args.input, dictionary=_dict_input(args)))
    _write_csv(args.out, run, ("gram", "count"), rows)


def cmd_timeline(args) -> None:
    corpus, _ = _load(args)
    gram = " ".join(args.gram.lower().split())
    n = len(gram.split(" "))
    index = build_index(corpus, n, n, _token_options(args), workers=args.threads)
    series = timeline(index, gram)
    run = RunConfig("timeline", _options(args, gram=gram), _inputs(corpus=args.input, dictionary=_dict_input(args)))
    if not args.gnuplot:
        _write_csv(args.out, run, ("bucket", "count"), series)
        return
    step = SECONDS_PER_BUCKET[args.granularity]
    fmt = "%Y-%m-%d" if args.granularity == "day" else "%Y-%m-%dT%H:00"
    lines = ["# " + json.dumps(run.to_dict(), sort_keys=True), "# bucket date count"]
    for b, c in series:
        date = datetime.fromtimestamp(b * step, tz=timezone.utc).strftime(fmt)
        lines.append(f"{b} {date} {c}")
    with _sink(args.out) as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_scatter(args) -> None:
    corpus, _ = _load(args)
    index = build_index(corpus, args.n, args.n, _token_options(args), workers=args.threads)
    rows = scatter_data(index, args.n, args.k)
    run = RunConfig("scatter", _options(args), _inputs(corpus=args.input, dictionary=_dict_input(args)))
    _write_csv(args.out, run, ("gram", "duration", "count"), rows)


DETECT_KEYS = {"nmin", "nmax", "popularity_floor"}


def _detect_settings(args) -> tuple[ThresholdConfig, int, int, Optional[float]]:
    values: dict[str, str] = {}
    if args.config:
        values.update(read_config_file(args.config))
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        values[k.strip()] = v.strip()
    extra = {k: values.pop(k) for k in list(values) if k in DETECT_KEYS}
    try:
        cfg = ThresholdConfig.from_mapping(values)
        nmin = int(extra.get("nmin", 3)) if args.nmin is None else args.nmin
        nmax = int(extra.get("nmax", 5)) if args.nmax is None else args.nmax
        floor = args.popularity_floor
        if floor is None and "popularity_floor" in extra:
            floor = float(extra["popularity_floor"])
    except (ConfigError, ValueError) as exc:
        where = args.config or "--set"
        raise DataError(f"{where}: {exc}") from None
    return cfg, nmin, nmax, floor


def cmd_detect(args) -> None:
    cfg, nmin, nmax, floor = _detect_settings(args)
    if args.require_confirmation and not args.oracle:
        raise OracleUnavailable("--require-confirmation needs --oracle")
    oracle = None
    if args.oracle:
        try:
            oracle = load_oracle(args.oracle)
        except OSError as exc:
            raise DataError(f"{args.oracle}: {exc.strerror}") from None
        except ConfigError as exc:
            raise DataError(str(exc)) from None
    corpus, _ = _load(args)
    index = build_index(corpus, nmin, nmax, _token_options(args), workers=args.threads)
    cands = detect_events(index, cfg, oracle, args.require_confirmation, floor)
    opts = _options(args, nmin=nmin, nmax=nmax, popularity_floor=floor, thresholds=cfg.to_dict())
    run = RunConfig(
        "detect",
        opts,
        _inputs(corpus=args.input, config=args.config, oracle=args.oracle, dictionary=_dict_input(args)),
    )
    out_format = args.out_format or ("csv" if args.out and args.out.lower().endswith(".csv") else "json")
    if out_format == "json":
        _write_json(args.out, run, {"candidates": [c.to_dict() for c in cands]})
        return
    header = (
        "gram", "category", "total_count", "distinct_tweets", "distinct_accounts",
        "raw_duration", "effective_duration", "density", "peak_bucket", "window_first", "window_last",
    )
    rows = [
        (c.gram, c.category, c.total_count, c.distinct_tweets, c.distinct_accounts, c.raw_duration,
         c.effective_duration, _fmt(c.density), c.peak_bucket, c.window[0], c.window[1])
        for c in cands
    ]
    _write_csv(args.out, run, header, rows)


def cmd_sentiment(args) -> None:
    corpus, _ = _load(args)
    path = args.lexicon or str(demo_lexicon_path())
    try:
        lexicon = load_lexicon(path)
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None
    except ValueError as exc:
        raise DataError(str(exc)) from None
    rows = [(r.hashtag, r.tweets, _fmt(r.avg_pos), _fmt(r.avg_neg)) for r in hashtag_averages(corpus, lexicon, args.keep_urls)]
    run = RunConfig("sentiment", _options(args, lexicon=path), _inputs(corpus=args.input, lexicon=path))
    _write_csv(args.out, run, ("hashtag", "tweets", "avg_pos", "avg_neg"), rows)


def _read_spec(path: str, seed: Optional[int] = None) -> SyntheticSpec:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{exc.lineno}: {exc.msg}") from None
    if not isinstance(d, dict):
        raise DataError(f"{path}: spec must be a JSON object")
    if seed is not None:
        d = dict(d, seed=seed)
    try:
        return SyntheticSpec.from_dict(d)
    except BadSpec as exc:
        raise DataError(f"{path}: {exc}") from None


def cmd_synth(args) -> None:
    spec = _read_spec(args.spec, args.seed)
    corpus = generate(spec)
    run = RunConfig("synth", _options(args), _inputs(spec=args.spec))
    meta = dict(run.to_dict(), corpus=corpus_metadata(spec))
    with _sink(args.out) as fh:
        dump_jsonl(corpus.records, fh, header=[json.dumps(meta, sort_keys=True)])


def _read_candidates(path: str) -> list[EventCandidate]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{exc.lineno}: {exc.msg}") from None
    items = doc.get("candidates") if isinstance(doc, dict) else doc
    if not isinstance(items, list):
        raise DataError(f"{path}: expected a candidate list")
    try:
        return [EventCandidate.from_dict(item) for item in items]
    except (KeyError, TypeError) as exc:
        raise DataError(f"{path}: bad candidate entry: {exc}") from None


def cmd_eval(args) -> None:
    cands = _read_candidates(args.candidates)
    spec = _read_spec(args.spec)
    report = evaluate(cands, spec, args.slack, args.granularity)
    run = RunConfig("eval", _options(args), _inputs(candidates=args.candidates, spec=args.spec))
    _write_json(args.out, run, {"report": report.to_dict()})


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand; 0 on success, 1 on usage errors, 2 on data errors."""
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(message)s",
        )
        if args.subcommand is None:
            raise UsageError(parser.format_help() + "ngramevents: error: a subcommand is required")
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be >= 1")
        args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (OracleUnavailable, BadN) as exc:
        print(f"ngramevents: error: {exc}", file=sys.stderr)
        return 1
    except UnknownGram as exc:
        print(f"ngramevents: error: gram {exc.args[0]!r} not found in {args.input}", file=sys.stderr)
        return 2
    except (DataError, MalformedRecord) as exc:
        print(f"ngramevents: error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
