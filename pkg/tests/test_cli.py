import csv
import json

import pytest

from ngramevents.aggregate import build_index, top_k
from ngramevents.cli import run, sha256
from ngramevents.detect import ThresholdConfig, detect_events
from ngramevents.ingest import load_corpus
from ngramevents.synthbench import SyntheticSpec, generate

SPEC = {
    "seed": 3,
    "days": 30,
    "background": {"tweets": 1500, "vocab_size": 800},
    "injected_events": [
        {"gram": ["qqa", "qqb", "qqc"], "start_bucket": 10, "duration_buckets": 4, "occurrences": 400, "account_spread": 30}
    ],
}


@pytest.fixture
def synth(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(SPEC))
    corpus = tmp_path / "corpus.jsonl"
    assert run(["synth", "--spec", str(spec), "--out", str(corpus)]) == 0
    return spec, corpus


def body(path):
    """CSV rows without the '#' provenance header."""
    lines = [l for l in open(path, encoding="utf-8") if not l.startswith("#")]
    return list(csv.reader(lines))


def meta(path):
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    assert first.startswith("# ")
    return json.loads(first[2:])


def test_unknown_subcommand(capsys):
    assert run(["explode"]) == 1
    err = capsys.readouterr().err
    assert "usage:" in err and "invalid choice" in err


def test_missing_subcommand_and_bad_flag(capsys):
    assert run([]) == 1
    assert run(["ngrams", "--in", "x.jsonl", "--bogus"]) == 1
    assert "usage:" in capsys.readouterr().err


def test_synth_is_reproducible(synth, tmp_path):
    spec, corpus = synth
    again = tmp_path / "again.jsonl"
    run(["synth", "--spec", str(spec), "--out", str(again)])
    assert corpus.read_bytes().replace(b"corpus.jsonl", b"") == again.read_bytes().replace(b"again.jsonl", b"")
    m = meta(corpus)
    assert m["corpus"]["generator"] == "numpy.random.PCG64"
    loaded, report = load_corpus(corpus)
    assert loaded.records == generate(SyntheticSpec.from_dict(SPEC)).records
    assert report.total == report.accepted == 1900


def test_ngrams_matches_top_k(synth, tmp_path):
    _, corpus = synth
    out = tmp_path / "tri.csv"
    assert run(["ngrams", "--in", str(corpus), "--n", "3", "--k", "20", "--out", str(out)]) == 0
    rows = body(out)
    assert rows[0] == ["gram", "count"]
    loaded, _ = load_corpus(corpus)
    expected = top_k(build_index(loaded, 3, 3), 3, 20)
    assert [(g, int(c)) for g, c in rows[1:]] == expected
    assert rows[1] == ["qqa qqb qqc", "400"]


def test_detect_happy_path_and_provenance(synth, tmp_path):
    _, corpus = synth
    cfg = tmp_path / "t.cfg"
    cfg.write_text("# thresholds\nburst_min_count = 300\nmin_consecutive = 2  # short events\n")
    out = tmp_path / "cand.json"
    assert run(["detect", "--in", str(corpus), "--config", str(cfg), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert [c["gram"] for c in doc["candidates"]] == ["qqa qqb qqc"]
    c = doc["candidates"][0]
    assert set(c) == {
        "gram", "total_count", "distinct_tweets", "distinct_accounts", "raw_duration",
        "effective_duration", "density", "category", "peak_bucket", "window",
    }
    conf = doc["meta"]["config"]
    assert conf["thresholds"] == ThresholdConfig(burst_min_count=300, min_consecutive=2).to_dict()
    assert (conf["nmin"], conf["nmax"]) == (3, 5)
    assert doc["meta"]["inputs"]["corpus"]["sha256"] == sha256(corpus)
    assert doc["meta"]["inputs"]["config"]["sha256"] == sha256(cfg)


def test_detect_csv_and_set_override(synth, tmp_path):
    _, corpus = synth
    out = tmp_path / "cand.csv"
    args = ["detect", "--in", str(corpus), "--set", "burst_min_count=300", "--set", "min_consecutive=2", "--out", str(out)]
    assert run(args) == 0
    rows = body(out)
    assert rows[0][:2] == ["gram", "category"]
    assert rows[1][:3] == ["qqa qqb qqc", "Burst", "400"]


def test_staged_pipeline_equals_in_process(synth, tmp_path):
    _, corpus = synth
    clean = tmp_path / "clean.jsonl"
    report = tmp_path / "report.json"
    assert run(["ingest", "--in", str(corpus), "--out", str(clean), "--report", str(report)]) == 0
    assert json.loads(report.read_text())["report"]["accepted"] == 1900
    staged = tmp_path / "staged.json"
    direct = tmp_path / "direct.json"
    flags = ["--set", "burst_min_count=300", "--set", "min_consecutive=2"]
    assert run(["detect", "--in", str(clean), "--out", str(staged), *flags]) == 0
    assert run(["detect", "--in", str(corpus), "--out", str(direct), *flags]) == 0
    staged_c = json.loads(staged.read_text())["candidates"]
    assert staged_c == json.loads(direct.read_text())["candidates"]
    loaded, _ = load_corpus(corpus)
    mono = detect_events(build_index(loaded, 3, 5), ThresholdConfig(burst_min_count=300, min_consecutive=2))
    assert staged_c == [c.to_dict() for c in mono]
    for sub, extra in (("ngrams", ["--n", "3"]), ("scatter", ["--k", "30"])):
        a, b = tmp_path / f"{sub}-a.csv", tmp_path / f"{sub}-b.csv"
        assert run([sub, "--in", str(clean), "--out", str(a), *extra]) == 0
        assert run([sub, "--in", str(corpus), "--out", str(b), *extra]) == 0
        assert body(a) == body(b)


@pytest.mark.parametrize("sub, extra", [("detect", ["--set", "burst_min_count=300", "--set", "min_consecutive=2"]), ("ngrams", ["--n", "3", "--k", "50"])])
def test_threads_do_not_change_bytes(synth, tmp_path, sub, extra):
    _, corpus = synth
    outs = []
    for threads in (1, 2, 8, 1):
        out = tmp_path / f"{sub}-{threads}-{len(outs)}.out"
        assert run([sub, "--in", str(corpus), "--threads", str(threads), "--out", str(out), *extra]) == 0
        outs.append(out.read_bytes().replace(out.name.encode(), b""))
    assert len(set(outs)) == 1


def test_timeline_outputs(synth, tmp_path):
    _, corpus = synth
    out = tmp_path / "tl.csv"
    assert run(["timeline", "--in", str(corpus), "--gram", "QQA qqb  qqc", "--out", str(out)]) == 0
    rows = body(out)
    assert rows[0] == ["bucket", "count"]
    assert sum(int(c) for _, c in rows[1:]) == 400
    buckets = [int(b) for b, _ in rows[1:]]
    assert buckets == list(range(buckets[0], buckets[-1] + 1))
    gp = tmp_path / "tl.dat"
    assert run(["timeline", "--in", str(corpus), "--gram", "qqa qqb qqc", "--gnuplot", "--out", str(gp)]) == 0
    data = [l.split() for l in gp.read_text().splitlines() if not l.startswith("#")]
    assert data[0][1] == "2015-11-11"
    assert run(["timeline", "--in", str(corpus), "--gram", "not there"]) == 2


def test_scatter_default_138(synth, tmp_path):
    _, corpus = synth
    out = tmp_path / "sc.csv"
    assert run(["scatter", "--in", str(corpus), "--out", str(out)]) == 0
    rows = body(out)
    assert rows[0] == ["gram", "duration", "count"]
    assert len(rows) - 1 == 138
    assert rows[1][0] == "qqa qqb qqc" and 1 <= int(rows[1][1]) <= 4


def test_sentiment_csv(tmp_path):
    p = tmp_path / "c.jsonl"
    lines = [
        {"tweet_id": "1", "account_id": "a", "timestamp": 100, "text": "so proud #Mizzou"},
        {"tweet_id": "2", "account_id": "b", "timestamp": 200, "text": "sad day #Mizzou #PrayForMizzou"},
        {"tweet_id": "3", "account_id": "b", "timestamp": 300, "text": "nothing #Other"},
    ]
    p.write_text("\n".join(json.dumps(l) for l in lines))
    out = tmp_path / "s.csv"
    assert run(["sentiment", "--in", str(p), "--out", str(out)]) == 0
    rows = body(out)
    assert rows[0] == ["hashtag", "tweets", "avg_pos", "avg_neg"]
    table = {r[0]: r[1:] for r in rows[1:]}
    assert table["mizzou"][0] == "2"
    assert table["other"][1:] == ["0.5", "0.5"]
    for _, _, pos, neg in rows[1:]:
        assert abs(float(pos) + float(neg) - 1) <= 1e-12


def test_eval_round_trip(synth, tmp_path):
    spec, corpus = synth
    cands = tmp_path / "c.json"
    run(["detect", "--in", str(corpus), "--set", "burst_min_count=300", "--set", "min_consecutive=2", "--out", str(cands)])
    out = tmp_path / "eval.json"
    assert run(["eval", "--candidates", str(cands), "--spec", str(spec), "--slack", "1", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())["report"]
    assert (rep["precision"], rep["recall"], rep["f1"]) == (1.0, 1.0, 1.0)


def test_data_errors_name_the_file(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("top_m = 5\nthis is not a setting\n")
    corpus = tmp_path / "c.jsonl"
    corpus.write_text('{"tweet_id":"1","timestamp":1,"text":"a b c"}\n')
    assert run(["detect", "--in", str(corpus), "--config", str(cfg)]) == 2
    assert f"{cfg}:2" in capsys.readouterr().err
    cfg.write_text("top_m = 0\n")
    assert run(["detect", "--in", str(corpus), "--config", str(cfg)]) == 2
    assert run(["ngrams", "--in", str(tmp_path / "missing.jsonl")]) == 2
    assert "missing.jsonl" in capsys.readouterr().err
    bad_spec = tmp_path / "s.json"
    bad_spec.write_text('{"seed": 1, "days": 2, "injected_events": [{"gram": ["a"], "start_bucket": 0, "duration_buckets": 1, "occurrences": 1, "account_spread": 1}]}')
    assert run(["synth", "--spec", str(bad_spec)]) == 2


def test_confirmation_without_oracle_is_usage_error(tmp_path):
    corpus = tmp_path / "c.jsonl"
    corpus.write_text('{"tweet_id":"1","timestamp":1,"text":"a b c"}\n')
    assert run(["detect", "--in", str(corpus), "--require-confirmation"]) == 1


def test_oracle_confirmation(synth, tmp_path):
    _, corpus = synth
    oracle = tmp_path / "o.csv"
    oracle.write_text("query,score\nQQA QQB QQC,90\n")
    base = ["detect", "--in", str(corpus), "--set", "burst_min_count=300", "--set", "min_consecutive=2", "--oracle", str(oracle), "--require-confirmation"]
    out = tmp_path / "a.json"
    assert run([*base, "--out", str(out)]) == 0
    assert len(json.loads(out.read_text())["candidates"]) == 1
    assert run([*base, "--popularity-floor", "95", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["candidates"] == []


def test_ingest_report_to_stdout(tmp_path, capsys):
    p = tmp_path / "c.csv"
    p.write_text("tweet_id,account_id,timestamp,text\n1,a,5,x\n1,a,6,dup\nbad\n")
    assert run(["ingest", "--in", str(p)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["report"]["accepted"] == 1
    assert doc["report"]["duplicates"] == 1
    assert doc["report"]["malformed"] == 1
    assert doc["report"]["errors"][0]["line"] == 4


def test_segment_hashtags_flag(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text(json.dumps({"tweet_id": "1", "timestamp": 1, "text": "we #PrayForMizzou"}) + "\n")
    out = tmp_path / "n.csv"
    assert run(["ngrams", "--in", str(p), "--n", "3", "--segment-hashtags", "demo", "--out", str(out)]) == 0
    assert [r[0] for r in body(out)[1:]] == ["pray for mizzou", "we pray for"]
