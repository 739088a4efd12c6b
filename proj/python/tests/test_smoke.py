import json

import pytest

import consensus_dx as cdx


def test_grid_positions():
    grid = cdx.full_grid()
    assert len(grid) == 18
    t7 = grid[6]
    assert (t7.turn_id, t7.temperature, t7.summary_length, t7.top_p) == (7, 0.5, 2000, 0.1)
    t14 = grid[13]
    assert (t14.temperature, t14.summary_length, t14.top_p) == (0.95, 2000, 0.5)
    assert len(cdx.grid_hash(grid)) == 64


def test_similarity_and_matching():
    assert cdx.levenshtein("kitten", "sitting") == 3
    assert cdx.similarity("", "") == 1.0
    assert cdx.similarity("hypertension", "hypertensive") == pytest.approx(1 - 2 / 12)
    assert cdx.normalize("  CHF!! ") == "congestive heart failure"
    assert cdx.is_match("gastric distention", ["gastric distension"])
    assert not cdx.is_match("nausea", ["gastric distension"])


def test_majority_vote():
    out = cdx.majority_vote({1: "hypertension", 2: "congestive heart failure", 3: "hypertensive", 4: None})
    assert out["winner"] == "hypertension"
    assert out["founder"] == 1
    tie = cdx.majority_vote({5: "gout", 2: "asthma"})
    assert tie["winner"] == "asthma" and tie["tie_broken"]
    assert cdx.majority_vote({1: None})["winner"] is None


def test_combinatorics_and_partition():
    assert cdx.combination_count(18, 5) == 8568
    assert len(cdx.k_subsets(list(range(1, 19)), 5)) == 8568
    high, low = cdx.partition([([1, 2], 0.60), ([1, 3], 0.59)], 0.60)
    assert high == [[1, 2]] and low == [[1, 3]]


def test_validation_errors_map_to_value_error():
    with pytest.raises(ValueError):
        cdx.is_match("x", [])
    with pytest.raises(cdx.ValidationError):
        cdx.character_budget(2000, "words")


def test_split_is_deterministic(tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    assert cdx.write_synthetic_corpus(corpus, notes=40, medications_per_note=6) == 240
    train, test = cdx.split_corpus(corpus, 0.6, 42)
    assert (len(train), len(test)) == (144, 96)
    assert not set(train) & set(test)
    assert cdx.split_corpus(corpus, 0.6, 42) == (train, test)


def test_synthetic_pipeline(tmp_path):
    cdx.write_synthetic_corpus(tmp_path / "corpus.jsonl", notes=10, medications_per_note=6)
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "corpus": "corpus.jsonl",
        "output_dir": "out",
        "workers": 1,
        "provider": {"kind": "synthetic", "synthetic": {"default_accuracy": 0.6, "seed": 3}},
    }))
    for stage in (cdx.summarize, cdx.predict, cdx.sweep, cdx.analyze):
        status, output = stage(config)
        assert status == 0, output
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["train"]["combination_count"] == 8568
    assert len(report["ensemble"]["turns"]) == 5
    status, output = cdx.vote(config, [1, 2, 3, 4, 5], "test")
    assert status == 0, output
    status, _ = cdx.vote(tmp_path / "missing.json", [1, 2, 3, 4, 5])
    assert status == 2
