import json

import pytest

from discodrive.cli import main
from discodrive.corpus import read_corpus


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run(*args) -> int:
    return main(list(args))


def make_corpus(workdir, name="corpus.jsonl", n=3):
    assert run("scenarios", "--domain", "navigation", "--count", str(n), "--seed", "3",
               "--mock", "-o", "sc.jsonl") == 0
    assert run("simulate", "--scenarios", "sc.jsonl", "--seed", "5", "--mock",
               "-o", name) == 0
    return workdir / name


def test_validate_clean_corpus_exit_zero(workdir, capsys):
    path = make_corpus(workdir)
    assert run("validate", str(path)) == 0
    assert "0 violations" in capsys.readouterr().out


def test_validate_broken_corpus_exit_two(workdir, capsys):
    path = make_corpus(workdir)
    lines = path.read_text().splitlines()
    obj = json.loads(lines[0])
    obj["turns"] = obj["turns"][:3]
    obj["num_turns"] = 3
    lines[0] = json.dumps(obj)
    path.write_text("\n".join(lines) + "\n")
    assert run("validate", str(path)) == 2
    out = capsys.readouterr().out
    assert "TURN_LENGTH" in out and "LAST_SPEAKER" in out


def test_missing_seed_is_usage_error(workdir, capsys):
    code = run("scenarios", "--domain", "weather", "--count", "2", "--mock", "-o", "x.jsonl")
    assert code == 1
    assert "seed" in capsys.readouterr().err.lower()


def test_json_errors_envelope(workdir, capsys):
    code = run("--json-errors", "validate", "missing-file.jsonl")
    assert code == 1  # click path validation -> usage error
    err = capsys.readouterr().err
    envelope = json.loads(err.strip().splitlines()[-1])
    assert envelope["error"]["type"] == "usage"


def test_data_error_exit_two(workdir, capsys):
    bad = workdir / "bad.jsonl"
    bad.write_text('{"truncated": \n', encoding="utf-8")
    assert run("validate", str(bad)) == 2
    assert run("--json-errors", "validate", str(bad)) == 2
    envelope = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert envelope["error"]["type"] == "data"


def test_inject_reproducible(workdir):
    path = make_corpus(workdir)
    assert run("inject", "--rate", "1", "--ops", "repetition", "--seed", "5",
               str(path), "out1.jsonl") == 0
    assert run("inject", "--rate", "1", "--ops", "repetition", "--seed", "5",
               str(path), "out2.jsonl") == 0
    assert (workdir / "out1.jsonl").read_bytes() == (workdir / "out2.jsonl").read_bytes()


def test_simulate_reproducible(workdir):
    make_corpus(workdir, "a.jsonl")
    make_corpus(workdir, "b.jsonl")
    assert (workdir / "a.jsonl").read_bytes() == (workdir / "b.jsonl").read_bytes()


def test_metrics_distinct_table(workdir, capsys):
    path = make_corpus(workdir)
    capsys.readouterr()  # drop generation chatter
    assert run("metrics", "distinct", "--n", "4", str(path)) == 0
    out = capsys.readouterr().out
    lines = [line for line in out.splitlines() if line.strip()]
    assert lines[0].startswith("N-Gram")
    assert [line.split()[0] for line in lines[1:]] == ["1-gram", "2-gram", "3-gram", "4-gram"]


def test_score_and_tag_commands(workdir, capsys):
    gen = workdir / "gen.jsonl"
    gen.write_text(
        json.dumps({"context": "c", "reference": "turn left", "hypothesis": "turn left"}) + "\n",
        encoding="utf-8",
    )
    assert run("score", str(gen), "--json") == 0
    scores = json.loads(capsys.readouterr().out)["scores"]
    assert scores["bleu_1"] == 100.0

    path = make_corpus(workdir)
    assert run("tag", str(path), "tagged.jsonl") == 0
    tagged = read_corpus(workdir / "tagged.jsonl")
    assert any(t.disfluency_spans for d in tagged.dialogs for t in d.turns)


def test_pair_manifest(workdir):
    make_corpus(workdir, "a.jsonl")
    make_corpus(workdir, "b.jsonl")
    assert run("pair", "a.jsonl", "b.jsonl", "--seed", "2", "-o", "pairs.json") == 0
    manifest = json.loads((workdir / "pairs.json").read_text())
    assert len(manifest["items"]) == 3
    assert set(manifest["items"][0]["sources"].values()) == {"set_a", "set_b"}


def test_aggregate_command(workdir, capsys):
    ratings = workdir / "r.jsonl"
    rows = [
        {"evaluator_id": "e1", "item_id": "d1", "metric_name": "naturalness", "value": v}
        for v in (3, 4, 4, 5)
    ]
    ratings.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    assert run("aggregate", str(ratings), "--mode", "likert") == 0
    assert "naturalness: 4.0 (±0.80)" in capsys.readouterr().out


def test_simulate_full_pipeline_config(workdir, capsys):
    config = {
        "backend": {"kind": "mock"},
        "domains": ["navigation", "weather"],
        "scenarios_per_domain": 2,
        "seed": 11,
        "turn_length_mode": "fixed",
        "fixed_turn_length": 6,
        "paths": {"output": "full.jsonl"},
    }
    (workdir / "pipeline.json").write_text(json.dumps(config), encoding="utf-8")
    assert run("simulate", "--config", "pipeline.json") == 0
    corpus = read_corpus(workdir / "full.jsonl")
    assert len(corpus.dialogs) == 4
    assert all(d.num_turns == 6 for d in corpus.dialogs)

    # flags override config: different seed and output
    assert run("simulate", "--config", "pipeline.json", "--seed", "12",
               "-o", "full2.jsonl") == 0
    assert (workdir / "full.jsonl").read_bytes() != (workdir / "full2.jsonl").read_bytes()

    # reproducible under the same config
    assert run("simulate", "--config", "pipeline.json", "-o", "again.jsonl") == 0
    assert (workdir / "full.jsonl").read_bytes() == (workdir / "again.jsonl").read_bytes()


def test_simulate_config_missing_path_is_usage_error(workdir, capsys):
    config = {
        "backend": {"kind": "mock"},
        "domains": ["weather"],
        "scenarios_per_domain": 1,
        "seed": 1,
        "paths": {"fewshot_dir": "does-not-exist", "output": "x.jsonl"},
    }
    (workdir / "bad.json").write_text(json.dumps(config), encoding="utf-8")
    assert run("simulate", "--config", "bad.json") == 1


def test_simulate_without_seed_anywhere_is_usage_error(workdir):
    (workdir / "noseed.json").write_text(
        json.dumps({"backend": {"kind": "mock"}, "domains": ["weather"],
                    "scenarios_per_domain": 1, "paths": {"output": "x.jsonl"}}),
        encoding="utf-8",
    )
    assert run("simulate", "--config", "noseed.json") == 1


def test_help_everywhere():
    for args in (["--help"], ["scenarios", "--help"], ["metrics", "--help"],
                 ["metrics", "distinct", "--help"], ["sample", "--help"],
                 ["inject", "--help"], ["serve", "--help"]):
        assert run(*args) == 0
