import json
from pathlib import Path

import pytest

from oppscreen.cli import load_processed, main
from oppscreen.config import ConfigError, load_config

FIXTURES = Path(__file__).parent / "fixtures"

SMALL_TOML = """
seed = 0
k = 3

[train]
algorithm = "rf"

[train.params]
n_trees = 10

[[grams]]
analyzer = "word"
ngram_range = [1, 1]
max_df = 0.5
min_df = 0.001
max_features = 300

[[grams]]
analyzer = "char_word_boundary"
ngram_range = [2, 3]
max_df = 0.5
min_df = 0.001
max_features = 300
"""


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(SMALL_TOML)
    return path


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    """A processed synthetic corpus and a bundle trained on it."""
    root = tmp_path_factory.mktemp("cli")
    config = root / "small.toml"
    config.write_text(SMALL_TOML)
    assert main(["preprocess", "--config", str(config), "--out", str(root)]) == 0
    assert main(["train", "--config", str(config), "--out", str(root)]) == 0
    return root, config


def read_jsonl(path):
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


def test_preprocess_reference_examples(tmp_path, capsys):
    assert main(["preprocess", "--dataset", str(FIXTURES / "reference_examples.jsonl"), "--out", str(tmp_path)]) == 0
    rows = {row["id"]: row for row in read_jsonl(tmp_path / "processed.jsonl")}
    expected = {row["id"]: row["expected"] for row in read_jsonl(FIXTURES / "reference_examples.jsonl")}
    assert {i: " ".join(rows[i]["tokens"]) for i in rows} == {i: e for i, e in expected.items() if i in rows}
    assert len(rows) == len(expected)
    assert "kept" in capsys.readouterr().out


def test_preprocess_records_duplicates(tmp_path):
    raw = tmp_path / "raw.jsonl"
    text = "$SAN sube con fuerza hoy en bolsa, buena oportunidad de compra"
    raw.write_text(
        "".join(json.dumps({"id": i, "text": text, "tickers": ["SAN"], "emotion": "P+"}) + "\n" for i in (1, 2))
    )
    assert main(["preprocess", "--dataset", str(raw), "--out", str(tmp_path)]) == 0
    assert [r["id"] for r in read_jsonl(tmp_path / "processed.jsonl")] == [1]
    assert read_jsonl(tmp_path / "discards.jsonl") == [{"id": 2, "reason": "duplicate", "duplicate_of": 1}]


def test_preprocess_keeps_every_class(trained):
    root, _ = trained
    tweets, labels = load_processed(root / "processed.jsonl")
    assert {str(lab) for lab in labels} == {"S+", "P+", "N", "A-"}
    assert len(tweets) == len({t.id for t in tweets})


def test_bad_protocol_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["experiment", "--protocol", "5"])
    assert info.value.code == 2


def test_classify_depth_one_flags_nothing(trained, tmp_path):
    # logistic probabilities stay strictly below 1, so a full-depth threshold abstains everywhere
    root, _ = trained
    config = tmp_path / "gd.toml"
    config.write_text(SMALL_TOML.replace('algorithm = "rf"', 'algorithm = "gd"').replace("n_trees = 10", "epochs = 50"))
    corpus = str(root / "processed.jsonl")
    assert main(["train", "--config", str(config), "--input", corpus, "--model", str(tmp_path / "gd")]) == 0
    args = ["classify", "--config", str(config), "--model", str(tmp_path / "gd"), "--input", corpus]
    assert main(args + ["--out", str(tmp_path), "--depth", "1.0"]) == 0
    rows = read_jsonl(tmp_path / "classified.jsonl")
    assert rows and not [r for r in rows if r["label"] == "P+"]
    assert all(r["label"] == "N" and r["abstained"] for r in rows)
    assert (tmp_path / "tickers.csv").read_text().splitlines() == ["ticker,mentions,upper_quartile"]


def test_classify_flags_opportunities(trained, tmp_path):
    root, config = trained
    raw = tmp_path / "new.jsonl"
    texts = [
        "Gran oportunidad de compra en $REP, acumulando para subida fuerte, potencial alcista 🚀",
        "Aprovechen el recorte de $SAN para comprar, potencial enorme, objetivo claro al alza 🚀",
    ]
    raw.write_text("".join(json.dumps({"id": i, "text": t, "tickers": []}) + "\n" for i, t in enumerate(texts)))
    assert main(["classify", "--config", str(config), "--model", str(root / "model"), "--input", str(raw), "--out", str(tmp_path), "--depth", "0"]) == 0
    rows = read_jsonl(tmp_path / "classified.jsonl")
    assert [r["id"] for r in rows] and rows[0]["label"] == "P+"
    flagged = [r for r in rows if r["label"] == "P+"]
    # flagged rows come first, most confident first
    assert [r["confidences"][-1] for r in flagged] == sorted((r["confidences"][-1] for r in flagged), reverse=True)


def test_experiment_and_report(trained, tmp_path, capsys):
    root, config = trained
    args = ["--config", str(config), "--out", str(tmp_path)]
    assert main(["experiment", *args, "--input", str(root / "processed.jsonl"), "--protocol", "1", "--protocol", "4"]) == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert {"experiment_p1.json", "experiment_p4.json", "depth_sweep_p4.csv", "tickers_p1.csv", "experiment.txt"} <= names
    assert "depth_sweep_p1.csv" not in names
    capsys.readouterr()
    assert main(["report", *args]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].split()[:2] == ["Test", "Classifier"]
    assert "Improvement of test 4 over test 1" in out


def test_config_precedence(small_config):
    assert load_config().seed == 0 and load_config().k == 10
    assert load_config(small_config).k == 3
    env = {"OPPSCREEN_FOLDS": "4", "OPPSCREEN_SEED": "9"}
    assert load_config(small_config, environ=env).k == 4
    config = load_config(small_config, {"k": 5}, environ=env)
    assert (config.k, config.seed) == (5, 9)
    assert load_config(environ={"OPPSCREEN_DEPTH": "0.5"}).depth == 0.5


def test_config_file_relative_paths(tmp_path):
    (tmp_path / "cfg.toml").write_text('seed = 1\nout = "results"\n')
    assert load_config(tmp_path / "cfg.toml").out == tmp_path / "results"


@pytest.mark.parametrize(
    "body, message",
    [
        ("seed = 0\nk = 1\n", "k \\(folds\\)"),
        ("seed = 0\n[cascade]\ndepth = 2.0\n", "depth"),
        ("seed = 0\nprotocols = [7]\n", "protocol"),
        ('seed = 0\n[dataset]\npath = "nowhere.jsonl"\n', "does not exist"),
    ],
)
def test_config_validation(tmp_path, body, message):
    (tmp_path / "cfg.toml").write_text(body)
    with pytest.raises(ConfigError, match=message):
        load_config(tmp_path / "cfg.toml")


def test_malformed_config_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("seed = 0\nk = = 3\n")
    assert main(["train", "--config", str(bad), "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert str(bad) in err and "line 2" in err


def test_malformed_dataset_names_line(tmp_path, capsys):
    raw = tmp_path / "raw.jsonl"
    raw.write_text('{"id": 1, "text": "hola", "emotion": "N"}\n{"id": 2\n')
    assert main(["preprocess", "--dataset", str(raw), "--out", str(tmp_path)]) == 1
    assert f"{raw}:2" in capsys.readouterr().err


def test_missing_processed_corpus(tmp_path, capsys):
    assert main(["train", "--out", str(tmp_path)]) == 1
    assert "run `oppscreen preprocess` first" in capsys.readouterr().err


def test_switching_algorithm_drops_old_params(tmp_path):
    (tmp_path / "cfg.toml").write_text('seed = 0\n[train]\nalgorithm = "svc"\n')
    assert load_config(tmp_path / "cfg.toml").train.params == {}
    config = load_config(environ={"OPPSCREEN_ALGORITHM": "dt"})
    assert config.train.algorithm == "dt" and config.train.params == {}
    assert load_config().train.params["n_trees"] == 100
