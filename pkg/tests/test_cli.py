import json
import struct

import numpy as np
import pytest

from mlgcn.cli import main
from mlgcn.config import TRAIN_KEYS, parse_config_text
from mlgcn.errors import ConfigError
from mlgcn.graph import load_dataset
from mlgcn.modelio import ModelFormatError, load_model, save_model
from mlgcn.gcn import GcnParams


def write(path, text):
    path.write_text(text)
    return path


def read_jsonl(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


@pytest.fixture
def cfg(tmp_path):
    return write(tmp_path / "run.cfg", "# tiny smoke run\nepochs = 12\nhidden_dim = 8\n")


def test_train_smoke(cfg, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["train", "--config", str(cfg), "--out", str(out)]) == 0
    records = read_jsonl(out / "metrics.jsonl")
    epochs = [r for r in records if "epoch" in r]
    assert [r["epoch"] for r in epochs] == list(range(1, 13))
    assert (out / "model.bin").is_file()
    stdout = capsys.readouterr().out.splitlines()
    assert len(stdout) == len(records)


def test_manifest_defaults(cfg, tmp_path):
    out = tmp_path / "out"
    main(["train", "--config", str(cfg), "--out", str(out)])
    manifest = json.loads((out / "manifest.json").read_text())
    c = manifest["config"]
    assert (c["lambda1"], c["lambda2"], c["negatives"], c["lr"], c["threshold"], c["layers"]) == (
        0.25, 0.25, 5, 0.01, 0.5, 2)
    assert manifest["command"] == "train" and manifest["seed"] == 0


def test_rerun_from_manifest_is_identical(cfg, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["train", "--config", str(cfg), "--out", str(a)])
    main(["train", "--config", str(a / "manifest.json"), "--out", str(b)])
    assert (a / "model.bin").read_bytes() == (b / "model.bin").read_bytes()
    assert (a / "metrics.jsonl").read_bytes() == (b / "metrics.jsonl").read_bytes()


def test_unknown_key(tmp_path, capsys):
    bad = write(tmp_path / "bad.cfg", "lamda1 = 0.3\n")
    assert main(["train", "--config", str(bad), "--out", str(tmp_path / "o")]) != 0
    assert "unknown key" in capsys.readouterr().err


def test_negative_lambda_warns(tmp_path, caplog):
    neg = write(tmp_path / "neg.cfg", "lambda1 = -1\nepochs = 3\nhidden_dim = 4\n")
    with caplog.at_level("WARNING"):
        assert main(["train", "--config", str(neg), "--out", str(tmp_path / "o")]) == 0
    assert any("lambda1" in rec.message for rec in caplog.records)


def test_config_parsing():
    values = parse_config_text(
        "lr = 0.02  # faster\nfractions = 10,20,30,40%\npropagation = identity\n", TRAIN_KEYS)
    assert values == {"lr": 0.02, "fractions": (0.1, 0.2, 0.3, 0.4), "propagation": "identity"}
    with pytest.raises(ConfigError, match="bad value"):
        parse_config_text("epochs = many\n", TRAIN_KEYS)
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config_text("lr = 1\nlr = 2\n", TRAIN_KEYS)


def test_eval_matches_train(cfg, tmp_path, capsys):
    out = tmp_path / "out"
    main(["train", "--config", str(cfg), "--out", str(out)])
    final = [r for r in read_jsonl(out / "metrics.jsonl") if r.get("split") == "test"][0]
    capsys.readouterr()
    assert main(["eval", "--config", str(cfg), "--model", str(out / "model.bin")]) == 0
    lines = capsys.readouterr().out.splitlines()
    record = json.loads(lines[0])
    assert record["micro_f1"] == final["micro_f1"]
    assert f"({100 * final['micro_f1']:.2f}%)" in lines[1]
    assert record["percent"] == f"{100 * final['micro_f1']:.2f}"


def test_eval_dimension_mismatch(cfg, tmp_path, capsys):
    model = tmp_path / "m.bin"
    save_model(model, GcnParams(np.zeros((3, 4)), np.zeros((4, 5))), np.zeros((5, 4)))
    assert main(["eval", "--config", str(cfg), "--model", str(model)]) != 0
    assert "c=5" in capsys.readouterr().err


def test_model_file_layout(tmp_path):
    rng = np.random.default_rng(0)
    params = GcnParams(rng.standard_normal((3, 2)), rng.standard_normal((2, 4)))
    Z = rng.standard_normal((4, 2))
    path = save_model(tmp_path / "m.bin", params, Z)
    raw = path.read_bytes()
    assert raw[:4] == b"MLGC" and raw[4] == 1
    assert struct.unpack_from("<QQQ", raw, 5) == (3, 2, 4)
    assert np.frombuffer(raw, "<f8", count=6, offset=29).tolist() == params.W0.ravel().tolist()
    loaded, Z2 = load_model(path)
    assert np.array_equal(loaded.W1, params.W1) and np.array_equal(Z2, Z)
    (tmp_path / "bad.bin").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "bad.bin")


GEN = """n = 60
classes = 4
corr_pairs = 0:1:0.8, 2:3:0.8
p_in = 0.2
p_out = 0.02
noise_dims = 3
train_fraction = 0.4
seed = 9
"""


def test_gen_is_byte_identical(tmp_path):
    spec = write(tmp_path / "gen.cfg", GEN)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["gen", "--config", str(spec), "--out", str(a)]) == 0
    assert main(["gen", "--config", str(spec), "--out", str(b)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == ["edges.tsv", "features.tsv", "labels.tsv", "meta.tsv", "split.tsv"]
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()
    g = load_dataset(a)
    assert (g.n, g.c, g.d) == (60, 4, 7)


def test_gradcheck_command(tmp_path, capsys):
    empty = write(tmp_path / "gc.cfg", "# defaults\n")
    assert main(["gradcheck", "--config", str(empty), "--out", str(tmp_path / "gc")]) == 0
    rows = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert [r["tensor"] for r in rows] == ["W0", "W1", "Z"]
    assert all(r["max_rel_error"] < 1e-4 for r in rows)


def test_gradcheck_command_fails_loudly(tmp_path, capsys):
    # a huge finite-difference step wrecks agreement, so the command must exit nonzero
    cfg = write(tmp_path / "gc.cfg", "step = 0.5\n")
    assert main(["gradcheck", "--config", str(cfg), "--out", str(tmp_path / "gc")]) == 1


def test_sweep_command(tmp_path, capsys):
    spec = write(tmp_path / "gen.cfg", GEN)
    data = tmp_path / "data"
    main(["gen", "--config", str(spec), "--out", str(data)])
    cfg = write(tmp_path / "sweep.cfg",
                f"dataset = {data}\nepochs = 5\nhidden_dim = 4\nfractions = 10,20,30,40%\n")
    out = tmp_path / "sweep"
    capsys.readouterr()
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    rows = read_jsonl(out / "metrics.jsonl")
    sweep = [r for r in rows if r["fraction"] != 1.0]
    assert len(sweep) == 8
    assert all(list(r) == ["method", "fraction", "seed", "micro_f1", "tp", "fp", "fn"] for r in rows)
    tables = (out / "tables.txt").read_text()
    assert "Partly ML-GCN" in tables and "40%" in tables
