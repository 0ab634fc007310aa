import json
import math

import numpy as np
import pytest

from l2scatter import io as sio
from l2scatter.cli import main
from l2scatter.frame import pairing_operator, random_tight_frame
from l2scatter.partition import BlockPartition
from l2scatter.scatter import ScatteringNetwork
from l2scatter.synthetic import random_network


def run(*args):
    return main([str(a) for a in args])


def write(path, text):
    path.write_text(text)
    return path


def test_model_round_trip_bit_exact(tmp_path, rng):
    net = random_network(rng, [5, 6, 4, 3])
    sio.save_model(net, tmp_path / "m.json")
    back = sio.load_model(tmp_path / "m.json")
    assert all(a == b for a, b in zip(net.operators, back.operators))
    assert back.partitions == net.partitions
    assert back.final_partition == net.final_partition
    blocks = json.loads((tmp_path / "m.json").read_text())["layers"][0]["blocks"]
    assert min(min(b) for b in blocks) == 1


def test_load_rejects_invalid_frames(tmp_path):
    W = random_tight_frame(2, 2, 0)
    d = sio.model_to_dict(ScatteringNetwork.build([W]))
    d["layers"][0]["psi_real"] = [3 * v for v in d["layers"][0]["psi_real"]]
    (tmp_path / "bad.json").write_text(json.dumps(d))
    with pytest.raises(Exception):
        sio.load_model(tmp_path / "bad.json")
    assert not sio.load_model(tmp_path / "bad.json", check=False).is_valid()


def test_dataset_parsing(tmp_path):
    p = write(tmp_path / "d.csv", "1,2,a\n3,4,b\n")
    X, labels = sio.read_dataset(p, label_col=-1)
    np.testing.assert_array_equal(X, [[1, 2], [3, 4]])
    assert labels == ["a", "b"]
    with pytest.raises(sio.DataError):
        sio.read_dataset(write(tmp_path / "r.csv", "1,2\n3\n"))
    with pytest.raises(sio.DataError):
        sio.read_dataset(write(tmp_path / "e.csv", ""))
    with pytest.raises(sio.DataError):
        sio.read_dataset(write(tmp_path / "n.csv", "1,nan\n"))


def test_init(tmp_path):
    assert run("init", "--dims", "4,2,1", "--scheme", "pairing", "--out", tmp_path / "p.json") == 0
    net = sio.load_model(tmp_path / "p.json")
    assert net.dims == [4, 2, 1]
    np.testing.assert_array_equal(net.operators[0].psi_real, [[1, 0, 0, 0], [0, 0, 1, 0]])
    assert run("init", "--dims", "4,1", "--scheme", "random", "--out", tmp_path / "x.json") == 2
    assert not (tmp_path / "x.json").exists()
    assert run("init", "--dims", "4,3", "--scheme", "pairing", "--out", tmp_path / "x.json") == 2
    for name in ("a.json", "b.json"):
        assert run("init", "--dims", "8,8,8", "--scheme", "random", "--seed", 1,
                   "--out", tmp_path / name) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_init_error_names_layer(tmp_path, capsys):
    assert run("init", "--dims", "8,8,3", "--out", tmp_path / "x.json") == 2
    assert "layer 2" in capsys.readouterr().err


def test_transform_worked_example(tmp_path):
    net = ScatteringNetwork((pairing_operator(2, [(0, 1)]),), (BlockPartition.full(2),),
                            BlockPartition.full(1))
    sio.save_model(net, tmp_path / "m.json")
    write(tmp_path / "x.csv", "3,4\n")
    assert run("transform", "--model", tmp_path / "m.json", "--data", tmp_path / "x.csv",
               "--emit", "autilde", "--out", tmp_path / "a.csv") == 0
    row, _ = sio.read_dataset(tmp_path / "a.csv")
    np.testing.assert_allclose(row[0], [3.5, 3.5, math.sqrt(0.5)], atol=1e-12)
    assert (tmp_path / "a.csv.layers.csv").read_text() == "m,offset,length\n0,0,2\n1,2,1\n"
    assert run("transform", "--model", tmp_path / "m.json", "--data", tmp_path / "x.csv",
               "--emit", "utilde", "--out", tmp_path / "u.csv") == 0
    row, _ = sio.read_dataset(tmp_path / "u.csv")
    np.testing.assert_allclose(row[0], [3.0, 4.0, math.sqrt(0.5)], atol=1e-12)


def test_transform_energy_and_singletons(tmp_path, rng):
    assert run("init", "--dims", "4,4,4", "--blocks", "size:2,size:2,full", "--seed", 3,
               "--out", tmp_path / "m.json") == 0
    X = rng.standard_normal((20, 4))
    sio.write_dataset(tmp_path / "x.csv", X)
    run("transform", "--model", tmp_path / "m.json", "--data", tmp_path / "x.csv",
        "--emit", "autilde", "--out", tmp_path / "a.csv")
    run("transform", "--model", tmp_path / "m.json", "--data", tmp_path / "x.csv",
        "--emit", "utilde", "--out", tmp_path / "u.csv")
    A, _ = sio.read_dataset(tmp_path / "a.csv")
    U, _ = sio.read_dataset(tmp_path / "u.csv")
    energy = np.sum(A[:, :8] ** 2, axis=1) + np.sum(U[:, 8:] ** 2, axis=1)
    np.testing.assert_allclose(energy, np.sum(X ** 2, axis=1), rtol=1e-10)

    assert run("init", "--dims", "4,4", "--blocks", "singleton,singleton", "--out",
               tmp_path / "s.json") == 0
    for emit in ("autilde", "utilde"):
        run("transform", "--model", tmp_path / "s.json", "--data", tmp_path / "x.csv",
            "--emit", emit, "--out", tmp_path / f"{emit}.csv")
    A, _ = sio.read_dataset(tmp_path / "autilde.csv")
    U, _ = sio.read_dataset(tmp_path / "utilde.csv")
    np.testing.assert_array_equal(A[:, :4], U[:, :4])
    np.testing.assert_array_equal(A[:, 4:], 0.0)
    np.testing.assert_array_equal(U[:, 4:], 0.0)
    write(tmp_path / "bad.csv", "1,2,3\n")
    assert run("transform", "--model", tmp_path / "s.json", "--data", tmp_path / "bad.csv",
               "--out", tmp_path / "o.csv") == 2


def _spec(tmp_path, name, d):
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return p


def test_gen_synthetic(tmp_path):
    spec = _spec(tmp_path, "pm.json", {"atoms": [[1, 1], [-1, -1]], "probs": [0.5, 0.5]})
    assert run("gen-synthetic", "--spec", spec, "--n", 10000, "--seed", 4,
               "--out", tmp_path / "d.csv") == 0
    X, _ = sio.read_dataset(tmp_path / "d.csv")
    assert X.shape == (10000, 2)
    # each coordinate mean is +-1 Bernoulli: std 1/sqrt(n)
    assert np.all(np.abs(X.mean(axis=0)) <= 5 / np.sqrt(10000))
    run("gen-synthetic", "--spec", spec, "--n", 100, "--seed", 4, "--out", tmp_path / "e.csv")
    run("gen-synthetic", "--spec", spec, "--n", 100, "--seed", 4, "--out", tmp_path / "f.csv")
    assert (tmp_path / "e.csv").read_bytes() == (tmp_path / "f.csv").read_bytes()

    one = _spec(tmp_path, "one.json", {"atoms": [[2, 3]], "probs": [1.0], "n": 5})
    assert run("gen-synthetic", "--spec", one, "--out", tmp_path / "o.csv") == 0
    X, _ = sio.read_dataset(tmp_path / "o.csv")
    np.testing.assert_array_equal(X, np.tile([2.0, 3.0], (5, 1)))

    bad = _spec(tmp_path, "bad.json", {"atoms": [[1], [2]], "probs": [0.5, 0.6]})
    assert run("gen-synthetic", "--spec", bad, "--n", 3, "--out", tmp_path / "b.csv") == 2


def test_train_unsup(tmp_path, capsys):
    sio.write_dataset(tmp_path / "x.csv", np.array([[1.0, 1, 0, 0], [0, 0, 1, 1],
                                                    [-1.0, -1, 0, 0], [0, 0, -1, -1]]))
    args = ["train-unsup", "--data", tmp_path / "x.csv", "--dims", "4,2", "--seed", 2]
    assert run(*args, "--out", tmp_path / "a.json") == 0
    out = capsys.readouterr().out
    assert "layer 1:" in out
    assert run(*args, "--out", tmp_path / "b.json") == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert sio.load_model(tmp_path / "a.json").is_valid()
    write(tmp_path / "empty.csv", "")
    assert run("train-unsup", "--data", tmp_path / "empty.csv", "--dims", "4,2",
               "--out", tmp_path / "c.json") == 2
    assert run("train-unsup", "--data", tmp_path / "x.csv", "--dims", "3,2",
               "--out", tmp_path / "c.json") == 2


def test_train_unsup_numerical_failure(tmp_path, monkeypatch):
    from l2scatter import cli
    from l2scatter.errors import NumericalFailure

    def boom(*a, **k):
        raise NumericalFailure(7)
    monkeypatch.setattr(cli, "build_network_greedy", boom)
    sio.write_dataset(tmp_path / "x.csv", np.ones((3, 2)))
    assert run("train-unsup", "--data", tmp_path / "x.csv", "--dims", "2,2",
               "--out", tmp_path / "m.json") == 3


def test_fit_classes_and_classify(tmp_path, capsys):
    spec = _spec(tmp_path, "mix.json", {
        "atoms": [[3, 0, 0, 0], [3.2, 0.1, 0, 0], [0, 0, 3, 0], [0, 0.1, 3.2, 0]],
        "probs": [0.25, 0.25, 0.25, 0.25], "labels": [0, 0, 1, 1]})
    run("gen-synthetic", "--spec", spec, "--n", 200, "--seed", 1, "--out", tmp_path / "train.csv")
    run("gen-synthetic", "--spec", spec, "--n", 200, "--seed", 2, "--out", tmp_path / "test.csv")
    run("init", "--dims", "4,4,4", "--blocks", "size:2", "--out", tmp_path / "m.json")
    assert run("fit-classes", "--model", tmp_path / "m.json", "--data", tmp_path / "train.csv",
               "--label-col", -1, "--out", tmp_path / "t.json") == 0
    capsys.readouterr()
    assert run("classify", "--model", tmp_path / "m.json", "--templates", tmp_path / "t.json",
               "--data", tmp_path / "test.csv", "--label-col", -1,
               "--out", tmp_path / "pred.txt") == 0
    acc = float(capsys.readouterr().out.split("accuracy=")[1].split()[0])
    assert acc >= 0.9
    assert len((tmp_path / "pred.txt").read_text().split()) == 200

    write(tmp_path / "unk.csv", "3,0,0,0,7\n")
    assert run("classify", "--model", tmp_path / "m.json", "--templates", tmp_path / "t.json",
               "--data", tmp_path / "unk.csv", "--label-col", -1) == 2


def test_classify_training_singletons(tmp_path, capsys):
    X = np.array([[1.0, 0], [0, 1.0], [-1.0, 0]])
    sio.write_dataset(tmp_path / "d.csv", X, [0, 1, 2])
    run("init", "--dims", "2,2", "--blocks", "singleton,singleton", "--out", tmp_path / "m.json")
    run("fit-classes", "--model", tmp_path / "m.json", "--data", tmp_path / "d.csv",
        "--label-col", -1, "--out", tmp_path / "t.json")
    capsys.readouterr()
    assert run("classify", "--model", tmp_path / "m.json", "--templates", tmp_path / "t.json",
               "--data", tmp_path / "d.csv", "--label-col", -1, "--out", tmp_path / "p.txt") == 0
    assert "accuracy=1.000000" in capsys.readouterr().out
    assert (tmp_path / "p.txt").read_text() == "0\n1\n2\n"


def test_verify_quick_and_fault(tmp_path, capsys):
    assert run("verify", "--level", "quick", "--seed", 0) == 0
    first = capsys.readouterr().out
    lines = [l for l in first.splitlines() if l.startswith("PROPERTY")]
    assert len(lines) >= 15 and all(" PASS " in l for l in lines)
    run("verify", "--level", "quick", "--seed", 0)
    second = capsys.readouterr().out
    strip = lambda s: [l for l in s.splitlines() if l.startswith("PROPERTY")]
    assert strip(first) == strip(second)

    run("init", "--dims", "4,4", "--blocks", "size:2", "--out", tmp_path / "m.json")
    d = json.loads((tmp_path / "m.json").read_text())
    for key in ("psi_real", "psi_imag"):
        d["layers"][0][key] = [2 * v for v in d["layers"][0][key]]
    (tmp_path / "bad.json").write_text(json.dumps(d))
    assert run("verify", "--model", tmp_path / "bad.json") == 1
    out = capsys.readouterr().out
    assert "PROPERTY energy_identity FAIL" in out
    assert "PROPERTY contractivity FAIL" in out
