import shutil
import subprocess
import sys

import numpy as np
import pytest

from xim.cli import main, read_embedding
from xim.core import build_lattice, load_dataset
from xim.model import load_model


@pytest.fixture
def toy(tmp_path):
    path = tmp_path / "toy.csv"
    assert main(["synth", str(path), "--n", "10", "--dims", "3", "--clusters", "4,6", "--seed", "1"]) == 0
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# tiny run\nmethod = c-xim\nrows = 3\ncols = 3\nt_max = 100\nseed = 7\nlabel_column = -1\n")
    return path, cfg


def train(toy, tmp_path, name="m.xim", extra=()):
    data, cfg = toy
    out = tmp_path / name
    code = main(["train", str(data), str(out), "--config", str(cfg), *extra])
    return code, out


class TestSynth:
    def test_shape_and_labels(self, tmp_path):
        p = tmp_path / "s.csv"
        assert main(["synth", str(p), "--seed", "3"]) == 0
        ds = load_dataset(p, label_column=-1)
        assert ds.points.shape == (147, 79)
        assert sorted(np.bincount(ds.labels.astype(int))) == [22, 125]

    def test_bad_clusters(self, tmp_path):
        assert main(["synth", str(tmp_path / "s.csv"), "--clusters", "a,b"]) == 2


class TestTrain:
    def test_tiny_run(self, toy, tmp_path, capsys):
        code, out = train(toy, tmp_path)
        assert code == 0
        m = load_model(out)
        assert m.prototypes.shape == (9, 3) and m.method == "c-xim"
        line = capsys.readouterr().out.strip()
        assert line.startswith("method=c-xim M=9 t_max=100 cost=")
        log = (tmp_path / "m.xim.log").read_text().splitlines()
        assert log[0] == "t,epsilon,sigma,gamma,winner"

    def test_same_seed_same_bytes(self, toy, tmp_path):
        _, a = train(toy, tmp_path, "a.xim")
        _, b = train(toy, tmp_path, "b.xim")
        assert a.read_bytes() == b.read_bytes()

    def test_seed_flag_changes_model(self, toy, tmp_path):
        _, a = train(toy, tmp_path, "a.xim")
        _, b = train(toy, tmp_path, "b.xim", ["--seed", "8"])
        assert a.read_bytes() != b.read_bytes()

    def test_unknown_key(self, toy, tmp_path, capsys):
        data, cfg = toy
        cfg.write_text(cfg.read_text() + "sigm_start = 3\n")
        code, _ = train(toy, tmp_path)
        assert code == 2
        assert "sigm_start" in capsys.readouterr().err

    def test_bad_value(self, toy, tmp_path):
        assert train(toy, tmp_path, extra=["--set", "eta=2"])[0] == 2

    def test_missing_data(self, toy, tmp_path):
        _, cfg = toy
        assert main(["train", str(tmp_path / "nope.csv"), str(tmp_path / "m"), "--config", str(cfg)]) == 3

    def test_malformed_data(self, toy, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("1,2,3,0\n1,x,3,0\n")
        _, cfg = toy
        assert main(["train", str(bad), str(tmp_path / "m"), "--config", str(cfg)]) == 3

    @pytest.mark.parametrize("method", ["xim", "t-xim", "som", "batch-xim", "median-xim"])
    def test_other_methods(self, toy, tmp_path, method):
        code, out = train(toy, tmp_path, extra=["--set", f"method={method}", "--set", "max_iters=20"])
        assert code == 0
        assert load_model(out).method == method

    def test_dissimilarity_input(self, tmp_path):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((12, 2))
        d = ((x[:, None] - x[None]) ** 2).sum(-1)
        p = tmp_path / "d.csv"
        np.savetxt(p, d, delimiter=",")
        out = tmp_path / "m.xim"
        args = ["train", str(p), str(out), "--set", "data_kind=dissimilarity", "--set", "rows=2", "--set", "cols=2"]
        assert main(args + ["--set", "method=c-xim"]) == 2
        assert main(args + ["--set", "method=median-xim"]) == 0
        m = load_model(out)
        assert m.medians is not None and len(m.medians) == 4
        emb = tmp_path / "e.csv"
        assert main(["embed", str(out), str(p), str(emb)]) == 0
        assert read_embedding(emb)[0].shape == (12, 2)


class TestEmbed:
    def test_training_data(self, toy, tmp_path):
        _, model = train(toy, tmp_path)
        data, cfg = toy
        out = tmp_path / "e.csv"
        assert main(["embed", str(model), str(data), str(out), "--config", str(cfg)]) == 0
        coords, _, labels = read_embedding(out)
        assert coords.shape == (10, 2) and len(labels) == 10
        assert out.read_text().splitlines()[0] == "y1,y2,label"

    def test_prototypes_land_on_nodes(self, toy, tmp_path):
        _, model = train(toy, tmp_path)
        m = load_model(model)
        p = tmp_path / "w.csv"
        p.write_text("".join(",".join(repr(float(v)) for v in row) + "\n" for row in m.prototypes))
        out = tmp_path / "e.csv"
        assert main(["embed", str(model), str(p), str(out)]) == 0
        np.testing.assert_array_equal(read_embedding(out)[0], build_lattice(3, 3).nodes)

    def test_dimension_mismatch(self, toy, tmp_path):
        _, model = train(toy, tmp_path)
        p = tmp_path / "two.csv"
        p.write_text("1,2\n3,4\n")
        assert main(["embed", str(model), str(p), str(tmp_path / "e.csv")]) == 4


class TestEvaluate:
    def test_three_methods(self, tmp_path, capsys):
        data = tmp_path / "d.csv"
        main(["synth", str(data), "--n", "40", "--dims", "5", "--clusters", "10,30"])
        cfg = tmp_path / "e.cfg"
        cfg.write_text("rows=3\ncols=3\nt_max=300\nlabel_column=-1\n")
        prefix = tmp_path / "rep"
        args = ["evaluate", str(data), str(prefix), "--config", str(cfg), "--methods", "som,c-xim,pca"]
        assert main(args + ["--runs", "2", "--fraction", "0.95", "--k-min", "1", "--k-max", "50"]) == 0
        table = (tmp_path / "rep.txt").read_text()
        rows = [ln for ln in table.splitlines() if ln.split(" ")[0] in ("som", "c-xim", "pca")]
        assert len(rows) == 3
        assert all(ln.count("(") == 4 for ln in rows)
        assert "clipped" in table
        kv = (tmp_path / "rep.kv").read_text()
        assert kv.count(".mean=") == 12

    def test_missing_file(self, tmp_path):
        assert main(["evaluate", str(tmp_path / "nope.csv"), str(tmp_path / "r")]) == 3


class TestPlot:
    def test_structure(self, tmp_path):
        emb = tmp_path / "e.csv"
        emb.write_text("y1,y2,label\n0.0,0.0,0\n1.0,2.0,1\n")
        out = tmp_path / "p.svg"
        assert main(["plot", str(emb), str(out)]) == 0
        svg = out.read_text()
        assert svg.count("<circle") == 2
        assert svg.count('class="legend-entry"') == 2
        out2 = tmp_path / "q.svg"
        main(["plot", str(emb), str(out2)])
        assert out.read_bytes() == out2.read_bytes()

    def test_not_2d(self, tmp_path):
        emb = tmp_path / "e.csv"
        emb.write_text("y1,y2,y3\n0,0,0\n1,1,1\n")
        assert main(["plot", str(emb), str(tmp_path / "p.svg")]) == 5


def test_bad_flag_is_config_error():
    with pytest.raises(SystemExit) as exc:
        main(["train", "--no-such-flag"])
    assert exc.value.code == 2


def test_help_documents_exit_codes():
    exe = shutil.which("xim")
    cmd = [exe, "--help"] if exe else [sys.executable, "-m", "xim.cli", "--help"]
    out = subprocess.run(cmd, capture_output=True, text=True, check=True).stdout
    for code in range(6):
        assert f"{code} " in out
