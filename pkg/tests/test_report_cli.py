import json
import math
import os

import numpy as np
import pytest
from click.testing import CliRunner

from fermi_kinetics import report as rp
from fermi_kinetics.cli import main
from fermi_kinetics.graphs import GraphSpec


def run(args, cwd):
    runner = CliRunner()
    with runner.isolated_filesystem(temp_dir=cwd):
        res = runner.invoke(main, args, catch_exceptions=False)
        files = {}
        for root, _, names in os.walk("."):
            for n in names:
                p = os.path.join(root, n)
                with open(p, "rb") as fh:
                    files[os.path.relpath(p)] = fh.read()
    return res, files


# report primitives


def test_json_floats_and_order():
    text = rp.dumps({"b": 0.1, "a": [1, 2.0, complex(1, -2)], "c": math.inf, "d": np.float64(1e-300)})
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    assert "0.10000000000000001" in text
    assert "2.0" in text and "Infinity" in text and "\"d\": 1e-300" in text
    assert text.endswith("\n")


def test_json_roundtrips_floats_exactly():
    xs = list(np.random.default_rng(0).standard_normal(50))
    back = json.loads(rp.dumps({"x": xs}))["x"]
    assert back == xs


def test_csv_format(tmp_path):
    p = rp.write_csv(tmp_path / "t.csv", ["a", "b"], [[1, 0.5], [2, 1 / 3]])
    raw = p.read_bytes()
    assert b"\r" not in raw
    assert raw.decode("utf-8").splitlines() == ["a,b", "1,0.5", "2,0.33333333333333331"]


def test_wfield_csv_roundtrip(tmp_path):
    table = np.random.default_rng(1).random((3, 3))
    rows = [[i, j, table[i, j]] for i in range(3) for j in range(3)]
    p = rp.write_csv(tmp_path / "w.csv", ["i1", "i2", "w"], rows)
    assert np.array_equal(rp.read_wfield_csv(p, 2, 3), table)
    with pytest.raises(ValueError):
        rp.read_wfield_csv(p, 2, 4)


def test_threads_env(monkeypatch):
    monkeypatch.setenv("FERMI_KINETICS_THREADS", "3")
    assert rp.threads_from_env() == 3
    monkeypatch.setenv("FERMI_KINETICS_THREADS", "x")
    assert rp.threads_from_env() == 1


# command line


def test_unknown_subcommand(tmp_path):
    res, _ = run(["frobnicate"], tmp_path)
    assert res.exit_code == 2
    assert "Usage" in res.output


def test_bad_flag_is_usage_error(tmp_path):
    res, _ = run(["nu", "--k", "1,2,3", "--eta", "0.1", "--L", "4"], tmp_path)
    assert res.exit_code == 2


def test_nu_reproducible_and_positive(tmp_path):
    args = ["nu", "--k", "8,0", "--L", "32", "--dim", "2", "--T", "1", "--eta", "0.05", "--no-refine"]
    res1, f1 = run(args, tmp_path)
    res2, f2 = run(args, tmp_path)
    assert res1.exit_code == 0 and res2.exit_code == 0
    assert f1["nu.json"] == f2["nu.json"]
    d = json.loads(f1["nu.json"])
    assert d["re"] > 0 and d["refinement"]["L"] == 32
    assert d["config"]["seed"] == rp.DEFAULT_SEED
    assert d["config"]["model"]["L"] == 32


def test_nu_constant_potential(tmp_path):
    res, f = run(["nu", "--k", "1,2", "--L", "6", "--eta", "0.1", "--v-strength", "0", "--c-tilde", "1",
                  "--no-refine"], tmp_path)
    assert res.exit_code == 0
    d = json.loads(f["nu.json"])
    assert d["re"] == 0 and d["im"] == 0
    assert d["config"]["model"]["v_strength"] == 0.0


def test_graphs_enumerate_and_dump(tmp_path):
    res, f = run(["graphs", "--enumerate", "1", "0", "--shape", "main", "--pairings-only", "--dump-dir", "g"], tmp_path)
    assert res.exit_code == 0
    dumps = sorted(k for k in f if k.startswith("g/"))
    assert len(dumps) == 3
    assert "graphs.csv" in f
    assert f["graphs.csv"].decode().splitlines()[0] == "index,free,degrees,n2_minus_n0,r,ok"
    spec = GraphSpec.from_dict(json.loads(f[dumps[0]]))
    assert spec.n == 1


def test_graphs_cap_refusal(tmp_path):
    res, _ = run(["graphs", "--enumerate", "3", "2"], tmp_path)
    assert res.exit_code == 3


def test_classify_writes_figure(tmp_path):
    res, f = run(["classify", "--max", "2", "--shape", "main"], tmp_path)
    assert res.exit_code == 0
    d = json.loads(f["tags.json"])
    assert d["by_order"]["2"]["Leading"] == 6
    assert d["total"]["Leading"] == 7
    assert f["tags.png"].startswith(b"\x89PNG")


def test_classify_input_file(tmp_path):
    spec = GraphSpec(2, 0, (1, 1), (), (), ((0, 3), (1, 4), (2, 5)), "main")
    (tmp_path / "in").mkdir()
    path = tmp_path / "in" / "g.json"
    path.write_text(json.dumps([spec.to_dict()]))
    res, f = run(["classify", "--input", str(path)], tmp_path)
    assert res.exit_code == 0
    tags = json.loads(f["tags.json"])["tags"]
    assert tags[0]["tag"] == "Leading"
    assert [m["motive"] for m in tags[0]["motives"]] == ["L1"]
    assert {"graph_id", "tag", "i2", "j0", "i0", "motives", "m_prime_0"} <= set(tags[0])


def test_verify_graphs(tmp_path):
    res, f = run(["verify", "graphs", "--max", "3"], tmp_path)
    assert res.exit_code == 0
    d = json.loads(f["verify_graphs.json"])
    assert d["pass"]
    assert f["verify_graphs.png"].startswith(b"\x89PNG")


def test_verify_motives(tmp_path):
    res, f = run(["verify", "motives", "--points", "200"], tmp_path)
    assert res.exit_code == 0
    assert json.loads(f["verify_motives.json"])["pass"]


def test_kernels_report_with_figures(tmp_path):
    res, f = run(["kernels", "--dim", "2", "--check", "dr2", "--tmax", "20", "--n", "21"], tmp_path)
    assert res.exit_code == 0
    assert any(k.endswith(".png") for k in f) and any(k.endswith(".csv") for k in f)
    d = json.loads(f["kernels.json"])
    assert d["check"] == "dr2"


def test_collision_field_and_csv(tmp_path):
    res, f = run(["collision", "--L", "6", "--eta", "0.2"], tmp_path)
    assert res.exit_code == 0
    lines = f["collision.csv"].decode().splitlines()
    assert lines[0] == "i1,i2,value" and len(lines) == 37
    assert f["collision.png"].startswith(b"\x89PNG")


def test_series_command(tmp_path):
    res, f = run(["series", "--k", "3,1", "--L", "8", "--t", "0", "--M", "4"], tmp_path)
    assert res.exit_code == 0
    d = json.loads(f["series.json"])
    s = d["series"]
    assert s["partial_sums"][-1] == s["closed_form"]


def test_amplitude_command(tmp_path):
    spec = GraphSpec(0, 0, (), (), (), ((0, 1),), "main")
    (tmp_path / "in").mkdir()
    path = tmp_path / "in" / "g.json"
    path.write_text(json.dumps(spec.to_dict()))
    res, f = run(["amplitude", "--graph", str(path), "--t", "0.5", "--L", "8", "--lambda", "0.1"], tmp_path)
    assert res.exit_code == 0
    assert json.loads(f["amplitude.json"])["amplitude"]["re"] > 0
