import json

import pytest

import detforest as df
from detforest.cli import main


@pytest.fixture()
def graphs(tmp_path):
    paths = {}
    for name, g in (
        ("width4", df.strip_grid_graph(4)),
        ("square", df.square_grid_graph()),
        ("square_m1", df.square_grid_graph(mass=1.0)),
        ("line", df.line_graph()),
    ):
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(g.to_json()))
        paths[name] = str(p)
    return paths


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_charpoly_golden(graphs, capsys):
    code, out, _ = run(["charpoly", "--graph", graphs["width4"]], capsys)
    assert code == 0
    doc = json.loads(out)
    coeffs = {t["e"][0]: round(t["re"]) for t in doc["terms"]}
    assert coeffs == {-4: 1, -3: -14, -2: 74, -1: -190, 0: 258,
                      1: -190, 2: 74, 3: -14, 4: 1}


def test_roots_golden(graphs, capsys):
    code, out, _ = run(["roots", "--graph", graphs["width4"]], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["roots_geq_one"] == pytest.approx([1.0, 2.11239, 3.73205, 5.22274], abs=1e-4)


def test_sample_rerun_byte_identical(graphs, tmp_path, capsys):
    out1 = tmp_path / "s1.json"
    out2 = tmp_path / "s2.json"
    for out in (out1, out2):
        code = main(["sample", "--graph", graphs["line"], "--method", "dpp",
                     "--n", "8", "--z", "-2", "--seed", "7", "--out", str(out)])
        assert code == 0
    capsys.readouterr()
    assert out1.read_bytes() == out2.read_bytes()
    manifest = json.loads((tmp_path / "s1.json.manifest.json").read_text())
    for key in ("subcommand", "flags", "inputs", "seed", "version", "wall_time_s"):
        assert key in manifest
    assert manifest["subcommand"] == "sample" and manifest["seed"] == 7


def test_charpoly_rerun_identical(graphs, capsys):
    _, out1, _ = run(["charpoly", "--graph", graphs["square"]], capsys)
    _, out2, _ = run(["charpoly", "--graph", graphs["square"]], capsys)
    assert out1 == out2


def test_exit_code_validation_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "kind": "strip", "vertices": ["a"],
        "edges": [{"u": "a", "v": "a", "dx": 1, "c": 0.0}],
    }))
    code, _, err = run(["roots", "--graph", str(bad)], capsys)
    assert code == 2 and "conductance" in err


def test_exit_code_numerical_error(graphs, capsys):
    # an unreachable tolerance exhausts the doubling ladder
    code, _, err = run(["ronkin", "--graph", graphs["square"], "--x", "0", "--y", "0",
                        "--tol", "1e-15"], capsys)
    assert code == 3 and "converge" in err.lower()


def test_exit_code_usage(capsys):
    assert run(["frobnicate"], capsys)[0] == 64
    assert run([], capsys)[0] == 64


def test_ronkin_and_sigma(graphs, capsys):
    code, out, _ = run(["ronkin", "--graph", graphs["square"]], capsys)
    assert code == 0
    assert json.loads(out)["R"] == pytest.approx(1.166243, abs=1e-4)
    code, out, _ = run(["sigma", "--graph", graphs["square"], "--slope", "0,0"], capsys)
    assert json.loads(out)["sigma"] == pytest.approx(1.166243, abs=1e-4)


def test_ronkin_grid_csv(graphs, capsys):
    code, out, _ = run(["ronkin", "--graph", graphs["square"],
                        "--grid", "0:0.2:2,0:0:1", "--threads", "2"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "x,y,R" and len(lines) == 3


def test_kernel_point_and_component(graphs, capsys):
    code, out, _ = run(["kernel", "--graph", graphs["width4"], "--point=-1,0",
                        "--edges", "0,1"], capsys)
    doc = json.loads(out)
    assert doc["entries"][0][0][0] == pytest.approx(16 / 51)
    assert doc["entries"][0][1][0] == pytest.approx(-2 / 17)
    code, out, _ = run(["kernel", "--graph", graphs["width4"], "--component", "1",
                        "--edges", "0"], capsys)
    assert json.loads(out)["entries"][0][0] == pytest.approx(0.5476764068, abs=1e-8)


def test_harnack_and_decay(graphs, capsys):
    code, out, _ = run(["harnack", "--graph", graphs["square_m1"]], capsys)
    doc = json.loads(out)
    assert doc["classification"] == "empty" and doc["pass"]
    code, out, _ = run(["decay", "--graph", graphs["square_m1"], "--slope", "0,0"], capsys)
    assert json.loads(out)["classification"] == "exponential"


def test_divisor_counts(capsys):
    code, out, _ = run(["divisor", "--n", "3"], capsys)
    doc = json.loads(out)
    assert doc["count"] == 12 and len(doc["points"]) == 12


def test_transform_series(tmp_path, capsys):
    g = df.PeriodicGraph(
        "strip", ("a", "b"),
        (df.Edge("a", "b"), df.Edge("b", "a", 1, 0), df.Edge("a", "a", 1, 0)),
    )
    p = tmp_path / "g.json"
    p.write_text(json.dumps(g.to_json()))
    code, out, _ = run(["transform", "--graph", str(p), "--move", "series",
                        "--site", "b"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["vertices"] == ["a"]
    assert any(abs(e["c"] - 0.5) < 1e-12 for e in doc["edges"])


def test_sigma_grid_csv(graphs, capsys):
    code, out, _ = run(["sigma", "--graph", graphs["square"],
                        "--grid", "0:0.5:2,0:0:1"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "s,t,sigma,x,y" and len(lines) == 3


def test_limitshape_cli_affine(graphs, tmp_path, capsys):
    out = tmp_path / "ls.json"
    code = main(["limitshape", "--graph", graphs["square"], "--nx", "4", "--ny", "4",
                 "--slope", "0.2,0.1", "--resolution", "4", "--spacing", "0.1",
                 "--out", str(out)])
    capsys.readouterr()
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["energy"] < 0 and doc["leaf_count"] >= 1
    # affine data: heights reproduce 0.2 x + 0.1 y on the mesh nodes
    mesh = df.rectangle_mesh(4, 4)
    import numpy as np

    exact = mesh.points @ np.array([0.2, 0.1])
    assert np.allclose(doc["heights"], exact, atol=1e-5)


def test_wilson_svg(graphs, tmp_path, capsys):
    out = tmp_path / "w.svg"
    code = main(["sample", "--graph", graphs["square_m1"], "--method", "wilson",
                 "--n", "2,2", "--seed", "1", "--out", str(out)])
    capsys.readouterr()
    assert code == 0
    text = out.read_text()
    assert text.startswith("<svg") and "</svg>" in text
