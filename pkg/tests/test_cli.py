import io
import json

import numpy as np
import pytest

from spverdoorn.cli import run_cli
from spverdoorn.report import loads_report, stars
from spverdoorn.weights import load_weights

from conftest import line_regions
from sim import grid_regions, write_centroids, write_panel


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_cli(list(map(str, argv)), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def line_files(tmp_path):
    cen = write_centroids(tmp_path / "line.csv", line_regions())
    data = tmp_path / "data.csv"
    data.write_text("region_id,x,y\n1,1,2.0\n2,1,2.5\n3,-1,0.1\n4,-1,-0.4\n")
    return cen, data


@pytest.fixture
def grid_files(tmp_path):
    regions = grid_regions(25, seed=3)
    cen = write_centroids(tmp_path / "grid.csv", regions)
    panel = write_panel(tmp_path / "panel.csv", regions, seed=4)
    rng = np.random.default_rng(9)
    q = rng.uniform(0, 0.06, 25)
    p = 0.01 + 0.5 * q + rng.normal(scale=0.004, size=25)
    data = tmp_path / "growth.csv"
    data.write_text("region_id,p,q\n" + "".join(f"{r.id},{float(a)!r},{float(b)!r}\n" for r, a, b in zip(regions, p, q)))
    return cen, panel, data


def test_weights_build_roundtrip(tmp_path, line_files):
    cen, _ = line_files
    code, out, _ = run("weights", "build", "--centroids", cen, "--cutoff", 150, "--out", tmp_path / "w.json")
    assert code == 0
    assert "min 1, max 2" in out
    assert load_weights(tmp_path / "w.json").n == 4


def test_weights_islands_exit_one(tmp_path, line_files):
    cen, _ = line_files
    code, _, err = run("weights", "build", "--centroids", cen, "--cutoff", 50, "--out", tmp_path / "w.json")
    assert code == 1
    assert "island" in err.lower()
    code, out, _ = run("weights", "build", "--centroids", cen, "--cutoff", 50, "--allow-islands",
                       "--out", tmp_path / "w.json")
    assert code == 0 and "islands: 1, 2, 3, 4" in out


def test_esda_commands(tmp_path, line_files):
    cen, data = line_files
    code, out, _ = run("esda", "moran", "--data", data, "--var", "x", "--centroids", cen, "--cutoff", 150,
                       "--permutations", 99)
    assert code == 0 and "I = 0.5" in out
    code, out, _ = run("esda", "geary", "--data", data, "--var", "x", "--centroids", cen, "--cutoff", 150)
    assert code == 0 and "C = 0.375" in out


def test_lisa_csv_and_map(tmp_path, line_files):
    cen, data = line_files
    polys = {"type": "FeatureCollection", "features": [
        {"type": "Feature", "properties": {"region_id": str(i + 1)},
         "geometry": {"type": "Polygon", "coordinates": [[[i, 0], [i + 1, 0], [i + 1, 1], [i, 1], [i, 0]]]}}
        for i in range(4)]}
    gj = tmp_path / "poly.geojson"
    gj.write_text(json.dumps(polys))
    args = ("esda", "lisa", "--data", data, "--var", "x", "--centroids", cen, "--cutoff", 150,
            "--out", tmp_path / "lisa.csv", "--polygons", gj)
    code, out, err = run(*args)
    assert code == 0, err
    rows = (tmp_path / "lisa.csv").read_text().splitlines()
    assert rows[0] == "region_id,local_i,pseudo_p,quadrant,significant"
    assert rows[1].startswith("1,0.25,") and "HIGH_HIGH" in rows[1]
    svg = (tmp_path / "lisa.svg").read_text()
    assert svg.count("<path") == 4 and "High-High" in svg

    polys["features"][0]["properties"]["region_id"] = "99"
    gj.write_text(json.dumps(polys))
    code, _, err = run(*args)
    assert code == 1 and "99" in err and "'1'" in err


def test_scatter_svg_title(tmp_path, line_files):
    cen, data = line_files
    code, _, _ = run("plot", "moran-scatter", "--data", data, "--var", "x", "--centroids", cen, "--cutoff", 150,
                     "--out", tmp_path / "s.svg", "--csv", tmp_path / "s.csv")
    assert code == 0
    assert "I = 0.500" in (tmp_path / "s.svg").read_text()
    assert len((tmp_path / "s.csv").read_text().splitlines()) == 5


def test_regressions(tmp_path, grid_files):
    cen, _, data = grid_files
    base = ("--data", data, "--y", "p", "--x", "q", "--centroids", cen, "--cutoff", 75)
    code, out, err = run("reg", "ols", *base, "--permutations", 99, "--report", tmp_path / "ols.json")
    assert code == 0, err
    assert "LM_l" in out and "N.O." in out
    doc = loads_report((tmp_path / "ols.json").read_text())
    assert doc["sectors"][0]["ols"]["n"] == 25
    for cmd in ("ml-lag", "ml-error"):
        code, out, err = run("reg", cmd, *base)
        assert code == 0, err
        assert "log-likelihood" in out


def test_florax_replay():
    code, out, _ = run("spec", "florax", "--lm-lag", 0.416, "--lm-error", 8.774)
    assert code == 0 and out.strip().endswith("choice: ERROR")
    code, out, _ = run("spec", "florax", "--lm-lag", 4.749, "--lm-error", 3.607)
    assert out.strip().endswith("choice: LAG")
    code, _, err = run("spec", "florax", "--lm-lag", 5.0, "--lm-error", 1.0, "--variant", "robust")
    assert code == 2 and "not computable" in err
    code, _, _ = run("spec", "florax", "--lm-lag", 5.0)
    assert code == 1


def test_usage_and_io_errors(tmp_path):
    assert run("bogus")[0] == 1
    assert run("esda", "moran", "--data", tmp_path / "missing.csv", "--var", "x",
               "--centroids", tmp_path / "nope.csv")[0] == 1
    assert run("esda", "moran", "--data", "x.csv", "--var", "x")[0] == 1
    assert run("--version")[0] == 0


def test_verdoorn_run_and_determinism(tmp_path, grid_files):
    cen, panel, _ = grid_files
    outputs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        code, out, err = run("verdoorn", "run", "--panel", panel, "--centroids", cen, "--cutoff", 75,
                             "--sectors", "industry,services,total", "--period", "1995:1999",
                             "--seed", 11, "--permutations", 199, "--out", d.with_suffix(".json"),
                             "--table", d.with_suffix(".txt"), "--figures", d)
        assert code == 0, err
        outputs.append([d.with_suffix(".json").read_bytes(), d.with_suffix(".txt").read_bytes()]
                       + [p.read_bytes() for p in sorted(d.iterdir())])
    assert outputs[0] == outputs[1]
    doc = loads_report(outputs[0][0].decode())
    assert [s["sector"] for s in doc["sectors"]] == ["industry", "services", "total"]
    assert set(doc) == {"tool", "version", "inputs", "config", "weights", "sectors", "warnings"}
    assert doc["config"]["seed"] == 11
    assert len(doc["inputs"]["panel"]["sha256"]) == 64
    s = doc["sectors"][0]
    assert s["esda"]["expected"] == pytest.approx(-1 / 24)


def test_verdoorn_unknown_sector(tmp_path, grid_files):
    cen, panel, _ = grid_files
    code, _, err = run("verdoorn", "run", "--panel", panel, "--centroids", cen, "--cutoff", 75,
                       "--sectors", "fishing", "--period", "1995:1999", "--out", tmp_path / "r.json")
    assert code == 1 and "fishing" in err


def test_stars():
    assert stars(0.04) == "*"
    assert stars(0.08) == "**"
    assert stars(0.5) == ""
    assert stars(None) == ""


def test_lisa_without_polygons_writes_csv_only(tmp_path, line_files):
    cen, data = line_files
    code, out, _ = run("esda", "lisa", "--data", data, "--var", "x", "--centroids", cen, "--cutoff", 150,
                       "--out", tmp_path / "only.csv")
    assert code == 0
    assert sorted(p.name for p in tmp_path.iterdir() if p.name.startswith("only")) == ["only.csv"]


def test_single_point_scatter_rejected():
    from spverdoorn.errors import ValidationError
    from spverdoorn.esda import ScatterData
    from spverdoorn.svg import moran_scatter_svg

    one = ScatterData(ids=("a",), z=np.array([0.0]), lag=np.array([0.0]), slope=0.0)
    with pytest.raises(ValidationError):
        moran_scatter_svg(one)


def test_table_keeps_configured_sector_order(tmp_path, grid_files):
    cen, panel, _ = grid_files
    code, out, err = run("verdoorn", "run", "--panel", panel, "--centroids", cen, "--cutoff", 75,
                         "--sectors", "services,industry", "--period", "1995:1999", "--permutations", 99,
                         "--out", tmp_path / "r.json")
    assert code == 0, err
    assert out.index("\nservices") < out.index("\nindustry")
