import csv
import json

import pytest

from riemap import cli, gallery


def run(argv, tmp_path, monkeypatch, threads="1"):
    monkeypatch.setenv("RIEMAP_THREADS", threads)
    return cli.main(argv + ["--out", str(tmp_path)])


def test_gallery_run_g1(tmp_path, monkeypatch, capsys):
    assert run(["gallery", "run", "g1"], tmp_path, monkeypatch) == 0
    data = json.loads((tmp_path / "gallery_g1.json").read_text())
    assert data["summary"]["max_tension"] == 0.0
    assert data["status"] == "pass"
    assert "[PASS]" in capsys.readouterr().out


def test_verify_small_sphere_equality(tmp_path, monkeypatch):
    path = str(gallery.scene_path("g6"))
    assert run(["verify", path, "--thm", "4.2"], tmp_path, monkeypatch) == 0
    data = json.loads((tmp_path / "g6_verify-4.2.json").read_text())
    assert data["verdicts"]["dichotomy"] == "equality c = |H2|^2"


def test_check_stretched_fails(tmp_path, monkeypatch, capsys):
    assert run(["check", "stretched"], tmp_path, monkeypatch) == 1
    data = json.loads((tmp_path / "stretched_check.json").read_text())
    assert data["summary"]["isometry"]["max"] == pytest.approx(3.0)
    assert "FAIL" in capsys.readouterr().out


@pytest.mark.parametrize("thm", ["3.1", "4.1"])
def test_verify_composite(tmp_path, monkeypatch, thm):
    assert run(["verify", "g5", "--thm", thm, "--samples", "5"], tmp_path, monkeypatch) == 0


def test_bitension_and_classify(tmp_path, monkeypatch):
    assert run(["bitension", "g3", "--samples", "4"], tmp_path, monkeypatch) == 0
    data = json.loads((tmp_path / "g3_bitension.json").read_text())
    assert data["verdicts"]["biharmonic"] == "no"
    assert run(["classify", "g2", "--grid", "2"], tmp_path, monkeypatch) == 0
    data = json.loads((tmp_path / "g2_classify.json").read_text())
    assert data["verdicts"]["dichotomy"] == "harmonic"
    assert len(data["records"]) == 8


def test_tension_at_order_two(tmp_path, monkeypatch):
    assert run(["tension", "g4", "--order", "2", "--samples", "3"], tmp_path, monkeypatch) == 0


def test_order_two_refused_for_bitension(tmp_path, monkeypatch, capsys):
    assert run(["bitension", "g4", "--order", "2"], tmp_path, monkeypatch) == 2
    assert "order 4" in capsys.readouterr().err


def test_csv_row_count(tmp_path, monkeypatch):
    assert run(["tension", "g4", "--samples", "3", "--format", "csv"], tmp_path, monkeypatch) == 0
    rows = list(csv.DictReader((tmp_path / "g4_tension.csv").open()))
    points = {r["point_index"] for r in rows}
    names = {r["residual"] for r in rows}
    assert len(rows) == len(points) * len(names)
    assert not (tmp_path / "g4_tension.json").exists()


def test_reemission_is_byte_identical(tmp_path, monkeypatch):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["bitension", "g6", "--samples", "3"], a, monkeypatch) == 0
    assert run(["bitension", "g6", "--samples", "3"], b, monkeypatch, threads="4") == 0
    for name in ("g6_bitension.json", "g6_bitension.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_tolerance_override_changes_verdict(tmp_path, monkeypatch):
    assert run(["check", "stretched", "--tol", "residual=10"], tmp_path, monkeypatch) == 0


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["check"],
    ["check", "g1", "--tol", "bogus=1"],
    ["check", "g1", "--tol", "residual=-1"],
    ["check", "g1", "--format", "xml"],
    ["check", "g1", "--samples", "0"],
    ["verify", "g1"],
])
def test_bad_flags_exit_two(argv, tmp_path, monkeypatch, capsys):
    with pytest.raises(SystemExit) as info:
        run(argv, tmp_path, monkeypatch)
    assert info.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_missing_scene_exits_two(tmp_path, monkeypatch, capsys):
    assert run(["check", "no/such.scene"], tmp_path, monkeypatch) == 2
    assert "not found" in capsys.readouterr().err


def test_scene_error_exits_two(tmp_path, monkeypatch, capsys):
    bad = tmp_path / "bad.scene"
    bad.write_text("manifold A { dim 2 coords x y metric [[1, x], [0, 1]] }\n")
    assert run(["check", str(bad)], tmp_path, monkeypatch) == 2
    assert "symmetric" in capsys.readouterr().err


def test_bad_thread_count(tmp_path, monkeypatch):
    assert run(["check", "g1"], tmp_path, monkeypatch, threads="zero") == 2


def test_missing_composition_pair(tmp_path, monkeypatch):
    assert run(["verify", "g1", "--thm", "3.1"], tmp_path, monkeypatch) == 2


def test_gallery_list(tmp_path, monkeypatch, capsys):
    assert cli.main(["gallery", "list"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in gallery.registry())


def test_gallery_run_needs_one_target(tmp_path, monkeypatch):
    assert run(["gallery", "run"], tmp_path, monkeypatch) == 2
    assert run(["gallery", "run", "g1", "--all"], tmp_path, monkeypatch) == 2
