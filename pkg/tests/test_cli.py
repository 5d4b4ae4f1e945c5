import json

import numpy as np
import pytest

from krflow.cli import main


def test_soliton_fik(tmp_path, capsys):
    out = tmp_path / "fik.csv"
    rc = main(["soliton", "--family", "fik", "--n", "2048", "--f-max", "50",
               "--out", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "C = 1.4142135624" in text
    assert out.exists()
    meta = (tmp_path / "fik.csv.meta").read_text()
    assert meta.startswith("family=fik\n")
    assert "f_max=50" in meta


def test_soliton_cao_koiso(tmp_path, capsys):
    out = tmp_path / "kc.csv"
    rc = main(["soliton", "--family", "cao-koiso", "--n", "1024", "--out", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    c = float([l for l in text.splitlines() if l.startswith("C =")][0].split("=")[1])
    assert 0.5 < c < 1.0


def test_soliton_node_minimum(tmp_path):
    rc = main(["soliton", "--family", "fik", "--n", "8",
               "--out", str(tmp_path / "x.csv")])
    assert rc == 2


def test_unknown_level_exits_2(tmp_path):
    with pytest.raises(SystemExit) as ex:
        main(["verify", "--level", "bogus"])
    assert ex.value.code == 2


@pytest.mark.slow
def test_evolve_analyze_pipeline(tmp_path, capsys):
    cfgp = tmp_path / "run.cfg"
    cfgp.write_text("a0 = 1.0\nb0 = 10.0\ngrid_n = 256\nstop_tau = 2.2\n"
                    "record_every = 25\nsnap_taus = 1.0, 2.0\n")
    outd = tmp_path / "out"
    rc = main(["evolve", "--config", str(cfgp), "--out-dir", str(outd)])
    assert rc == 0
    for name in ("series.csv", "anchor.csv", "violations.csv", "manifest.json",
                 "snap_tau1_radial.csv", "snap_tau2_dilated.csv"):
        assert (outd / name).exists(), name
    man = json.loads((outd / "manifest.json").read_text())
    assert man["status"] == "completed"
    assert man["config"]["grid_n"] == 256

    rep = tmp_path / "report.json"
    rc = main(["analyze", "--series", str(outd / "series.csv"),
               "--report", str(rep), "--window", "1.0:2.2"])
    assert rc == 0
    data = json.loads(rep.read_text())
    assert data["decay_rate_delta0"] > 0
    out = capsys.readouterr().out
    assert "gauge slope" in out


def test_evolve_bad_kahler_class_exits_2(tmp_path):
    cfgp = tmp_path / "bad.cfg"
    cfgp.write_text("a0 = 1.0\nb0 = 2.9\n")
    rc = main(["evolve", "--config", str(cfgp), "--out-dir", str(tmp_path / "o")])
    assert rc == 2


def test_evolve_unknown_key_exits_2(tmp_path, capsys):
    cfgp = tmp_path / "bad.cfg"
    cfgp.write_text("a0 = 1.0\nb0 = 10.0\ngirdn = 256\n")
    rc = main(["evolve", "--config", str(cfgp), "--out-dir", str(tmp_path / "o")])
    assert rc == 2
    assert "girdn" in capsys.readouterr().err


def test_analyze_empty_series_exits_3(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("")
    rc = main(["analyze", "--series", str(p), "--report", str(tmp_path / "r.json")])
    assert rc == 3
