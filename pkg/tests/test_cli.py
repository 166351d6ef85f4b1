import filecmp
import json

import pytest

from conftest import corridor_doc
from lanesim.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from lanesim.engine import OUTPUT_FILES
from lanesim.report import CONFIG_JSON, MFD_CSV, REPORT_CSV

SMALL = {
    "network": {"grid": {"rows": 3, "cols": 3, "block_len": 150.0, "two_lane_share": 1.0}},
    "demand": {"od": {"uniform_boundary": 20.0},
               "profile": {"kind": "real-shaped", "factors": [1.0, 1.5, 1.0], "slot_s": 300.0},
               "horizon": 900.0},
    "engine": {"measure_interval": 300.0},
    "sweep": {"penetrations": [0.0, 1.0], "seeds": 2},
}


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.json"
    p.write_text(json.dumps(SMALL))
    return p


def test_run_writes_outputs_and_is_idempotent(small_cfg, tmp_path):
    out = tmp_path / "r"
    assert main(["run", "--config", str(small_cfg), "--seed", "4", "--out", str(out)]) == EXIT_OK
    first = {f: (out / f).read_bytes() for f in OUTPUT_FILES + (CONFIG_JSON,)}
    assert json.loads(first[CONFIG_JSON])["seed"] == 4
    assert main(["run", "--config", str(small_cfg), "--seed", "4", "--out", str(out)]) == EXIT_OK
    assert first == {f: (out / f).read_bytes() for f in first}


def test_bad_config_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"fleet": {"av_penetration": 3}}))
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "fleet" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert main(["sweep", "--spec", str(bad), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_unroutable_demand_exits_2(tmp_path, capsys):
    doc = corridor_doc(lanes=(1, 1))
    (tmp_path / "net.json").write_text(json.dumps(doc))
    (tmp_path / "od.csv").write_text("origin,destination,flow_veh_per_h\na1-a2,a0-a1,3600\n")
    (tmp_path / "c.json").write_text(json.dumps({
        "network": {"file": "net.json"},
        "demand": {"od": {"file": "od.csv"}, "profile": {"factors": [1.0], "slot_s": 600.0}}}))
    assert main(["run", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path / "o")]) == EXIT_RUNTIME
    assert "run failed" in capsys.readouterr().err


def _sweep(cfg, out, jobs):
    return main(["sweep", "--spec", str(cfg), "--jobs", str(jobs), "--out", str(out)])


def test_sweep_report_and_plots(small_cfg, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _sweep(small_cfg, a, 1) == EXIT_OK
    assert _sweep(small_cfg, b, 2) == EXIT_OK
    for f in (REPORT_CSV, MFD_CSV):
        assert filecmp.cmp(a / f, b / f, shallow=False)
    runs = sorted(p.name for p in a.iterdir() if p.is_dir() and p.name != "plots")
    assert runs == ["p0.00_s000", "p0.00_s001", "p1.00_s000", "p1.00_s001"]
    assert len(list((a / "plots").glob("*.svg"))) == 4

    # report recomputation is byte-identical
    before = (a / REPORT_CSV).read_bytes()
    capsys.readouterr()
    assert main(["report", "--runs", str(a)]) == EXIT_OK
    assert capsys.readouterr().out.strip() == str(a / REPORT_CSV)
    assert (a / REPORT_CSV).read_bytes() == before

    # plots are reproducible
    assert main(["plot", "--runs", str(a), "--out", str(tmp_path / "p2")]) == EXIT_OK
    for svg in (a / "plots").glob("*.svg"):
        assert svg.read_bytes() == (tmp_path / "p2" / svg.name).read_bytes()

    # a damaged run directory is named in the error
    (b / "p1.00_s001" / "trips.csv").unlink()
    assert main(["report", "--runs", str(b)]) != EXIT_OK
    assert "p1.00_s001" in capsys.readouterr().err
    (b / "p0.00_s000" / "counters.json").write_text("{oops")
    assert main(["report", "--runs", str(b)]) != EXIT_OK


def test_plot_with_empty_mfd_fails(small_cfg, tmp_path, capsys):
    a = tmp_path / "a"
    (a).mkdir()
    (a / REPORT_CSV).write_text("penetration,metric,mean,sd,rel_change_vs_0\n")
    (a / MFD_CSV).write_text("penetration,seed,interval_start,k_veh_per_km,q_veh_per_s,"
                             "q_veh_per_h_per_lane,phase\n")
    assert main(["plot", "--runs", str(a), "--out", str(tmp_path / "p")]) != EXIT_OK
    assert capsys.readouterr().err


def test_report_on_empty_dir_fails(tmp_path):
    assert main(["report", "--runs", str(tmp_path)]) != EXIT_OK


def test_missing_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
