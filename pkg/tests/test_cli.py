"""Command-line entry points: sweep CSV writing and round-tripping, table
verification, seed handling."""

import json

import pytest

from sidelink_sim import cli


def run_cli(args):
    return cli.main(args)


def test_parse_positions():
    assert cli._parse_positions("120:280:20") == [float(p) for p in range(120, 281, 20)]
    assert cli._parse_positions("0:1:0.5") == [0.0, 0.5, 1.0]
    with pytest.raises(ValueError):
        cli._parse_positions("10:20")
    with pytest.raises(ValueError):
        cli._parse_positions("10:20:-5")


def test_verify_tables_passes(capsys):
    assert run_cli(["verify-tables"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 3 and "FAIL" not in out


def test_sweep_writes_and_roundtrips(tmp_path):
    out = tmp_path / "sweep.csv"
    assert run_cli(["sweep", "--positions", "120:280:20", "--out", str(out)]) == 0
    rows = cli.read_sweep_csv(out)
    assert len(rows) == 9
    at200 = next(r for r in rows if r["position_cm"] == 200)
    assert abs(at200["sl_mean_db"] - 29.2872) < 0.1  # tabulated sidelink mean
    beyond = [r for r in rows if r["position_cm"] > 256]
    for r in beyond:
        assert r["dl_mean_db"] is None and r["dl_maxtput_bps"] is None
        assert r["selected_mode"] == "sidelink"


def test_sweep_dl_monotone_in_analytic_mode(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"channel_mode": "analytic", "hysteresis_db": 0.0}))
    out = tmp_path / "sweep.csv"
    assert run_cli(["sweep", str(cfg), "--positions", "40:240:20", "--out", str(out)]) == 0
    means = [r["dl_mean_db"] for r in cli.read_sweep_csv(out)]
    assert all(b < a for a, b in zip(means, means[1:]))


def test_sweep_deterministic_with_env_seed(tmp_path, monkeypatch):
    monkeypatch.setenv("SIDELINK_SIM_SEED", "31415")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_cli(["sweep", "--out", str(a)])
    run_cli(["sweep", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_sweep_db_columns_use_four_decimals(tmp_path):
    out = tmp_path / "sweep.csv"
    run_cli(["sweep", "--positions", "200:200:10", "--out", str(out)])
    line = out.read_text().splitlines()[1]
    mean_field = line.split(",")[1]
    assert len(mean_field.split(".")[1]) == 4


def test_sweep_bad_config_exits_nonzero(tmp_path, capsys):
    assert run_cli(["sweep", str(tmp_path / "missing.json"), "--out", "x.csv"]) == 2
    assert "error" in capsys.readouterr().err


def test_sweep_bad_positions_exits_nonzero(tmp_path, capsys):
    out = tmp_path / "x.csv"
    assert run_cli(["sweep", "--positions", "banana", "--out", str(out)]) == 2


def test_serve_bad_config_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"channel_mode": "psychic"}))
    assert run_cli(["serve", str(bad)]) == 2


def test_serve_port_busy_exits_nonzero(tmp_path, capsys):
    import socket

    blocker = socket.socket()
    blocker.bind(("127.0.0.1", 0))
    port = blocker.getsockname()[1]
    try:
        assert run_cli(["serve", "--port", str(port)]) == 2
    finally:
        blocker.close()


def test_read_sweep_csv_rejects_foreign_schema(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        cli.read_sweep_csv(bad)
