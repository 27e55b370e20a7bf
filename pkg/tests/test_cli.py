import json

import pytest

from cqabd.cli import main


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"scenario_id": "cli", "nb": 8, "users": 2, "antennas_per_user": 2,
                             "snr_db": [0, 10], "bits": [3], "precoders": ["BD"],
                             "power_alloc": ["MAAS"], "trials": 3, "seed": 1}))
    return p


def test_simulate_writes_csv(cfg, tmp_path):
    out = tmp_path / "r.csv"
    assert main(["--threads", "2", "--out", str(out), "simulate", "--config", str(cfg)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("scenario_id,snr_db")
    assert len(lines) == 3


def test_channel_dump_and_load(cfg, tmp_path):
    d = tmp_path / "ch"
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", "--config", str(cfg), "--dump-channels", str(d), "--out", str(a)]) == 0
    assert len(list(d.glob("trial_*.txt"))) == 3
    assert main(["simulate", "--config", str(cfg), "--load-channels", str(d), "--out", str(b)]) == 0
    assert a.read_text() == b.read_text()


def test_seed_override_changes_result(cfg, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["simulate", "--config", str(cfg), "--out", str(a)])
    main(["simulate", "--config", str(cfg), "--seed", "99", "--out", str(b)])
    assert a.read_text() != b.read_text()


def test_config_error_exit_code(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"nb": 2, "users": 4}))
    assert main(["simulate", "--config", str(p)]) == 2
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == 2


def test_delta_table(capsys):
    assert main(["delta-table", "--bits", "2..6", "--nu", "16"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 6
    assert out[1].split()[3] == "0.93870"
    assert out[1].split()[4] == "1.2914"


def test_alloc(capsys):
    assert main(["alloc", "--phi2", "3,1,0.2,0.05", "--bits", "4", "--snr-db", "5", "--nu", "4"]) == 0
    out = capsys.readouterr().out
    assert "mu_opt" in out and "iter p=1" in out
    omega = [float(x) for x in out.splitlines()[-1].split()[1:]]
    assert sum(omega) == pytest.approx(4.0, rel=1e-5)


def test_cost(capsys):
    assert main(["cost", "--nb", "64", "--nu", "32", "--csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "kind,bits,flops,dac_mw,adc_mw,total_dac_mw"
    assert "ZF,4,647168,42.5,140,2720" in lines


def test_verify_bussgang(capsys):
    assert main(["verify-bussgang", "--samples", "5000", "--nb", "16", "--users", "4"]) == 0
    assert "cross_corr_rel" in capsys.readouterr().out
