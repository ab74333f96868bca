import csv
import json

import pytest

from mccdownlink.campaign import CampaignConfig
from mccdownlink.cli import fmt, main
from mccdownlink.config import config_to_dict, parse_config, parse_policy, policy_label, resolve
from mccdownlink.errors import ConfigError


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_empty_config_gives_reference_defaults(tmp_path):
    (tmp_path / "empty.json").write_text("{}")
    cfg = parse_config(tmp_path / "empty.json")
    assert cfg == parse_config()
    s, c, p = cfg.spatial, cfg.channel, cfg.policy
    assert (s.M, s.r_net, s.r_bs, s.r_m) == (50, 2.0, 0.25, 0.01)
    assert cfg.eps_hat == 0.1
    assert p.snr_db == 10.0 and p.snr == pytest.approx(10.0)
    assert (p.G, p.h, p.f_p) == (16, pytest.approx(2 / 3), 0.1)
    assert c.alpha == 3.0 and c.sigma_s == 8.0
    assert c.fading_thresholds == (0.125, 0.25)


def test_invalid_pilot_fraction_names_field():
    with pytest.raises(ConfigError) as exc:
        resolve({"f_p": 1.2})
    assert exc.value.field == "f_p"
    assert "f_p" in str(exc.value)


@pytest.mark.parametrize("values,field", [
    ({"bogus": 1}, "bogus"), ({"M": "many"}, "M"), ({"K": 2.5}, "K"),
    ({"strict_refusal": "maybe"}, "strict_refusal"), ({"policy": "fair"}, "policy"),
    ({"fading_thresholds": [0.1]}, "fading_thresholds"), ({"eps_hat": 0}, "eps_hat"),
])
def test_bad_values_raise(values, field):
    with pytest.raises(ConfigError) as exc:
        resolve(values)
    assert exc.value.field == field


def test_bad_files_raise(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        parse_config(bad)
    (tmp_path / "list.json").write_text("[1, 2]")
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "list.json")
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "missing.json")


@pytest.mark.parametrize("text,gamma", [("etp", 0.0), ("ERP", 1.0), ("gamma=0.25", 0.25), (0.5, 0.5)])
def test_policy_names(text, gamma):
    assert parse_policy(text) == gamma


def test_policy_labels():
    assert [policy_label(g) for g in (0.0, 1.0, 0.25)] == ["etp", "erp", "gamma=0.25"]


def test_aliases_and_overrides(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"policy": "erp", "k_over_m": 4, "r_bs": 0.3, "sigma_s": 0}))
    cfg = parse_config(path, {"sigma_s": 8.0, "base_seed": 9})
    assert cfg.policy.gamma_pc == 1.0
    assert cfg.spatial.K == 200
    assert cfg.channel.fading_thresholds == (0.15, 0.3)
    assert cfg.channel.sigma_s == 8.0 and cfg.base_seed == 9


def test_round_trip(tmp_path):
    cfg = resolve({"policy": "gamma=0.3", "M": 20, "K": 77, "mode": "conventional",
                   "strict_refusal": True, "fading_thresholds": [0.1, 0.2], "snr_db": 3.5})
    again = resolve(config_to_dict(cfg))
    assert again == cfg
    path = tmp_path / "rt.json"
    path.write_text(json.dumps(config_to_dict(cfg)))
    assert parse_config(path) == cfg
    assert resolve(config_to_dict(CampaignConfig())) == CampaignConfig()


def test_fmt_is_fixed_and_locale_free():
    assert fmt(0.1) == "0.1"
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(12345678.9) == "12345678.9"
    assert fmt(float("nan")) == "nan"
    assert fmt(3) == "3" and fmt(True) == "1" and fmt("etp") == "etp"


def test_manifest_is_accepted_as_config(tmp_path):
    cfg = resolve({"M": 20, "policy": "erp", "sigma_s": 0})
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"tool": "mccdownlink", "command": "campaign", "config": config_to_dict(cfg)}))
    assert parse_config(path) == cfg


def test_outage_command(tmp_path):
    out = tmp_path / "o"
    assert main(["outage", "--out", str(out), "--trials", "2000", "--seed", "3",
                 "--snr-db", "0:20:10", "--beta-db", "0,10"]) == 0
    rows = read_csv(out / "outage.csv")
    assert rows[0] == ["snr_db", "beta_db", "eps_closed_form", "eps_oracle", "oracle_halfwidth"]
    assert len(rows) == 1 + 2 * 3
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["base_seed"] == 3 and manifest["command"] == "outage"
    assert manifest["config"]["snr_scaling"] == "direct"
    raw = (out / "outage.csv").read_bytes()
    assert raw.endswith(b"\n") and b"\r" not in raw


def test_outage_command_reproducible(tmp_path):
    args = ["outage", "--trials", "1000", "--seed", "5", "--snr-db", "0,10", "--beta-db", "0"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "outage.csv").read_bytes() == (tmp_path / "b" / "outage.csv").read_bytes()


def small_config_file(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps({"M": 10, "K": 40, "r_net": 1.0, "r_int": 0.05, "r_max": 0.3}))
    return path


def test_campaign_command(tmp_path):
    out = tmp_path / "c"
    cfg = small_config_file(tmp_path)
    assert main(["campaign", "--config", str(cfg), "--out", str(out), "--realizations", "2",
                 "--policy", "etp", "--policy", "erp", "--sigma-s", "0", "--sigma-s", "8"]) == 0
    rows = read_csv(out / "metrics.csv")
    assert rows[0] == ["k_over_m", "policy", "sigma_s", "ase", "mean_rate", "denied_fraction"]
    assert [r[1] for r in rows[1:]] == ["etp", "etp", "erp", "erp"]
    ccdfs = sorted(p.name for p in out.glob("ccdf_*.csv"))
    assert len(ccdfs) == 4
    assert read_csv(out / ccdfs[0])[0] == ["r", "p_exceed"]
    assert json.loads((out / "manifest.json").read_text())["config"]["realizations"] == 2


def test_campaign_single_point_writes_plain_ccdf(tmp_path):
    out = tmp_path / "c1"
    cfg = small_config_file(tmp_path)
    assert main(["campaign", "--config", str(cfg), "--out", str(out), "--realizations", "1",
                 "--k-over-m", "3"]) == 0
    rows = read_csv(out / "metrics.csv")
    assert rows[1][0] == "3"
    assert len(read_csv(out / "ccdf.csv")) == 1 + 201


def test_optimize_command(tmp_path):
    out = tmp_path / "opt"
    cfg = small_config_file(tmp_path)
    assert main(["optimize", "--config", str(cfg), "--out", str(out), "--realizations", "1",
                 "--r-int-grid", "0.05,0.1", "--r-max-grid", "0.2:0.3:0.1"]) == 0
    rows = read_csv(out / "optimize.csv")
    assert rows[0] == ["r_int", "r_max", "ase", "is_best"]
    assert len(rows) == 5
    assert sum(r[3] == "1" for r in rows[1:]) == 1


def test_selftest_command(capsys):
    assert main(["selftest", "--trials", "20000", "--seed", "1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)


def test_config_error_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"f_p": 1.2}))
    assert main(["campaign", "--config", str(path), "--out", str(tmp_path)]) == 2
    assert "f_p" in capsys.readouterr().err


@pytest.mark.parametrize("command,extra", [
    ("outage", ["--trials", "500", "--snr-db", "0:10:5", "--beta-db", "0,10"]),
    ("campaign", ["--realizations", "1", "--policy", "etp", "--policy", "erp", "--sigma-s", "0",
                  "--sigma-s", "8", "--k-over-m", "2,4"]),
    ("optimize", ["--realizations", "1", "--r-int-grid", "0.05", "--r-max-grid", "0.2,0.3"]),
])
def test_rerun_from_manifest_is_byte_identical(tmp_path, command, extra):
    cfg = small_config_file(tmp_path)
    first, second = tmp_path / "first", tmp_path / "second"
    assert main([command, "--config", str(cfg), "--seed", "4", "--out", str(first)] + extra) == 0
    assert main([command, "--config", str(first / "manifest.json"), "--out", str(second)]) == 0
    csvs = sorted(p.name for p in first.glob("*.csv"))
    assert csvs == sorted(p.name for p in second.glob("*.csv"))
    for name in csvs:
        assert (first / name).read_bytes() == (second / name).read_bytes()
    a, b = (json.loads((d / "manifest.json").read_text()) for d in (first, second))
    a.pop("timestamp"), b.pop("timestamp")
    assert a == b
