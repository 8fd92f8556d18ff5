import json

import numpy as np
import pytest

from negcall import cli, report
from negcall.config import ScenarioConfig, load_config, parse_config_text
from negcall.errors import ConfigError

FAST = ["--paths", "400", "--steps", "256", "--hedge-paths", "400", "--n-list", "16,32,64"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr()


def test_parse_config_text():
    vals = parse_config_text("# comment\nbackend = exact_law\ntau-max = 12.5  # inline\nlevels = 1, 2\n\nbridge_correction = off\n")
    assert vals == {"backend": "exact_law", "tau_max": 12.5, "levels": (1.0, 2.0), "bridge_correction": False}
    with pytest.raises(ConfigError):
        parse_config_text("no equals sign")
    with pytest.raises(ConfigError):
        parse_config_text("colour = blue")
    with pytest.raises(ConfigError):
        parse_config_text("paths = many")


def test_flags_override_file(tmp_path):
    f = tmp_path / "s.cfg"
    f.write_text("paths = 5000\nseed = 3\n")
    cfg = load_config(f, {"paths": 200, "seed": None})
    assert cfg.paths == 200 and cfg.seed == 3


@pytest.mark.parametrize(
    "over",
    [{"claim": "nope"}, {"backend": "mc"}, {"paths": 50}, {"alpha": 0.7}, {"levels": ""}, {"seed": -1}, {"steps": 1}, {"format": "xml"}],
)
def test_config_validation(over):
    with pytest.raises(ConfigError):
        load_config(None, over)


def test_small_paths_allowed_without_verdicts():
    assert load_config(None, {"paths": 10}, statistical=False).paths == 10


def test_missing_config_file_exit_2(capsys, tmp_path):
    code, out = run(capsys, "verify", "--config", str(tmp_path / "absent.cfg"))
    assert code == 2 and "cannot read" in out.err


def test_unknown_claim_exit_2(capsys, tmp_path):
    code, _ = run(capsys, "simulate", "--claim", "american", "--out", str(tmp_path))
    assert code == 2


def test_simulate_writes_outputs(capsys, tmp_path):
    code, out = run(capsys, "simulate", "--paths", "300", "--steps", "128", "--out", str(tmp_path), "--record-nodes", "5")
    assert code == 0
    summ = json.loads((tmp_path / "summary.json").read_text())
    assert summ["s2_initial"] == -1.0
    assert summ["truncation"]["hitting_tail_prediction"] == pytest.approx(0.173085, abs=1e-6)
    assert summ["unstopped_fraction"] + summ["stopped_fraction"] == pytest.approx(1.0)
    rows = (tmp_path / "ensemble.csv").read_text().splitlines()
    assert rows[0] == "path_id,node,t,tau,s1,c,m,s2,stopped"
    assert len(rows) == 1 + 300 * 5
    assert (tmp_path / "paths.csv").read_text().startswith("path_id,stop_index,stopped,d\n")
    assert "unstopped_fraction" in out.out


def test_simulate_exact_law(capsys, tmp_path):
    code, _ = run(capsys, "simulate", "--backend", "exact_law", "--paths", "200", "--out", str(tmp_path), "--format", "json")
    summ = json.loads((tmp_path / "summary.json").read_text())
    assert code == 0 and summ["stopped_fraction"] == 1.0
    assert not (tmp_path / "exact_law.csv").exists()


def test_csv_round_trips_floats(tmp_path):
    x = [0.1, 1 / 3, 2**-40, -1e300, np.inf, np.nan]
    report.write_csv(tmp_path / "x.csv", ["v"], [[v] for v in x])
    back = [float(r) for r in (tmp_path / "x.csv").read_text().split()[1:]]
    assert back[:4] == x[:4] and back[4] == np.inf and np.isnan(back[5])


def test_converge(capsys, tmp_path):
    code, out = run(capsys, "converge", "--backend", "euler_uniform_t", "--hedge-paths", "2000", "--n-list", "256,64,128,32", "--out", str(tmp_path))
    doc = json.loads((tmp_path / "convergence.json").read_text())
    assert [r["n"] for r in doc["rows"]] == [32, 64, 128, 256]
    assert -0.65 <= doc["slope"]["value"] <= -0.35 and code == 0
    assert (tmp_path / "convergence.csv").read_text().startswith("n,rms,rms_stderr,mean_error,paths\n")


def test_converge_single_n(capsys, tmp_path):
    code, out = run(capsys, "converge", "--backend", "euler_uniform_t", "--hedge-paths", "500", "--n-list", "64", "--out", str(tmp_path))
    doc = json.loads((tmp_path / "convergence.json").read_text())
    assert code == 0 and doc["slope"] is None and len(doc["rows"]) == 1
    assert "not estimated" in out.out


def test_converge_needs_uniform_t(capsys, tmp_path):
    code, _ = run(capsys, "converge", "--out", str(tmp_path))
    assert code == 2


def test_tails_exact_law(capsys, tmp_path):
    code, out = run(capsys, "tails", "--backend", "exact_law", "--paths", "20000", "--out", str(tmp_path))
    doc = json.loads((tmp_path / "tails.json").read_text())
    assert code == 0
    row = doc["rows"][0]
    assert row["depth"] == 1 and row["oracle"] == pytest.approx(0.580348, abs=1e-6)
    assert row["ci"][0] <= row["empirical"] <= row["ci"][1]


def test_tails_euler_is_below_exact(capsys, tmp_path):
    code, out = run(capsys, "tails", "--paths", "5000", "--steps", "256", "--out", str(tmp_path / "e"))
    assert code == 0 and "biased" in out.out
    run(capsys, "tails", "--backend", "exact_law", "--paths", "5000", "--out", str(tmp_path / "x"))
    e = json.loads((tmp_path / "e" / "tails.json").read_text())["rows"]
    x = json.loads((tmp_path / "x" / "tails.json").read_text())["rows"]
    for re, rx in zip(e, x):
        assert re["empirical"] <= rx["ci"][1]


def test_tails_empty_levels(capsys, tmp_path):
    code, _ = run(capsys, "tails", "--levels", "", "--out", str(tmp_path))
    assert code == 2


def test_verify_small_run_and_corrupt_oracle(capsys, tmp_path):
    code, out = run(capsys, "verify", *FAST, "--out", str(tmp_path / "ok"))
    assert code == 0, out.out
    doc = json.loads((tmp_path / "ok" / "verify.json").read_text())
    assert doc["summary"]["all_pass"] and doc["truncation"]["tau_max"] == 40.0
    assert 0 < doc["summary"]["expected_false_failure_rate"] < 1
    code, out = run(capsys, "verify", *FAST, "--corrupt-oracle", "--out", str(tmp_path / "bad"))
    assert code == 1 and "[FAIL] c03" in out.out


def test_verify_exact_law_skips_path_criteria(capsys, tmp_path):
    code, out = run(capsys, "verify", *FAST, "--backend", "exact_law", "--out", str(tmp_path))
    doc = json.loads((tmp_path / "verify.json").read_text())
    skipped = {s["criterion"] for s in doc["skipped"]}
    assert {"c01", "c02", "c04", "c07", "c08", "c12", "c13"} == skipped
    assert code == 0 and doc["truncation"] is None


def test_verify_is_byte_identical(capsys, tmp_path):
    for name in ("a", "b"):
        assert run(capsys, "verify", *FAST, "--out", str(tmp_path / name))[0] == 0
    for f in ("verify.json", "verify.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_config_to_dict_is_jsonable():
    json.dumps(ScenarioConfig().to_dict())
