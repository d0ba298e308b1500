import csv
import json
import subprocess
import sys


from waysim import cli
from waysim.trust_core import TABLE_I_PARAMS, replay

from conftest import CONFIG_DIR

TWO = str(CONFIG_DIR / "two_users_150.json")
THREE = str(CONFIG_DIR / "three_users_100.json")


def test_table1_output(capsys):
    assert cli.main(["table1"]) == 0
    rows = [line.split("\t") for line in capsys.readouterr().out.splitlines()[1:]]
    assert [r[5] for r in rows] == ["1", "0.4", "0.7", "0.4", "0.3"]
    assert [r[4] for r in rows] == ["1.000000", "0.400000", "0.666667", "0.400000", "0.320000"]
    assert [(r[2], r[3]) for r in rows] == [("0", "1"), ("1", "2"), ("1", "3"), ("2", "4"), ("3", "5")]


def test_table1_rows_match_replay():
    exact = [r[4] for r in cli.table1_rows()]
    for a, b in zip(exact, replay(cli.TABLE_I_SEQUENCE, TABLE_I_PARAMS)):
        assert abs(a - b) <= 1e-12


def test_table1_mismatch_exit_code(monkeypatch, capsys):
    monkeypatch.setattr(cli, "replay", lambda seq, params: [0.5] * len(seq))
    assert cli.main(["table1"]) == cli.EXIT_MISMATCH


def test_validate_shipped_configs(capsys):
    for name in ("two_users_150.json", "three_users_100.json", "three_types_150.json"):
        assert cli.main(["validate", "--config", str(CONFIG_DIR / name)]) == 0


def test_validate_lists_every_violation(tmp_path, capsys):
    data = json.loads(open(TWO).read())
    data["user_layer"]["threshold"] = 1.5
    data["domain_layer"]["m"] = 0.5
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    assert cli.main(["validate", "--config", str(bad)]) == cli.EXIT_INVALID
    out = capsys.readouterr().out
    assert "threshold in [0,1)" in out
    assert "m ≥ 1" in out


def test_validate_missing_file(tmp_path):
    assert cli.main(["validate", "--config", str(tmp_path / "nope.json")]) == cli.EXIT_IO


def test_validate_bad_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["validate", "--config", str(bad)]) == cli.EXIT_INVALID


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["run", "--config", TWO, "--seed", "3", "--out", str(out)]) == 0
    for name in ("trajectories.csv", "metrics.csv", "utt.tsv", "dtt.tsv", "audit.log"):
        assert (out / name).exists()
    with open(out / "trajectories.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == cli.TRAJECTORY_HEADER
    assert {int(r["iteration"]) for r in rows} == set(range(1, 151))
    assert "seed=3" in capsys.readouterr().out


def test_run_three_users(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["run", "--config", THREE, "--out", str(out)]) == 0
    with open(out / "trajectories.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    users = {r["entity_id"] for r in rows if r["entity_kind"] == "User"}
    domains = {r["entity_id"] for r in rows if r["entity_kind"] == "Domain"}
    assert users == {"trusted", "innocent", "nontrusted"}
    assert domains <= {"UniversityA", "UniversityB", "UniversityC"} and domains


def test_run_is_byte_deterministic(tmp_path):
    for d in ("a", "b"):
        assert cli.main(["run", "--config", TWO, "--seed", "42", "--out", str(tmp_path / d)]) == 0
    for name in ("trajectories.csv", "metrics.csv", "utt.tsv", "dtt.tsv", "audit.log"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_bad_config(tmp_path, capsys):
    data = json.loads(open(TWO).read())
    data["users"][0]["domain_id"] = "Atlantis"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    assert cli.main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == cli.EXIT_INVALID
    assert "users[0].domain_id" in capsys.readouterr().err


def test_sweep_outputs(tmp_path, capsys):
    out = tmp_path / "s"
    assert cli.main(["sweep", "--config", TWO, "--seeds", "0..9", "--out", str(out)]) == 0
    with open(out / "sweep.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["seed"]) for r in rows] == sorted(int(r["seed"]) for r in rows)
    assert len(rows) == 20
    with open(out / "sweep_summary.csv", newline="") as fh:
        summary = list(csv.DictReader(fh))
    assert {s["user_type"] for s in summary} == {"Trusted", "NonTrusted"}


def test_sweep_single_seed_equals_run(tmp_path):
    assert cli.main(["sweep", "--config", TWO, "--seeds", "5", "--out", str(tmp_path / "s")]) == 0
    assert cli.main(["run", "--config", TWO, "--seed", "5", "--out", str(tmp_path / "r")]) == 0
    with open(tmp_path / "r" / "metrics.csv", newline="") as fh:
        final = {r["key"]: r["value"] for r in csv.DictReader(fh) if r["metric"] == "final_trust"}
    with open(tmp_path / "s" / "sweep_summary.csv", newline="") as fh:
        summary = {r["user_type"]: r["mean_final_trust"] for r in csv.DictReader(fh)}
    assert summary == {"Trusted": final["csu1"], "NonTrusted": final["csu2"]}


def test_sweep_empty_range(tmp_path):
    assert cli.main(["sweep", "--config", TWO, "--seeds", "5..4", "--out", str(tmp_path)]) == cli.EXIT_INVALID


def test_parse_seed_range():
    assert cli.parse_seed_range("3") == [3]
    assert cli.parse_seed_range("2..5") == [2, 3, 4, 5]
    assert cli.parse_seed_range("5..4") == []


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "waysim", "table1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "Malicious" in proc.stdout
