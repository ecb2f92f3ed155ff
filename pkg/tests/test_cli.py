import csv
import io
import json

import pytest

from sepvol import cli, verify


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_samples():
    assert cli.parse_samples("1e7") == 10_000_000
    assert cli.parse_samples("250000") == 250_000
    for bad in ("1.5", "-3", "abc", "inf"):
        with pytest.raises(Exception):
            cli.parse_samples(bad)


def test_round_sig():
    assert cli.round_sig({"a": [1 / 3]})["a"][0] == float("0.333333333333333")
    assert cli.round_sig(float("nan")) != cli.round_sig(float("nan"))


def test_estimate_sampling(capsys):
    code, out, _ = run(capsys, "estimate", "--metric", "hs", "--quantity", "sep-probability",
                       "--samples", "2e4", "--seed", "7")
    assert code == 0
    m = json.loads(out)
    assert m["schema"] == cli.SCHEMA and m["seeds"] == [7] and m["samples"] == [20000]
    p = m["payload"]
    assert abs(p["value"] - 0.2424) < 5 * p["stderr"]
    assert p["conjecture"]["decimal"] == pytest.approx(0.242379, abs=1e-6)


def test_estimate_total_volume_quadrature(capsys):
    code, out, _ = run(capsys, "estimate", "--metric", "hs", "--quantity", "total-volume", "--samples", "0")
    assert code == 0
    assert json.loads(out)["payload"]["ratio"] == pytest.approx(1.0, abs=1e-6)


def test_estimate_sep_volume(capsys):
    code, out, _ = run(capsys, "estimate", "--metric", "bures", "--quantity", "sep-volume", "--samples", "2e4")
    p = json.loads(out)["payload"]
    assert code == 0 and abs(p["ratio"] - 1) < 0.2


@pytest.mark.parametrize("argv", [
    ["estimate", "--metric", "km", "--quantity", "sep-probability"],
    ["estimate", "--metric", "nope", "--quantity", "total-volume"],
    ["estimate", "--metric", "hs", "--quantity", "sep-probability", "--samples", "10"],
    ["frobnicate"],
    ["scenarios", "--dim", "6"],
])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err


def test_budget_exit_code(capsys):
    code, _, err = run(capsys, "scenarios", "--dim", "7", "--samples", "2000", "--target-stderr", "1e-15")
    assert code == 3 and "budget" in err


def test_scenarios_csv(capsys, tmp_path):
    path = tmp_path / "s4.csv"
    code, out, _ = run(capsys, "scenarios", "--dim", "4", "--samples", "2e4", "--format", "csv", "--out", str(path))
    assert code == 0 and out == ""
    raw = path.read_bytes()
    assert b"\r\n" in raw
    rows = list(csv.DictReader(io.StringIO(raw.decode())))
    assert len(rows) == 20
    assert sum(r["classification"] == "trivial-prob-1" for r in rows) == 12
    assert rows[0]["label"].startswith("zero(")


def test_scenarios_json_and_replay(capsys, tmp_path):
    path = tmp_path / "s9.json"
    code, _, _ = run(capsys, "scenarios", "--dim", "9", "--constraint", "one-2x2-pt-minor", "--samples", "2e4",
                     "--method", "cad", "--out", str(path))
    assert code == 0
    m = json.loads(path.read_text())
    row = m["payload"]["rows"][0]
    assert row["separable_expected"] == pytest.approx(0.0014242052589)
    code, out, _ = run(capsys, "replay", str(path))
    assert code == 0 and json.loads(out)["payload"]["reproduced"] is True
    m["payload"]["rows"][0]["separable"] += 1e-6
    path.write_text(json.dumps(m))
    code, out, _ = run(capsys, "replay", str(path))
    assert code == 1 and json.loads(out)["payload"]["reproduced"] is False


def test_replay_rejects_unknown_schema(capsys, tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"schema": "other/9"}))
    code, _, _ = run(capsys, "replay", str(path))
    assert code == 2


def test_fit_predict_eq11(capsys):
    code, out, _ = run(capsys, "fit-predict", "--form", "eq11")
    p = json.loads(out)["payload"]
    assert code == 0 and p["verdict"] == "pass"
    assert {r["metric"] for r in p["reports"]} == {"bures", "kubo-mori", "average", "wigner-yanase"}
    assert p["reported"]["kubo-mori_boundary_probability"] == pytest.approx(0.0214689, rel=1e-3)


def test_fit_predict_two_term_csv(capsys):
    code, out, _ = run(capsys, "fit-predict", "--form", "two-term", "--m1", "4", "--m2", "3", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 5 and all(r["passed"] == "True" for r in rows)


def test_verify_exit_codes(capsys, monkeypatch):
    good = verify.Check(1, "ok", True)
    known = verify.Check(1, "stated value", False, known_issue="typo")
    bad = verify.Check(2, "broken", False)
    monkeypatch.setattr(verify, "run", lambda suite, budget: [good, known])
    code, out, err = run(capsys, "verify", "--suite", "exact")
    assert code == 0 and "FAIL(known)" in err
    monkeypatch.setattr(verify, "run", lambda suite, budget: [good, bad])
    code, out, _ = run(capsys, "verify", "--suite", "mc", "--budget", "1e5")
    payload = json.loads(out)["payload"]
    assert code == 1 and payload["failures"][0]["name"] == "broken"


def test_catalog(capsys, tmp_path):
    path = tmp_path / "cat.json"
    code, _, _ = run(capsys, "catalog", "--out", str(path))
    payload = json.loads(path.read_text())["payload"]
    assert code == 0 and payload["constants"]["version"] == "1"
    assert any(r["as_stated"] for r in payload["scenarios"] if r["spec"]["dimension"] == 4)
