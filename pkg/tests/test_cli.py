import json

import pytest

from conftest import brute_force_spin_pmf

from begphase.cli import main


def run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_canon_critical_prints_tricritical_coupling(capsys):
    code, out, _ = run(capsys, ["canon-critical", "--beta", "1.3862944"])
    assert code == 0
    header, cols, row = [l for l in out.splitlines() if l][-3:]
    names = cols.split(",")
    values = row.split(",")
    kc2 = values[names.index("Kc2")]
    assert kc2.startswith("1.08202")


def test_pmf_two_sites_matches_enumeration(capsys):
    code, out, _ = run(capsys, ["pmf", "--n", "2", "--beta", "1", "--K", "1"])
    assert code == 0
    lines = [l for l in out.splitlines() if l and not l.startswith("#")]
    assert lines[0].split(",")[:2] == ["k", "probability"]
    rows = [l.split(",") for l in lines[1:]]
    assert len(rows) == 5
    expect = brute_force_spin_pmf(2, 1.0, 1.0)
    for (k, p, _), e in zip(rows, expect):
        assert abs(float(p) - e) < 1e-10


def test_byte_identical_reruns(capsys):
    argv = ["limits", "--beta", "1", "--K", "1", "--mode", "metropolis",
            "--n", "10", "--steps", "2000", "--seed", "3"]
    code1, out1, _ = run(capsys, argv)
    code2, out2, _ = run(capsys, argv)
    assert code1 == code2 == 0
    assert out1 == out2

    argv = ["canon", "--beta", "1.1", "--K", "1.4", "--format", "json"]
    _, out1, _ = run(capsys, argv)
    _, out2, _ = run(capsys, argv)
    assert out1 == out2


def test_unknown_flag_exits_64(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["canon", "--beta", "1", "--K", "1", "--frobnicate"])
    assert exc.value.code == 64


def test_domain_error_exits_2_and_names_precondition(capsys):
    code, _, err = run(capsys, ["micro", "--u", "5", "--K", "1"])
    assert code == 2
    assert "domain error" in err
    assert "attainable energy range" in err


def test_json_format_rounding(capsys):
    code, out, _ = run(capsys, ["canon", "--beta", "1", "--K", "1.5",
                                "--format", "json"])
    assert code == 0
    doc = json.loads(out)
    assert doc["phase"] == "pair"
    zs = [row["z"] for row in doc["rows"]]
    assert zs == sorted(zs)
    assert abs(zs[1] - 0.778646619440) < 1e-10
    # 12 significant digits survive the JSON round-trip
    assert len(f"{abs(zs[1]):.15g}".replace(".", "").rstrip("0")) <= 12


def test_diagram_canon_csv(capsys, tmp_path):
    out_file = tmp_path / "rows.csv"
    curves_file = tmp_path / "curves.csv"
    code = main(["diagram-canon", "--beta-grid", "0.8:1.2:0.2",
                 "--K-grid", "1.0:1.4:0.2", "--out", str(out_file),
                 "--curves-out", str(curves_file)])
    assert code == 0
    lines = out_file.read_text().splitlines()
    header = [l for l in lines if not l.startswith("#")][0]
    assert header == "beta,K,branch,z1,z2,z3,G_min"
    data = [l.split(",") for l in lines if l and not l.startswith("#")][1:]
    assert len(data) == 9
    uniques = [d for d in data if d[2] == "unique"]
    pairs = [d for d in data if d[2] == "pair"]
    assert uniques and pairs
    assert all(d[4] == "" and d[5] == "" for d in uniques)
    assert all(d[5] == "" and d[3].startswith("-") for d in pairs)
    curves = curves_file.read_text().splitlines()
    assert curves[0] == "beta,Kc2,K1,Kc1,K2,w1"


def test_micro_cli(capsys):
    code, out, _ = run(capsys, ["micro", "--u", "0.5", "--K", "2"])
    assert code == 0
    lines = [l for l in out.splitlines() if l and not l.startswith("#")]
    assert len(lines) == 3   # header + symmetric pair
    assert "# phase=pair" in out


def test_oracle_cli(capsys):
    code, out, _ = run(capsys, ["oracle", "--kind", "canonical", "--beta", "1",
                                "--K", "0.5", "--grid-step", "0.01"])
    assert code == 0
    assert "# n_minima=" in out


def test_equivalence_cli_nonequivalent_regime(capsys):
    code, out, _ = run(capsys, ["equivalence", "--K", "1.0817"])
    assert code == 0
    assert "# verdict=nonequivalent" in out
