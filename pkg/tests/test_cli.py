import os
import subprocess
import sys
from pathlib import Path

import pytest

from cyclopip import relations
from cyclopip.cli import EXIT_INDETERMINATE, EXIT_OK, EXIT_USAGE, main, read_ideal
from cyclopip.cyclo import Conductor, from_text
from cyclopip.ideal import ideal_from_generator
from cyclopip.pip import is_generator, torsion_match, unit_equivalent

FIX = Path(__file__).parent / "fixtures"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def field(out, key):
    for line in out.splitlines():
        if line.startswith(key + ": "):
            return line[len(key) + 2:]
    raise KeyError(key)


def test_classgroup_q_zeta_23(capsys):
    code, out, err = run(capsys, "classgroup", "--p", "23", "--s", "1", "--bound", "500", "--seed", "7")
    assert code == EXIT_OK
    assert field(out, "h") == "3" and field(out, "divisors") == "3"
    assert field(out, "seed") == "7"
    assert float(field(out, "margin")) > 0
    assert "time" in err


def test_classgroup_q_zeta_16(capsys):
    code, out, _ = run(capsys, "classgroup", "--p", "2", "--s", "4", "--bound", "100")
    assert code == EXIT_OK and field(out, "h") == "1" and field(out, "certified") == "yes"


@pytest.mark.parametrize("argv", [
    ["classgroup", "--p", "15", "--bound", "100"],
    ["classgroup", "--p", "7"],
    ["classgroup", "--p", "7", "--bound", "1"],
    ["shortgen", "--p", "2", "--s", "4", "--trials", "0"],
    ["precompute", "--p", "2", "--s", "4", "--bound", "60"],
    ["svp", "--ideal", "x"],
])
def test_usage_errors(capsys, argv):
    if argv[0] == "svp":
        with pytest.raises(SystemExit) as e:
            main(argv)
        assert e.value.code == EXIT_USAGE
        return
    code, _, err = run(capsys, *argv)
    assert code == EXIT_USAGE and "usage error" in err


@pytest.mark.parametrize("name", ["planted16.hnf", "planted16.gen"])
def test_pip_planted_fixture(capsys, tmp_path, name):
    out_file = tmp_path / "g.txt"
    code, out, _ = run(capsys, "pip", "--p", "2", "--s", "4", "--bound", "80",
                       "--ideal", str(FIX / name), "--out", str(out_file))
    assert code == EXIT_OK
    assert field(out, "verdict") == "principal"
    assert "# check (g) = I: norm and membership ok" in out
    g = from_text(out_file.read_text())
    planted = from_text((FIX / "planted16.gen").read_text())
    assert unit_equivalent(g, planted)
    assert is_generator(g, ideal_from_generator(planted))


def test_pip_unit_ideal(capsys):
    code, out, _ = run(capsys, "pip", "--p", "2", "--s", "4", "--bound", "80",
                       "--ideal", str(FIX / "unit16.hnf"))
    assert code == EXIT_OK and field(out, "verdict") == "principal"
    g = from_text(field(out, "generator"))
    assert abs(g.coeffs[0]) == 1 and not any(g.coeffs[1:])


@pytest.mark.parametrize("name", ["q23_above2.hnf", "q23_above2.txt"])
def test_pip_not_principal(capsys, name):
    code, out, _ = run(capsys, "pip", "--p", "23", "--bound", "400", "--seed", "2",
                       "--ideal", str(FIX / name))
    assert code == EXIT_OK
    assert field(out, "verdict") == "not_principal"


def test_pip_ideal_in_wrong_field(capsys):
    code, _, err = run(capsys, "pip", "--p", "2", "--s", "3", "--bound", "60",
                       "--ideal", str(FIX / "planted16.hnf"))
    assert code == EXIT_USAGE


def test_precompute_then_pip_twice(capsys, tmp_path):
    store = tmp_path / "q16.store"
    code, out, _ = run(capsys, "precompute", "--p", "2", "--s", "4", "--bound", "200",
                       "--out", str(store))
    assert code == EXIT_OK and store.exists()
    assert field(out, "h").startswith("1")
    reports = []
    for _ in range(2):
        before = relations.samples_drawn()
        code, out, err = run(capsys, "pip", "--store", str(store), "--ideal", str(FIX / "planted16.hnf"))
        assert code == EXIT_OK
        assert relations.samples_drawn() == before  # no relation collection on the store path
        assert "time" in err
        reports.append(out)
    assert reports[0] == reports[1]
    assert field(reports[0], "verdict") == "principal"


def test_svp_through_store(capsys, tmp_path):
    store = tmp_path / "q16.store"
    assert run(capsys, "precompute", "--p", "2", "--s", "4", "--bound", "80", "--out", str(store))[0] == 0
    code, out, _ = run(capsys, "svp", "--store", str(store), "--ideal", str(FIX / "planted16.hnf"))
    assert code == EXIT_OK
    v = from_text(field(out, "vector"))
    assert read_ideal(FIX / "planted16.hnf").contains(v)
    assert float(field(out, "ratio")) > 0


def test_shortgen_fixture(capsys):
    code, out, _ = run(capsys, "shortgen", "--generator", str(FIX / "shortgen64.gen"))
    assert code == EXIT_OK
    h = from_text(field(out, "short generator"))
    key = from_text((FIX / "shortgen64.key").read_text())
    assert torsion_match(h, key) is not None


def test_shortgen_planted_runs(capsys):
    code, out, _ = run(capsys, "shortgen", "--p", "2", "--s", "6", "--trials", "5", "--seed", "3")
    assert code == EXIT_OK
    got, total = field(out, "recovered").split("/")
    assert total == "5" and 0 <= int(got) <= 5
    code2, out2, _ = run(capsys, "shortgen", "--p", "2", "--s", "6", "--trials", "5", "--seed", "3")
    assert out2 == out


def test_bench_table1_csv(capsys, tmp_path):
    csv = tmp_path / "t1.csv"
    code, out, _ = run(capsys, "bench-table1", "--p", "2", "--s", "5", "--weights", "4,8",
                       "--trials", "5", "--out", str(csv))
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "weight,random_mean,unitvar_mean"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["4", "8"]
    assert csv.read_text() == out


def test_workers_note(capsys):
    code, _, err = run(capsys, "classgroup", "--p", "2", "--s", "3", "--bound", "60", "--workers", "2")
    assert code == EXIT_OK and "sequentially" in err


def test_reports_are_byte_identical(tmp_path):
    env = dict(os.environ)
    outs = []
    for i in range(2):
        f = tmp_path / f"r{i}.txt"
        subprocess.run([sys.executable, "-m", "cyclopip.cli", "classgroup", "--p", "13", "--bound", "100",
                        "--seed", "5", "--out", str(f)], check=True, env=env, capture_output=True)
        outs.append(f.read_bytes())
    assert outs[0] == outs[1] and b"h: 1" in outs[0]


def test_descent_failure_is_indeterminate(capsys):
    code, _, err = run(capsys, "pip", "--p", "23", "--bound", "400", "--seed", "2", "--k", "2", "--l", "2",
                       "--trials-descent", "1", "--ideal", str(FIX / "q23_above2.hnf"))
    assert code == EXIT_INDETERMINATE
    assert "indeterminate: descent failed" in err
