import subprocess
import sys
from pathlib import Path

from normbpa.cli import main

ROOT = Path(__file__).resolve().parents[1]
EX1 = str(ROOT / "systems" / "ex1.bpa")
EX2 = str(ROOT / "systems" / "ex2.bpa")


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_check_equivalent(capsys):
    code, out = run(capsys, "check", EX1, "A0.C", "A1.C")
    assert code == 0
    assert out.splitlines()[0] == "EQUIV"
    assert "[A0]_{B,C}[C]_∅" in out


def test_check_not_equivalent(capsys):
    code, out = run(capsys, "check", EX1, "A0", "A1")
    assert code == 1 and out.startswith("NONEQUIV")


def test_check_with_reference_set(capsys):
    code, out = run(capsys, "check", EX2, "A0", "eps", "--ref", "A1")
    assert code == 1 and out.startswith("NONEQUIV")


def test_base_prints_three_tables(capsys, tmp_path):
    code, out = run(capsys, "base", EX1, "--dump-iterations", str(tmp_path))
    assert code == 0
    titles = [line for line in out.splitlines() if line.startswith("# ")]
    assert titles == ["# initial base", "# construction 1", "# construction 2", "# constructions=3 slices=2 blocks=6 max_norm=2"]
    assert sorted(p.name for p in tmp_path.iterdir()) == ["iteration0.tsv", "iteration1.tsv", "iteration2.tsv"]


def test_norms_table(capsys):
    code, out = run(capsys, "norms", EX1)
    assert code == 0
    rows = [line.split("\t") for line in out.splitlines()]
    assert rows[0] == ["constant", "strong", "weak"]
    assert ["A1", "2", "1"] in rows and ["B", "1", "0"] in rows


def test_oracle_verdicts(capsys):
    assert run(capsys, "oracle", EX1, "A0.C", "A1.C") == (0, "EQUIV\n")
    assert run(capsys, "oracle", EX1, "A0", "A1") == (1, "NONEQUIV\n")
    code, out = run(capsys, "oracle", EX1, "A0.A0.A0.C", "A1.C", "--max-states", "2")
    assert (code, out) == (2, "UNKNOWN\n")


def test_gen_writes_a_parsable_file(capsys, tmp_path):
    out = tmp_path / "g.bpa"
    code, _ = run(capsys, "gen", "--seed", "7", "--consts", "4", "--rules", "8", "--ground-frac", "0.5", "-o", str(out))
    assert code == 0
    code, text = run(capsys, "norms", str(out))
    assert code == 0 and sum(1 for line in text.splitlines()[1:] if line.endswith("\t0")) == 2


def test_fuzz_clean_run(capsys):
    code, out = run(capsys, "fuzz", "--seed", "3", "--trials", "10")
    assert code == 0
    assert "mismatches=0" in out


def test_errors_exit_with_two(capsys, tmp_path):
    bad = tmp_path / "bad.bpa"
    bad.write_text("constants: X\nrules:\nX -a> eps\n")
    assert main(["base", str(bad)]) == 2
    assert main(["check", EX1, "A0", "Q"]) == 2
    assert main(["base", str(tmp_path / "missing.bpa")]) == 2


def test_console_entry_point():
    done = subprocess.run([sys.executable, "-m", "normbpa.cli", "check", EX1, "A0.C", "A1.C"], capture_output=True, text=True)
    assert done.returncode == 0 and done.stdout.startswith("EQUIV")
