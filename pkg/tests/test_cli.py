import json
import subprocess
import sys

import pytest

from pqacp.cli import DIFFERENT, ERROR, OK, STUCK, main
from pqacp.quantum import H
from pqacp.registry import ActionRegistry


@pytest.fixture
def reg_path(tmp_path):
    r = ActionRegistry()
    r.add_register("q")
    r.add_classical("a", "b", "c")
    r.add_unitary("H", ["q"], H)
    path = tmp_path / "reg.json"
    r.dump(path)
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestNormalize:
    def test_inline(self, capsys):
        code, out, _ = run(capsys, "normalize", "-e", "(a+b).c")
        assert code == OK
        assert out.splitlines() == ["a . c + b . c", "A4 @ ε : (a + b) . c => a . c + b . c"]

    def test_json(self, capsys):
        code, out, _ = run(capsys, "normalize", "-e", "(a+b).c", "--format", "json")
        data = json.loads(out)
        assert code == OK and data["normal_form"] == "a . c + b . c" and len(data["trace"]) == 1

    def test_from_file(self, capsys, tmp_path):
        f = tmp_path / "t.pqa"
        f.write_text("a . tau\n")
        assert run(capsys, "normalize", str(f))[1].splitlines()[0] == "a"

    def test_stuck(self, capsys):
        code, _, err = run(capsys, "normalize", "-e", "abstr{a}((a + b) [+1/2] c)")
        assert code == STUCK and "open problem" in err

    def test_parse_error(self, capsys):
        code, _, err = run(capsys, "normalize", "-e", "a + (b")
        assert code == ERROR and err.startswith("error: ParseError")

    def test_free_name_with_registry(self, capsys, reg_path):
        code, _, err = run(capsys, "normalize", "-e", "a . X", "--registry", reg_path)
        assert code == ERROR and "free recursion variable" in err

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "normalize", str(tmp_path / "none.pqa"))[0] == ERROR


class TestLts:
    def test_single_action(self, capsys, reg_path):
        code, out, err = run(capsys, "lts", "-e", "a", "--depth", "1", "--format", "json",
                             "--registry", reg_path)
        data = json.loads(out)
        assert code == OK and [s["kind"] for s in data["states"]] == ["prob", "action", "nil"]
        assert err.startswith("states: 3 ")

    def test_text_format(self, capsys, reg_path):
        _, out, _ = run(capsys, "lts", "-e", "a", "--depth", "1", "--format", "text", "--registry", reg_path)
        assert "0 ~> 1 1" in out.splitlines() and "1 -a-> 2" in out.splitlines()

    def test_dot_to_file(self, capsys, reg_path, tmp_path):
        out = tmp_path / "g.dot"
        code, _, _ = run(capsys, "lts", "-e", "a [+1/3] b", "--registry", reg_path, "-o", str(out))
        assert code == OK and out.read_text().startswith("digraph")

    def test_unregistered_action(self, capsys, reg_path):
        assert run(capsys, "lts", "-e", "zz", "--registry", reg_path)[0] == ERROR

    def test_registry_from_environment(self, capsys, reg_path, monkeypatch):
        monkeypatch.setenv("PQACP_REGISTRY", reg_path)
        assert run(capsys, "lts", "-e", "H . a")[0] == OK

    def test_unreadable_registry(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        assert run(capsys, "lts", "-e", "a", "--registry", str(bad))[0] == ERROR


class TestBisim:
    @pytest.mark.parametrize("x,y,mode,code", [
        ("a + b", "b + a", "strong", OK),
        ("a . tau", "a", "branching", OK),
        ("a [+1/3] b", "a [+1/2] b", "strong", DIFFERENT),
        ("tau . a", "a", "branching", DIFFERENT),
    ])
    def test_verdicts(self, capsys, reg_path, x, y, mode, code):
        assert run(capsys, "bisim", "-e", x, y, "--mode", mode, "--registry", reg_path)[0] == code

    def test_witness_printed(self, capsys, reg_path):
        _, out, _ = run(capsys, "bisim", "-e", "a", "b", "--registry", reg_path)
        assert out.startswith("inequivalent") and "condition: action mismatch" in out

    def test_json(self, capsys, reg_path):
        _, out, _ = run(capsys, "bisim", "-e", "a", "a", "--registry", reg_path, "--format", "json")
        assert json.loads(out)["verdict"] == "equivalent"


class TestVerify:
    @pytest.mark.parametrize("argv", [["teleport", "--input", "plus"], ["teleport", "--input", "mixed"],
                                      ["bb84"], ["e91"]])
    def test_passes(self, capsys, argv):
        code, out, _ = run(capsys, "verify", *argv)
        assert code == OK and json.loads(out)["pass"]

    def test_out_of_range(self, capsys):
        code, _, err = run(capsys, "verify", "e91", "--n", "5")
        assert code == ERROR and "OutOfRange" in err

    @pytest.mark.parametrize("argv", [["teleport", "--input", "plus", "--mutation", "drop_pauli"],
                                      ["bb84", "--mutation", "flip_basis"],
                                      ["e91", "--mutation", "wrong_shadow"]])
    def test_mutations_fail(self, capsys, argv):
        code, out, _ = run(capsys, "verify", *argv)
        assert code == DIFFERENT and not json.loads(out)["pass"]

    def test_seeded_report_is_reproducible(self, capsys):
        a = run(capsys, "verify", "teleport", "--input", "random", "--seed", "4")[1]
        b = run(capsys, "verify", "teleport", "--input", "random", "--seed", "4")[1]
        assert a == b and json.loads(a)["seed"] == 4

    def test_plot_and_export(self, capsys, tmp_path):
        png = tmp_path / "bb84.png"
        code, _, err = run(capsys, "verify", "bb84", "--plot", str(png), "--export", str(tmp_path / "m"),
                           "-o", str(tmp_path / "r.json"))
        assert code == OK
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
        assert (tmp_path / "m" / "bb84.pqa").exists() and (tmp_path / "m" / "bb84-registry.json").exists()
        assert json.loads((tmp_path / "r.json").read_text())["protocol"] == "BB84"
        assert "wrote registry" in err

    def test_exported_model_round_trips_through_cli(self, capsys, tmp_path):
        run(capsys, "verify", "e91", "--export", str(tmp_path))
        code, out, _ = run(capsys, "bisim", str(tmp_path / "e91.pqa"), str(tmp_path / "e91-spec.pqa"),
                           "--mode", "branching", "--registry", str(tmp_path / "e91-registry.json"))
        assert code == OK and out.startswith("equivalent")


def test_matplotlib_not_imported_without_plot():
    code = ("import sys; from pqacp.cli import main; main(['verify', 'bb84', '-o', '/dev/null']); "
            "print('matplotlib' in sys.modules)")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "pqacp.cli", "normalize", "-e", "a [+1/2] a"],
                         capture_output=True, text=True)
    assert out.returncode == OK and out.stdout.splitlines()[0] == "a"


@pytest.mark.parametrize("argv", [["lts", "-e", "a", "--depth", "0"], ["verify", "qkd"], []])
def test_bad_arguments_are_input_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == ERROR and "usage:" in err


def test_help_exits_cleanly(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == OK and "normalize" in out
