import json
import subprocess
import sys

import pytest

from torsorcount.cli import main, parse_box, parse_congruence, UsageError
from torsorcount.fan_core import FanData, load_fan
from torsorcount.peyre_constants import alpha_constant, alpha_zero, local_density_kappa
from torsorcount.sieve_lab import PolyPair, geometric_sieve_count
from torsorcount.polyexpr import parse_poly
from torsorcount.torsor_points import Box, Congruence, CountQuery, count


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_const_alpha(capsys):
    assert run(capsys, "const", "alpha", "--fan", "p2.json") == (0, "1/3\n", "")


@pytest.mark.parametrize("name", ["p1", "p2", "p1xp1", "f1", "dp7"])
def test_const_golden(capsys, name):
    fd = FanData.load(name)
    assert run(capsys, "const", "alpha", "--fan", name)[1].strip() == str(alpha_constant(fd))
    assert run(capsys, "const", "alpha0", "--fan", name)[1].strip() == str(alpha_zero(fd))
    assert run(capsys, "const", "kappa", "--fan", name, "--p", "5")[1].strip() == str(local_density_kappa(fd, 5))


def test_const_kappa_product(capsys):
    code, out, _ = run(capsys, "const", "kappa", "--fan", "p2", "--pmax", "1000", "--output", "json")
    d = json.loads(out)
    assert code == 0 and d["P_max"] == 1000 and d["lo"] <= d["value"] <= d["hi"]


def test_fan_check_ok(capsys):
    code, out, _ = run(capsys, "fan", "check", "f1")
    assert code == 0 and out.startswith("ok: d=2 n=4 r=2")


def test_fan_check_incomplete(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"rays": [[1, 0], [0, 1]], "max_cones": [[0, 1]]}))
    code, _, err = run(capsys, "fan", "check", str(bad))
    assert code == 1
    assert "unmatched" in err and "facet" in err


def test_fan_check_malformed(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    code, _, err = run(capsys, "fan", "check", str(bad))
    assert code == 1 and "invalid JSON" in err


def test_missing_file_is_usage_error(capsys, tmp_path):
    code, _, err = run(capsys, "fan", "check", str(tmp_path / "nope.json"))
    assert code == 2 and "no such fan file" in err
    code, _, err = run(capsys, "experiment", str(tmp_path / "nope.json"))
    assert code == 2 and "cannot read plan" in err


def test_count_example(capsys):
    assert run(capsys, "count", "--fan", "p1.json", "--B", "4", "--coprime") == (0, "3\n", "")


def test_count_golden(capsys):
    fd = FanData.load("f1")
    code, out, _ = run(
        capsys, "count", "--fan", "f1", "--B", "2000", "--coprime", "--congruence", "3:1,2,0,1", "--box", "1:1/2,1",
        "--output", "json",
    )
    q = CountQuery(2000, box=Box(1, (1 / 2, 1)), congruence=Congruence(3, (1, 2, 0, 1)), coprime_only=True)
    rec = json.loads(out)
    assert code == 0
    assert rec["count"] == count(fd, q)
    assert rec["query"] == q.to_dict()
    assert rec["wall_time_ms"] >= 0


def test_count_csv_and_points(capsys):
    code, out, _ = run(capsys, "count", "--fan", "p2", "--B", "8", "--output", "csv")
    assert code == 0 and out.splitlines()[0] == "query,count,wall_time_ms"
    code, out, _ = run(capsys, "count", "--fan", "p1", "--B", "4", "--coprime", "--points")
    assert out.splitlines() == ["X0,X1", "1,1", "1,2", "2,1"]


def test_count_divisibility(capsys):
    assert run(capsys, "count", "--fan", "p2", "--B", "8", "--divisibility", "2,1,1")[1] == "4\n"


@pytest.mark.parametrize(
    "argv,code",
    [
        (["count", "--fan", "p2", "--B", "8", "--box", "7:1"], 1),
        (["count", "--fan", "p2", "--B", "8", "--box", "nonsense"], 2),
        (["count", "--fan", "p2", "--B", "8", "--congruence", "2:1"], 1),
        (["count", "--fan", "p2", "--B", "-3"], 2),
        (["count", "--fan", "p2", "--B", "8", "--threads", "0"], 2),
        (["const", "kappa", "--fan", "p2", "--p", "4"], 2),
        (["sieve", "geom", "--fan", "p2", "--f", "X0", "--g", "2*X0", "--N", "3", "--B", "8"], 1),
        (["sieve", "geom", "--fan", "p2", "--f", "X9", "--g", "X0", "--N", "3", "--B", "8"], 1),
        (["sieve", "geom", "--fan", "p2", "--f", "X1", "--g", "X0", "--N", "1", "--B", "8"], 2),
    ],
)
def test_error_exit_codes(capsys, argv, code):
    assert main(argv) == code
    _, err = capsys.readouterr()
    assert err


def test_argparse_errors_exit_2():
    for argv in (["frobnicate"], ["count", "--fan", "p2"], ["count", "--fan", "p2", "--B", "x"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2


def test_sieve_geom_golden(capsys):
    fd = FanData.load("p2")
    pair = PolyPair.make(parse_poly("X0", 3), parse_poly("X1", 3))
    code, out, _ = run(capsys, "sieve", "geom", "--fan", "p2", "--f", "X0", "--g", "X1", "--N", "2", "--B", "8")
    assert (code, out) == (0, f"{geometric_sieve_count(fd, pair, 2, 8)}\n") == (0, "2\n")


def test_sieve_other_subcommands(capsys):
    assert run(capsys, "sieve", "subvariety", "--fan", "p2", "--phi", "X0 - X1", "--B", "8")[1] == "4\n"
    assert run(capsys, "sieve", "prime", "--fan", "p1", "--s", "X0", "--B", "100")[1] == "29\n"


def test_experiment_command(capsys, tmp_path):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps({"fan": "p1", "kind": "manin", "schedule": [100, 1000, 10000]}))
    code, out, _ = run(capsys, "experiment", str(plan), "--out", str(tmp_path / "res"))
    assert code == 0 and "res.csv" in out
    first = (tmp_path / "res.csv").read_bytes()
    run(capsys, "experiment", str(plan), "--out", str(tmp_path / "res"), "--threads", "2")
    assert (tmp_path / "res.csv").read_bytes() == first
    plan.write_text(json.dumps({"fan": "p1", "kind": "manin", "schedule": [100, 10]}))
    code, _, err = run(capsys, "experiment", str(plan))
    assert code == 1 and "increasing" in err


def test_experiment_to_stdout(capsys, tmp_path):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps({"fan": "p1", "kind": "flat_complement", "schedule": [4], "params": {"A": 1}}))
    code, out, _ = run(capsys, "experiment", str(plan))
    assert code == 0 and out.splitlines()[1].startswith("4,A=1.0,3,")


def test_parsers():
    assert parse_congruence("4:5,1") == Congruence(4, (1, 1))
    assert parse_box("2:1/3,1").lam[0].denominator == 3
    with pytest.raises(UsageError):
        parse_congruence("4")


def test_threads_env(monkeypatch):
    from torsorcount.cli import default_threads

    monkeypatch.setenv("TORSORCOUNT_THREADS", "3")
    assert default_threads() == 3
    monkeypatch.setenv("TORSORCOUNT_THREADS", "many")
    with pytest.raises(UsageError):
        default_threads()


def test_module_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "torsorcount", "const", "alpha", "--fan", "f1"], capture_output=True, text=True
    )
    assert out.returncode == 0 and out.stdout == "1/6\n"
