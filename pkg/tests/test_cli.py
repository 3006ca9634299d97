import io
import json
import subprocess
import sys

import pytest

from coha.cli import main
from coha.currents import DEFAULT_TAYLOR_POINT, dynamical_current_eval
from coha.theta import ThetaParams


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_product_text():
    code, out, _ = run("product", "1", "1")
    assert code == 0
    assert "result: -2" in out.splitlines()


def test_product_json_a2():
    code, out, _ = run("product", "l[1,1]", "1", "--quiver", "a2", "--fv", "1,0", "--gv", "0,1", "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert data["grading"] == {"v": [1, 1], "w": [0, 0]}
    assert data["result"] == "-l[1,1]^2 + l[1,1]*l[2,1] + l[1,1]*t1"


def test_elliptic_product_lists_terms():
    code, out, _ = run("product", "1", "1", "--kernel", "elliptic", "--fv", "2", "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert data["terms"] == data["shuffles"] == 3
    assert len(data["evaluations"]) == 3


def test_parse_error_exit_code():
    code, _, err = run("product", "l[1,1] +* 2", "1")
    assert code == 2
    assert "at position 8" in err


def test_usage_errors():
    assert run("product", "1", "1", "--quiver", "a2")[0] == 2
    assert run("nonsense")[0] == 2
    assert run("product", "1", "1", "--tau", "0.1,-1")[0] == 2


def test_assoc_and_classical():
    assert run("assoc", "l[1,1]", "1", "t1")[0] == 0
    code, out, _ = run("classical", "1", "1", "--quiver", "a2", "--fv", "1,0", "--gv", "0,1")
    assert code == 1 and "status: fail" in out
    assert run("classical", "1", "1", "--quiver", "a2", "--fv", "1,0", "--gv", "0,1", "--twisted")[0] == 0
    assert run("classical", "1", "l[1,1]", "--kernel", "elliptic")[0] == 0


def test_eval_and_errors():
    code, out, _ = run("eval", "th(x)", "--at", "x=0")
    assert code == 0 and "value: 0+0j" in out
    code, _, err = run("eval", "th(x + y)", "--at", "x=0.1")
    assert code == 2 and "y" in err
    assert run("eval", "1/th(x)", "--at", "x=0")[0] == 3


def test_eval_matches_current_module():
    pt = DEFAULT_TAYLOR_POINT
    lam, z = pt.lam["1"], pt.z["1"]
    expected = dynamical_current_eval("plus", "1", pt.with_u(0), ThetaParams(pt.tau))
    code, out, _ = run("eval", "th(z + l)/(th(z)*th(l))", "--at", f"z={z.real},{z.imag}", "--at", f"l={lam.real}",
                       "--tau", f"{pt.tau.real},{pt.tau.imag}", "--format", "json")
    value = json.loads(out)["value"]
    assert code == 0
    assert abs(complex(*value) - expected) < 1e-12 * abs(expected)


def test_taylor_check_exit_codes():
    assert run("taylor-check")[0] == 0
    assert run("taylor-check", "--method", "fd")[0] == 3


def test_frv_konno_weight():
    assert run("frv", "1", "1", "1", "1")[0] == 0
    assert run("konno-check", "--rank", "3", "--dims", "1,1;1,0", "--framing", "1,0")[0] == 0
    assert run("konno-check", "--rank", "3", "--dims", "1,1", "--framing", "1,0")[0] == 2
    code, out, _ = run("weight", "2", "2")
    assert code == 0 and "shuffle_terms: 2" in out


def test_verify_theta_and_classical():
    code, out, _ = run("verify", "--suite", "theta")
    assert code == 0 and "0 fail" in out
    code, out, _ = run("verify", "--suite", "classical", "--quiver", "sl2", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["status"] == "pass"
    names = [c["name"] for c in data["checks"]]
    assert len(names) == len(set(names))
    assert all("seconds" not in c for c in data["checks"])


def test_verify_corrupted_quiver(tmp_path):
    bad = tmp_path / "q.json"
    bad.write_text("{broken")
    code, out, _ = run("verify", "--suite", "classical", "--quiver", str(bad))
    assert code == 1
    skipped = [line for line in out.splitlines() if line.startswith("SKIP")]
    assert skipped and "quiver unavailable" in skipped[0]


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "coha.cli", "product", "1", "1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "result: -2" in proc.stdout


@pytest.mark.parametrize("threads", ["1", "3"])
def test_verify_output_independent_of_threads(threads, monkeypatch):
    monkeypatch.setenv("COHA_THREADS", "2")
    reference = run("verify", "--suite", "konno")[1]
    monkeypatch.setenv("COHA_THREADS", threads)
    assert run("verify", "--suite", "konno")[1] == reference
