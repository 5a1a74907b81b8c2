import json
import math
import subprocess
import sys

import pytest

from floatlab.cli import main
from floatlab.surface import CheckReport


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_asa(capsys):
    code, out, _ = run(["asa", "--fn", "quad(0.5)"], capsys)
    assert code == 0
    d = json.loads(out)
    assert d["value"] == pytest.approx(2.506628, abs=1e-6)
    assert "config" in d and d["config"]["truncation_radius"] > 0
    code, out, _ = run(["asa", "--fn", "quad(1)", "--alt"], capsys)
    assert json.loads(out)["value"] == pytest.approx(2.2331519, abs=1e-6)


def test_float_point(capsys):
    code, out, _ = run(["float", "--fn", "quad(0.5)", "--delta", "1e-3", "--point", "0"], capsys)
    assert code == 0
    ev = json.loads(out)["evaluations"][0]
    assert ev["psi_delta"] == pytest.approx(0.0065519, abs=1e-7)


def test_float_grid_csv(capsys):
    code, out, _ = run(["float", "--fn", "quad(0.5)", "--delta", "1e-3", "--grid=-1:1:5", "--format", "csv"],
                       capsys)
    lines = out.splitlines()
    assert code == 0 and lines[0] == "x1,psi,psi_delta,slope1,cutvol" and len(lines) == 6
    x, psi, psid = map(float, lines[1].split(",")[:3])
    assert x == -1 and psid - psi == pytest.approx(0.5 * 1.5e-3 ** (2 / 3), rel=1e-6)


def test_asp(capsys):
    code, out, _ = run(["asp", "--body", "disk:1", "--p", "0.6666667"], capsys)
    assert code == 0 and json.loads(out)["value"] == pytest.approx(6.283185, abs=1e-6)


def test_capvol_and_rolling(capsys):
    code, out, _ = run(["capvol", "--fn", "quad(0.5)", "--slope", "0", "--offset", "0.5"], capsys)
    assert json.loads(out)["cap_volume"] == pytest.approx(2 / 3, rel=1e-9)
    code, out, _ = run(["rolling", "--fn", "quad(1)", "--point", "0"], capsys)
    assert json.loads(out)["rolling_radius"] == pytest.approx(0.5, rel=1e-5)


def test_converge_csv(capsys):
    code, out, _ = run(["converge", "--fn", "quad(0.5)", "--mode", "proposition", "--ladder", "1e-2:1e-4:3",
                        "--format", "csv"], capsys)
    lines = out.splitlines()
    assert code == 0 and len(lines) == 4
    assert float(lines[1].split(",")[2]) == pytest.approx(1.642306, rel=1e-4)


def test_check_config(tmp_path, capsys):
    cfg = tmp_path / "val.cfg"
    cfg.write_text("# comment lines are ignored\nfn1 = max(quad(1), huber(1))\nfn2 = quad(1)\n")
    code, out, _ = run(["check", "--property", "valuation", "--config", str(cfg)], capsys)
    d = json.loads(out)
    assert code == 0 and d["pass"] and d["property"] == "valuation"
    assert d["config"]["fn2"] == "quad(1)"


def test_check_multiple_properties(tmp_path, capsys):
    cfg = tmp_path / "many.cfg"
    cfg.write_text("property = gauge, capbounds\nsamples = 50\n")
    code, out, _ = run(["check", "--config", str(cfg)], capsys)
    d = json.loads(out)
    assert code == 0 and [r["property"] for r in d["reports"]] == ["gauge_relation", "cap_sandwich"]


def test_failing_check_exit_code(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "iso.cfg"
    cfg.write_text("fn = lqsq(4,1)\ntol = 1e-12\n")
    code, out, _ = run(["check", "--property", "isoperimetric", "--config", str(cfg)], capsys)
    assert code == 0  # strict inequality still satisfies "<="
    import floatlab.cli as cli
    monkeypatch.setattr(cli, "check_isoperimetric", lambda psi, **kw: CheckReport("isoperimetric", 2.0, 1.0, 1e-3,
                                                                                  relation="le"))
    code, out, _ = run(["check", "--property", "isoperimetric", "--config", str(cfg)], capsys)
    assert code == 1 and json.loads(out)["pass"] is False


def test_usage_errors(capsys):
    code, _, err = run(["asa", "--fn", "quad("], capsys)
    assert code == 2 and "function spec" in err
    code, _, _ = run(["float", "--fn", "quad(0.5)", "--delta", "1e-3"], capsys)
    assert code == 2
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2


def test_numeric_error(capsys):
    code, out, _ = run(["float", "--fn", "quad(0.5)", "--delta", "1e6", "--point", "0"], capsys)
    assert code == 3
    d = json.loads(out)
    assert set(d) == {"error", "message"}


def test_json_roundtrip_and_determinism(tmp_path, capsys):
    cfg = tmp_path / "g.cfg"
    cfg.write_text("body = ellipse:2,0.5\n")
    code, out, _ = run(["check", "--property", "gauge", "--config", str(cfg)], capsys)
    rep = CheckReport.from_json(out)
    assert json.dumps(rep.to_dict(), indent=2) + "\n" == out
    code, out2, _ = run(["check", "--property", "gauge", "--config", str(cfg)], capsys)
    assert out2 == out


def test_output_file(tmp_path, capsys):
    path = tmp_path / "asa.json"
    code, out, _ = run(["asa", "--fn", "pownorm(2,1)", "--output", str(path)], capsys)
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["value"] == pytest.approx(2 ** (1 / 3) * math.sqrt(math.pi), abs=1e-6)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "floatlab", "asp", "--body", "disk:1", "--p", "1"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["value"] == pytest.approx(2 * math.pi)
