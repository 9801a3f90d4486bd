import json
import subprocess
import sys

import numpy as np

from conftest import read_golden
from quasildpc.cli import main
from quasildpc.tanner import make_regular_code, write_alist


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_quantize_table_i(capsys):
    code, out, _ = run(capsys, "quantize", "--kind", "quasi", "--delta", "1", "--q", "3", "--d", "3")
    assert code == 0
    rows = [line.split() for line in out.splitlines() if line.strip() and line.lstrip()[0] in "[("]
    gold = read_golden("table_i.txt")
    assert [(r[0], float(r[1]), r[2]) for r in rows] == gold


def test_quantize_csv_to_file(tmp_path, capsys):
    path = tmp_path / "t.csv"
    code, _, _ = run(capsys, "quantize", "--kind", "gen", "--delta", "1", "--q", "3", "--d", "3", "--nu", "5",
                     "--csv", "--out", str(path))
    assert code == 0
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("lo,hi") and len(lines) == 9


def test_growth_json(capsys):
    code, out, _ = run(capsys, "trapset", "growth", "--dv", "3", "--dc", "6", "--alg", "spa", "--L0", "5")
    assert code == 0
    d = json.loads(out)
    assert d["l0_condition_met"] is True
    assert abs(d["l0_threshold"] - 4.159) < 1e-3


def test_usage_error_exit_1(capsys):
    code, _, err = run(capsys, "quantize", "--kind", "quasi")
    assert code == 1 and "usage" in err
    code, _, _ = run(capsys, "bogus")
    assert code == 1


def test_domain_error_exit_2(capsys, tmp_path):
    code, _, err = run(capsys, "quantize", "--kind", "quasi", "--delta", "-1", "--q", "3", "--d", "3")
    assert code == 2 and err.startswith("error:")
    code, _, err = run(capsys, "decode", "--alist", str(tmp_path / "missing.alist"), "--llr", str(tmp_path / "x"))
    assert code == 2


def test_decode_json(tmp_path, capsys):
    g = make_regular_code(96, 3, 6, 1)
    write_alist(g, tmp_path / "c.alist")
    llr = np.full(96, 2.0)
    llr[5] = -0.5
    (tmp_path / "llr.txt").write_text("\n".join(repr(float(x)) for x in llr) + "\n", encoding="utf-8")
    code, out, _ = run(capsys, "decode", "--alist", str(tmp_path / "c.alist"), "--llr", str(tmp_path / "llr.txt"),
                       "--alg", "ms", "--quant", "quasi:0.5:4:3")
    assert code == 0
    d = json.loads(out)
    assert d["converged"] is True and d["iterations"] >= 1
    assert d["bits"] == "0" * 96
    assert d["decoder"]["quantizer"] == "quasi:0.5:4:3.0"


def test_decode_wrong_length(tmp_path, capsys):
    (tmp_path / "llr.txt").write_text("1\n2\n", encoding="utf-8")
    code, _, err = run(capsys, "decode", "--code", "96:3:6:1", "--llr", str(tmp_path / "llr.txt"))
    assert code == 2 and "96" in err


def test_simulate_csv_and_manifest_rerun(tmp_path, capsys):
    out1 = tmp_path / "run1.csv"
    args = ["simulate", "--code", "96:3:6:1", "--channel", "bsc", "--p", "0.08,0.05", "--alg", "ms",
            "--max-iters", "30", "--min-errors", "10", "--max-frames", "3000", "--seed", "4", "--workers", "2"]
    assert run(capsys, *args, "--out", str(out1))[0] == 0
    manifest = tmp_path / "run1.csv.manifest.json"
    assert manifest.exists()
    m = json.loads(manifest.read_text(encoding="utf-8"))
    assert "params" in m
    out2 = tmp_path / "run2.csv"
    assert run(capsys, "simulate", "--config", str(manifest), "--out", str(out2))[0] == 0
    assert out1.read_bytes() == out2.read_bytes()
    lines = out1.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 3 and lines[0].startswith("point_param,frames")


def test_simulate_ebn0_range(capsys):
    code, out, err = run(capsys, "simulate", "--code", "96:3:6:1", "--channel", "awgn", "--ebn0", "4:0.5:5",
                         "--min-errors", "3", "--max-frames", "200", "--jsonl")
    assert code == 0
    recs = [json.loads(line) for line in out.splitlines()]
    assert [r["point_param"] for r in recs] == [4.0, 4.5, 5.0]
    assert "params" in json.loads(err)  # manifest on stderr without --out


def test_trapset_classify_and_inject(capsys):
    code, out, _ = run(capsys, "trapset", "classify", "--embed44", "--k", "3")
    d = json.loads(out)
    assert code == 0 and d["set"]["a"] == 4 and d["set"]["b"] == 4 and d["set"]["is_absolute"]
    assert d["k_separation"]["0"] == 2
    code, out, _ = run(capsys, "trapset", "inject", "--embed44", "--policy", "bsc:0.03", "--alg", "ms")
    assert code == 0 and json.loads(out)["report"]["corrected"] is True


def test_trapset_enumerate(capsys):
    code, out, _ = run(capsys, "trapset", "enumerate", "--code", "96:3:6:1", "--a-max", "2", "--b-max", "4")
    d = json.loads(out)
    assert code == 0 and d["count"] == len(d["sets"]) > 0
    assert {(s["a"], s["b"]) for s in d["sets"]} == {(1, 3), (2, 4)}


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "quasildpc", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip()
