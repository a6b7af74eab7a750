import csv
import io
import json

import numpy as np
import pytest

from phasefeyn import PhaseFunction, build_grid, free_green, ho_green
from phasefeyn.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_propagator_sweep(capsys):
    code, out = run(capsys, "propagator", "--k", "1", "--t", "0.8", "--y-range", "0:2:0.1")
    assert code == 0
    table = rows(out.out)
    assert list(table[0]) == ["y", "t", "k", "re", "im", "abs", "phase"]
    assert len(table) == 21
    last = table[-1]
    z = complex(ho_green(2.0, 0.8, 1.0))
    assert float(last["y"]) == pytest.approx(2.0)
    assert complex(float(last["re"]), float(last["im"])) == pytest.approx(z, rel=1e-14)


def test_propagator_free_and_threads(capsys, monkeypatch):
    monkeypatch.setenv("PHASEFEYN_THREADS", "3")
    code, out = run(capsys, "propagator", "--k", "0", "--t", "1", "--y-range", "0:1:0.5")
    assert code == 0
    re = [float(r["re"]) for r in rows(out.out)]
    np.testing.assert_allclose(re, np.real(free_green(np.array([0, 0.5, 1.0]), 1.0)))


def test_propagator_out_of_range(capsys, caplog):
    code, _ = run(capsys, "propagator", "--k", "1", "--t", "2")
    assert code == 1
    assert "pi/(2 sqrt(k))" in caplog.text


def test_usage_errors_are_precondition_failures(capsys):
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "propagator", "--k", "one")[0] == 1
    assert run(capsys, "propagator", "--y-range", "2:0:0.1")[0] == 1


def test_verify_identities(capsys):
    code, out = run(capsys, "verify", "--suite", "identities", "--m", "1024", "--seed", "7")
    assert code == 0
    report = json.loads(out.out)
    assert report["schema"] == 1 and report["passed"]
    names = " ".join(c["name"] for c in report["checks"])
    for key in ("cos-product", "tan-sum", "free inverse", "reduction"):
        assert key in names


def test_verify_failure_exit_code_and_message(capsys, caplog):
    code, out = run(capsys, "verify", "--suite", "propagators", "--m", "256")
    assert code == 2
    assert "FAIL propagators.ho_t_transform" in caplog.text
    assert all(w in caplog.text for w in ("observed", "expected", "tol"))
    report = json.loads(out.out)
    assert not report["passed"]


def test_verify_unknown_suite(capsys):
    assert run(capsys, "verify", "--suite", "nope")[0] == 1


def test_ccr_table(capsys):
    code, out = run(capsys, "ccr", "--s", "0.5", "--t", "1", "--schedule", "default")
    assert code == 0
    table = rows(out.out)
    assert list(table[0]) == ["epsilon", "width", "diff_re", "diff_im", "abs_err_vs_minus_i_T0"]
    assert float(table[-1]["abs_err_vs_minus_i_T0"]) < 1e-3


def test_ccr_custom_schedule_and_bad_schedule(capsys):
    assert run(capsys, "ccr", "--schedule", "0.08:0.01,0.04:0.005")[0] == 0
    assert run(capsys, "ccr", "--schedule", "0.08:0.05,0.04:0.005")[0] == 1
    assert run(capsys, "ccr", "--schedule", "fast")[0] == 1


def test_oracle_compare(capsys):
    code, out = run(capsys, "oracle-compare", "--k", "1", "--t", "1", "--y", "1", "--n-slices", "16,64,256")
    assert code == 0
    errs = [float(r["abs_err_vs_closed_form"]) for r in rows(out.out)]
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.05)


def test_t_transform_json_and_dump(capsys, tmp_path):
    g = build_grid(1.0, 1.0, 32)
    f = PhaseFunction.from_callables(g, lambda s: 0.1 * s, np.cos)
    fpath, dpath = tmp_path / "f.csv", tmp_path / "ninv.csv"
    f.to_csv(fpath)
    code, out = run(capsys, "t-transform", "--t", "1", "--m", "32", "--y", "0.2",
                    "--f-csv", str(fpath), "--dump-matrix", str(dpath))
    assert code == 0
    report = json.loads(out.out)
    assert report["schema"] == 1
    assert {"value_re", "value_im", "det_factor", "gram", "u", "quad_form"} <= set(report)
    assert dpath.read_text().startswith("block,row,col,re,im")


def test_t_transform_grid_mismatch(capsys, tmp_path):
    fpath = tmp_path / "f.csv"
    PhaseFunction.zeros(build_grid(1.0, 1.0, 16)).to_csv(fpath)
    assert run(capsys, "t-transform", "--m", "32", "--f-csv", str(fpath))[0] == 1


def test_spectrum_and_determinant(capsys):
    code, out = run(capsys, "spectrum", "--k", "1", "--t", "1", "--m", "400", "--n-modes", "3")
    assert code == 0
    for r in rows(out.out):
        assert float(r["numeric"]) == pytest.approx(float(r["analytic"]), rel=1e-3)
    code, out = run(capsys, "determinant", "--k", "2", "--t", "1", "--m", "256", "--method", "product")
    det = json.loads(out.out)
    assert code == 0 and det["det"][0] == pytest.approx(det["cos_sqrt_k_t"], abs=1e-3)
    assert run(capsys, "determinant", "--k", repr((np.pi / 2) ** 2), "--t", "1", "--method", "product")[0] == 1


def test_config_file_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep\nk = 1\nt=0.8\ny-range = 0:1:0.5\n")
    code, out = run(capsys, "propagator", "--config", str(cfg))
    assert code == 0 and len(rows(out.out)) == 3
    code, out = run(capsys, "propagator", "--config", str(cfg), "--y-range", "0:1:0.25")
    assert len(rows(out.out)) == 5
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert run(capsys, "propagator", "--config", str(bad))[0] == 1


def test_output_file_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "verify", "--suite", "moments", "--seed", "3", "-o", str(a))[0] == 0
    assert run(capsys, "verify", "--suite", "moments", "--seed", "3", "-o", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_unwritable_output(capsys, tmp_path):
    target = tmp_path / "missing" / "out.csv"
    assert run(capsys, "propagator", "-o", str(target))[0] == 1
