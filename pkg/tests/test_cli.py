import json
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halfspace import __version__
from halfspace.cli import dispatch


def run(tmp_path, command, cfg=None, *extra, name="cfg.json"):
    argv = command.split()
    if cfg is not None:
        path = tmp_path / name
        path.write_text(json.dumps(cfg))
        argv += ["--config", str(path)]
    out = tmp_path / "out"
    return dispatch(argv + ["--out", str(out)] + list(extra)), out


SOLVE = {"n": 2, "L": 2, "H": 4, "nodes": 33, "a": 0.5, "bc": "dirichlet", "data": {"kind": "constant", "value": 1}}


def test_solve_constant_config(tmp_path, capsys):
    code, out = run(tmp_path, "solve", SOLVE)
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert abs(rep["c_star"]) < 1e-12 and rep["c2"] == pytest.approx(1.0)
    for key in ("iterations", "residual_l2", "residual_linf", "max_principle_ok", "fit_residual"):
        assert key in rep
    m = rep["meta"]
    assert m["a"] == 0.5 and m["n"] == 2 and m["grid"]["m_t"] == 33
    assert m["normalization"] == "mass-one" and m["version"] == __version__ and m["seed"] == 0
    assert (out / "field.csv").read_text().startswith("x1,x2,u\n")
    captured = capsys.readouterr()
    assert captured.out.count("\n") == 1
    assert json.loads(captured.err.strip().splitlines()[-1])["status"] == "ok"


def test_negative_tolerance_is_config_error(tmp_path, capsys):
    code, out = run(tmp_path, "solve", {**SOLVE, "tolerance": -1.0})
    assert code == 1
    diag = json.loads(capsys.readouterr().err.strip())
    assert diag["status"] == "config_error" and "tolerance" in diag["message"]
    assert not out.exists()


@pytest.mark.parametrize(
    "cfg",
    [
        {**SOLVE, "colour": "red"},
        {**SOLVE, "n": 4},
        {k: v for k, v in SOLVE.items() if k != "bc"},
        {**SOLVE, "nodes": [33, 40]},
    ],
)
def test_bad_solve_configs(tmp_path, cfg):
    assert run(tmp_path, "solve", cfg)[0] == 1


def test_missing_or_broken_config(tmp_path):
    assert dispatch(["solve", "--out", str(tmp_path)]) == 1
    assert dispatch(["solve", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 1
    (tmp_path / "bad.json").write_text("{not json")
    assert dispatch(["solve", "--config", str(tmp_path / "bad.json"), "--out", str(tmp_path)]) == 1
    assert dispatch(["frobnicate"]) == 1


def test_non_convergence_exit_code(tmp_path, capsys):
    cfg = {**SOLVE, "data": {"kind": "random"}, "max_iterations": 2}
    code, out = run(tmp_path, "solve", cfg)
    assert code == 2
    assert json.loads(capsys.readouterr().err.strip())["status"] == "numerical_failure"
    assert json.loads((out / "report.json").read_text())["converged"] is False


def test_verify_invariance_default_battery(tmp_path, capsys):
    code, out = run(tmp_path, "verify-invariance")
    assert code == 0
    body = json.loads((out / "invariance.json").read_text())
    assert body["min_rate"] >= 1.8
    assert len(body["records"]) == 24
    rec = body["records"][0]
    assert set(rec) >= {"a", "n", "map", "h", "residual_linf", "rate"}


def test_kernel_eval_and_norm(tmp_path):
    cfg = {"kind": "riesz", "n": 3, "alpha": 1.0, "point": [1.0, 0.0, 1.0]}
    code, out = run(tmp_path, "kernel eval", cfg)
    assert code == 0
    body = json.loads((out / "kernel.json").read_text())
    assert body["value"] == pytest.approx(0.5)
    assert body["spec"] == {"kind": "riesz", "n": 3, "alpha": 1.0}
    assert run(tmp_path, "kernel norm", cfg)[0] == 1  # divergent
    code, out = run(tmp_path, "kernel norm", {"kind": "poisson", "n": 2, "a": 0.0, "method": "quadrature"})
    assert code == 0
    assert json.loads((out / "kernel.json").read_text())["value"] == pytest.approx(3.141592653589793)


def test_extend_and_threads_env(tmp_path, monkeypatch):
    cfg = {"a": 0.0, "f": {"kind": "constant", "amplitude": 2.0}, "points": [[0.0, 1.0], [1.0, 0.5]]}
    monkeypatch.setenv("HALFSPACE_THREADS", "2")
    code, out = run(tmp_path, "extend", cfg)
    assert code == 0
    rows = json.loads((out / "extend.json").read_text())["results"]
    assert [r["value"] for r in rows] == pytest.approx([2.0, 2.0])
    assert set(rows[0]) == {"point", "value", "error_estimate"}
    monkeypatch.setenv("HALFSPACE_THREADS", "zero")
    assert run(tmp_path, "extend", cfg)[0] == 1


def test_fraclap_and_low_confidence(tmp_path):
    cfg = {"s": 0.5, "f": {"kind": "gaussian"}, "points": [[0.0]], "oracle": True}
    code, out = run(tmp_path, "fraclap", cfg)
    assert code == 0
    row = json.loads((out / "fraclap.json").read_text())["results"][0]
    assert row["value"] == pytest.approx(row["oracle"], rel=1e-2)
    assert run(tmp_path, "fraclap", {**cfg, "h": 0.5, "rtol": 1e-9})[0] == 2


def test_moving_sphere_and_classify(tmp_path):
    code, out = run(tmp_path, "moving-sphere", {"n": 2, "a": -1.0, "maps": 5, "probes": 100})
    assert code == 0
    assert json.loads((out / "scan.json").read_text())["global_min"] >= -1e-12
    cfg = {"scenario": "neumann", "n": 2, "L": 2, "H": 4, "nodes": 33, "a": 0.5, "c2": 3.0}
    code, out = run(tmp_path, "classify", cfg)
    assert code == 0
    body = json.loads((out / "classify.json").read_text())
    assert body["c2"] == pytest.approx(3.0)


@settings(max_examples=5)
@given(seed=st.integers(0, 2**64 - 1))
def test_outputs_byte_identical_for_same_seed(tmp_path_factory, seed):
    tmp = tmp_path_factory.mktemp("det")
    cfg = {**SOLVE, "nodes": 17, "L": 1, "H": 2, "data": {"kind": "random", "modes": 3}}
    files = []
    for k in range(2):
        sub = tmp / str(k)
        sub.mkdir()
        code, out = run(sub, "solve", cfg, "--seed", str(seed))
        assert code == 0
        files.append(((out / "field.csv").read_bytes(), (out / "report.json").read_bytes()))
    assert files[0] == files[1]


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "halfspace.cli", "--version"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0 and __version__ in proc.stdout
