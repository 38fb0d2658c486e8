from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from singularpde.cli import EXIT_NONCONVERGENCE, EXIT_NORM_EXCEEDED, EXIT_OK, EXIT_USAGE, main
from singularpde.formats import read_csv, read_manifest, verify_manifest

TWO_PI = 2 * np.pi


def write(path: Path, cfg: dict) -> str:
    path.write_text(json.dumps(cfg))
    return str(path)


@pytest.fixture
def out_root(tmp_path, monkeypatch):
    root = tmp_path / "outputs"
    monkeypatch.setenv("SINGULARPDE_OUTPUT", str(root))
    return root


def solve_cfg(**over) -> dict:
    cfg = {"grid": {"N": 64, "L": TWO_PI}, "alpha": 0.7, "beta": -0.2, "T": 0.1, "n_time_steps": 16,
           "nonlinearity": "quadratic", "b": {"kind": "constant", "value": 1.0},
           "u0": {"kind": "expression", "expression": "0.5*sin(x)"}, "output": "run"}
    cfg.update(over)
    return cfg


def test_generate_then_solve_from_bundle(tmp_path, out_root):
    gen = write(tmp_path / "gen.json", {"grid": {"N": 64}, "T": 0.25, "alpha": 0.7,
                                        "b": {"kind": "rough", "beta": -0.3, "seed": 7, "n_slices": 2},
                                        "output": "bundle"})
    assert main(["generate", gen]) == EXIT_OK
    bundle = out_root / "bundle"
    assert read_manifest(bundle)["kind"] == "bundle" and verify_manifest(bundle) == []
    before = {p.name: p.read_bytes() for p in bundle.iterdir()}
    cfg = solve_cfg(grid={"N": 64}, beta=-0.3, T=0.25, nonlinearity="softabs",
                    b={"kind": "bundle", "path": str(bundle)},
                    u0={"kind": "expression", "expression": "0.2*sin(2*pi*x/L)"})
    assert main(["solve", write(tmp_path / "s.json", cfg)]) == EXIT_OK
    man = read_manifest(out_root / "run")
    assert man["status"] == "converged" and man["config"]["b"]["path"] == str(bundle)
    assert man["generator_id"] and man["partition_id"] and man["regime_constant"]["C"] > 0
    # inputs are left untouched
    assert {p.name: p.read_bytes() for p in bundle.iterdir()} == before


def test_solve_is_deterministic(tmp_path):
    cfg = write(tmp_path / "s.json", solve_cfg())
    assert main(["solve", cfg, "-o", str(tmp_path / "a")]) == EXIT_OK
    assert main(["solve", cfg, "-o", str(tmp_path / "b")]) == EXIT_OK
    for name in (tmp_path / "a").iterdir():
        if name.name != "run_info.json":
            assert name.read_bytes() == (tmp_path / "b" / name.name).read_bytes(), name.name


def test_compare_with_both_oracles(tmp_path, capsys):
    cfg = write(tmp_path / "s.json", solve_cfg())
    assert main(["solve", cfg, "-o", str(tmp_path / "sol")]) == EXIT_OK
    assert main(["compare", str(tmp_path / "sol"), "--oracle", "cole_hopf", "-o", str(tmp_path / "ch.csv")]) == 0
    rows = read_csv(tmp_path / "ch.csv")
    assert len(rows) == 17 and max(float(r["sup_err"]) for r in rows) < 5e-3
    capsys.readouterr()
    assert main(["compare", str(tmp_path / "sol")]) == EXIT_OK
    assert capsys.readouterr().out.startswith("t,sup_err,l2_err")


def test_cole_hopf_compare_refuses_other_problems(tmp_path):
    cfg = write(tmp_path / "s.json", solve_cfg(nonlinearity="softabs"))
    assert main(["solve", cfg, "-o", str(tmp_path / "sol")]) == EXIT_OK
    assert main(["compare", str(tmp_path / "sol"), "--oracle", "cole_hopf"]) == EXIT_USAGE


def test_parameter_window_violation_is_usage_error(tmp_path, capsys):
    cfg = write(tmp_path / "s.json", solve_cfg(alpha=0.3, beta=-0.5))
    assert main(["solve", cfg, "-o", str(tmp_path / "x")]) == EXIT_USAGE
    assert "max(-alpha, alpha-1)" in capsys.readouterr().err
    assert not (tmp_path / "x").exists()


@pytest.mark.parametrize("text", ["{not json", json.dumps({"grid": {"N": 64}})])
def test_bad_config_is_usage_error(tmp_path, text):
    (tmp_path / "c.json").write_text(text)
    assert main(["solve", str(tmp_path / "c.json")]) == EXIT_USAGE


def test_missing_config_and_unknown_suite(tmp_path):
    assert main(["solve", str(tmp_path / "nope.json")]) == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        main(["validate", "nosuch"])
    assert info.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == EXIT_USAGE


def test_nonconvergence_writes_partial(tmp_path):
    cfg = write(tmp_path / "s.json", solve_cfg(solver={"max_picard_iters": 2}))
    assert main(["solve", cfg, "-o", str(tmp_path / "nc")]) == EXIT_NONCONVERGENCE
    man = read_manifest(tmp_path / "nc")
    assert man["status"] == "nonconverged" and man["converged"] is False


def test_norm_explosion_exit_code(tmp_path):
    cfg = write(tmp_path / "s.json", solve_cfg(u0={"kind": "expression", "expression": "40*sin(x)"},
                                               solver={"norm_ceiling": 100.0, "rho": 1}))
    assert main(["solve", cfg, "-o", str(tmp_path / "ex")]) == EXIT_NORM_EXCEEDED
    assert read_manifest(tmp_path / "ex")["status"] == "norm_exceeded"


def bsde_cfg(**over) -> dict:
    cfg = {"grid": {"N": 64, "L": TWO_PI}, "alpha": 0.7, "beta": -0.2, "T": 0.2, "x": 0.3,
           "n_time_steps": 16, "nonlinearity": "softabs",
           "b": {"kind": "smooth", "expression": "0.5 + 0.3*cos(x)*(1+t)"},
           "phi": {"kind": "expression", "expression": "0.3*sin(x)"}, "paths": 2000, "seed": 3}
    cfg.update(over)
    return cfg


def test_bsde_outputs(tmp_path):
    cfg = write(tmp_path / "b.json", bsde_cfg(raw_paths=True))
    assert main(["bsde", cfg, "-o", str(tmp_path / "bs")]) == EXIT_OK
    d = tmp_path / "bs"
    report = json.loads((d / "report.json").read_text())
    assert report["feynman_kac"]["passed"] and report["martingale"]["passed"]
    assert len(read_csv(d / "summary.csv")) == 17
    assert np.load(d / "paths.npy").shape == (2000, 17)
    assert verify_manifest(d) == []


@pytest.mark.parametrize("over", [{"t": 0.013}, {"grid": {"N": 16, "d": 2, "L": TWO_PI}}])
def test_bsde_rejects_bad_setup(tmp_path, over):
    cfg = write(tmp_path / "b.json", bsde_cfg(**over))
    assert main(["bsde", cfg, "-o", str(tmp_path / "bs")]) == EXIT_USAGE


def test_validate_suite_with_csv(tmp_path, capsys):
    assert main(["validate", "bony", "-o", str(tmp_path / "v.csv")]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.strip().splitlines()[-1].startswith("PASS suite bony")
    assert all(r["passed"] == "True" for r in read_csv(tmp_path / "v.csv"))


def test_console_script_runs():
    proc = subprocess.run([sys.executable, "-m", "singularpde.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "validate" in proc.stdout


def gen_cfg(**over) -> dict:
    cfg = {"grid": {"N": 64}, "T": 0.25, "alpha": 0.7,
           "b": {"kind": "rough", "beta": -0.3, "seed": 5, "n_slices": 2}}
    cfg.update(over)
    return cfg


def _payload(d: Path) -> dict:
    return {p.name: p.read_bytes() for p in d.iterdir() if p.name != "run_info.json"}


def test_generate_is_reproducible_from_its_manifest(tmp_path):
    cfg = write(tmp_path / "g.json", gen_cfg())
    assert main(["generate", cfg, "-o", str(tmp_path / "a")]) == EXIT_OK
    assert main(["generate", cfg, "-o", str(tmp_path / "b")]) == EXIT_OK
    assert _payload(tmp_path / "a") == _payload(tmp_path / "b")
    embedded = write(tmp_path / "again.json", read_manifest(tmp_path / "a")["config"])
    assert main(["generate", embedded, "-o", str(tmp_path / "c")]) == EXIT_OK
    assert _payload(tmp_path / "a") == _payload(tmp_path / "c")


def test_generate_outside_window_names_it(tmp_path, capsys):
    cfg = write(tmp_path / "g.json", gen_cfg(b={"kind": "rough", "beta": -0.8, "seed": 5}))
    assert main(["generate", cfg, "-o", str(tmp_path / "a")]) == EXIT_USAGE
    assert "max(-alpha, alpha-1) < beta < 0" in capsys.readouterr().err


def test_solve_without_coefficient_converges_in_one_step(tmp_path):
    cfg = write(tmp_path / "s.json", solve_cfg(b={"kind": "zero"}))
    assert main(["solve", cfg, "-o", str(tmp_path / "z")]) == EXIT_OK
    assert len(read_csv(tmp_path / "z" / "iterations.csv")) == 1


def test_bsde_constant_terminal_value(tmp_path):
    cfg = write(tmp_path / "b.json", bsde_cfg(b={"kind": "zero"}, phi={"kind": "expression", "expression": "0.6"}))
    assert main(["bsde", cfg, "-o", str(tmp_path / "bs")]) == EXIT_OK
    rows = read_csv(tmp_path / "bs" / "summary.csv")
    assert all(abs(float(r["mean_Y"]) - 0.6) < 1e-12 and float(r["ci_Y"]) < 1e-12 for r in rows)
