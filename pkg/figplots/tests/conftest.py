import json
import subprocess

import pytest


def run_lrsm_experiment(name, spec, tmp_dir):
    """Drive the experiment harness through its CLI (the package interface)."""
    cfg = tmp_dir / f"{name}.json"
    cfg.write_text(json.dumps(spec))
    proc = subprocess.run(["lrsm", "experiment", name, "--config", str(cfg)],
                          capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"lrsm experiment {name} failed: {proc.stderr}")
    return spec["output_path"]


@pytest.fixture(scope="session")
def metrics_dir(tmp_path_factory):
    """Small instances of each experiment, generated once per session."""
    tmp = tmp_path_factory.mktemp("metrics")
    paths = {}
    paths["exp1"] = run_lrsm_experiment("exp1", {
        "experiment": "exp1",
        "grid": {"p": [20], "n": [500], "t": [0.0],
                 "method": ["none", "gaussian", "empirical_prob"]},
        "trials": 2, "seed": 11, "output_path": str(tmp / "exp1.csv"),
    }, tmp)
    paths["exp2"] = run_lrsm_experiment("exp2", {
        "experiment": "exp2",
        "grid": {"p": [30], "n": [5000, 10_000, 20_000, 40_000], "t": [1.0],
                 "method": ["Method1"]},
        "trials": 3, "seed": 2024, "output_path": str(tmp / "exp2.csv"),
    }, tmp)
    paths["exp3"] = run_lrsm_experiment("exp3", {
        "experiment": "exp3",
        "grid": {"p": [12, 18, 24], "n": [20_000], "t": [1.0],
                 "method": ["Method1", "Method2"]},
        "trials": 2, "seed": 12, "output_path": str(tmp / "exp3.csv"),
    }, tmp)
    paths["exp4"] = run_lrsm_experiment("exp4", {
        "experiment": "exp4",
        "grid": {"p": [15], "n": [2000, 8000], "t": [1.0],
                 "method": ["am", "spectral"]},
        "trials": 2, "seed": 13, "output_path": str(tmp / "exp4.csv"),
    }, tmp)
    return paths
