import json
import subprocess
import sys

import pytest

from ivovb.cli import EXIT_FIRST_STAGE, EXIT_INPUT, EXIT_OK, load_config, main
from ivovb.model import write_csv
from ivovb.simdgp import generate, random_spec

FAST = ["--learner", "saturated_cells", "--k-folds", "3", "--reps", "2", "--workers", "1", "--seed", "4"]


@pytest.fixture(scope="module")
def csv_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "data.csv"
    write_csv(generate(random_spec("late", seed=2, x_levels=(2, 3), n=1200)).dataset, path)
    return path


@pytest.fixture(scope="module")
def estimate_path(csv_path, tmp_path_factory):
    out = tmp_path_factory.mktemp("est")
    assert main(["estimate", "--data", str(csv_path), "--estimand", "late", "--out", str(out), *FAST]) == EXIT_OK
    return out / "estimate.json"


def test_estimate_outputs(estimate_path):
    d = json.loads(estimate_path.read_text())
    assert set(d["estimates"]) >= {"lambda_s", "gamma_s", "v_s2", "omega", "se"}
    man = json.loads((estimate_path.parent / "manifest.json").read_text())
    assert "config_sha256" in man and man["seed"] == 4


def test_estimate_byte_identical(csv_path, tmp_path):
    names = ("estimate.json", "manifest.json", "estimate.txt")
    runs = []
    for _ in range(2):
        assert main(["estimate", "--data", str(csv_path), "--out", str(tmp_path), *FAST]) == EXIT_OK
        runs.append([(tmp_path / name).read_bytes() for name in names])
    assert runs[0] == runs[1]


def test_bounds_and_ci(estimate_path, tmp_path):
    args = ["--estimate", str(estimate_path), "--c-alpha", "0.1", "--c-y", "0.1", "--c-d", "0.05",
            "--out", str(tmp_path), "--workers", "1"]
    assert main(["bounds", *args]) == EXIT_OK
    b = json.loads((tmp_path / "bounds.json").read_text())
    assert b is not None
    assert main(["ci", *args]) == EXIT_OK
    ci = json.loads((tmp_path / "ci.json").read_text())
    text = json.dumps(ci)
    assert "NaN" not in text and "Infinity" not in text
    assert (tmp_path / "phi_curve.csv").read_text().startswith("t,")


def test_contour(estimate_path, tmp_path):
    assert main(["contour", "--estimate", str(estimate_path), "--out", str(tmp_path), "--workers", "1"]) == EXIT_OK
    for name in ("contour_lambda.csv", "contour_gamma.csv", "contour.json"):
        assert (tmp_path / name).exists()


def test_benchmark(csv_path, tmp_path):
    groups = tmp_path / "groups.txt"
    groups.write_text("first: x1\nsecond: x2\n")
    rc = main(["benchmark", "--data", str(csv_path), "--groups", str(groups), "--out", str(tmp_path), *FAST])
    assert rc == EXIT_OK
    d = json.loads((tmp_path / "benchmark.json").read_text())
    assert {g["group"] for g in d["groups"]} == {"first", "second"}


def test_simulate(tmp_path):
    rc = main(["simulate", "--n", "400", "--reps", "6", "--k-folds", "3", "--workers", "1",
               "--seed", "1", "--out", str(tmp_path)])
    assert rc == EXIT_OK
    d = json.loads((tmp_path / "coverage.json").read_text())
    assert d["coverage"]["reps"] == 6


def test_bad_k_exits_input(csv_path, tmp_path):
    assert main(["estimate", "--data", str(csv_path), "--k-folds", "1", "--out", str(tmp_path)]) == EXIT_INPUT


def test_missing_column_exits_input(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("y,z,x1\n1,0,1\n2,1,0\n")
    assert main(["estimate", "--data", str(p), "--out", str(tmp_path)]) == EXIT_INPUT


def test_missing_file_exits_input(tmp_path):
    assert main(["estimate", "--data", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == EXIT_INPUT


def test_check_theorem1(capsys):
    assert main(["check-theorem1", "196.40", "1849.64", "0.61", "0.62", "--json"]) == EXIT_OK
    out = capsys.readouterr().out
    d = json.loads(out.strip().splitlines()[-1])
    assert json.dumps(d)  # strict JSON
    assert main(["check-theorem1", "2", "4", "-1", "1"]) == EXIT_FIRST_STAGE
    assert main(["check-theorem1", "4", "2", "1", "2"]) == EXIT_INPUT


def test_config_file(tmp_path, csv_path):
    ini = tmp_path / "run.ini"
    ini.write_text(f"[run]\nestimand = latt\ndata = {csv_path}\nk_folds = 4\nreplications = 3\nseed = 9\n"
                   "[learner]\nkind = saturated_cells\n[sensitivity]\nc_alpha = 0.2\n")
    cfg = load_config(str(ini))
    assert (cfg.estimand, cfg.K, cfg.L, cfg.seed) == ("latt", 4, 3, 9)


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "ivovb", "check-theorem1", "2", "4", "1", "2"],
                       capture_output=True, text=True, timeout=60)
    assert r.returncode == 0 and "1" in r.stdout
