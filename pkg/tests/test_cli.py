import json

import numpy as np
import pytest

from inertial_ch import verify
from inertial_ch.cli import main
from inertial_ch.storage import load_catalog, load_snapshot, read_csv


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


LINEAR = """\
[problem]
n = 4
epsilon = 1
f = 0
[integrator]
scheme = reference
T = 10
dt = 0.01
[experiment]
u0 = mode1
observers = energy
checkpoints = 10
"""


def test_validate_accepts_cubic(tmp_path, capsys):
    assert main(["validate", write(tmp_path, "[problem]\nf = 0, -1, 0, 1\n")]) == 0
    out = capsys.readouterr().out
    assert '"lam"' in out and "accepted" in out


def test_validate_exit_codes(tmp_path):
    assert main(["validate", write(tmp_path, "[problem]\nf = 0, 0, 1\n")]) == 3
    assert main(["validate", str(tmp_path / "missing.ini")]) == 6
    assert main(["validate", write(tmp_path, "[problem]\nn = many\n")]) == 2
    assert main(["frobnicate"]) == 2


def test_simulate_zero_data(tmp_path):
    cfg = write(tmp_path, "[problem]\nn = 4\n[integrator]\nT = 0.5\ndt = 0.01\n[experiment]\nu0 = zero\n")
    assert main(["simulate", cfg, "-o", str(tmp_path / "out"), "-q"]) == 0
    data = read_csv(tmp_path / "out" / "trajectory.csv")
    assert list(data)[0] == "t" and list(data)[-1] == "dissipation_integral"
    for k, col in data.items():
        if k != "t":
            assert np.all(col == 0.0), k


def test_simulate_linear_mode_matches_closed_form(tmp_path):
    assert main(["simulate", write(tmp_path, LINEAR), "-o", str(tmp_path / "out"), "-q"]) == 0
    out = tmp_path / "out"
    data = read_csv(out / "trajectory.csv")
    assert list(data) == ["t", "E_eps", "dissipation_integral"]
    assert data["t"].size == 1001 and np.all(np.diff(data["t"]) > 0)
    w = np.sqrt(3) / 2
    for i, t in ((1, 1.0), (5, 5.0), (10, 10.0)):
        snap = load_snapshot(out / f"snapshot_{i:04d}.json")
        a = np.exp(-t / 2) * (np.cos(w * t) + np.sin(w * t) / np.sqrt(3))
        assert snap.t == pytest.approx(t)
        assert snap.u_coeffs[0] == pytest.approx(a, abs=1e-8)
        row = int(np.argmin(np.abs(data["t"] - t)))
        # energy identity across checkpoints: E(t) + D(t) = E(0)
        assert data["E_eps"][row] + data["dissipation_integral"][row] == pytest.approx(data["E_eps"][0], abs=1e-9)
        assert snap.dissipation_integral == pytest.approx(data["dissipation_integral"][row], abs=1e-12)


def test_simulate_rerun_is_byte_identical(tmp_path):
    cfg = write(tmp_path, "[problem]\nn = 8\nepsilon = 0.2\n[integrator]\nT = 0.3\ndt = 0.01\n[experiment]\nu0 = rough\nrng_seed = 5\ncheckpoints = 3\n")
    for k in range(2):
        assert main(["simulate", cfg, "-o", str(tmp_path / f"o{k}"), "-q"]) == 0
    for name in ("trajectory.csv", "snapshot_0003.json", "summary.json"):
        assert (tmp_path / "o0" / name).read_bytes() == (tmp_path / "o1" / name).read_bytes()


def test_simulate_failure_keeps_partial_output(tmp_path):
    cfg = write(
        tmp_path,
        "[problem]\nn = 8\nepsilon = 1\nf = 0, 0, 0, 1\n[integrator]\nscheme = imex\nT = 4\ndt = 0.5\n"
        "[experiment]\nu0 = mode1\nu0_amplitude = 1e3\ncheckpoints = 4\n",
    )
    with np.errstate(all="ignore"):
        code = main(["simulate", cfg, "-o", str(tmp_path / "out"), "-q"])
    assert code == 4
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["failure"]["error"] in ("FloatingPointError", "StiffnessError")


def test_simulate_with_catalog_column(tmp_path):
    base = "[problem]\nn = 8\nf = 0, -2, 0, 1\n[integrator]\nT = 0.2\ndt = 0.01\n[experiment]\nseed_count = 2\nu0 = mode1\n"
    assert main(["equilibria", write(tmp_path, base), "-o", str(tmp_path / "eq"), "-q"]) == 0
    cat = tmp_path / "eq" / "catalog.json"
    assert len(load_catalog(cat)) == 3
    cfg = write(tmp_path, base + f"catalog = {cat}\n", "sim.ini")
    assert main(["simulate", cfg, "-o", str(tmp_path / "sim"), "-q"]) == 0
    data = read_csv(tmp_path / "sim" / "trajectory.csv")
    assert list(data)[-1] == "distance_to_equilibria"
    assert np.all(data["distance_to_equilibria"] >= 0)


def test_equilibria_linear_is_zero(tmp_path):
    cfg = write(tmp_path, "[problem]\nn = 8\nf = 0, 1\n[experiment]\nseed_count = 2\n")
    assert main(["equilibria", cfg, "-o", str(tmp_path), "-q"]) == 0
    cat = load_catalog(tmp_path / "catalog.json")
    assert len(cat) == 1 and not np.any(cat[0].u_star.coeffs)


def test_converge_monotone(tmp_path):
    cfg = write(
        tmp_path,
        "[problem]\nn = 8\nepsilon = 0.5\n[integrator]\nscheme = reference\nT = 1\ndt = 0.05\n"
        "[experiment]\nu0 = 1, 0.5, -0.3, 0.1\nn_list = 8, 16, 32\n",
    )
    assert main(["converge", cfg, "-o", str(tmp_path), "-q"]) == 0
    d = read_csv(tmp_path / "converge.csv")["sup_l2_diff"]
    assert d[0] > d[1]


def test_split_rejects_zero_L(tmp_path):
    assert main(["split", write(tmp_path, "[problem]\nL = 0\n"), "-q"]) == 2


def test_split_runs_with_auto_L(tmp_path):
    cfg = write(tmp_path, "[problem]\nn = 16\nepsilon = 0.1\n[integrator]\nT = 2\ndt = 0.001\nrecord_every = 10\n[experiment]\nlowpass_m = 4\n")
    assert main(["split", cfg, "-o", str(tmp_path), "-q"]) == 0
    rep = json.loads((tmp_path / "split.json").read_text())
    assert rep["L"] == pytest.approx(32 / 27)
    assert rep["decay"]["rate"] > 0


def test_glue_and_eps_sweep(tmp_path):
    glue = write(tmp_path, "[problem]\nn = 16\nf = 0, -2, 0, 1\n[experiment]\nseed_count = 2\ngaps = 0.1, 0.01\n", "g.ini")
    assert main(["glue", glue, "-o", str(tmp_path / "g"), "-q"]) == 0
    assert json.loads((tmp_path / "g" / "glue.json").read_text())["slope"] > 0.9
    sweep = write(tmp_path, "[problem]\nn = 4\nf = 0\n[integrator]\nT = 0.5\ndt = 0.001\n[experiment]\nu0 = mode1\neps_list = 0.1, 0.01\n", "e.ini")
    assert main(["eps_sweep", sweep, "-o", str(tmp_path / "e"), "-q"]) == 0
    assert read_csv(tmp_path / "e" / "eps_sweep.csv")["epsilon"].tolist() == [0.1, 0.01]


def test_verify_fails_under_corrupted_tolerance(monkeypatch, capsys):
    monkeypatch.setattr(verify, "CRITERIA", {1: verify.criterion_1})
    monkeypatch.setattr(verify, "_results", {})
    monkeypatch.setenv(verify.TOL_ENV, "1e-30")
    assert main(["verify"]) == 5
    out = capsys.readouterr().out
    assert "[FAIL] criterion  1" in out
    monkeypatch.setenv(verify.TOL_ENV, "-1")
    assert main(["verify"]) == 2
