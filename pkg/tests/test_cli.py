import json

from pmqs.cli import main
from pmqs.runio import read_csv

TINY = {
    "ulam_bins": 256,
    "truncation": 40,
    "grid_intervals": 16,
    "paths": 1024,
    "limit_paths": 1024,
    "n_ladder": [64, 128],
    "tests": {
        "memory_loss": {"N": 64, "fit_lo": 8, "fit_hi": 64},
        "preimage": {"n_hi": 100},
        "partition": {"n": 64, "samples": 64},
        "ergodic": {"samples": 4},
        "autocov_envelope": {"fit_hi": 16, "check_hi": 32},
    },
}


def _cfg(tmp_path, **extra):
    data = dict(TINY)
    data.update(extra)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(data))
    return str(p)


def test_print_defaults(capsys):
    assert main(["config", "--print-defaults"]) == 0
    out = capsys.readouterr().out
    data = json.loads(out)
    assert data["ulam_bins"] == 16384


def test_invalid_beta_star_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(
        {"schedules": {"main": {"curve": {"kind": "constant", "c": 0.1},
                                "beta_star": 0.6}}}))
    rc = main(["config", "--config", str(bad)])
    assert rc == 2
    err = capsys.readouterr().err
    assert "beta_star" in err and "1/2" in err


def test_srb_artifacts(tmp_path):
    cfg = _cfg(tmp_path, out_dir=str(tmp_path / "run"))
    assert main(["srb", "--config", cfg]) == 0
    header, rows = read_csv(tmp_path / "run/densities.csv")
    assert header == ["alpha", "bin_index", "midpoint", "value"]
    assert len(rows) == 4 * 256
    header, rows = read_csv(tmp_path / "run/cone.csv")
    assert header[-1] == "passed"
    assert all(r[-1] == "true" for r in rows)
    assert (tmp_path / "run/manifest.json").exists()


def test_srb_operator_dump(tmp_path):
    from pmqs.runio import read_block
    cfg = _cfg(tmp_path, out_dir=str(tmp_path / "run"), ulam_bins=64)
    assert main(["srb", "--config", cfg, "--dump-operators"]) == 0
    arr, header = read_block(tmp_path / "run/operator_0.0.bin")
    assert header["kind"] == "ulam_operator" and header["m"] == 64
    assert arr.shape == (64, 64)
    import numpy as np
    assert np.allclose(arr.sum(axis=1), 1.0, atol=1e-12)


def test_memory_loss_artifact(tmp_path):
    cfg = _cfg(tmp_path, out_dir=str(tmp_path / "run"))
    assert main(["memory-loss", "--config", cfg]) == 0
    header, rows = read_csv(tmp_path / "run/memory_loss.csv")
    assert header == ["n", "l1_distance", "envelope"]
    assert len(rows) == 65


def test_green_kubo_artifact(tmp_path):
    # the 1e-3 anchor needs adequate operator resolution; m=256 leaves
    # ~2e-3 of discretization error in the lag sums
    cfg = _cfg(tmp_path, out_dir=str(tmp_path / "run"), ulam_bins=4096,
               truncation=200)
    assert main(["green-kubo", "--config", cfg]) == 0
    header, rows = read_csv(tmp_path / "run/sigma_curve_anchor.csv")
    assert header == ["t", "sigma2", "tail_estimate"]
    # constant doubling schedule: constant variance column near 1/4
    vals = {float(r[1]) for r in rows}
    assert len(vals) == 1
    assert abs(vals.pop() - 0.25) <= 1e-3
    gk = json.loads((tmp_path / "run/green_kubo.json").read_text())
    assert abs(gk["doubling_anchor"]["sigma2"] - 0.25) <= 1e-3


def test_simulate_and_diffusion_blocks(tmp_path):
    from pmqs.runio import read_block
    cfg = _cfg(tmp_path, out_dir=str(tmp_path / "run"))
    assert main(["simulate", "--config", cfg]) == 0
    arr, header = read_block(tmp_path / "run/ensemble_main.bin")
    assert header["kind"] == "fluctuation"
    assert arr.shape[0] == 1024
    assert header["n"] == 128
    assert main(["diffusion", "--config", cfg]) == 0
    arr, header = read_block(tmp_path / "run/limit_main.bin")
    assert header["kind"] == "limit"


def test_perturbation_artifact(tmp_path):
    cfg = _cfg(tmp_path, out_dir=str(tmp_path / "run"),
               tests={**TINY["tests"],
                      "perturbation": {"alpha": 0.1, "betas": [0.3, 0.2]}})
    assert main(["perturbation", "--config", cfg]) == 0
    header, rows = read_csv(tmp_path / "run/perturbation.csv")
    assert header == ["alpha", "beta", "d_op", "d_srb", "envelope_ratio"]
    assert len(rows) == 2


def test_report_rebuilds_summary(tmp_path):
    out = tmp_path / "ci"
    rc = main(["verify", "--profile", "ci", "--out", str(out),
               "--seed", "20260810"])
    assert rc == 0
    original = (out / "summary.csv").read_bytes()
    (out / "summary.csv").unlink()
    assert main(["report", "--run-dir", str(out)]) == 0
    assert (out / "summary.csv").read_bytes() == original


def test_seed_flag_changes_manifest(tmp_path):
    cfg = _cfg(tmp_path, out_dir=str(tmp_path / "a"))
    assert main(["memory-loss", "--config", cfg, "--seed", "111"]) == 0
    cfg2 = _cfg(tmp_path, out_dir=str(tmp_path / "b"))
    assert main(["memory-loss", "--config", cfg2, "--seed", "222"]) == 0
    ma = json.loads((tmp_path / "a/manifest.json").read_text())
    mb = json.loads((tmp_path / "b/manifest.json").read_text())
    assert ma["seed"] == 111 and mb["seed"] == 222
    assert ma["config_hash"] != mb["config_hash"]
