"""Acceptance suite: every gating criterion at its stated tolerance.

The session fixture executes the full default verification battery once
and the individual tests assert each criterion from the recorded reports
(one printed pass/fail line per criterion). Wall-clock budgets are taken
from timings.json; statistical tolerances from the reports themselves.

Run with ``pytest tests/test_acceptance.py -v`` (about 6-8 minutes).
"""

import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from pmqs.cli import main
from pmqs.config import load_config
from pmqs.verify import run_verify


@pytest.fixture(scope="session")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance-verify")
    cfg = load_config(use_env=False, overrides={"out_dir": str(out)})
    rc = run_verify(cfg, threads=2)
    return {"dir": Path(out), "exit_code": rc}


def _reports(run_dir, claim):
    found = []
    for p in sorted((run_dir["dir"] / "reports").glob("*.json")):
        rep = json.loads(p.read_text())
        if rep["claim"] == claim:
            found.append(rep)
    assert found, f"no report for claim {claim}"
    return found


def _timing(run_dir, key):
    data = json.loads((run_dir["dir"] / "timings.json").read_text())
    return data["measured_seconds"][key]


def _line(criterion, ok, detail):
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{criterion}: {detail}"


def test_exact_doubling_srb_anchor(run_dir):
    rep = _reports(run_dir, "srb_doubling_uniform")[0]
    err = rep["statistics"]["l1_to_uniform"]
    rt = _timing(run_dir, "srb_doubling_uniform")
    ok = err <= 1e-10 and rep["params"]["m"] == 16384 and rt < 5.0
    _line("exact-doubling-srb", ok, f"L1={err:.2e}, runtime={rt:.2f}s")


def test_green_kubo_anchor(run_dir):
    rep = _reports(run_dir, "green_kubo_anchor")[0]
    val = rep["statistics"]["sigma2"]
    cob = _reports(run_dir, "green_kubo_coboundary")[0]["statistics"]["sigma2"]
    rt = _timing(run_dir, "green_kubo_anchor")
    ok = abs(val - 0.25) <= 1e-3 and abs(cob) <= 1e-3 and rt < 30.0
    _line("green-kubo-anchor", ok,
          f"sigma2={val:.6f}, coboundary={cob:.2e}, runtime={rt:.1f}s")


def test_cone_compliance(run_dir):
    rep = _reports(run_dir, "cone_membership")[0]
    ok = rep["verdict"] == "pass" and rep["params"]["m"] == 16384
    alphas = rep["params"]["alphas"]
    ok = ok and sorted(alphas) == [0.1, 0.25, 0.4]
    per = {r["alpha"]: r["passed"] for r in rep["statistics"]["per_alpha"]}
    ok = ok and all(per.values())
    _line("cone-compliance", ok, f"alphas={alphas}, per={per}")


def test_memory_loss_exponent(run_dir):
    rep = _reports(run_dir, "memory_loss_rate")[0]
    slope = rep["statistics"]["loglog_slope"]
    rt = _timing(run_dir, "memory_loss_rate")
    ok = (slope <= -2.5 and rep["params"]["beta_star"] == 0.25
          and rep["verdict"] == "pass" and rt < 120.0)
    _line("memory-loss-exponent", ok, f"slope={slope:.2f}, runtime={rt:.1f}s")


def test_preimage_scaling(run_dir):
    rep = _reports(run_dir, "preimage_scaling")[0]
    rt = _timing(run_dir, "preimage_scaling")
    slopes = rep["statistics"]["slopes"]
    ok = (rep["verdict"] == "pass"
          and rep["statistics"]["doubling_exact"]
          and abs(slopes["0.25"] + 4.0) <= 0.15
          and abs(slopes["0.5"] + 2.0) <= 0.15
          and rt < 1.0)
    _line("preimage-scaling", ok, f"slopes={slopes}, runtime={rt:.2f}s")


def test_second_moment_representation(run_dir):
    rep = _reports(run_dir, "second_moment_representation")[0]
    s = rep["statistics"]
    p = rep["params"]
    rt = _timing(run_dir, "second_moment_representation")
    ok = (p["n"] == 16384 and p["M"] == 100000
          and p["t"] == 0.0 and p["delta"] == 1.0
          and abs(s["sample_moment2"] - 0.25) <= 3.0 * s["se"]
          and rt < 180.0)
    _line("second-moment", ok,
          f"E[chi^2]={s['sample_moment2']:.5f}, 3SE={3 * s['se']:.5f}, "
          f"runtime={rt:.0f}s")


def test_fourth_moment_tightness(run_dir):
    rep = _reports(run_dir, "fourth_moment_tightness")[0]
    rt = _timing(run_dir, "fourth_moment_tightness")
    s = rep["statistics"]
    ok = rep["verdict"] == "pass" and rep["params"]["n"] == 16384 and rt < 300.0
    _line("fourth-moment-tightness", ok,
          f"ratios={np.round(s['ratios'], 3).tolist()}, "
          f"tau={s['kendall_tau']:.2f}, p={s['kendall_p']:.3f}, "
          f"runtime={rt:.0f}s")


def test_decorrelation_ladder(run_dir):
    rep = _reports(run_dir, "increment_decorrelation")[0]
    s = rep["statistics"]
    ok = rep["verdict"] == "pass" and rep["params"]["levels"] == [1024, 4096, 16384]
    _line("decorrelation-ladder", ok,
          f"|cov|={np.round(s['magnitudes'], 6).tolist()}, "
          f"top3SE={rep['thresholds']['top_tolerance']:.2e}")


def test_martingale_ladder_and_selftest(run_dir):
    rep = _reports(run_dir, "martingale_property")[0]
    selftest = _reports(run_dir, "martingale_selftest")[0]
    ok = rep["verdict"] == "pass" and selftest["verdict"] == "pass"
    ok = ok and selftest["params"]["M"] >= 10000
    _line("martingale-ladder", ok,
          f"|stat|={np.round(rep['statistics']['magnitudes'], 6).tolist()}, "
          f"selftest={selftest['statistics']['statistic']:.2e} "
          f"(3SE={3 * selftest['statistics']['se']:.2e})")


def test_law_comparison(run_dir):
    rep = _reports(run_dir, "weak_convergence_ks")[0]
    ks = rep["statistics"]["ks_final"]
    cov = _reports(run_dir, "weak_convergence_covariance")[0]
    ok = (ks <= 0.02 and rep["params"]["n"] == 16384
          and rep["params"]["M_finite"] == 100000
          and cov["verdict"] == "pass")
    total = _timing(run_dir, "verify_total")
    ok = ok and total < 1200.0
    _line("law-comparison", ok,
          f"KS={ks:.4f}, cov_z={cov['statistics']['max_z']}, "
          f"verify_total={total:.0f}s")


def test_centering_equivalence(run_dir):
    rep = _reports(run_dir, "centering_equivalence")[0]
    s = rep["statistics"]
    ok = rep["verdict"] == "pass"
    _line("centering-equivalence", ok,
          f"scaled_gap={ {k: round(v, 4) for k, v in s['scaled_gap'].items()} }, "
          f"C={s['fitted_constant']:.4f}")


def test_verify_exit_code(run_dir):
    _line("verify-exit", run_dir["exit_code"] == 0,
          f"exit={run_dir['exit_code']}")


def _fingerprint(run: Path) -> dict:
    out = {}
    for p in sorted(run.rglob("*")):
        if p.is_dir():
            continue
        rel = p.relative_to(run).as_posix()
        if rel == "timings.json":
            continue  # wall clock, excluded by design
        data = p.read_bytes()
        if rel == "manifest.json":
            man = json.loads(data)
            man.pop("created", None)
            data = json.dumps(man, sort_keys=True).encode()
        out[rel] = hashlib.sha256(data).hexdigest()
    return out


def test_determinism_across_worker_counts(tmp_path):
    prints = []
    for workers in (1, 4, 8):
        out = tmp_path / f"w{workers}"
        rc = main(["verify", "--profile", "ci", "--out", str(out),
                   "--threads", str(workers)])
        assert rc == 0
        prints.append(_fingerprint(out))
    ok = prints[0] == prints[1] == prints[2]
    if not ok:
        for a, b in ((0, 1), (0, 2)):
            diff = {k for k in prints[a]
                    if prints[a].get(k) != prints[b].get(k)}
            print("differing artifacts:", sorted(diff))
    _line("determinism", ok,
          f"{len(prints[0])} artifacts byte-identical for 1/4/8 workers")
