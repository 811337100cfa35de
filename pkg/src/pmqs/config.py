"""Experiment configuration: defaults, file loading, validation, hashing.

One JSON file drives every subcommand. All defaults are embedded here and
can be dumped with ``pmqs config --print-defaults``. Environment variables
PMQS_<KEY> override top-level scalar keys; CLI flags override both.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
from typing import Any, Optional

from .density import GridDensity
from .errors import ConfigError
from .mc import InitialMeasure
from .observables import from_config as observable_from_config
from .schedule import ParameterCurve

ENV_PREFIX = "PMQS_"
_ENV_KEYS = {
    "seed": int,
    "ulam_bins": int,
    "truncation": int,
    "paths": int,
    "limit_paths": int,
    "out_dir": str,
}

DEFAULTS: dict = {
    "seed": 20260810,
    "ulam_bins": 16384,
    "truncation": 500,
    "grid_intervals": 64,
    "paths": 100000,
    "limit_paths": 100000,
    "n_ladder": [1024, 4096, 16384],
    "eta": 1.0,
    "assume_tightness": False,
    "schedules": {
        "anchor": {"curve": {"kind": "constant", "c": 0.0}, "beta_star": 0.25},
        "main": {"curve": {"kind": "cosine", "a": 0.05, "b": 0.25},
                 "beta_star": 0.25},
    },
    "observable": {"kind": "identity"},
    "initial_measure": {"kind": "lebesgue"},
    "select": None,  # verify section selection; null = the full battery
    "centering_measure": {"kind": "singular", "beta": 0.2},
    "tests": {
        "moment2": {"t": 0.2, "delta": 0.25,
                    "bias_delta_coeff": 0.05, "bias_n_coeff": 1.0},
        "moment4": {"t": 0.2,
                    "deltas": [0.25, 0.125, 0.0625, 0.03125, 0.015625,
                               0.0078125],
                    "trend_pvalue": 0.05},
        "decorrelation": {"s": 0.25, "t": 0.75, "bump_halfwidth": 1.0},
        "martingale": {"t1": 0.2, "r": 0.4, "t": 0.8, "bump_halfwidth": 1.0},
        "law": {"ks_budget": 0.011, "final_time": 1.0, "cov_z_floor": 5.0},
        "centering_gap": {"fit_slack": 1.1},
        "partition": {"n": 96, "s": 0.4, "t": 0.5, "samples": 512},
        "ergodic": {"samples": 64},
        "memory_loss": {"N": 512, "preset_beta": 0.25,
                        "fit_lo": 32, "fit_hi": 512, "slope_max": -2.5},
        "preimage": {"alphas": [0.25, 0.5], "n_lo": 10, "n_hi": 1000,
                     "slope_tol": 0.15},
        "srb_alphas": [0.1, 0.25, 0.4],
        "perturbation": {"alpha": 0.1,
                         "betas": [0.3, 0.2, 0.15, 0.12, 0.11],
                         "exponent": "third"},
        "autocov_envelope": {"alpha": 0.25, "fit_hi": 100, "check_hi": 200},
    },
    "out_dir": "runs/default",
}

# reduced profile for quick runs, fixtures, and the worker-count
# determinism check (same code paths, small sizes)
CI_OVERRIDES: dict = {
    "ulam_bins": 1024,
    "truncation": 120,
    "grid_intervals": 32,
    "paths": 8192,
    "limit_paths": 8192,
    "n_ladder": [256, 512, 1024],
    "tests": {
        "memory_loss": {"N": 128, "fit_lo": 16, "fit_hi": 128},
        "preimage": {"n_hi": 300},
        "partition": {"samples": 256},
        "ergodic": {"samples": 16},
        "autocov_envelope": {"fit_hi": 40, "check_hi": 80},
    },
    "out_dir": "runs/ci",
}


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def default_config() -> dict:
    return copy.deepcopy(DEFAULTS)


def ci_config() -> dict:
    return _deep_merge(DEFAULTS, CI_OVERRIDES)


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None,
                use_env: bool = True, profile: str = "default") -> "ExperimentConfig":
    if profile == "ci":
        data = ci_config()
    elif profile == "default":
        data = default_config()
    else:
        raise ConfigError(f"unknown profile {profile!r}")
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: "
                f"{exc.msg}"
            ) from exc
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
        data = _deep_merge(data, user)
    if use_env:
        for key, typ in _ENV_KEYS.items():
            raw = os.environ.get(ENV_PREFIX + key.upper())
            if raw is not None:
                try:
                    data[key] = typ(raw)
                except ValueError as exc:
                    raise ConfigError(
                        f"environment override {ENV_PREFIX + key.upper()}={raw!r} "
                        f"is not a valid {typ.__name__}"
                    ) from exc
    if overrides:
        data = _deep_merge(data, overrides)
    return ExperimentConfig(data)


class ExperimentConfig:
    """Validated configuration with derived objects and a canonical hash."""

    def __init__(self, data: dict):
        self.data = data
        self._validate()

    # -- access ----------------------------------------------------------

    def __getitem__(self, key: str) -> Any:
        return self.data[key]

    def get(self, *path, default=None):
        node = self.data
        for key in path:
            if not isinstance(node, dict) or key not in node:
                return default
            node = node[key]
        return node

    def canonical_json(self) -> str:
        """Canonical form for hashing; the output location is environmental
        and must not change the experiment's identity."""
        data = {k: v for k, v in self.data.items() if k != "out_dir"}
        return json.dumps(data, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    # -- derived objects ---------------------------------------------------

    def curve(self, schedule: str) -> ParameterCurve:
        spec = self.data["schedules"][schedule]
        cspec = spec["curve"]
        kind = cspec["kind"]
        kw = {"beta_star": float(spec["beta_star"]),
              "eta": float(self.data["eta"])}
        if kind == "constant":
            return ParameterCurve.constant(float(cspec["c"]), **kw)
        if kind == "linear":
            return ParameterCurve.linear(float(cspec["a"]), float(cspec["b"]), **kw)
        if kind == "cosine":
            return ParameterCurve.cosine(float(cspec["a"]), float(cspec["b"]), **kw)
        if kind == "table":
            return ParameterCurve.table(cspec["knots_t"], cspec["knots_v"], **kw)
        raise ConfigError(f"schedules.{schedule}.curve.kind: unknown kind {kind!r}")

    def observable(self):
        return observable_from_config(self.data["observable"])

    def measure(self, spec_key: str) -> InitialMeasure:
        spec = self.data[spec_key]
        kind = spec.get("kind")
        m = int(self.data["ulam_bins"])
        if kind == "lebesgue":
            return InitialMeasure.lebesgue()
        if kind == "singular":
            dens = GridDensity.singular(m, float(spec["beta"]))
            return InitialMeasure.from_density(dens, label=f"singular({spec['beta']})")
        if kind == "uniform_density":
            return InitialMeasure.from_density(GridDensity.uniform(m), label="uniform")
        raise ConfigError(f"{spec_key}.kind: unknown measure kind {kind!r}")

    # -- validation --------------------------------------------------------

    def _fail(self, field: str, message: str):
        raise ConfigError(f"config field {field!r}: {message}")

    def _validate(self):
        d = self.data
        for key in ("seed", "ulam_bins", "truncation", "grid_intervals",
                    "paths", "limit_paths"):
            if not isinstance(d.get(key), int) or d[key] <= 0:
                self._fail(key, "must be a positive integer")
        if d["ulam_bins"] < 2:
            self._fail("ulam_bins", "needs at least 2 bins")
        if not (0.0 < float(d["eta"]) <= 1.0):
            self._fail("eta", "Hoelder exponent must lie in (0, 1]")
        ladder = d["n_ladder"]
        if (not isinstance(ladder, list) or not ladder
                or any(int(n) <= 0 for n in ladder)
                or sorted(ladder) != list(ladder)):
            self._fail("n_ladder", "must be an ascending list of positive levels")
        for name, spec in d["schedules"].items():
            bs = float(spec["beta_star"])
            if not (0.0 < bs < 0.5):
                self._fail(
                    f"schedules.{name}.beta_star",
                    f"value {bs} violates the standing requirement "
                    "beta_star < 1/2 for the fluctuation theory",
                )
            if bs >= 1.0 / 3.0 and not d.get("assume_tightness", False):
                self._fail(
                    f"schedules.{name}.beta_star",
                    f"value {bs} is in [1/3, 1/2), where tightness of the "
                    "fluctuations is assumed rather than derived; set "
                    "assume_tightness=true to acknowledge",
                )
            # construct the curve once to surface range/kind errors here
            try:
                self.curve(name)
            except ConfigError:
                raise
            except Exception as exc:  # range violations raise ConfigError already
                self._fail(f"schedules.{name}.curve", str(exc))
        try:
            self.observable()
        except ConfigError as exc:
            self._fail("observable", str(exc))
        select = d.get("select")
        if select is not None:
            from .verify import SECTIONS
            unknown = [x for x in select if x not in SECTIONS]
            if unknown:
                self._fail("select", f"unknown sections {unknown}; "
                           f"valid: {sorted(SECTIONS)}")
        t4 = self.get("tests", "moment4", default={})
        for dlt in t4.get("deltas", []):
            if t4.get("t", 0.0) + dlt > 1.0:
                self._fail("tests.moment4.deltas",
                           f"t + delta = {t4['t'] + dlt} exceeds 1")
