"""Experiment configuration: YAML loading and total (non-short-circuiting) validation.

A configuration is a YAML mapping.  Common sections::

    experiment: picard            # optional; must match the CLI experiment
    seed: 7
    grid:     {n: 16, box_length: 6.283185307179586}
    solver:   {dt: 0.01, horizon: 1.0, picard_max_iters: 8, picard_tol: 1.0e-8,
               save_every: 1, nonlinear: true, blowup_threshold: null}
    norm:     {theta: 7.5, s: 0.6, p: 2.4, q: 2, tilde: false}
    initial_data: {kind: random-band-limited, j_lo: 1, j_hi: 2, amplitude: 1.0}
    omegas:   [1, 10, 100]
    output_dir: runs/example

Experiment-specific sections are ``picard``, ``kernel``, ``continuum``,
``vanishing``, ``threshold`` and ``asymptotic``; see ``configs/`` for one
annotated example per experiment.  A batch file holds a list under
``experiments:`` whose entries are complete configurations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from .dispersive_lab import ContinuumOptions, alpha_cap, check_strichartz_constraints, existence_constraints
from .initial_data import GENERATORS

__all__ = ["EXPERIMENTS", "ConfigError", "ExperimentConfig", "load_config", "validate_config"]

EXPERIMENTS = ("simulate", "picard", "dispersive-fit", "strichartz-sweep", "vanishing-limit",
               "threshold-sweep", "asymptotic")

_NEEDS_GRID = {"simulate", "picard", "threshold-sweep", "asymptotic"}
_POSITIVE_SWEEP = {"strichartz-sweep", "vanishing-limit", "threshold-sweep", "asymptotic"}
_ASYM_MODES = ("theorem-5.1(i)", "theorem-5.1(ii)", "critical")


class ConfigError(ValueError):
    """Raised with the complete list of violations."""

    def __init__(self, errors: list[str]):
        super().__init__("\n".join(errors))
        self.errors = list(errors)


@dataclass
class ExperimentConfig:
    experiment: str
    raw: dict
    seed: int = 0
    output_dir: str | None = None

    def section(self, name: str) -> dict:
        return dict(self.raw.get(name) or {})


def load_config(path: str | Path) -> dict:
    """Read a YAML mapping; errors are reported as :class:`ConfigError`."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read config: {exc}"]) from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"invalid YAML: {exc}"]) from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(["config must be a mapping at top level"])
    return data


# ---------------------------------------------------------------------------
# field checkers: each appends to ``errs`` and returns a usable value or None
# ---------------------------------------------------------------------------
def _num(errs: list, sec: dict, where: str, key: str, default: Any = None, *, required: bool = False,
         positive: bool = False, nonneg: bool = False, integer: bool = False,
         allow_inf: bool = False, lo: float | None = None) -> Any:
    if key not in sec or sec[key] is None:
        if required:
            errs.append(f"{where}.{key}: required")
        return default
    v = sec[key]
    if isinstance(v, str) and allow_inf and v.strip().lower() in ("inf", "infinity", ".inf"):
        v = math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        errs.append(f"{where}.{key}: expected a number, got {v!r}")
        return default
    if integer and (not float(v).is_integer()):
        errs.append(f"{where}.{key}: expected an integer, got {v!r}")
        return default
    if math.isnan(v) or (math.isinf(v) and not allow_inf):
        errs.append(f"{where}.{key}: must be finite")
        return default
    if positive and not v > 0:
        errs.append(f"{where}.{key}: must be positive, got {v!r}")
    if nonneg and not v >= 0:
        errs.append(f"{where}.{key}: must be nonnegative, got {v!r}")
    if lo is not None and not v >= lo:
        errs.append(f"{where}.{key}: must be >= {lo}, got {v!r}")
    return int(v) if integer else v


def _bool(errs: list, sec: dict, where: str, key: str, default: bool) -> bool:
    v = sec.get(key, default)
    if not isinstance(v, bool):
        errs.append(f"{where}.{key}: expected true/false, got {v!r}")
        return default
    return v


def _numlist(errs: list, sec: dict, where: str, key: str, *, required: bool = True,
             min_len: int = 1) -> list | None:
    v = sec.get(key)
    if v is None:
        if required:
            errs.append(f"{where}{key}: required")
        return None
    if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        errs.append(f"{where}{key}: expected a list of numbers")
        return None
    if any(not math.isfinite(x) for x in v):
        errs.append(f"{where}{key}: values must be finite")
        return None
    if len(v) < min_len:
        errs.append(f"{where}{key}: needs at least {min_len} value(s)")
    return [float(x) for x in v]


def _section(errs: list, raw: dict, name: str, required: bool) -> dict:
    v = raw.get(name)
    if v is None:
        if required:
            errs.append(f"{name}: section required")
        return {}
    if not isinstance(v, dict):
        errs.append(f"{name}: expected a mapping")
        return {}
    return v


# ---------------------------------------------------------------------------
def _check_grid(errs: list, raw: dict) -> None:
    g = _section(errs, raw, "grid", True)
    n = _num(errs, g, "grid", "n", required=True, integer=True)
    if n is not None and (n < 8 or n % 2):
        errs.append(f"grid.n: must be an even integer >= 8, got {n}")
    _num(errs, g, "grid", "box_length", 2 * math.pi, positive=True)


def _check_solver(errs: list, raw: dict) -> None:
    s = _section(errs, raw, "solver", True)
    dt = _num(errs, s, "solver", "dt", required=True, positive=True)
    T = _num(errs, s, "solver", "horizon", required=True, positive=True)
    if dt is not None and T is not None and dt > 0 and T > 0 and dt > T:
        errs.append("solver.dt: must not exceed solver.horizon")
    _num(errs, s, "solver", "picard_max_iters", 8, integer=True, nonneg=True)
    _num(errs, s, "solver", "picard_tol", 1e-8, positive=True)
    _num(errs, s, "solver", "save_every", 1, integer=True, lo=1)
    _num(errs, s, "solver", "blowup_threshold", None, positive=True)
    _bool(errs, s, "solver", "nonlinear", True)


def _check_norm(errs: list, raw: dict, required: bool = True) -> dict | None:
    n = _section(errs, raw, "norm", required)
    if not n and not required:
        return None
    th = _num(errs, n, "norm", "theta", required=True, allow_inf=True, lo=1)
    s = _num(errs, n, "norm", "s", required=True)
    p = _num(errs, n, "norm", "p", 2.0, allow_inf=True, lo=1)
    q = _num(errs, n, "norm", "q", 2.0, allow_inf=True, lo=1)
    _bool(errs, n, "norm", "tilde", False)
    if "horizon" in n:
        _num(errs, n, "norm", "horizon", None, positive=True)
    if None in (th, s, p, q):
        return None
    return {"theta": th, "s": s, "p": p, "q": q}


def _check_initial(errs: list, raw: dict, name: str = "initial_data", required: bool = True) -> None:
    d = _section(errs, raw, name, required)
    if not d:
        return
    kind = d.get("kind")
    if kind not in GENERATORS:
        errs.append(f"{name}.kind: unknown generator {kind!r} (expected one of {', '.join(GENERATORS)})")
    _num(errs, d, name, "amplitude", 1.0, nonneg=True)
    if "normalize" in d:
        _bool(errs, d, name, "normalize", False)
    if kind == "random-band-limited":
        lo = _num(errs, d, name, "j_lo", required=True)
        hi = _num(errs, d, name, "j_hi", required=True)
        if lo is not None and hi is not None and hi < lo:
            errs.append(f"{name}.j_hi: must be >= j_lo")
        _num(errs, d, name, "seed", None, integer=True, nonneg=True)
    elif kind == "single-mode":
        k = d.get("k")
        if not (isinstance(k, list) and len(k) == 3 and all(isinstance(x, int) and not isinstance(x, bool) for x in k)):
            errs.append(f"{name}.k: expected three integers")
        elif not any(k):
            errs.append(f"{name}.k: must be nonzero")
        pol = d.get("polarization", [1, 0, 0])
        if not (isinstance(pol, list) and len(pol) == 3 and all(isinstance(x, (int, float)) for x in pol)):
            errs.append(f"{name}.polarization: expected three numbers")


def _check_omegas(errs: list, raw: dict, positive_increasing: bool) -> list | None:
    om = _numlist(errs, raw, "", "omegas")
    if om is None:
        return None
    if positive_increasing:
        if any(o <= 0 for o in om):
            errs.append("omegas: must be positive for sweeps")
        if any(b <= a for a, b in zip(om, om[1:])):
            errs.append("omegas: must be strictly increasing")
    return om


def _check_continuum(errs: list, raw: dict) -> None:
    c = _section(errs, raw, "continuum", False)
    known = set(ContinuumOptions.__dataclass_fields__)
    for k in c:
        if k not in known:
            errs.append(f"continuum.{k}: unknown option")
    pf = _num(errs, c, "continuum", "pad_factor", 4.0)
    if pf is not None and pf < 4:
        errs.append("continuum.pad_factor: must be >= 4")
    _num(errs, c, "continuum", "sigma_max", 200.0, positive=True)
    for k in ("n_heat_nodes", "n_sigma_nodes", "n_tail_nodes", "pad_check_nodes"):
        _num(errs, c, "continuum", k, None, integer=True, nonneg=True)
    _num(errs, c, "continuum", "tail_window", 4.0, lo=1.0)
    if "band" in c:
        b = c["band"]
        if not (isinstance(b, list) and len(b) == 2 and all(isinstance(x, (int, float)) for x in b) and 0 < b[0] < b[1]):
            errs.append("continuum.band: expected [lo, hi] with 0 < lo < hi")
    if "dilations" in c:
        dl = _numlist(errs, c, "continuum.", "dilations")
        if dl is not None and any(x <= 0 for x in dl):
            errs.append("continuum.dilations: must be positive")


def validate_config(raw: dict, experiment: str, seed_override: int | None = None) -> ExperimentConfig:
    """Check every precondition of ``experiment``; raise :class:`ConfigError` listing all violations."""
    errs: list[str] = []
    if experiment not in EXPERIMENTS:
        raise ConfigError([f"unknown experiment {experiment!r}"])
    declared = raw.get("experiment")
    if declared is not None and declared != experiment:
        errs.append(f"experiment: config declares {declared!r} but {experiment!r} was requested")
    seed = _num(errs, raw, "", "seed", 0, integer=True, nonneg=True)
    if seed_override is not None:
        seed = int(seed_override)
    out = raw.get("output_dir")
    if out is not None and not isinstance(out, str):
        errs.append("output_dir: expected a path string")

    if experiment in _NEEDS_GRID:
        _check_grid(errs, raw)
        _check_solver(errs, raw)
        _check_initial(errs, raw)
    needs_omegas = experiment != "dispersive-fit"
    if needs_omegas:
        _check_omegas(errs, raw, experiment in _POSITIVE_SWEEP)

    if experiment == "simulate":
        _check_norm(errs, raw, required=False)
    elif experiment == "picard":
        _check_norm(errs, raw, required=False)
        pc = _section(errs, raw, "picard", False)
        _bool(errs, pc, "picard", "consistency", False)
    elif experiment == "dispersive-fit":
        k = _section(errs, raw, "kernel", True)
        ts = _numlist(errs, k, "kernel.", "times", min_len=5)
        if ts is not None and any(t <= 0 for t in ts):
            errs.append("kernel.times: fit times must be positive")
        pf = _num(errs, k, "kernel", "pad_factor", 4.0)
        if pf is not None and pf < 4:
            errs.append("kernel.pad_factor: must be >= 4")
        res = _num(errs, k, "kernel", "resolution", 64, integer=True)
        if res is not None and (res <= 0 or res % 2):
            errs.append("kernel.resolution: must be a positive even integer")
        sg = k.get("sign", 1)
        if sg not in (1, -1):
            errs.append("kernel.sign: must be 1 or -1")
        _bool(errs, k, "kernel", "with_log_correction", True)
        _bool(errs, k, "kernel", "check_pad", True)
    elif experiment == "strichartz-sweep":
        nm = _check_norm(errs, raw)
        _check_continuum(errs, raw)
        if nm is not None:
            errs.extend(f"norm: {e}" for e in check_strichartz_constraints(nm["theta"], nm["p"], nm["q"]))
    elif experiment == "vanishing-limit":
        _check_continuum(errs, raw)
        v = _section(errs, raw, "vanishing", False)
        q = _num(errs, v, "vanishing", "q", 2.0, allow_inf=True, lo=1)
        if q is not None and not q < 4:
            errs.append("vanishing.q: must be < 4")
        _num(errs, v, "vanishing", "horizon", None, positive=True)
        _num(errs, v, "vanishing", "amplitude", 1.0, nonneg=True)
    elif experiment == "threshold-sweep":
        nm = _check_norm(errs, raw)
        th = _section(errs, raw, "threshold", True)
        amps = _numlist(errs, th, "threshold.", "amplitudes")
        if amps is not None and any(a < 0 for a in amps):
            errs.append("threshold.amplitudes: must be nonnegative")
        if nm is not None:
            errs.extend(f"norm: {e}" for e in existence_constraints(nm["s"], nm["p"], nm["theta"], nm["q"]))
    elif experiment == "asymptotic":
        nm = _check_norm(errs, raw)
        _check_initial(errs, raw, "initial_data_v", required=False)
        a = _section(errs, raw, "asymptotic", True)
        mode = a.get("mode")
        if mode not in _ASYM_MODES:
            errs.append(f"asymptotic.mode: expected one of {', '.join(_ASYM_MODES)}, got {mode!r}")
        alpha = _num(errs, a, "asymptotic", "alpha", required=True)
        eps = _num(errs, a, "asymptotic", "eps", 0.0, nonneg=True)
        if nm is not None and mode in _ASYM_MODES and alpha is not None and eps is not None:
            if mode == "critical":
                if alpha < 0:
                    errs.append("asymptotic.alpha: critical mode needs alpha >= 0")
            else:
                errs.extend(f"norm: {e}" for e in existence_constraints(nm["s"], nm["p"], nm["theta"], nm["q"], eps, mode))
                cap = alpha_cap(mode, nm["theta"], nm["p"], nm["s"], eps)
                if not alpha < cap:
                    errs.append(f"asymptotic.alpha: {alpha} must be below {cap:.6g}")
    if errs:
        raise ConfigError(errs)
    return ExperimentConfig(experiment, raw, int(seed), out)
