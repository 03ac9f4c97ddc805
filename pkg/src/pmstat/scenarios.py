"""Scenario configs: validation, built-in catalog and the runner."""

from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .ideals import ideal_from_json
from .pmspace import space_from_json
from .seqlab import indicators as ind
from .seqlab.sequences import builtin_sequences, get_sequence

CSV_COLUMNS = ("scenario", "statistic", "m", "n", "t_or_eps", "value", "mode", "samples", "seed",
               "count", "den")
STATISTICS = ("pre_cauchy", "levy_sum", "real_pre_cauchy", "strong_ist", "stat_exceptional",
              "dichotomy")
QUADRUPLE_STATS = ("pre_cauchy", "levy_sum", "real_pre_cauchy")
SPACE_STATS = ("pre_cauchy", "levy_sum", "strong_ist")
MODES = ("exact", "sampled", "both")
DEFAULTS = {"mode": "exact", "samples": 100_000, "seed": None, "budget": ind.DEFAULT_BUDGET,
            "workers": 1, "ideal": {"ideal": "density-zero"}, "statistics": []}


class ConfigError(ValueError):
    """Invalid scenario config; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass
class ScenarioConfig:
    name: str
    raw: dict
    space: Any
    sequence: Any
    ideal: Any
    statistics: list[dict]
    windows: list[tuple[int, int]]
    mode: str
    samples: int
    seed: int | None
    budget: int
    workers: int

    def canonical(self) -> str:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


@dataclass
class RunManifest:
    config_sha256: str
    version: str
    runtimes: dict[str, float]
    outputs: dict[str, str]
    config: dict
    cross_check: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"config_sha256": self.config_sha256, "version": self.version,
                "runtimes": self.runtimes, "outputs": self.outputs, "config": self.config,
                "cross_check": self.cross_check}


# -- built-in scenarios -----------------------------------------------------------------

_BUILTIN: dict[str, dict] = {
    "example1": {
        "name": "example1",
        "space": {"space": "simple", "H": {"kind": "exp-simple", "param": 1.0}},
        "sequence": {"name": "harmonic-block", "params": {}},
        "windows": {"kind": "factorial", "start": 2, "max": 4},
        "statistics": [
            {"kind": "pre_cauchy", "t": [0.6]},
            {"kind": "levy_sum"},
            {"kind": "real_pre_cauchy", "eps": [0.5]},
        ],
        "mode": "both",
        "samples": 20000,
        "seed": 20240611,
    },
    "note31": {
        "name": "note31",
        "space": {"space": "equilateral", "F": {"kind": "exp-simple", "param": 1.0}},
        "sequence": {"name": "note31", "params": {"p": "p", "q": "q"}},
        "windows": {"kind": "list", "windows": [[50, 50], [100, 100], [200, 200]]},
        "statistics": [
            {"kind": "strong_ist", "p": "p", "t": [0.5]},
            {"kind": "strong_ist", "p": "q", "t": [0.5]},
        ],
        "mode": "exact",
    },
    "dichotomy-parity": {
        "name": "dichotomy-parity",
        "sequence": {"name": "checker", "params": {}},
        "ideal": {"ideal": "density-zero"},
        "windows": {"kind": "list", "windows": [[50, 50], [100, 100], [150, 150]]},
        "statistics": [
            {"kind": "dichotomy", "alpha": 0.4, "beta": 0.6},
            {"kind": "real_pre_cauchy", "eps": [0.1]},
        ],
        "mode": "exact",
    },
}


def list_scenarios() -> dict[str, dict]:
    return copy.deepcopy(_BUILTIN)


def builtin_config(name: str) -> dict:
    try:
        return copy.deepcopy(_BUILTIN[name])
    except KeyError:
        raise ConfigError("scenario", f"unknown built-in scenario {name!r}") from None


# -- validation --------------------------------------------------------------------------

def _need(obj: dict, key: str, path: str):
    if key not in obj:
        raise ConfigError(f"{path}.{key}" if path else key, "missing")
    return obj[key]


def _pos_int(v, path: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ConfigError(path, f"expected a positive integer, got {v!r}")
    return v


def _pos_list(v, path: str) -> list[float]:
    if not isinstance(v, list) or not v:
        raise ConfigError(path, "expected a nonempty list")
    out = []
    for i, x in enumerate(v):
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not x > 0:
            raise ConfigError(f"{path}[{i}]", f"expected a positive number, got {x!r}")
        out.append(float(x))
    return out


def resolve_windows(schedule, path: str = "windows") -> list[tuple[int, int]]:
    if not isinstance(schedule, dict):
        raise ConfigError(path, "expected an object")
    kind = schedule.get("kind")
    if kind == "factorial":
        start = _pos_int(schedule.get("start", 1), f"{path}.start")
        top = _pos_int(_need(schedule, "max", path), f"{path}.max")
        if top < start:
            raise ConfigError(f"{path}.max", "must be at least start")
        wins = [(math.factorial(k), math.factorial(k)) for k in range(start, top + 1)]
    elif kind == "list":
        raw = _need(schedule, "windows", path)
        if not isinstance(raw, list) or not raw:
            raise ConfigError(f"{path}.windows", "expected a nonempty list")
        wins = []
        for i, w in enumerate(raw):
            if not isinstance(w, (list, tuple)) or len(w) != 2:
                raise ConfigError(f"{path}.windows[{i}]", "expected [m, n]")
            wins.append((_pos_int(w[0], f"{path}.windows[{i}][0]"),
                         _pos_int(w[1], f"{path}.windows[{i}][1]")))
    else:
        raise ConfigError(f"{path}.kind", f"expected 'factorial' or 'list', got {kind!r}")
    for i, (a, b) in enumerate(zip(wins, wins[1:]), start=1):
        if not (b[0] > a[0] and b[1] > a[1]):
            raise ConfigError(f"{path}.windows[{i}]",
                              f"schedule must increase strictly in both coordinates: {a} then {b}")
    return wins


def _check_statistic(s, i: int, has_space: bool) -> dict:
    path = f"statistics[{i}]"
    if not isinstance(s, dict):
        raise ConfigError(path, "expected an object")
    kind = s.get("kind")
    if kind not in STATISTICS:
        raise ConfigError(f"{path}.kind", f"unknown statistic {kind!r}")
    if kind in SPACE_STATS and not has_space:
        raise ConfigError(f"{path}.kind", f"{kind} needs a space")
    if kind in ("pre_cauchy", "strong_ist"):
        _pos_list(_need(s, "t", path), f"{path}.t")
    if kind in ("real_pre_cauchy", "stat_exceptional"):
        _pos_list(_need(s, "eps", path), f"{path}.eps")
    if kind == "strong_ist":
        _need(s, "p", path)
    if kind == "stat_exceptional":
        xi = _need(s, "xi", path)
        if isinstance(xi, bool) or not isinstance(xi, (int, float)):
            raise ConfigError(f"{path}.xi", "expected a number")
    if kind == "dichotomy":
        a, b = _need(s, "alpha", path), _need(s, "beta", path)
        if not (isinstance(a, (int, float)) and isinstance(b, (int, float)) and a < b):
            raise ConfigError(f"{path}.beta", "need numeric alpha < beta")
    return s


def parse_config(obj: Any) -> ScenarioConfig:
    """Validate a config document and resolve it; never runs statistics."""
    if not isinstance(obj, dict):
        raise ConfigError("$", "config must be a JSON object")
    raw = {**copy.deepcopy(DEFAULTS), **copy.deepcopy(obj)}
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise ConfigError("name", "expected a nonempty string")

    space = None
    if raw.get("space") is not None:
        try:
            space = space_from_json(raw["space"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("space", str(exc)) from None

    seq_cfg = _need(raw, "sequence", "")
    if not isinstance(seq_cfg, dict):
        raise ConfigError("sequence", "expected an object")
    seq_name = _need(seq_cfg, "name", "sequence")
    if seq_name not in builtin_sequences():
        raise ConfigError("sequence.name", f"unknown sequence {seq_name!r}")
    params = seq_cfg.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("sequence.params", "expected an object")
    try:
        sequence = get_sequence(seq_name, **params)
    except (TypeError, ValueError) as exc:
        raise ConfigError("sequence.params", str(exc)) from None

    try:
        ideal = ideal_from_json(raw["ideal"])
    except (AttributeError, TypeError, ValueError) as exc:
        raise ConfigError("ideal.ideal", str(exc)) from None

    stats = raw["statistics"]
    if not isinstance(stats, list):
        raise ConfigError("statistics", "expected a list")
    stats = [_check_statistic(s, i, space is not None) for i, s in enumerate(stats)]

    windows = resolve_windows(_need(raw, "windows", ""))

    mode = raw["mode"]
    if mode not in MODES:
        raise ConfigError("mode", f"expected one of {MODES}, got {mode!r}")
    samples = _pos_int(raw["samples"], "samples")
    budget = _pos_int(raw["budget"], "budget")
    workers = _pos_int(raw["workers"], "workers")
    seed = raw["seed"]
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        raise ConfigError("seed", "expected a non-negative integer")
    if mode != "exact" and any(s["kind"] in QUADRUPLE_STATS for s in stats):
        if seed is None:
            raise ConfigError("seed", "required when a statistic is sampled")
        if samples < ind.MIN_SAMPLES:
            raise ConfigError("samples", f"sampled mode needs at least {ind.MIN_SAMPLES}")
    return ScenarioConfig(name, raw, space, sequence, ideal, stats, windows, mode, samples,
                          seed, budget, workers)


def load_config(path: str | os.PathLike) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError("$", f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}") from None


# -- running -------------------------------------------------------------------------------

def _modes(cfg: ScenarioConfig) -> list[ind.Mode]:
    exact = ind.Mode("exact", budget=cfg.budget, workers=cfg.workers)
    samp = ind.Mode("sampled", cfg.samples, cfg.seed, cfg.budget, cfg.workers) \
        if cfg.mode != "exact" else None
    return {"exact": [exact], "sampled": [samp], "both": [exact, samp]}[cfg.mode]


def _point(space, p):
    return float(p) if space is not None and space.name == "simple" else p


def _dichotomy_records(x, alpha, beta, windows):
    out = []
    for m, n in windows:
        vals = np.asarray(x.window(m, n), dtype=float)
        if np.any((vals > alpha) & (vals < beta)):
            raise ValueError(f"window ({m}, {n}) has entries inside ({alpha}, {beta})")
        cnt = int(np.count_nonzero(vals <= alpha))
        den = m * n
        out.append(ind.IndicatorRecord("dichotomy_d_a", m, n, alpha, cnt / den, "exact", 0, None,
                                       cnt, den))
        prod = cnt * (den - cnt)
        out.append(ind.IndicatorRecord("dichotomy_product", m, n, alpha, prod / den ** 2, "exact", 0,
                                       None, prod, den ** 2))
    return out


def compute_statistic(cfg: ScenarioConfig, stat: dict) -> list[ind.IndicatorRecord]:
    kind = stat["kind"]
    x, space = cfg.sequence, cfg.space
    recs: list[ind.IndicatorRecord] = []
    if kind == "dichotomy":
        return _dichotomy_records(x, float(stat["alpha"]), float(stat["beta"]), cfg.windows)
    if kind == "strong_ist":
        p = _point(space, stat["p"])
        for t in stat["t"]:
            recs += [ind.strong_ist_indicator(space, x, p, t, w) for w in cfg.windows]
        return recs
    if kind == "stat_exceptional":
        for eps in stat["eps"]:
            recs += [ind.stat_exceptional_density(x, float(stat["xi"]), eps, w) for w in cfg.windows]
        return recs
    for mode in _modes(cfg):
        for w in cfg.windows:
            if kind == "pre_cauchy":
                recs += [ind.pre_cauchy_indicator(space, x, t, w, mode) for t in stat["t"]]
            elif kind == "real_pre_cauchy":
                recs += [ind.real_pre_cauchy_indicator(x, e, w, mode) for e in stat["eps"]]
            else:
                recs.append(ind.averaged_levy_sum(space, x, w, mode))
    return recs


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def _row(scenario: str, r: ind.IndicatorRecord) -> dict:
    return {"scenario": scenario, "statistic": r.statistic, "m": r.m, "n": r.n,
            "t_or_eps": r.param, "value": r.value, "mode": r.mode, "samples": r.samples,
            "seed": r.seed, "count": r.count, "den": r.den}


def records_to_csv(scenario: str, records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        row = _row(scenario, r)
        w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def records_to_jsonl(scenario: str, records) -> str:
    lines = []
    for r in records:
        row = _row(scenario, r)
        row["t_or_eps"] = None if isinstance(row["t_or_eps"], float) and math.isnan(row["t_or_eps"]) \
            else row["t_or_eps"]
        lines.append(json.dumps(row, sort_keys=False))
    return "".join(line + "\n" for line in lines)


def write_atomic(path: Path, text: str) -> str:
    """Write ``text`` via a temporary file and rename; returns its sha256."""
    path.parent.mkdir(parents=True, exist_ok=True)
    data = text.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return hashlib.sha256(data).hexdigest()


def cross_check(records) -> list[dict]:
    """Compare exact and sampled values at matching (statistic, window, parameter)."""
    exact, samp = {}, {}
    for r in records:
        key = (r.statistic, r.m, r.n, None if math.isnan(r.param) else r.param)
        (exact if r.mode == "exact" else samp)[key] = r
    out = []
    for key in sorted(set(exact) & set(samp), key=lambda k: (k[0], k[1], k[2], k[3] or 0.0)):
        e, s = exact[key], samp[key]
        if e.statistic == "levy_sum":
            continue  # not a proportion; no binomial sigma
        sigma = ind.sampling_sigma(e.value, s.samples)
        diff = abs(s.value - e.value)
        out.append({"statistic": e.statistic, "m": e.m, "n": e.n, "param": e.param,
                    "exact": e.value, "sampled": s.value, "discrepancy": diff,
                    "sigma": sigma, "breach_3sigma": bool(diff > 3 * sigma)})
    return out


def run(cfg: ScenarioConfig, out_dir: str | os.PathLike) -> RunManifest:
    """Run every statistic, write one CSV and one JSONL per statistic, then the manifest."""
    out = Path(out_dir)
    runtimes: dict[str, float] = {}
    outputs: dict[str, str] = {}
    checks: list[dict] = []
    for i, stat in enumerate(cfg.statistics):
        label = f"{i:02d}_{stat['kind']}"
        t0 = time.perf_counter()
        recs = compute_statistic(cfg, stat)
        runtimes[label] = time.perf_counter() - t0
        stem = f"{cfg.name}__{label}"
        outputs[f"{stem}.csv"] = write_atomic(out / f"{stem}.csv", records_to_csv(cfg.name, recs))
        outputs[f"{stem}.jsonl"] = write_atomic(out / f"{stem}.jsonl", records_to_jsonl(cfg.name, recs))
        checks += cross_check(recs)
    manifest = RunManifest(cfg.digest(), __version__, runtimes, outputs, cfg.raw, checks)
    write_atomic(out / f"{cfg.name}__manifest.json",
                 json.dumps(manifest.as_dict(), indent=2, sort_keys=True, default=str) + "\n")
    return manifest
