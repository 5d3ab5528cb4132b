"""Typed INI run configuration.

Every accepted key has a type and a default; the resolved configuration
(defaults filled in) is what the manifest echoes. Unknown sections or keys
are rejected so that typos never silently fall back to defaults.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass

from .errors import ConfigError

EXPERIMENTS = (
    "limit-solve",
    "twophase-solve",
    "sweep",
    "asymptotics",
    "optimize",
    "continuity",
    "oracle-compare",
)


def _floats(text: str):
    return tuple(float(t) for t in text.replace(",", " ").split())


def _ints(text: str):
    return tuple(int(t) for t in text.replace(",", " ").split())


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "none") else float(text)


def _bool(text: str):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# section -> key -> (parser, default as text)
SCHEMA = {
    "experiment": {
        "name": (str, "limit-solve"),
        "output": (str, "results"),
    },
    "geometry": {
        "kind": (str, "interval"),
        "L": (float, "1.0"),
        "R": (float, "1.0"),
        "a": (float, "2.0"),
        "b": (float, "1.0"),
        "cos_coeffs": (_floats, "1.0"),
        "sin_coeffs": (_floats, ""),
        "resolution": (float, "0.01"),
        "n_t": (int, "8"),
    },
    "profile": {
        "representation": (str, "constant"),
        "values": (_floats, "0.3"),
        "cos_coeffs": (_floats, ""),
        "sin_coeffs": (_floats, ""),
    },
    "physics": {
        "beta": (float, "1.0"),
        "eps": (float, "0.01"),
        "robin_override": (_opt_float, "none"),
    },
    "solver": {
        "k": (int, "10"),
        "tol": (float, "1e-10"),
        "method": (str, "auto"),
        "seed": (int, "0"),
        "maxiter": (int, "0"),
    },
    "sweep": {
        "backend": (str, "fem"),
        "eps_grid": (_floats, ""),
        "n_eps": (int, "5"),
        "j": (_ints, "1 2 3"),
    },
    "asymptotics": {
        "fiber_samples": (int, "16"),
        "n_fibers": (int, "8"),
        "concentration_tol": (float, "0.2"),
    },
    "optimizer": {
        "target": (str, "lambda"),
        "j": (_ints, "1"),
        "composition": (str, "identity"),
        "m": (float, "0.6"),
        "n_arcs": (int, "2"),
        "budget": (int, "2000"),
        "cap": (_opt_float, "none"),
        "resolution": (float, "0.05"),
    },
    "continuity": {
        "a": (float, "0.0"),
        "b": (float, "1.0"),
        "k_list": (_ints, "4 8 16 32"),
        "j_max": (int, "5"),
    },
    "oracle": {
        "modes": (str, "limit twophase"),
        "j_max": (int, "10"),
        "tolerance": (float, "1e-6"),
        "richardson": (_bool, "false"),
        "m_max": (int, "8"),
        "k_per_m": (int, "4"),
    },
    "run": {
        "threads": (int, "1"),
    },
}


@dataclass(frozen=True)
class RunConfig:
    values: dict  # section -> key -> typed value
    text: dict  # section -> key -> resolved text

    def __getitem__(self, section):
        return self.values[section]

    @property
    def experiment(self) -> str:
        return self.values["experiment"]["name"]


def parse_config(source: str, overrides: dict | None = None) -> RunConfig:
    """Parse INI text, fill defaults, apply ``overrides`` {(section, key): text} and validate."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(source)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    text = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        for key, val in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            text[sec][key] = val.strip()
    for (sec, key), val in (overrides or {}).items():
        text[sec][key] = str(val)
    values = {}
    for sec, keys in SCHEMA.items():
        values[sec] = {}
        for key, (conv, _) in keys.items():
            try:
                values[sec][key] = conv(text[sec][key])
            except ValueError as exc:
                raise ConfigError(f"[{sec}] {key}: {exc}") from exc
    cfg = RunConfig(values=values, text=text)
    validate(cfg)
    return cfg


def load_config(path, overrides=None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            src = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(src, overrides)


def _need(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _finite_pos(x):
    return isinstance(x, float) and math.isfinite(x) and x > 0


def validate(cfg: RunConfig) -> None:
    v = cfg.values
    exp = v["experiment"]["name"]
    _need(exp in EXPERIMENTS, f"unknown experiment {exp!r}; choose from {', '.join(EXPERIMENTS)}")
    g = v["geometry"]
    kind = g["kind"].lower()
    _need(kind in ("interval", "disk", "ellipse", "polar"), f"unknown geometry kind {g['kind']!r}")
    if kind == "interval":
        _need(_finite_pos(g["L"]), "interval length L must be positive")
    elif kind == "disk":
        _need(_finite_pos(g["R"]), "disk radius R must be positive")
    elif kind == "ellipse":
        _need(_finite_pos(g["a"]) and _finite_pos(g["b"]), "ellipse semi-axes must be positive")
    _need(_finite_pos(g["resolution"]), "resolution must be positive")
    _need(g["n_t"] >= 4, "n_t must be at least 4")
    p = v["profile"]
    rep = p["representation"].lower()
    _need(rep in ("constant", "piecewise", "trig"), f"unknown profile representation {rep!r}")
    if rep in ("constant", "piecewise"):
        _need(len(p["values"]) >= 1, "profile values missing")
        _need(all(math.isfinite(x) and x >= 0 for x in p["values"]), "profile values must be >= 0")
        if rep == "constant":
            _need(len(p["values"]) == 1, "constant profile takes a single value")
    ph = v["physics"]
    _need(_finite_pos(ph["beta"]), "beta must be positive")
    _need(math.isfinite(ph["eps"]) and 0 < ph["eps"] <= 1, "eps must lie in (0, 1]")
    if ph["robin_override"] is not None:
        _need(ph["robin_override"] >= 0, "robin_override must be non-negative")
    s = v["solver"]
    _need(s["k"] >= 1, "solver k must be at least 1")
    _need(_finite_pos(s["tol"]), "solver tol must be positive")
    _need(s["maxiter"] >= 0, "solver maxiter must be >= 0 (0: library default)")
    _need(s["method"] in ("auto", "dense", "shift-invert"), f"unknown solver method {s['method']!r}")
    sw = v["sweep"]
    _need(sw["backend"] in ("fem", "oracle"), "sweep backend is 'fem' or 'oracle'")
    _need(all(0 < e <= 1 for e in sw["eps_grid"]), "sweep eps values must lie in (0, 1]")
    _need(sw["n_eps"] >= 3, "a sweep needs at least 3 eps values")
    _need(len(sw["j"]) >= 1 and min(sw["j"]) >= 1, "sweep indices j are 1-based")
    o = v["optimizer"]
    _need(o["target"] in ("lambda", "composition"), "optimizer target is 'lambda' or 'composition'")
    _need(o["composition"] in ("identity", "gap_ratio", "sum"), "unknown composition")
    _need(_finite_pos(o["m"]), "mass budget m must be positive")
    _need(o["n_arcs"] >= 1 and o["budget"] >= 1, "n_arcs and budget must be positive")
    _need(len(o["j"]) >= 1 and min(o["j"]) >= 1, "optimizer indices are 1-based")
    _need(_finite_pos(o["resolution"]), "optimizer resolution must be positive")
    c = v["continuity"]
    _need(c["a"] >= 0 and c["b"] >= 0, "continuity values a, b must be >= 0")
    _need(c["j_max"] >= 1, "continuity j_max must be at least 1")
    oc = v["oracle"]
    modes = oc["modes"].split()
    _need(modes and set(modes) <= {"limit", "twophase"}, "oracle modes are 'limit' and/or 'twophase'")
    _need(_finite_pos(oc["tolerance"]), "oracle tolerance must be positive")
    _need(v["run"]["threads"] >= 1, "threads must be at least 1")
    if exp in ("oracle-compare",) or (exp in ("sweep", "asymptotics") and sw["backend"] == "oracle"):
        _need(kind in ("interval", "disk"), "oracles exist for interval and disk geometries only")
        two_ends = kind == "interval" and rep == "piecewise" and len(p["values"]) == 2
        _need(rep == "constant" or two_ends, "oracles need a constant thickness profile")


def resolved_text(cfg: RunConfig) -> dict:
    return {sec: dict(keys) for sec, keys in cfg.text.items()}
