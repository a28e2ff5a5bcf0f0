"""Run configuration files (TOML or JSON) and their validation."""
from __future__ import annotations

import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

import tomli_w

from .fixtures import model_from_config
from .symspace import DepthError, MeasureError

MEASURE_KINDS = ("bernoulli", "markov", "density")


class ConfigError(ValueError):
    """Invalid configuration; ``path`` locates the offending key."""

    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason

    def to_json(self) -> dict:
        return {"error": {"path": self.path, "reason": self.reason}}


def _fmt_for(path: Path) -> str:
    ext = path.suffix.lower()
    if ext == ".toml":
        return "toml"
    if ext == ".json":
        return "json"
    raise ConfigError("<file>", f"cannot infer format from extension {ext!r}; use .toml or .json")


def read_config(path) -> dict:
    path = Path(path)
    fmt = _fmt_for(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from exc
    try:
        cfg = tomllib.loads(raw.decode("utf-8")) if fmt == "toml" else json.loads(raw)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError("<file>", f"malformed {fmt}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("<root>", "top level must be a table")
    return cfg


def write_config(cfg: dict, path=None, fmt: str = "toml") -> str:
    """Serialize ``cfg``; write to ``path`` (format from its extension) when given."""
    if path is not None:
        fmt = _fmt_for(Path(path))
    text = tomli_w.dumps(_drop_none(cfg)) if fmt == "toml" else json.dumps(cfg, indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def _drop_none(x):
    if isinstance(x, dict):
        return {k: _drop_none(v) for k, v in x.items() if v is not None}
    if isinstance(x, list):
        return [_drop_none(v) for v in x]
    return x


def _prob(x, path):
    try:
        v = float(Fraction(x)) if isinstance(x, str) else float(x)
    except (ValueError, ZeroDivisionError, TypeError):
        raise ConfigError(path, f"not a number: {x!r}") from None
    if not np.isfinite(v) or v < 0:
        raise ConfigError(path, f"probabilities must be finite and nonnegative, got {x!r}")
    return v


def _vector(x, n, path):
    if not isinstance(x, list) or len(x) != n:
        raise ConfigError(path, f"expected a list of {n} probabilities")
    vals = [_prob(v, f"{path}[{i}]") for i, v in enumerate(x)]
    if abs(sum(vals) - 1.0) > 1e-12:
        raise ConfigError(path, f"probabilities sum to {sum(vals)!r}, expected 1")
    return vals


def validate(cfg: dict) -> None:
    """Raise :class:`ConfigError` naming the first invalid key."""
    for key in ("alphabet", "admissible", "depth", "measure"):
        if key not in cfg:
            raise ConfigError(key, "missing required key")
    N = cfg["alphabet"]
    if not isinstance(N, int) or isinstance(N, bool) or N < 1:
        raise ConfigError("alphabet", "must be a positive integer")
    A = cfg["admissible"]
    if not isinstance(A, list) or len(A) != N:
        raise ConfigError("admissible", f"expected {N} rows")
    for i, row in enumerate(A):
        if not isinstance(row, list) or len(row) != N:
            raise ConfigError(f"admissible[{i}]", f"expected {N} entries")
        for j, a in enumerate(row):
            if a not in (0, 1) or isinstance(a, bool):
                raise ConfigError(f"admissible[{i}][{j}]", "entries must be 0 or 1")
    Anp = np.array(A)
    if np.any(Anp.sum(axis=0) == 0) or np.any(Anp.sum(axis=1) == 0):
        raise ConfigError("admissible", "every letter needs a successor and a predecessor")
    D = cfg["depth"]
    if not isinstance(D, int) or isinstance(D, bool) or D < 2:
        raise ConfigError("depth", "must be an integer ≥ 2")
    meas = cfg["measure"]
    if not isinstance(meas, dict):
        raise ConfigError("measure", "must be a table")
    _validate_measure(meas, N, "measure")
    run = cfg.get("run", {})
    if not isinstance(run, dict):
        raise ConfigError("run", "must be a table")
    if "tol" in run and (not isinstance(run["tol"], (int, float)) or run["tol"] <= 0):
        raise ConfigError("run.tol", "must be a positive number")
    if "seed" in run and (not isinstance(run["seed"], int) or run["seed"] < 0):
        raise ConfigError("run.seed", "must be a nonnegative integer")


def _validate_measure(meas, N, path):
    kind = meas.get("kind")
    if kind not in MEASURE_KINDS:
        raise ConfigError(f"{path}.kind", f"unknown kind {kind!r}; expected one of {', '.join(MEASURE_KINDS)}")
    params = meas.get("params")
    if not isinstance(params, dict):
        raise ConfigError(f"{path}.params", "missing parameter table")
    if kind == "bernoulli":
        if "weights" not in params:
            raise ConfigError(f"{path}.params.weights", "missing required key")
        _vector(params["weights"], N, f"{path}.params.weights")
    elif kind == "markov":
        for key in ("initial", "transition"):
            if key not in params:
                raise ConfigError(f"{path}.params.{key}", "missing required key")
        _vector(params["initial"], N, f"{path}.params.initial")
        P = params["transition"]
        if not isinstance(P, list) or len(P) != N:
            raise ConfigError(f"{path}.params.transition", f"expected {N} rows")
        for i, row in enumerate(P):
            _vector(row, N, f"{path}.params.transition[{i}]")
    else:
        if "base" not in params or "density" not in params:
            raise ConfigError(f"{path}.params", "density measures need 'base' and 'density'")
        _validate_measure(params["base"], N, f"{path}.params.base")


def build(cfg: dict, depth: int | None = None):
    """Validate ``cfg`` and return ``(model, measure)``."""
    validate(cfg)
    if depth is not None and depth < 2:
        raise ConfigError("depth", "must be an integer ≥ 2")
    try:
        return model_from_config(cfg, depth)
    except (MeasureError, DepthError) as exc:
        raise ConfigError("measure", str(exc)) from exc
    except (ValueError, KeyError) as exc:
        raise ConfigError("<root>", str(exc)) from exc
