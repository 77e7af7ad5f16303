"""Scenario configuration: strict YAML schema and per-scenario defaults.

A config file is a nested mapping with the optional sections ``domain``,
``potential``, ``partition``, ``numeric``, ``nodal``, ``sweep`` and
``output``.  Anything left out falls back to the scenario default; unknown
keys are rejected.
"""
from __future__ import annotations

import ast
import copy
import math
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from ..errors import ConfigError

SCENARIOS = ("mormas", "dnbracket", "friedlander", "doubled-1d", "perturb", "nodal",
             "periodic", "robin", "homotopy", "lambda-sweep")
V_MAX = 200.0


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DomainSpec(_Strict):
    # interval: cells [n]; rectangle: [nx, ny]; lshape: [n] (2n x 2n square);
    # circle: [n]; torus: [n]; cylinder: [nx, ny] periodic along x
    kind: Literal["interval", "rectangle", "lshape", "circle", "torus", "cylinder"] = "interval"
    cells: list[int] = [1000]
    lengths: list[float] = [1.0]
    bc: Union[str, dict[str, str]] = "dirichlet"

    @field_validator("cells")
    @classmethod
    def _positive(cls, v):
        if not v or any(c < 2 for c in v):
            raise ValueError("every cell count must be at least 2")
        return v


class PotentialSpec(_Strict):
    kind: Literal["constant", "expression", "file", "random"] = "constant"
    value: float = 0.0
    expression: Optional[str] = None
    inf: Optional[float] = None
    file: Optional[str] = None
    seed: Optional[int] = None  # random kind; falls back to numeric.seed
    vmax: float = V_MAX
    mirror_axis: Optional[int] = None
    perturbation: float = 0.0


class PartitionSpec(_Strict):
    kind: Literal["line", "none"] = "line"
    axis: int = 0
    index: Optional[int] = None  # lattice line; None splits at the middle
    flip: bool = False


class NumericSpec(_Strict):
    zero_tol: float = 1e-9
    t_grid: int = 512
    eps: Optional[float] = None
    seed: int = 0
    lam: float = 0.0
    gap_tol: float = 1e-6
    c_grid: Optional[list[float]] = None


class NodalSpec(_Strict):
    k_max: int = 8
    courant_k_max: int = 20
    ks: Optional[list[int]] = None


class SweepSpec(_Strict):
    realization: Literal["G", "D1", "N1", "D2", "N2", "DN"] = "G"
    lambda_points: int = 33
    theta_points: int = 64
    theta_eps: float = 1e-4


class OutputSpec(_Strict):
    dir: Optional[str] = None
    traces: bool = False


class ScenarioConfig(_Strict):
    scenario: Literal[SCENARIOS]  # type: ignore[valid-type]
    domain: DomainSpec = DomainSpec()
    potential: PotentialSpec = PotentialSpec()
    partition: PartitionSpec = PartitionSpec()
    numeric: NumericSpec = NumericSpec()
    nodal: NodalSpec = NodalSpec()
    sweep: SweepSpec = SweepSpec()
    output: OutputSpec = OutputSpec()


_RANDOM_RECT = {
    "domain": {"kind": "rectangle", "cells": [20, 20], "lengths": [1.0, 1.0], "bc": "dirichlet"},
    "potential": {"kind": "random"},
}

DEFAULTS: dict[str, dict] = {
    "mormas": _RANDOM_RECT,
    "dnbracket": _RANDOM_RECT,
    "homotopy": _RANDOM_RECT,
    "friedlander": {"domain": {"kind": "interval", "cells": [1000], "lengths": [1.0]},
                    "potential": {"kind": "constant", "value": -50.0}},
    "doubled-1d": {"domain": {"kind": "interval", "cells": [2000], "lengths": [2.0],
                              "bc": {"left": "dirichlet", "right": "neumann"}},
                   "potential": {"kind": "constant", "value": -1.44}},
    "perturb": {"domain": {"kind": "rectangle", "cells": [20, 20], "lengths": [1.0, 1.0],
                           "bc": {"left": "dirichlet", "right": "dirichlet",
                                  "bottom": "neumann", "top": "neumann"}},
                "potential": {"kind": "random", "mirror_axis": 0, "perturbation": 0.5}},
    "nodal": {"domain": {"kind": "rectangle", "cells": [60, 36], "lengths": [1.0, 0.6], "bc": "dirichlet"},
              "potential": {"kind": "constant", "value": 0.0}},
    "periodic": {"domain": {"kind": "circle", "cells": [1000], "lengths": [1.0]},
                 "potential": {"kind": "constant", "value": -50.0}},
    "robin": {"domain": {"kind": "interval", "cells": [1000], "lengths": [1.0]},
              "potential": {"kind": "constant", "value": -50.0}},
    "lambda-sweep": {"domain": {"kind": "interval", "cells": [1000], "lengths": [1.0], "bc": "dirichlet"},
                     "potential": {"kind": "constant", "value": -50.0}},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict) and key != "bc":
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def make_config(scenario: str, overrides: Optional[dict] = None) -> ScenarioConfig:
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}")
    data = _merge({"scenario": scenario, **DEFAULTS[scenario]}, overrides or {})
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, scenario: str) -> ScenarioConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text()) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    named = raw.pop("scenario", scenario)
    if named != scenario:
        raise ConfigError(f"config is for scenario {named!r}, not {scenario!r}")
    return make_config(scenario, raw)


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.model_dump(mode="json"), sort_keys=True)


# -- potential expressions ----------------------------------------------------

_FUNCS = {name: getattr(np, name) for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "abs",
                                               "tanh", "cosh", "sinh", "minimum", "maximum", "where")}
_CONSTS = {"pi": math.pi, "e": math.e}
_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
          ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd, ast.Mod,
          ast.Compare, ast.Lt, ast.Gt, ast.LtE, ast.GtE)


def compile_expression(text: str):
    """Vectorized function of coordinates x, y, z from an arithmetic expression."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"bad potential expression: {exc}") from exc
    allowed = set(_FUNCS) | set(_CONSTS) | {"x", "y", "z"}
    for node in ast.walk(tree):
        if not isinstance(node, _NODES):
            raise ConfigError(f"disallowed syntax in potential expression: {type(node).__name__}")
        if isinstance(node, ast.Name) and node.id not in allowed:
            raise ConfigError(f"unknown name {node.id!r} in potential expression")
    code = compile(tree, "<potential>", "eval")

    def fn(coords):
        env = dict(_FUNCS, **_CONSTS)
        for i, name in enumerate("xyz"):
            env[name] = coords[:, i] if i < coords.shape[1] else np.zeros(coords.shape[0])
        out = eval(code, {"__builtins__": {}}, env)
        return np.broadcast_to(np.asarray(out, dtype=float), (coords.shape[0],)).copy()

    return fn
