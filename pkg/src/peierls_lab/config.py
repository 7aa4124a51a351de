"""Experiment configuration: a TOML file validated into dataclasses.

Conformal factors are arithmetic expressions in ``t`` and ``x`` (numpy
functions ``sin cos exp sqrt tanh log abs`` and the constant ``pi``); they are
parsed with :mod:`ast` and evaluated without ``eval``.
"""
from __future__ import annotations

import ast
import operator
import re
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .geometry import GeometryError, GridSpacetime


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class GridSpec:
    nt: int = 32
    nx: int = 32
    dt: Optional[float] = None
    dx: Optional[float] = None


@dataclass(frozen=True)
class MetricSpec:
    kind: str = "minkowski"          # minkowski | conformal | csv
    omega2: str = "1"
    path: Optional[str] = None


@dataclass(frozen=True)
class LagrangianSpec:
    name: str = "free"
    eps: float = 0.1
    mass: float = 0.0


@dataclass(frozen=True)
class FunctionalSpec:
    density: str
    centre: tuple
    radius: tuple
    ramp: tuple


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridSpec = GridSpec()
    metric: MetricSpec = MetricSpec()
    lagrangian: LagrangianSpec = LagrangianSpec()
    functionals: tuple = ()
    suites: tuple = ()
    seed: int = 0
    out: str = "results"
    export_csv: bool = False
    tolerances: dict = field(default_factory=dict)
    suite_params: dict = field(default_factory=dict)
    source: Optional[str] = None

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("source")
        d["functionals"] = [asdict(f) for f in self.functionals]
        return d

    def tolerance(self, key: str, default: float) -> float:
        return float(self.tolerances.get(key, default))

    def params(self, suite: str) -> dict:
        return dict(self.suite_params.get(suite, {}))

    def build_grid(self) -> GridSpacetime:
        return build_grid(self.grid, self.metric, self.source)


# safe expression evaluation ------------------------------------------------------------------
_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt, "tanh": np.tanh, "log": np.log,
          "abs": np.abs}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
           ast.Pow: operator.pow}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def compile_expression(text: str):
    """Parse ``text`` into a function of (t, x); raises ConfigError on anything else."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}") from None

    def check(node):
        if isinstance(node, ast.Expression):
            return check(node.body)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return check(node.left) and check(node.right)
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return check(node.operand)
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
            return len(node.args) == 1 and not node.keywords and check(node.args[0])
        if isinstance(node, ast.Name) and node.id in ("t", "x", "pi"):
            return True
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return True
        raise ConfigError(f"expression {text!r} uses unsupported syntax {type(node).__name__}")

    check(tree)

    def run(node, env):
        if isinstance(node, ast.Expression):
            return run(node.body, env)
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](run(node.left, env), run(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](run(node.operand, env))
        if isinstance(node, ast.Call):
            return _FUNCS[node.func.id](run(node.args[0], env))
        if isinstance(node, ast.Name):
            return env[node.id]
        return node.value

    return lambda t, x: run(tree, {"t": t, "x": x, "pi": np.pi})


def build_grid(grid: GridSpec, metric: MetricSpec, source: Optional[str] = None) -> GridSpacetime:
    nt, nx = grid.nt, grid.nx
    dx = grid.dx if grid.dx is not None else 1.0 / nx
    dt = grid.dt if grid.dt is not None else dx
    try:
        if metric.kind == "minkowski":
            return GridSpacetime.minkowski(nt, nx, dt, dx)
        if metric.kind == "conformal":
            fn = compile_expression(metric.omega2)
            return GridSpacetime.conformal(nt, nx, dt, dx, lambda t, x: fn(t, x) + 0 * t)
        if metric.kind == "csv":
            if metric.path is None:
                raise ConfigError("metric.kind = 'csv' needs metric.path")
            path = Path(metric.path)
            if source is not None and not path.is_absolute():
                path = Path(source).parent / path
            data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
            if data.shape != (nt * nx, 3):
                raise ConfigError(f"metric CSV must have {nt * nx} rows of tt,tx,xx; got shape {data.shape}")
            tt, tx, xx = (data[:, j].reshape(nt, nx) for j in range(3))
            return GridSpacetime.from_components(nt, nx, dt, dx, tt, tx, xx)
    except GeometryError as exc:
        raise ConfigError(f"invalid metric: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read metric file: {exc}") from None
    raise ConfigError(f"unknown metric kind {metric.kind!r}; expected minkowski, conformal or csv")


# parsing -------------------------------------------------------------------------------------------
_LINE_COL = re.compile(r"line (\d+), column (\d+)")


def _table(doc: dict, key: str) -> dict:
    val = doc.get(key, {})
    if not isinstance(val, dict):
        raise ConfigError(f"[{key}] must be a table")
    return val


def _known(table: dict, allowed, where: str):
    extra = set(table) - set(allowed)
    if extra:
        raise ConfigError(f"unknown key(s) {sorted(extra)} in {where}")


def _pair(val, where):
    if isinstance(val, (int, float)):
        return (float(val), float(val))
    if isinstance(val, list) and len(val) == 2 and all(isinstance(v, (int, float)) for v in val):
        return (float(val[0]), float(val[1]))
    raise ConfigError(f"{where} must be a number or a pair of numbers")


def parse_config(text: str, source: Optional[str] = None, known_suites=None) -> ExperimentConfig:
    from . import densities
    from .lagrangian import CATALOGUE as LAGRANGIANS

    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = _LINE_COL.search(str(exc))
        line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
        msg = str(exc).split(" (at")[0]
        raise ConfigError(f"config parse error: {msg}", line, col) from None

    _known(doc, ("seed", "out", "export_csv", "grid", "metric", "lagrangian", "functionals", "suites",
                 "tolerances", "suite"), "top level")
    g = _table(doc, "grid")
    _known(g, ("nt", "nx", "dt", "dx"), "[grid]")
    try:
        grid = GridSpec(**g)
    except TypeError as exc:
        raise ConfigError(f"[grid]: {exc}") from None
    if not isinstance(grid.nt, int) or not isinstance(grid.nx, int):
        raise ConfigError("[grid] nt and nx must be integers")
    m = _table(doc, "metric")
    _known(m, ("kind", "omega2", "path"), "[metric]")
    metric = MetricSpec(**m)
    lag = _table(doc, "lagrangian")
    _known(lag, ("name", "eps", "mass"), "[lagrangian]")
    lagrangian = LagrangianSpec(**lag)
    if lagrangian.name not in LAGRANGIANS:
        raise ConfigError(f"unknown Lagrangian {lagrangian.name!r}; known: {sorted(LAGRANGIANS)}")
    funcs = []
    for i, entry in enumerate(doc.get("functionals", [])):
        if not isinstance(entry, dict):
            raise ConfigError(f"functionals[{i}] must be a table")
        _known(entry, ("density", "centre", "radius", "ramp"), f"functionals[{i}]")
        name = entry.get("density", "half_square")
        if name not in densities.CATALOGUE:
            raise ConfigError(f"functionals[{i}]: unknown density {name!r}; known: {sorted(densities.CATALOGUE)}")
        funcs.append(FunctionalSpec(
            name,
            _pair(entry.get("centre", [0.5, 0.5]), f"functionals[{i}].centre"),
            _pair(entry.get("radius", 0.15), f"functionals[{i}].radius"),
            _pair(entry.get("ramp", 0.1), f"functionals[{i}].ramp"),
        ))
    suites_tab = doc.get("suites", {})
    if isinstance(suites_tab, list):
        suites = tuple(suites_tab)
    else:
        _known(suites_tab, ("select",), "[suites]")
        suites = tuple(suites_tab.get("select", ()))
    if known_suites is not None:
        for s in suites:
            if s not in known_suites:
                raise ConfigError(f"unknown suite {s!r}")
    tolerances = _table(doc, "tolerances")
    for k, v in tolerances.items():
        if not isinstance(v, (int, float)) or v < 0:
            raise ConfigError(f"tolerance {k!r} must be a non-negative number")
    params = _table(doc, "suite")
    if known_suites is not None:
        for s in params:
            if s not in known_suites:
                raise ConfigError(f"[suite.{s}] names an unknown suite")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    cfg = ExperimentConfig(grid, metric, lagrangian, tuple(funcs), suites, seed, str(doc.get("out", "results")),
                           bool(doc.get("export_csv", False)), dict(tolerances), dict(params), source)
    cfg.build_grid()
    return cfg


def load_config(path, known_suites=None) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, str(p), known_suites)
