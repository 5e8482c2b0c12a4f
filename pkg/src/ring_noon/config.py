"""Run configuration: TOML file plus ``section.key=value`` overrides, parsed strictly."""

from __future__ import annotations

import ast
import operator
from dataclasses import asdict, dataclass, field, fields
from math import pi
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .hamiltonian import ModelParams


class ConfigError(ValueError):
    pass


_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}


def _eval_node(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return node.value
    if isinstance(node, ast.Name) and node.id == "pi":
        return pi
    if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval_node(node.operand))
    raise ValueError("only numbers, pi and + - * / ** are allowed")


def parse_number(value, where: str) -> float:
    """A number, or an arithmetic string such as "pi", "2*pi" or "pi - 0.3"."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(_eval_node(ast.parse(value, mode="eval").body))
        except (SyntaxError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{where}: cannot evaluate {value!r} ({exc})") from None
    raise ConfigError(f"{where}: expected a number, got {type(value).__name__}")


def parse_grid(value, where: str) -> tuple[float, ...] | None:
    """A list of numbers or a table {start, stop, num}; must be sorted and non-empty."""
    if value is None:
        return None
    if isinstance(value, dict):
        extra = set(value) - {"start", "stop", "num"}
        if extra or not {"start", "stop", "num"} <= set(value):
            raise ConfigError(f"{where}: a grid table needs exactly start, stop and num")
        num = value["num"]
        if not isinstance(num, int) or isinstance(num, bool) or num < 1:
            raise ConfigError(f"{where}.num must be a positive integer")
        start = parse_number(value["start"], f"{where}.start")
        stop = parse_number(value["stop"], f"{where}.stop")
        grid = tuple(float(x) for x in np.linspace(start, stop, num))
    elif isinstance(value, (list, tuple)):
        grid = tuple(parse_number(v, f"{where}[{i}]") for i, v in enumerate(value))
    else:
        raise ConfigError(f"{where}: expected a list or a {{start, stop, num}} table")
    if not grid:
        raise ConfigError(f"{where}: grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"{where}: grid must be strictly increasing")
    return grid


@dataclass(frozen=True)
class ModelSection:
    N: int = 3
    U: float = 0.05
    J: float = 1.0
    delta_J: float = 0.01
    omega_phase: float = pi


@dataclass(frozen=True)
class DriveSection:
    amplitude: float = 0.05
    small_angle_bound: float = 0.1


@dataclass(frozen=True)
class GridSection:
    omega: tuple | None = None
    drive_omega: tuple | None = None
    t: tuple | None = None
    t1: tuple | None = None
    t2: tuple | None = None
    delta_omega: tuple | None = (0.05, 0.1, 0.2)
    N_list: tuple | None = (3, 4, 5, 6, 7, 8, 9, 10, 11, 12)
    levels: int = 6


@dataclass(frozen=True)
class SolverSection:
    dt_max: float = 0.01
    tolerance: float = 1e-9
    method: str = "auto"
    eig_method: str = "auto"


@dataclass(frozen=True)
class RampSection:
    duration: float | None = None
    shape: str = "smoothstep"
    factor: float = 10.0
    readout_threshold: float = 0.99
    fidelity_threshold: float = 0.99
    readout: bool = True


@dataclass(frozen=True)
class ProtocolSection:
    omega_prime: float = 0.3
    detection_threshold: float = 0.5
    fit_rms_bound: float = 0.05


@dataclass(frozen=True)
class SamplingSection:
    seed: int | None = None
    shots: int | None = None


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"
    prefix: str = ""


_SECTIONS = {
    "model": ModelSection,
    "drive": DriveSection,
    "grids": GridSection,
    "solver": SolverSection,
    "ramp": RampSection,
    "protocol": ProtocolSection,
    "sampling": SamplingSection,
    "output": OutputSection,
}

_INT_KEYS = {("model", "N"), ("grids", "levels"), ("sampling", "seed"), ("sampling", "shots")}
_BOOL_KEYS = {("ramp", "readout")}
_STR_KEYS = {
    ("solver", "method"): ("auto", "adaptive", "periodic", "fixed"),
    ("solver", "eig_method"): ("auto", "dense", "iterative"),
    ("ramp", "shape"): ("linear", "smoothstep"),
    ("output", "dir"): None,
    ("output", "prefix"): None,
}
_POSITIVE = {
    ("solver", "dt_max"), ("solver", "tolerance"), ("ramp", "factor"),
    ("drive", "small_angle_bound"), ("protocol", "fit_rms_bound"), ("model", "J"),
}


@dataclass(frozen=True)
class RunConfig:
    model: ModelSection = field(default_factory=ModelSection)
    drive: DriveSection = field(default_factory=DriveSection)
    grids: GridSection = field(default_factory=GridSection)
    solver: SolverSection = field(default_factory=SolverSection)
    ramp: RampSection = field(default_factory=RampSection)
    protocol: ProtocolSection = field(default_factory=ProtocolSection)
    sampling: SamplingSection = field(default_factory=SamplingSection)
    output: OutputSection = field(default_factory=OutputSection)

    def model_params(self) -> ModelParams:
        m = self.model
        return ModelParams(m.N, U=m.U, J=m.J, delta_J=m.delta_J, omega_phase=m.omega_phase)

    def to_dict(self) -> dict:
        return asdict(self)

    def with_overrides(self, **sections) -> "RunConfig":
        """Replace individual keys, e.g. with_overrides(model={"N": 4})."""
        raw = self.to_dict()
        for sec, kv in sections.items():
            raw.setdefault(sec, {}).update(kv)
        return build_config(raw)


def _locate(text: str | None, section: str, key: str) -> str:
    if not text:
        return ""
    current = None
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s.strip("[] ")
        elif current == section and s.split("=", 1)[0].strip() == key:
            return f" (line {n})"
    return ""


def _coerce(section: str, key: str, value, text: str | None):
    where = f"{section}.{key}{_locate(text, section, key)}"
    if value is None:
        return None
    if (section, key) == ("ramp", "duration"):
        x = parse_number(value, where)
        if not x >= 0:
            raise ConfigError(f"{where}: must be non-negative")
        return x
    if section == "grids" and key != "levels":
        grid = parse_grid(value, where)
        if key == "N_list" and grid is not None:
            if any(g != int(g) or g < 1 for g in grid):
                raise ConfigError(f"{where}: N_list must contain positive integers")
            grid = tuple(int(g) for g in grid)
        return grid
    if (section, key) in _BOOL_KEYS:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true or false, got {value!r}")
        return value
    if (section, key) in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if (section, key) in _STR_KEYS:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        allowed = _STR_KEYS[(section, key)]
        if allowed and value not in allowed:
            raise ConfigError(f"{where}: {value!r} is not one of {', '.join(allowed)}")
        return value
    x = parse_number(value, where)
    if (section, key) in _POSITIVE and not x > 0:
        raise ConfigError(f"{where}: must be positive")
    return x


def build_config(raw: dict, text: str | None = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a table of sections")
    sections = {}
    for name, value in raw.items():
        if name not in _SECTIONS:
            raise ConfigError(
                f"unknown section [{name}]{_locate_section(text, name)}; "
                f"expected one of {', '.join(_SECTIONS)}"
            )
        if not isinstance(value, dict):
            raise ConfigError(f"[{name}] must be a table")
        cls = _SECTIONS[name]
        known = {f.name for f in fields(cls)}
        for key in value:
            if key not in known:
                raise ConfigError(
                    f"unknown key {name}.{key}{_locate(text, name, key)}; "
                    f"known keys: {', '.join(sorted(known))}"
                )
        kwargs = {k: _coerce(name, k, v, text) for k, v in value.items()}
        try:
            sections[name] = cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"[{name}]: {exc}") from None
    cfg = RunConfig(**sections)
    try:
        cfg.model_params()
    except ValueError as exc:
        raise ConfigError(f"[model]: {exc}") from None
    s = cfg.sampling
    if (s.shots is None) != (s.seed is None):
        raise ConfigError("sampling.shots and sampling.seed must be given together")
    if s.shots is not None and s.shots < 1:
        raise ConfigError("sampling.shots must be positive")
    if cfg.grids.levels < 1:
        raise ConfigError("grids.levels must be positive")
    return cfg


def _locate_section(text, name):
    if not text:
        return ""
    for n, line in enumerate(text.splitlines(), start=1):
        if line.strip().strip("[] ") == name and line.strip().startswith("["):
            return f" (line {n})"
    return ""


def parse_override(item: str) -> tuple[str, str, object]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} must look like section.key=value")
    path, value = item.split("=", 1)
    if path.count(".") != 1:
        raise ConfigError(f"override key {path!r} must look like section.key")
    section, key = (s.strip() for s in path.split("."))
    try:
        parsed = tomllib.loads(f"v = {value}")["v"]
    except tomllib.TOMLDecodeError:
        parsed = value.strip()
    return section, key, parsed


def load_config(path=None, overrides=()) -> RunConfig:
    raw, text = {}, None
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        try:
            raw = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    for item in overrides:
        section, key, value = parse_override(item)
        raw.setdefault(section, {})
        if not isinstance(raw[section], dict):
            raise ConfigError(f"[{section}] must be a table")
        raw[section][key] = value
    return build_config(raw, text)
