"""Run configuration: YAML file, defaults, validation and command-line overrides."""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import yaml

OUTPUT_ENV = "MFELAB_OUTPUT_DIR"
ALPHA_MAX = 1.1


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


def parse_alpha(value) -> float:
    """Accept numbers and fraction strings such as ``"1/3"``."""
    if isinstance(value, bool):
        raise ConfigError(f"not a number: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    try:
        return float(Fraction(str(value).strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a number: {value!r}") from exc


@dataclass
class GridConfig:
    L: int = 48
    n_theta: int = 64
    n_phi: int = 128


@dataclass
class SolverConfig:
    newton_tol: float = 1e-10
    step_tol: float = 1e-9
    max_iter: int = 60
    kernel_tol: float = 1e-8


@dataclass
class SolveConfig:
    alpha: float = 0.5
    seeds: int = 1
    first_seed: int = 0
    initial: str = "random"
    initial_value: float = 0.3
    initial_file: str | None = None
    deflate: bool = False
    workers: int = 1
    symmetry: bool = True
    n_axes: int = 1000


@dataclass
class BranchConfig:
    alpha_start: float = 0.5
    alpha_end: float = 1.05
    seed: str = "trivial"
    seed_amplitude: float = -0.3
    seed_file: str | None = None
    initial_step: float = 0.01
    max_step: float = 0.05
    min_step: float = 1e-5
    max_points: int = 400
    scan_step: float = 1e-3


@dataclass
class VerifyConfig:
    case: str = "zero-field"
    alpha: float = 1.0 / 3.0
    field_file: str | None = None
    n_axes: int = 200


@dataclass
class SymmetryConfig:
    field_file: str | None = None
    alpha: float | None = None
    n_axes: int = 1000
    workers: int = 1


@dataclass
class RunConfig:
    output_dir: str = "mfelab-out"
    grid: GridConfig = field(default_factory=GridConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    solve: SolveConfig = field(default_factory=SolveConfig)
    branch: BranchConfig = field(default_factory=BranchConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    symmetry: SymmetryConfig = field(default_factory=SymmetryConfig)

    def resolved_output_dir(self, cli_value: str | None = None) -> Path:
        """Command line beats the environment, which beats the file."""
        if cli_value:
            return Path(cli_value)
        env = os.environ.get(OUTPUT_ENV)
        return Path(env) if env else Path(self.output_dir)

    def validate(self) -> "RunConfig":
        s = self.solver
        for name in ("newton_tol", "step_tol", "kernel_tol"):
            if not getattr(s, name) > 0:
                raise ConfigError(f"solver.{name} must be positive")
        if s.max_iter < 1:
            raise ConfigError("solver.max_iter must be at least 1")
        g = self.grid
        if g.L < 1 or g.n_theta <= g.L or g.n_phi < 2 * g.L + 1:
            raise ConfigError("grid: need n_theta > L and n_phi >= 2L + 1")
        for key, a in (("solve.alpha", self.solve.alpha), ("verify.alpha", self.verify.alpha),
                       ("branch.alpha_start", self.branch.alpha_start),
                       ("branch.alpha_end", self.branch.alpha_end),
                       ("symmetry.alpha", self.symmetry.alpha)):
            if a is not None and not 0 < a <= ALPHA_MAX:
                raise ConfigError(f"{key} = {a} outside (0, {ALPHA_MAX}]")
        if self.solve.seeds < 1:
            raise ConfigError("solve.seeds must be at least 1")
        if self.solve.initial not in ("random", "zero", "constant", "file"):
            raise ConfigError(f"solve.initial: unknown value {self.solve.initial!r}")
        if self.branch.seed not in ("trivial", "axisymmetric", "file"):
            raise ConfigError(f"branch.seed: unknown value {self.branch.seed!r}")
        b = self.branch
        if not 0 < b.min_step <= b.initial_step <= b.max_step:
            raise ConfigError("branch: need 0 < min_step <= initial_step <= max_step")
        if not b.scan_step > 0:
            raise ConfigError("branch.scan_step must be positive")
        if self.verify.case not in ("zero-field", "caps", "solution", "file"):
            raise ConfigError(f"verify.case: unknown value {self.verify.case!r}")
        return self


_ALPHA_KEYS = {"alpha", "alpha_start", "alpha_end"}


def _coerce(section: str, key: str, ftype, value):
    if value is None:
        return None
    if key in _ALPHA_KEYS:
        return parse_alpha(value)
    t = str(ftype)
    try:
        if t.startswith("int"):
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError
            return int(value)
        if t.startswith("float"):
            if isinstance(value, bool):
                raise ValueError
            return float(value)
        if t.startswith("bool"):
            if not isinstance(value, bool):
                raise ValueError
            return value
        if t.startswith("str"):
            if not isinstance(value, str):
                raise ValueError
            return value
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}{key}: bad value {value!r}") from exc
    return value


def _apply(obj, data: dict, prefix: str = ""):
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix or 'config'}: expected a mapping")
    fields = {f.name: f for f in dataclasses.fields(obj)}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(f"unknown key {prefix}{key}")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current):
            _apply(current, value or {}, f"{prefix}{key}.")
        else:
            setattr(obj, key, _coerce(prefix, key, fields[key].type, value))


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the YAML file, then ``overrides`` (``{"section.key": value}``)."""
    cfg = RunConfig()
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        _apply(cfg, data)
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        *sections, key = dotted.split(".")
        target = cfg
        for s in sections:
            target = getattr(target, s)
        _apply(target, {key: value}, "".join(f"{s}." for s in sections))
    return cfg.validate()
