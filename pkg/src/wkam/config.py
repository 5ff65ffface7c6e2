"""Run configuration: strict JSON loading, defaults and environment overrides."""
from __future__ import annotations

import dataclasses
import json
import math
import os
import types
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union, get_args, get_origin, get_type_hints

from .dynamics import SystemSpec


class ConfigError(ValueError):
    def __init__(self, path: str, message: str, line: int | None = None, column: int | None = None):
        self.path = path
        self.message = message
        self.line = line
        self.column = column
        where = f"{path}: " if path else ""
        super().__init__(where + message)

    def to_json(self) -> dict:
        out = {"error": "ConfigError", "path": self.path, "message": self.message}
        if self.line is not None:
            out["line"] = self.line
            out["column"] = self.column
        return out


@dataclass
class GridConfig:
    nx: int = 256
    nv: int = 129
    vmax: float = 4.0
    K_test: int | None = None  # None means nx // 4

    def validate(self, path: str) -> None:
        if self.nx < 16:
            raise ConfigError(f"{path}.nx", "nx must be at least 16")
        if self.nv < 3 or self.nv % 2 == 0:
            raise ConfigError(f"{path}.nv", "nv must be odd")
        if not self.vmax > 0:
            raise ConfigError(f"{path}.vmax", "vmax must be positive")
        if self.K_test is not None and not (1 <= self.K_test < self.nx / 2):
            raise ConfigError(f"{path}.K_test", "K_test must satisfy 1 <= K_test < nx/2")

    @property
    def k_test(self) -> int:
        return self.nx // 4 if self.K_test is None else self.K_test


@dataclass
class SemigroupSection:
    tau: float = 0.1
    window: int | None = None
    span_tol: float = 1e-10
    max_iters: int = 20000
    damping: float = 0.5
    quadrature: str = "corrected"

    def validate(self, path: str) -> None:
        from .lax_oleinik import QUADRATURES

        if not self.tau > 0:
            raise ConfigError(f"{path}.tau", "tau must be positive")
        if self.window is not None and self.window < 1:
            raise ConfigError(f"{path}.window", "window must be at least 1")
        if not self.span_tol > 0:
            raise ConfigError(f"{path}.span_tol", "span_tol must be positive")
        if self.max_iters < 1:
            raise ConfigError(f"{path}.max_iters", "max_iters must be at least 1")
        if not (0 < self.damping <= 1):
            raise ConfigError(f"{path}.damping", "damping must lie in (0, 1]")
        if self.quadrature not in QUADRATURES:
            raise ConfigError(f"{path}.quadrature", f"quadrature must be one of {list(QUADRATURES)}")


@dataclass
class ManeSection:
    hmax: int = 3
    tau_max: float = 50.0
    tau_points: int = 40
    quadrature: str = "simpson"

    def validate(self, path: str) -> None:
        if self.hmax < 1:
            raise ConfigError(f"{path}.hmax", "hmax must be at least 1")
        if not self.tau_max > 0:
            raise ConfigError(f"{path}.tau_max", "tau_max must be positive")
        if self.tau_points < 2:
            raise ConfigError(f"{path}.tau_points", "tau_points must be at least 2")
        if self.quadrature not in ("simpson", "departure"):
            raise ConfigError(f"{path}.quadrature", "quadrature must be 'simpson' or 'departure'")


@dataclass
class ScanConfig:
    c_min: float = -3.0
    c_max: float = 3.0
    count: int = 61
    h_min: float = -2.0
    h_max: float = 2.0
    h_count: int = 41

    def validate(self, path: str) -> None:
        if self.count < 2:
            raise ConfigError(f"{path}.count", "count must be at least 2")
        if self.h_count < 2:
            raise ConfigError(f"{path}.h_count", "h_count must be at least 2")
        if not self.c_min < self.c_max:
            raise ConfigError(f"{path}.c_max", "c range must be ordered (c_min < c_max)")
        if not self.h_min < self.h_max:
            raise ConfigError(f"{path}.h_max", "h range must be ordered (h_min < h_max)")


@dataclass
class Tolerances:
    flat_tol: float = 1e-3
    slope_tol: float | None = None  # None means five scan spacings
    eps_set: float | None = None  # None means 40 / nx^2
    eps_aubry: float | None = None  # None means 5 / nx^2
    mass_threshold: float = 1e-3

    def validate(self, path: str) -> None:
        for name in ("flat_tol", "slope_tol", "eps_set", "eps_aubry"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ConfigError(f"{path}.{name}", f"{name} must be positive")
        if not (0 < self.mass_threshold < 1):
            raise ConfigError(f"{path}.mass_threshold", "mass_threshold must lie in (0, 1)")


def _default_system() -> dict:
    return SystemSpec.pendulum().to_json()


@dataclass
class RunConfig:
    system: dict = field(default_factory=_default_system)
    grid: GridConfig = field(default_factory=GridConfig)
    semigroup: SemigroupSection = field(default_factory=SemigroupSection)
    mane: ManeSection = field(default_factory=ManeSection)
    scan: ScanConfig = field(default_factory=ScanConfig)
    tolerances: Tolerances = field(default_factory=Tolerances)
    points: list = field(default_factory=lambda: [0.0, "cstar", 2.0])
    num_seeds: int = 4
    backend: str = "highs"
    rng_seed: int = 0
    threads: int = 1
    output_dir: str = "out"

    def validate(self) -> None:
        for name in ("grid", "semigroup", "mane", "scan", "tolerances"):
            getattr(self, name).validate(name)
        _check_system_keys(self.system)
        try:
            self.system_spec()
        except (ValueError, TypeError) as exc:
            raise ConfigError("system", str(exc)) from None
        for i, p in enumerate(self.points):
            if isinstance(p, str):
                if p not in ("cstar", "-cstar"):
                    raise ConfigError(f"points[{i}]", "string points must be 'cstar' or '-cstar'")
            elif isinstance(p, bool) or not isinstance(p, (int, float)) or not math.isfinite(p):
                raise ConfigError(f"points[{i}]", "points must be finite numbers or 'cstar'")
        if self.num_seeds < 1:
            raise ConfigError("num_seeds", "num_seeds must be at least 1")
        if self.backend not in ("highs", "simplex"):
            raise ConfigError("backend", "backend must be 'highs' or 'simplex'")
        if self.rng_seed < 0:
            raise ConfigError("rng_seed", "rng_seed must be a nonnegative integer")
        if self.threads < 1:
            raise ConfigError("threads", "threads must be at least 1")

    def system_spec(self) -> SystemSpec:
        return SystemSpec.from_json(self.system)

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


def _check_system_keys(obj: dict) -> None:
    allowed = {"n", "m", "potential"}
    for k in obj:
        if k not in allowed:
            raise ConfigError(f"system.{k}", f"unknown key {k!r}")
    if not isinstance(obj.get("n", 1), int) or isinstance(obj.get("n", 1), bool):
        raise ConfigError("system.n", "n must be an integer")
    pot = obj.get("potential", {})
    if not isinstance(pot, dict):
        raise ConfigError("system.potential", "potential must be an object")
    for k in pot:
        if k not in ("cos", "sin"):
            raise ConfigError(f"system.potential.{k}", f"unknown key {k!r}")
    for kind in ("cos", "sin"):
        terms = pot.get(kind, [])
        if not isinstance(terms, list):
            raise ConfigError(f"system.potential.{kind}", "terms must be a list of [k, coefficient] pairs")
        for i, t in enumerate(terms):
            if not (isinstance(t, list) and len(t) == 2):
                raise ConfigError(f"system.potential.{kind}[{i}]", "each term must be a [k, coefficient] pair")


# ------------------------------------------------------------------ loading
def _type_ok(value: Any, hint) -> bool:
    origin = get_origin(hint)
    if origin is Union or origin is types.UnionType:
        return any(_type_ok(value, h) for h in get_args(hint))
    if hint is type(None):
        return value is None
    if hint is bool:
        return isinstance(value, bool)
    if hint is int:
        return isinstance(value, int) and not isinstance(value, bool)
    if hint is float:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if hint is str:
        return isinstance(value, str)
    if hint is dict or origin is dict:
        return isinstance(value, dict)
    if hint is list or origin is list:
        return isinstance(value, list)
    return True


def _type_name(hint) -> str:
    args = get_args(hint)
    if args:
        return " or ".join(_type_name(a) for a in args)
    return {type(None): "null"}.get(hint, getattr(hint, "__name__", str(hint)))


def _build(cls, obj: Any, path: str):
    if not isinstance(obj, dict):
        raise ConfigError(path or "<root>", "expected an object")
    hints = get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in obj.items():
        sub = f"{path}.{key}" if path else key
        if key not in names:
            raise ConfigError(sub, f"unknown key {key!r}")
        hint = hints[key]
        if dataclasses.is_dataclass(hint):
            kwargs[key] = _build(hint, value, sub)
            continue
        if not _type_ok(value, hint):
            raise ConfigError(sub, f"expected {_type_name(hint)}, got {type(value).__name__}")
        if hint is float and isinstance(value, int):
            value = float(value)
        kwargs[key] = value
    return cls(**kwargs)


def config_from_dict(obj: dict) -> RunConfig:
    cfg = _build(RunConfig, obj, "")
    cfg.validate()
    return cfg


def parse_config_text(text: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"JSON parse error: {exc.msg}", exc.lineno, exc.colno) from None


def _field_lookup(cls, name: str):
    for f in dataclasses.fields(cls):
        if f.name.lower() == name.lower():
            return f
    return None


def apply_env_overrides(obj: dict, environ=None, prefix: str = "WKAM_") -> dict:
    """Overlay ``WKAM_SECTION__FIELD=value`` variables; values are parsed as JSON when possible."""
    environ = os.environ if environ is None else environ
    out = json.loads(json.dumps(obj))
    for key in sorted(environ):
        if not key.startswith(prefix):
            continue
        parts = key[len(prefix):].split("__")
        cls = RunConfig
        target = out
        path = []
        for depth, part in enumerate(parts):
            f = _field_lookup(cls, part) if cls is not None else None
            name = f.name if f is not None else part.lower()
            path.append(name)
            if depth == len(parts) - 1:
                raw = environ[key]
                try:
                    val = json.loads(raw)
                except json.JSONDecodeError:
                    val = raw
                target[name] = val
            else:
                target = target.setdefault(name, {})
                if not isinstance(target, dict):
                    raise ConfigError(".".join(path), "environment override descends into a non-object")
                hint = get_type_hints(cls).get(name) if f is not None else None
                cls = hint if hint is not None and dataclasses.is_dataclass(hint) else None
    return out


def load_config(path: str | os.PathLike | None, environ=None) -> RunConfig:
    """Read, overlay environment overrides, validate and fill defaults."""
    if path is None:
        obj: dict = {}
    else:
        p = Path(path)
        if not p.exists():
            raise ConfigError("", f"config file {str(p)!r} does not exist")
        try:
            text = p.read_text(encoding="utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError("", f"config file is not valid UTF-8: {exc}") from None
        obj = parse_config_text(text)
        if not isinstance(obj, dict):
            raise ConfigError("<root>", "expected an object")
    obj = apply_env_overrides(obj, environ)
    return config_from_dict(obj)
