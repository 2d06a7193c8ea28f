"""Run configuration: schema, validation and canonical serialization."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import typing
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .fem import INTERFACE_MODES, SolverSettings
from .loads import LoadError, SimplifiedLoad, TurbineLoadSet, simplify_loads
from .materials import ElasticMaterial, MohrCoulombSoil, table1_materials
from .mesh import GeometryParams, MeshError
from .units import UnitError, parse_quantity

KINDS = ("static", "time_history", "pushover")
PRESETS = ("table1",)
FORMATS = ("csv", "json", "vtk")


class ConfigError(ValueError):
    """Schema violation; the message starts with the offending key path."""


@dataclass(frozen=True)
class LoadConfig:
    """Either the simplified triple or a raw turbine load set.

    When ``Mr`` is omitted it follows ``Fr * moment_arm``.
    """

    Fz: float = 0.0
    Fr: float = 0.0
    Mr: float | None = None
    G1: float = 0.0
    G2: float = 0.0
    turbine: TurbineLoadSet | None = None

    def simplified(self, arm: float) -> SimplifiedLoad:
        if self.turbine is not None:
            return simplify_loads(self.turbine)
        mr = self.Fr * arm if self.Mr is None else self.Mr
        return SimplifiedLoad(Fz=self.Fz, Fr=self.Fr, Mr=mr, G1=self.G1, G2=self.G2)


@dataclass(frozen=True)
class WindConfig:
    mean_force: float | None = None
    amplitude_ratio: float = 0.2
    period: float = 600.0
    duration: float = 1200.0
    dt: float = 10.0
    seed: int = 0
    random_ratio: float = 0.05
    hold: float | None = None


@dataclass(frozen=True)
class AnalysisConfig:
    kind: str = "static"
    interface: str = "contact"
    penalty_factor: float = 100.0
    bbar: bool = True
    plasticity: bool = True
    associated: bool = False
    soil_gravity: bool = True
    structure_gravity: bool = True
    moment_arm: float | None = None
    pushover_increment: float = 100.0
    pushover_direction: str = "horizontal"
    load_cap: float | None = None
    half_model: bool = True
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.interface not in INTERFACE_MODES:
            raise ValueError(f"interface must be one of {INTERFACE_MODES}")
        if not self.penalty_factor > 0:
            raise ValueError("penalty_factor must be positive")
        if self.moment_arm is not None and not self.moment_arm > 0:
            raise ValueError("moment_arm must be positive")
        if not self.pushover_increment > 0:
            raise ValueError("pushover_increment must be positive")
        if self.pushover_direction not in ("horizontal", "vertical"):
            raise ValueError("pushover_direction must be 'horizontal' or 'vertical'")
        if self.load_cap is not None and not self.load_cap > 0:
            raise ValueError("load_cap must be positive")


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "results"
    formats: tuple = FORMATS
    field_output: bool = True

    def __post_init__(self):
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ValueError(f"unknown output formats {bad}; expected a subset of {FORMATS}")


@dataclass(frozen=True)
class RunConfig:
    preset: str = "table1"
    geometry: GeometryParams = field(default_factory=GeometryParams)
    materials: dict = field(default_factory=dict)
    loads: LoadConfig = field(default_factory=LoadConfig)
    wind: WindConfig = field(default_factory=WindConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @property
    def moment_arm(self) -> float:
        a = self.analysis.moment_arm
        return self.geometry.stub_height if a is None else a

    def simplified_loads(self) -> SimplifiedLoad:
        return self.loads.simplified(self.moment_arm)

    def material_set(self) -> dict:
        """Preset materials with overrides and analysis switches applied."""
        mats = resolve_materials(self.preset, self.materials)
        soil = mats["soil"]
        if self.analysis.associated:
            soil = soil.associated()
        if not self.analysis.plasticity:
            soil = soil.elastic()
        mats["soil"] = soil
        return mats

    def to_dict(self) -> dict:
        return _plain(self)

    def digest(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


# ------------------------------------------------------------------ building
_MATERIAL_CLASSES = {"tower_steel": ElasticMaterial, "concrete": ElasticMaterial,
                     "ring_steel": ElasticMaterial, "soil": MohrCoulombSoil}


def resolve_materials(preset: str, overrides: dict) -> dict:
    if preset not in PRESETS:
        raise ConfigError(f"preset: unknown preset {preset!r}; expected one of {PRESETS}")
    mats = table1_materials()
    for name, values in overrides.items():
        mats[name] = dataclasses.replace(mats[name], **values)
    return mats


def _plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    return obj


def _convert(value, tp, path):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin in (typing.Union, getattr(__import__("types"), "UnionType", None)):
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _convert(value, inner[0], path)
    if dataclasses.is_dataclass(tp):
        return build(tp, value, path)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if tp is float:
        try:
            return parse_quantity(value)
        except UnitError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if tp is tuple or origin is tuple:
        if isinstance(value, str) or not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        return tuple(value)
    if tp is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected a mapping, got {value!r}")
        return value
    return value


def build(cls, data, path: str = ""):
    """Instantiate dataclass ``cls`` from a mapping, rejecting unknown keys."""
    if isinstance(data, cls):
        return data
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path or '<root>'}: expected a mapping, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    kwargs = {}
    for key, value in data.items():
        sub = f"{path}.{key}" if path else str(key)
        if key not in names:
            raise ConfigError(f"{sub}: unknown key (expected one of {sorted(names)})")
        kwargs[key] = _convert(value, hints[key], sub)
    try:
        return cls(**kwargs)
    except (ValueError, TypeError, LoadError, MeshError) as exc:
        raise ConfigError(f"{path or '<root>'}: {exc}") from None


def _materials(data, path="materials") -> dict:
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping")
    out = {}
    for name, values in data.items():
        if name not in _MATERIAL_CLASSES:
            raise ConfigError(f"{path}.{name}: unknown material (expected one of {sorted(_MATERIAL_CLASSES)})")
        cls = _MATERIAL_CLASSES[name]
        hints = typing.get_type_hints(cls)
        names = {f.name for f in dataclasses.fields(cls)} - {"name"}
        conv = {}
        for key, value in (values or {}).items():
            sub = f"{path}.{name}.{key}"
            if key not in names:
                raise ConfigError(f"{sub}: unknown key (expected one of {sorted(names)})")
            conv[key] = _convert(value, hints[key], sub)
        out[name] = conv
    return out


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>: expected a mapping")
    data = dict(data)
    mats = _materials(data.pop("materials", None))
    cfg = build(RunConfig, data)
    cfg = dataclasses.replace(cfg, materials=mats)
    try:
        cfg.material_set()
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"materials: {exc}") from None
    if cfg.loads.turbine is not None and (cfg.loads.Fz or cfg.loads.Fr or cfg.loads.Mr is not None):
        raise ConfigError("loads: give either turbine components or Fz/Fr/Mr, not both")
    if cfg.analysis.kind == "time_history":
        mean = cfg.wind.mean_force if cfg.wind.mean_force is not None else cfg.simplified_loads().Fr
        if not mean > 0:
            raise ConfigError("wind.mean_force: a positive mean wind force (or loads.Fr) is required")
    return cfg


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"<file>: cannot read {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"<file>: invalid YAML: {exc}") from None
    return config_from_dict(data or {})


def dump_config(cfg: RunConfig) -> str:
    """Resolved configuration as YAML; parses back to an equal config."""
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True)


def applied_defaults(data: dict, cls=RunConfig, path: str = "") -> list:
    """Key paths that were resolved from defaults rather than given."""
    out = []
    data = data or {}
    for f in dataclasses.fields(cls):
        sub = f"{path}.{f.name}" if path else f.name
        tp = typing.get_type_hints(cls)[f.name]
        if f.name not in data:
            out.append(sub)
        elif dataclasses.is_dataclass(tp) and isinstance(data.get(f.name), dict):
            out.extend(applied_defaults(data[f.name], tp, sub))
    return out
