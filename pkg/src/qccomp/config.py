"""Experiment configuration: nested dataclasses stored as JSON.

Unknown keys are rejected at every level; every field has a default, so an
empty JSON object is a valid configuration.
"""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .qcmap import map_from_spec


@dataclass
class QuadratureConfig:
    n_radial: int = 200
    n_angles: int = 512


@dataclass
class DistortionConfig:
    K_values: list = field(default_factory=lambda: [1.25, 2.0, 4.0])
    curve_K: list = field(default_factory=lambda: [1.5, 2.0, 4.0])
    n_r: int = 99


@dataclass
class MapReportConfig:
    n_points: int = 1000
    profile_radii: list = field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999])


@dataclass
class NormConfig:
    K_values: list = field(default_factory=lambda: [1.0, 1.5, 2.0, 4.0])
    route_degree: int = 16
    kernel_points: list = field(default_factory=lambda: [0.0, 0.3, 0.5, 0.7])


@dataclass
class Weak11Config:
    K: float = 2.0
    center: float = 0.9
    k_values: list = field(default_factory=lambda: [3, 4, 5, 6, 7, 8])
    p: float = 0.5
    distribution_k: int = 5
    n_alphas: int = 64


@dataclass
class BmoConfig:
    n_regions: int = 400
    pphi_regions: int = 100


@dataclass
class GeometryConfig:
    n_disks: int = 20
    n_membership: int = 10_000
    n_area: int = 100_000
    n_intervals: int = 10_000
    n_pairs: int = 10_000
    t0: float = 0.125
    box_levels: list = field(default_factory=lambda: [3, 4, 5, 6, 7])


@dataclass
class SchattenConfig:
    p: float = 2.0
    r_inner: float = 0.5
    levels: int = 20
    K_values: list = field(default_factory=lambda: [1.5, 2.0, 4.0])


@dataclass
class Tolerances:
    semigroup: float = 1e-8
    landen: float = 1e-9
    symmetry: float = 1e-9
    membership: float = 1e-9
    identity_norm: float = 1e-6
    route: float = 1e-6
    geometric: float = 1e-10
    projection: float = 1e-6
    factorization: float = 1e-8
    homogeneity: float = 1e-12
    rengel: float = 1e-12
    schatten_integrand: float = 1e-10
    schatten_area: float = 0.01


@dataclass
class ExperimentConfig:
    map: dict = field(default_factory=lambda: {"kind": "radial_stretch", "K": 2.0})
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    basis_degree: int = 48
    seed: int = 0
    r0: float = 1.0 / 64.0
    tolerances: Tolerances = field(default_factory=Tolerances)
    distortion: DistortionConfig = field(default_factory=DistortionConfig)
    map_report: MapReportConfig = field(default_factory=MapReportConfig)
    norm: NormConfig = field(default_factory=NormConfig)
    weak11: Weak11Config = field(default_factory=Weak11Config)
    bmo: BmoConfig = field(default_factory=BmoConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    schatten: SchattenConfig = field(default_factory=SchattenConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def build_map(self):
        try:
            return map_from_spec(self.map)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid map spec: {exc}") from exc


def _from_dict(cls, data, path="config"):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        sub = fields[name].type
        target = globals().get(sub) if isinstance(sub, str) else sub
        if dataclasses.is_dataclass(target):
            kwargs[name] = _from_dict(target, value, f"{path}.{name}")
        else:
            kwargs[name] = _coerce(fields[name], value, f"{path}.{name}")
    return cls(**kwargs)


def _coerce(f, value, path):
    kind = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", "")
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer")
    elif kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number")
        value = float(value)
    elif kind == "list" and not isinstance(value, list):
        raise ConfigError(f"{path}: expected a list")
    elif kind == "dict" and not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object")
    return value


def config_from_dict(data: dict) -> ExperimentConfig:
    return _from_dict(ExperimentConfig, data)


def dumps(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)


def loads(text: str) -> ExperimentConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from exc
    return config_from_dict(data)


def load_config(path: str | os.PathLike | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return loads(text)


ENV_PREFIX = "QCC_"
# environment variable -> (attribute path, parser)
ENV_OVERRIDES = {
    "QCC_SEED": (("seed",), int),
    "QCC_BASIS_DEGREE": (("basis_degree",), int),
    "QCC_N_RADIAL": (("quadrature", "n_radial"), int),
    "QCC_N_ANGLES": (("quadrature", "n_angles"), int),
}


def apply_env(cfg: ExperimentConfig, environ=None) -> ExperimentConfig:
    environ = os.environ if environ is None else environ
    for var, (path, parse) in ENV_OVERRIDES.items():
        if var not in environ:
            continue
        try:
            value = parse(environ[var])
        except ValueError as exc:
            raise ConfigError(f"{var}: {exc}") from exc
        obj = cfg
        for attr in path[:-1]:
            obj = getattr(obj, attr)
        setattr(obj, path[-1], value)
    return cfg
