"""Declarative run configuration, read from YAML or JSON.

Every section is a small dataclass; ``RunConfig.from_dict(cfg.to_dict())``
returns an equal object, and unknown or missing keys raise
:class:`~rarebench.errors.ConfigError` naming the key.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import MISSING, asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError

STAGES = {"ffs": 0, "split": 1, "search": 2, "model": 3, "deploy": 4, "weights": 5, "simulate": 6}


def derive_seed(master: int, stage: str) -> int:
    """Stage seed spawned from the master seed; stable across runs and platforms."""
    ss = np.random.SeedSequence(int(master), spawn_key=(STAGES[stage],))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass
class ProcessSection:
    name: str = "exothermic"
    params: dict = field(default_factory=dict)
    noise_variance: float | None = None
    dt: float | None = None
    initial: str | list = "default"


@dataclass
class BasinSection:
    lambda_a: float
    lambda_b: float


@dataclass
class LadderSection:
    values: list | None = None
    lambda_0: float | None = None
    lambda_n: float | None = None
    n: int | None = None

    def __post_init__(self):
        if self.values is None and None in (self.lambda_0, self.lambda_n, self.n):
            raise ConfigError("ladder needs 'values' or all of 'lambda_0', 'lambda_n', 'n'")
        if self.values is not None and len(self.values) < 2:
            raise ConfigError("ladder needs at least two interfaces")


@dataclass
class BranchSection:
    m: int | list = 10
    n_seeds: int = 10
    max_steps: int = 1_000_000


@dataclass
class FfsSection:
    response_name: str | None = None
    values: list = field(default_factory=list)
    burn_in_steps: int = 0
    flux_max_steps: int = 50_000_000


@dataclass
class SimulateSection:
    t_sim: float = 10.0
    stop_on_basin: bool = False


@dataclass
class FilterSection:
    c: float | list = 2.0


@dataclass
class SplitSection:
    train_fraction: float = 0.7


@dataclass
class ModelSection:
    kind: str
    space: dict | None = None
    params: dict | None = None


@dataclass
class SearchSection:
    budget: int = 30
    sampler: str = "random"
    k: int = 3
    grid_levels: int = 3


@dataclass
class AlarmSection:
    thresholds: list = field(default_factory=lambda: [0.2, 0.5])


@dataclass
class DeploymentSection:
    n_sim: int = 10
    t_sim: float = 3000.0
    call_freq: int = 200
    response_value: float | None = None
    seeds: list = field(default_factory=list)


@dataclass
class WeightSection:
    count: int = 500
    alarm_cap: float = 4.0
    reports: list = field(default_factory=list)


SECTIONS = {
    "process": ProcessSection, "basins": BasinSection, "ladder": LadderSection, "branch": BranchSection,
    "ffs": FfsSection, "simulate": SimulateSection, "filter": FilterSection, "split": SplitSection,
    "search": SearchSection, "alarms": AlarmSection, "deployment": DeploymentSection, "weights": WeightSection,
}


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"section {where!r} must be a mapping")
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where!r}")
    for f in fields(cls):
        if f.default is MISSING and f.default_factory is MISSING and f.name not in data:
            raise ConfigError(f"missing key {where}.{f.name}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"bad section {where!r}: {exc}") from None


@dataclass
class RunConfig:
    seed: int = 0
    out: str = "runs/default"
    process: ProcessSection | None = None
    basins: BasinSection | None = None
    ladder: LadderSection | None = None
    branch: BranchSection | None = None
    ffs: FfsSection | None = None
    simulate: SimulateSection | None = None
    filter: FilterSection | None = None
    split: SplitSection | None = None
    models: list | None = None
    search: SearchSection | None = None
    alarms: AlarmSection | None = None
    deployment: DeploymentSection | None = None
    weights: WeightSection | None = None

    # ------------------------------------------------------------------

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown section(s) {sorted(unknown)}")
        kw = {}
        for key, value in d.items():
            if value is None:
                kw[key] = None
            elif key in SECTIONS:
                kw[key] = _build(SECTIONS[key], value, key)
            elif key == "models":
                if not isinstance(value, list) or not value:
                    raise ConfigError("'models' must be a non-empty list")
                kw[key] = [_build(ModelSection, m, f"models[{i}]") for i, m in enumerate(value)]
            else:
                kw[key] = value
        cfg = cls(**kw)
        if not isinstance(cfg.seed, int) or cfg.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        return cfg

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if f.name == "models":
                out[f.name] = [asdict(m) for m in v]
            elif hasattr(v, "__dataclass_fields__"):
                out[f.name] = asdict(v)
            else:
                out[f.name] = v
        return out

    def require(self, *names: str) -> None:
        for n in names:
            if getattr(self, n) is None:
                raise ConfigError(f"missing config section {n!r}")

    def hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, default=_json_default)
        return hashlib.sha256(text.encode()).hexdigest()

    def stage_seed(self, stage: str) -> int:
        return derive_seed(self.seed, stage)


def _json_default(o):
    if isinstance(o, float) and math.isinf(o):
        return "inf"
    raise TypeError(type(o))


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (ValueError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return RunConfig.from_dict(data or {})


def save_config(cfg: RunConfig, path) -> None:
    path = Path(path)
    d = cfg.to_dict()
    if path.suffix == ".json":
        path.write_text(json.dumps(d, indent=2))
    else:
        path.write_text(yaml.safe_dump(d, sort_keys=False))
