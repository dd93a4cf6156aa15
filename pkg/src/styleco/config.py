"""Run configuration: nested dataclasses loaded from TOML or JSON."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class ConfigError(ValueError):
    pass


@dataclass
class RenderConfig:
    views: int = 12
    image_size: int = 200
    fov: float = 35.0
    elevation: float = 30.0
    sharp_threshold_deg: float = 40.0
    seeds: int = 30
    dense_factor: int = 3


@dataclass
class PatchConfig:
    size: int = 48
    k: int = 50
    min_ink: float = 0.01
    kmeans_iters: int = 100


@dataclass
class FusionConfig:
    n_factors: int = 10
    eta: float = 0.2
    lam: float = 20.0
    beta: float = 1.0
    gamma: float = 0.1
    max_iters: int = 500
    tol: float = 1e-5
    restarts: int = 3


@dataclass
class ClusterConfig:
    c_max: int = 12
    mu: float = 0.07
    tau_s: float = 0.55
    tau_b: float = 0.7
    max_rounds: int = 10
    churn: float = 0.05


@dataclass
class SimplifyConfig:
    target_reduction: float = 0.7
    style_penalty: float = 100.0
    mode: str = "penalty"
    best_effort: bool = False

    def __post_init__(self):
        if not 0 <= self.target_reduction < 1:
            raise ConfigError("target_reduction must lie in [0, 1)")
        if self.style_penalty < 1:
            raise ConfigError("style_penalty must be >= 1")
        if self.mode not in ("penalty", "hard-lock"):
            raise ConfigError("mode must be 'penalty' or 'hard-lock'")


@dataclass
class SynthConfig:
    n_shapes: int = 40
    label_fraction: float = 0.3
    n_triplets: int = 100
    yaw: float = 15.0
    subdiv: int = 6

    def __post_init__(self):
        if self.n_shapes < 2:
            raise ConfigError("synth.n_shapes must be >= 2")
        if not 0 <= self.label_fraction <= 1:
            raise ConfigError("synth.label_fraction must lie in [0, 1]")


@dataclass
class PathConfig:
    manifest: str | None = None
    constraints: str | None = None
    truth: str | None = None
    out_dir: str = "run"
    cache_dir: str | None = None


@dataclass
class RunConfig:
    seed: int = 0
    mode: str = "unsupervised"
    jobs: int = 1
    render: RenderConfig = field(default_factory=RenderConfig)
    patches: PatchConfig = field(default_factory=PatchConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    simplify: SimplifyConfig = field(default_factory=SimplifyConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    paths: PathConfig = field(default_factory=PathConfig)

    def __post_init__(self):
        if self.mode not in ("unsupervised", "labels", "triplets"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.render.views < 1:
            raise ConfigError("render.views must be >= 1")
        if not 0 < self.fusion.eta <= 1:
            raise ConfigError("fusion.eta must lie in (0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **sections) -> "RunConfig":
        """Copy with top-level fields or ``section__field`` overrides."""
        top, nested = {}, {}
        for key, val in sections.items():
            if "__" in key:
                sec, name = key.split("__", 1)
                nested.setdefault(sec, {})[name] = val
            else:
                top[key] = val
        for sec, vals in nested.items():
            top[sec] = dataclasses.replace(getattr(self, sec), **vals)
        return dataclasses.replace(self, **top)


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a table")
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kw = {}
    for name, val in data.items():
        default = known[name].default_factory if known[name].default_factory is not dataclasses.MISSING else None
        if default is not None and dataclasses.is_dataclass(default):
            kw[name] = _build(default, val, f"{where}.{name}")
        else:
            kw[name] = val
    try:
        return cls(**kw)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_from_dict(data: dict) -> RunConfig:
    return _build(RunConfig, data, "config")


def load_config(path) -> RunConfig:
    """Load a TOML (``.toml``) or JSON config; relative paths resolve against its folder."""
    path = Path(path)
    try:
        if path.suffix.lower() == ".toml":
            data = tomllib.loads(path.read_text())
        else:
            data = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    cfg = config_from_dict(data)
    base = path.parent
    p = cfg.paths
    for name in ("manifest", "constraints", "truth", "out_dir", "cache_dir"):
        val = getattr(p, name)
        if val is not None and not Path(val).is_absolute():
            setattr(p, name, str(base / val))
    return cfg
