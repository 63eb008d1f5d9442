"""Experiment configuration: INI-style files, defaults, and architecture wiring.

Hidden widths and the latent dimension default to the action-encoding
dimension of the environment (one-hot width for discrete spaces); layer
counts number the weight matrices of each tower.  Sigma defaults come from
a per-environment table; the learning rate defaults to 0.01 everywhere.
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass

from . import envs as _envs
from .policy import ActionSpace
from .towers import ALL_LINEAR, RELU_HIDDEN, TowerSpec, param_count

ITT = "itt"
IOT = "iot"
EXPLICIT = "explicit"

SIGMA_DEFAULTS = {
    _envs.CARTPOLE: 1.0,
    _envs.MOUNTAINCAR: 1.0,
    _envs.MOUNTAINCAR_CONTINUOUS: 1.0,
    _envs.PENDULUM: 1.0,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    env_id: str
    max_steps: int
    kind: str
    latent_dim: int  # 0 resolves to the action-encoding dimension
    state_layers: int
    action_layers: int
    activation: str  # "relu" | "linear"
    num_samples: int
    resample: str  # "per_step" | "per_iter"
    fast_mode: str  # "none" | "srp" | "rft"
    srp_m: int
    srp_budget: int
    median_shift: bool
    rft_features: int
    sigma: float
    learning_rate: float
    perturbations: int  # 0 resolves to the parameter count D
    iterations: int
    lazy_period: int
    seeds: tuple[int, ...]
    out_dir: str

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        return d


_SCHEMA = {
    "env": {"id", "max_steps"},
    "policy": {"kind", "latent_dim", "state_layers", "action_layers", "activation"},
    "actions": {"num_samples", "resample"},
    "fast": {"mode", "srp_m", "srp_budget", "median_shift", "rft_features"},
    "es": {"sigma", "learning_rate", "perturbations", "iterations", "lazy_period"},
    "run": {"seeds", "out_dir"},
}


def _get(parser, section, key, cast, default, where):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        if cast is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc


def load_config(path: str) -> TrainConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser.options(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key [{section}] {key}")
    if not parser.has_option("env", "id"):
        raise ConfigError("[env] id is required")

    env_id = parser.get("env", "id").strip()
    seeds_raw = _get(parser, "run", "seeds", str, "0", "run")
    try:
        seeds = tuple(int(s) for s in seeds_raw.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"[run] seeds: cannot parse {seeds_raw!r}") from exc

    return make_config(
        env_id=env_id,
        max_steps=_get(parser, "env", "max_steps", int, 0, "env"),
        kind=_get(parser, "policy", "kind", str, ITT, "policy"),
        latent_dim=_get(parser, "policy", "latent_dim", int, 0, "policy"),
        state_layers=_get(parser, "policy", "state_layers", int, 2, "policy"),
        action_layers=_get(parser, "policy", "action_layers", int, 1, "policy"),
        activation=_get(parser, "policy", "activation", str, "relu", "policy"),
        num_samples=_get(parser, "actions", "num_samples", int, 1000, "actions"),
        resample=_get(parser, "actions", "resample", str, "per_step", "actions"),
        fast_mode=_get(parser, "fast", "mode", str, "none", "fast"),
        srp_m=_get(parser, "fast", "srp_m", int, 6, "fast"),
        srp_budget=_get(parser, "fast", "srp_budget", int, 128, "fast"),
        median_shift=_get(parser, "fast", "median_shift", bool, True, "fast"),
        rft_features=_get(parser, "fast", "rft_features", int, 256, "fast"),
        sigma=_get(parser, "es", "sigma", float, 0.0, "es"),
        learning_rate=_get(parser, "es", "learning_rate", float, 0.01, "es"),
        perturbations=_get(parser, "es", "perturbations", int, 0, "es"),
        iterations=_get(parser, "es", "iterations", int, 100, "es"),
        lazy_period=_get(parser, "es", "lazy_period", int, 1, "es"),
        seeds=seeds,
        out_dir=_get(parser, "run", "out_dir", str, "runs", "run"),
    )


def make_config(env_id: str, **kw) -> TrainConfig:
    """Build a fully resolved, validated config; unset knobs take defaults."""
    if env_id not in _envs.ENV_IDS:
        raise ConfigError(f"[env] id: unknown environment {env_id!r}")
    spec = _envs.env_spec(env_id)
    defaults = dict(
        max_steps=spec.max_steps,
        kind=ITT,
        latent_dim=0,
        state_layers=2,
        action_layers=1,
        activation="relu",
        num_samples=1000,
        resample="per_step",
        fast_mode="none",
        srp_m=6,
        srp_budget=128,
        median_shift=True,
        rft_features=256,
        sigma=SIGMA_DEFAULTS[env_id],
        learning_rate=0.01,
        perturbations=0,
        iterations=100,
        lazy_period=1,
        seeds=(0,),
        out_dir="runs",
    )
    unknown = set(kw) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    merged = {**defaults, **{k: v for k, v in kw.items() if v is not None}}
    if merged["max_steps"] in (0, None):
        merged["max_steps"] = spec.max_steps
    if not merged["sigma"]:
        merged["sigma"] = SIGMA_DEFAULTS[env_id]
    merged["seeds"] = tuple(int(s) for s in merged["seeds"])
    cfg = TrainConfig(env_id=env_id, **merged)
    validate_config(cfg)
    return cfg


def validate_config(cfg: TrainConfig):
    if cfg.kind not in (ITT, IOT, EXPLICIT):
        raise ConfigError(f"[policy] kind: unknown {cfg.kind!r}")
    if cfg.activation not in ("relu", "linear"):
        raise ConfigError(f"[policy] activation: unknown {cfg.activation!r}")
    if cfg.max_steps < 1:
        raise ConfigError("[env] max_steps must be >= 1")
    if cfg.latent_dim < 0:
        raise ConfigError("[policy] latent_dim must be >= 0")
    if cfg.state_layers < 1 or cfg.action_layers < 1:
        raise ConfigError("[policy] layer counts must be >= 1")
    if cfg.num_samples < 1:
        raise ConfigError("[actions] num_samples must be >= 1")
    if cfg.resample not in ("per_step", "per_iter"):
        raise ConfigError(f"[actions] resample: unknown {cfg.resample!r}")
    if cfg.fast_mode not in ("none", "srp", "rft"):
        raise ConfigError(f"[fast] mode: unknown {cfg.fast_mode!r}")
    if cfg.fast_mode != "none" and cfg.kind != ITT:
        raise ConfigError("[fast] mode requires policy kind itt")
    if not 1 <= cfg.srp_m <= 63:
        raise ConfigError("[fast] srp_m must be in 1..63")
    if cfg.srp_budget < 1:
        raise ConfigError("[fast] srp_budget must be >= 1")
    if cfg.rft_features < 1:
        raise ConfigError("[fast] rft_features must be >= 1")
    if cfg.sigma <= 0:
        raise ConfigError("[es] sigma must be > 0")
    if cfg.learning_rate <= 0:
        raise ConfigError("[es] learning_rate must be > 0")
    if cfg.perturbations < 0:
        raise ConfigError("[es] perturbations must be >= 0")
    if cfg.iterations < 0:
        raise ConfigError("[es] iterations must be >= 0")
    if cfg.lazy_period < 1:
        raise ConfigError("[es] lazy_period must be >= 1")
    if cfg.lazy_period > 1 and cfg.kind != ITT:
        raise ConfigError("[es] lazy_period > 1 requires policy kind itt")
    if not cfg.seeds:
        raise ConfigError("[run] seeds must be non-empty")


@dataclass(frozen=True)
class PolicyArch:
    """Resolved network shapes for one config."""

    kind: str
    env_id: str
    space: ActionSpace
    spec1: TowerSpec  # state tower / energy net / explicit net
    spec2: TowerSpec | None  # action tower (itt only)
    latent_dim: int

    @property
    def d1(self) -> int:
        return param_count(self.spec1)

    @property
    def d2(self) -> int:
        return param_count(self.spec2) if self.spec2 is not None else 0

    @property
    def total_params(self) -> int:
        return self.d1 + self.d2


def build_arch(cfg: TrainConfig) -> PolicyArch:
    spec = _envs.env_spec(cfg.env_id)
    space = spec.action_space
    a = space.dim
    d = cfg.latent_dim if cfg.latent_dim > 0 else a
    act = RELU_HIDDEN if cfg.activation == "relu" else ALL_LINEAR
    hidden = [d] * (cfg.state_layers - 1)
    if cfg.kind == ITT:
        spec1 = TowerSpec(tuple([spec.obs_dim] + hidden + [d]), act)
        spec2 = TowerSpec(tuple([a] + [d] * (cfg.action_layers - 1) + [d]), act)
    elif cfg.kind == IOT:
        spec1 = TowerSpec(tuple([spec.obs_dim + a] + hidden + [1]), act)
        spec2 = None
    else:
        spec1 = TowerSpec(tuple([spec.obs_dim] + hidden + [a]), act)
        spec2 = None
    return PolicyArch(
        kind=cfg.kind, env_id=cfg.env_id, space=space, spec1=spec1, spec2=spec2, latent_dim=d
    )


def config_from_dict(data: dict) -> TrainConfig:
    data = dict(data)
    env_id = data.pop("env_id")
    data["seeds"] = tuple(data.get("seeds", (0,)))
    return make_config(env_id, **data)
