"""Training loop, checkpoints, evaluation, and architecture comparison.

Every random choice in a run is keyed off (run seed, iteration, worker,
sign) substreams, so outputs are fully determined by the config and seed;
scheduling never changes results because the gradient reduction folds the
2M returns in fixed index order.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass

import numpy as np

from . import _backend
from . import envs as _envs
from . import rft as _rft
from . import srp as _srp
from .config import ITT, PolicyArch, TrainConfig, build_arch, config_from_dict
from .es import lazy_mask
from .numerics import orthogonal_gaussian_ensemble
from .policy import ActionSet, sample_actions
from .rng import Rng, derive
from .stats import paired_t_test
from .towers import forward, forward_batch, init_params

TAG_ENSEMBLE = 0xE5
TAG_ROLLOUT = 0x01
TAG_ACT_STREAM = 0x02
TAG_ASET = 0x03
TAG_BUILD = 0x04
TAG_EVAL_ENV = 0x10
TAG_EVAL_ACT = 0x11
TAG_EVAL_ASET = 0x12
TAG_EVAL_BUILD = 0x13
TAG_SRP_BUILD = 0x20
TAG_RFT_FEATURES = 0x21
TAG_RFT_TREE = 0x22
TAG_FAST_SAMPLE = 0x23

LOG_HEADER = "iter,reward_mean,reward_p10,reward_p90,wall_ms,tower_updated"
CHECKPOINT_VERSION = 1

_EMPTY = np.zeros(0)
_KIND_NUM = {"itt": 0, "iot": 1, "explicit": 2}


@dataclass(frozen=True)
class LogRecord:
    iteration: int
    reward_mean: float
    reward_p10: float
    reward_p90: float
    wall_ms: int
    tower_updated: bool

    def csv_row(self) -> str:
        return (
            f"{self.iteration},{self.reward_mean!r},{self.reward_p10!r},"
            f"{self.reward_p90!r},{self.wall_ms},{int(self.tower_updated)}"
        )


@dataclass
class SeedResult:
    seed: int
    theta: np.ndarray
    log: list[LogRecord]
    artifact_builds: int
    checkpoint_path: str | None
    log_path: str | None


@dataclass
class TrainResult:
    config: TrainConfig
    per_seed: list[SeedResult]


@dataclass(frozen=True)
class EvalSummary:
    mean: float
    std: float
    scores: tuple[float, ...]


@dataclass
class ActionArtifacts:
    """Everything derived from (action tower params, action set)."""

    aset: ActionSet
    latents: np.ndarray
    index: _srp.SrpIndex | None = None
    features: _rft.FavorFeatures | None = None
    tree: _rft.RftTree | None = None


@dataclass
class EpisodeTask:
    env_seed: int
    act_key: int  # per-step sampling stream
    aset_key: int  # per-iteration action-set draw
    build_key: int  # fast-structure construction stream
    shared: ActionArtifacts | None = None


def build_action_artifacts(
    cfg: TrainConfig, arch: PolicyArch, theta2: np.ndarray, aset: ActionSet, build_key: int
) -> ActionArtifacts:
    latents = forward_batch(arch.spec2, theta2, aset.actions)
    art = ActionArtifacts(aset=aset, latents=latents)
    if cfg.fast_mode == "srp":
        art.index = _srp.build_index(
            latents, cfg.srp_m, cfg.median_shift, Rng(derive(build_key, TAG_SRP_BUILD))
        )
    elif cfg.fast_mode == "rft":
        features = _rft.favor_features(
            cfg.rft_features, arch.latent_dim, Rng(derive(build_key, TAG_RFT_FEATURES))
        )
        features.shift = _rft.shift_for(features, latents)
        art.features = features
        psi_rows = _rft.favor_psi_batch(features, latents)
        art.tree = _rft.build_tree(psi_rows, Rng(derive(build_key, TAG_RFT_TREE)))
    return art


def _fixed_action_set(cfg: TrainConfig, arch: PolicyArch, task: EpisodeTask) -> ActionSet | None:
    """The action set held fixed for a whole episode, or None for per-step boxes."""
    if arch.space.kind == "discrete":
        return sample_actions(arch.space, 0, Rng(task.aset_key))
    if cfg.resample == "per_iter":
        return sample_actions(arch.space, cfg.num_samples, Rng(task.aset_key))
    return None


def run_episode(cfg: TrainConfig, arch: PolicyArch, theta: np.ndarray, task: EpisodeTask):
    """One rollout of the policy defined by theta; returns (reward, steps)."""
    if arch.kind == ITT and cfg.fast_mode != "none":
        return _episode_fast(cfg, arch, theta, task)

    env_num = _envs.ENV_IDS[cfg.env_id]
    space = arch.space
    if space.kind == "box":
        lo, hi = space.lo, space.hi
    else:
        lo = hi = _EMPTY
    dims1 = np.asarray(arch.spec1.layer_dims, dtype=np.int64)
    all_linear = 1 if arch.spec1.activation == "all_linear" else 0

    if arch.kind == ITT:
        theta1, theta2 = theta[: arch.d1], theta[arch.d1 :]
        dims2 = np.asarray(arch.spec2.layer_dims, dtype=np.int64)
        aset = task.shared.aset if task.shared is not None else _fixed_action_set(cfg, arch, task)
        if aset is not None:
            latents = (
                task.shared.latents
                if task.shared is not None
                else forward_batch(arch.spec2, theta2, aset.actions)
            )
            return _backend.rollout_episode(
                env_num, cfg.max_steps, task.env_seed, 0, dims1, theta1, dims2, theta2,
                all_linear, aset.actions, latents, 0, 0, lo, hi, 0,
            )
        return _backend.rollout_episode(
            env_num, cfg.max_steps, task.env_seed, 0, dims1, theta1, dims2, theta2,
            all_linear, np.zeros((0, space.dim)), np.zeros((0, 0)), 1, cfg.num_samples,
            lo, hi, task.act_key,
        )

    if arch.kind == "iot":
        aset = _fixed_action_set(cfg, arch, task)
        if aset is not None:
            return _backend.rollout_episode(
                env_num, cfg.max_steps, task.env_seed, 1, dims1, theta, np.zeros(0, np.int64),
                _EMPTY, all_linear, aset.actions, np.zeros((0, 0)), 0, 0, lo, hi, 0,
            )
        return _backend.rollout_episode(
            env_num, cfg.max_steps, task.env_seed, 1, dims1, theta, np.zeros(0, np.int64),
            _EMPTY, all_linear, np.zeros((0, space.dim)), np.zeros((0, 0)), 1,
            cfg.num_samples, lo, hi, task.act_key,
        )

    return _backend.rollout_episode(
        env_num, cfg.max_steps, task.env_seed, 2, dims1, theta, np.zeros(0, np.int64),
        _EMPTY, all_linear, np.zeros((0, space.dim)), np.zeros((0, 0)), 0, 0, lo, hi, 0,
    )


def _episode_fast(cfg: TrainConfig, arch: PolicyArch, theta: np.ndarray, task: EpisodeTask):
    """SRP / RFT selection inside the rollout (pure python path)."""
    theta1, theta2 = theta[: arch.d1], theta[arch.d1 :]
    space = arch.space
    discrete = space.kind == "discrete"
    per_step = not discrete and cfg.resample == "per_step"
    env = _envs.make_env(cfg.env_id, cfg.max_steps)
    sample_rng = Rng(derive(task.act_key, TAG_FAST_SAMPLE))
    a_dim = space.dim
    artifacts = task.shared
    step = 0

    def act(obs):
        nonlocal artifacts, step
        if artifacts is None or (per_step and step > 0):
            if per_step:
                rr = Rng(task.act_key, counter=step * cfg.num_samples * a_dim)
                aset = ActionSet(
                    actions=space.lo
                    + rr.uniforms(cfg.num_samples * a_dim).reshape(cfg.num_samples, a_dim)
                    * (space.hi - space.lo)
                )
                build_key = derive(task.build_key, step)
            else:
                aset = _fixed_action_set(cfg, arch, task)
                build_key = task.build_key
            artifacts = build_action_artifacts(cfg, arch, theta2, aset, build_key)
        s_lat = forward(arch.spec1, theta1, obs)
        if cfg.fast_mode == "srp":
            idx, _ = _srp.query(artifacts.index, s_lat, cfg.srp_budget)
        else:
            psi_s = _rft.favor_psi(artifacts.features, s_lat)
            idx = _rft.sample_action(artifacts.tree, psi_s, sample_rng)
        step += 1
        return idx if discrete else artifacts.aset.actions[idx]

    stats = _envs.rollout(env, act, cfg.max_steps, task.env_seed)
    return stats.total_reward, stats.steps


def train(
    cfg: TrainConfig,
    *,
    timer=time.perf_counter,
    write_outputs: bool = True,
    out_dir: str | None = None,
) -> TrainResult:
    """Run ES training for every seed in the config; write checkpoint + CSV."""
    arch = build_arch(cfg)
    d_total = arch.total_params
    m = cfg.perturbations if cfg.perturbations > 0 else d_total
    if m > d_total:
        raise ValueError(f"[es] perturbations {m} exceeds parameter count {d_total}")
    base = out_dir if out_dir is not None else cfg.out_dir
    per_seed = []
    for seed in cfg.seeds:
        per_seed.append(_train_one_seed(cfg, arch, m, int(seed), timer, write_outputs, base))
    return TrainResult(config=cfg, per_seed=per_seed)


def _train_one_seed(cfg, arch, m, seed, timer, write_outputs, base_dir) -> SeedResult:
    d_total = arch.total_params
    theta = init_params(d_total)
    discrete = arch.space.kind == "discrete"
    one_hot = sample_actions(arch.space, 0, Rng(0)) if discrete else None
    builds = 0
    cache: ActionArtifacts | None = None
    cache_version = -1
    theta2_version = 0
    log: list[LogRecord] = []

    for it in range(cfg.iterations):
        t0 = timer()
        ens = orthogonal_gaussian_ensemble(m, d_total, Rng(derive(seed, TAG_ENSEMBLE, it)))
        update = it % cfg.lazy_period == 0
        if arch.kind == ITT and cfg.lazy_period > 1:
            ens = lazy_mask(ens, (arch.d1, arch.d2), it, cfg.lazy_period)

        shared = None
        if arch.kind == ITT and not update and discrete:
            if cache_version != theta2_version:
                cache = build_action_artifacts(
                    cfg, arch, theta[arch.d1 :], one_hot, derive(seed, TAG_BUILD, it)
                )
                cache_version = theta2_version
                builds += 1
            shared = cache

        returns = np.empty((m, 2))
        for i in range(m):
            aset_key = derive(seed, TAG_ASET, it, i)
            for s_i in (0, 1):
                sign = 1.0 if s_i == 0 else -1.0
                task = EpisodeTask(
                    env_seed=derive(seed, TAG_ROLLOUT, it, i, s_i),
                    act_key=derive(seed, TAG_ACT_STREAM, it, i, s_i),
                    aset_key=aset_key,
                    build_key=derive(seed, TAG_BUILD, it, i, s_i),
                    shared=shared,
                )
                try:
                    reward, _ = run_episode(cfg, arch, theta + sign * cfg.sigma * ens[i], task)
                except Exception as exc:
                    raise RuntimeError(
                        f"rollout failed at iteration {it}, worker {i}, sign {'+-'[s_i]}"
                    ) from exc
                returns[i, s_i] = reward

        diff = returns[:, 0] - returns[:, 1]
        grad = (diff @ ens) / (2.0 * cfg.sigma * m)
        theta = theta + cfg.learning_rate * grad
        if update:
            theta2_version += 1

        all_returns = returns.ravel()
        wall_ms = int(round((timer() - t0) * 1000.0))
        log.append(
            LogRecord(
                iteration=it,
                reward_mean=float(all_returns.mean()),
                reward_p10=float(np.percentile(all_returns, 10)),
                reward_p90=float(np.percentile(all_returns, 90)),
                wall_ms=wall_ms,
                tower_updated=update,
            )
        )

    checkpoint_path = log_path = None
    if write_outputs:
        os.makedirs(base_dir, exist_ok=True)
        checkpoint_path = os.path.join(base_dir, f"checkpoint_seed{seed}.json")
        log_path = os.path.join(base_dir, f"log_seed{seed}.csv")
        save_checkpoint(checkpoint_path, cfg, theta, cfg.iterations, seed)
        with open(log_path, "w") as fh:
            fh.write(LOG_HEADER + "\n")
            for rec in log:
                fh.write(rec.csv_row() + "\n")
    return SeedResult(
        seed=seed,
        theta=theta,
        log=log,
        artifact_builds=builds,
        checkpoint_path=checkpoint_path,
        log_path=log_path,
    )


def save_checkpoint(path: str, cfg: TrainConfig, theta: np.ndarray, iteration: int, seed: int):
    doc = {
        "format_version": CHECKPOINT_VERSION,
        "config": cfg.to_dict(),
        "theta": [float(x) for x in np.asarray(theta).ravel()],
        "iteration": int(iteration),
        "seed": int(seed),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path: str) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('format_version')!r}")
    return doc


def evaluate(checkpoint, episodes: int = 10, seed: int = 0) -> EvalSummary:
    """Deterministic evaluation rollouts at a checkpoint."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    doc = load_checkpoint(checkpoint) if isinstance(checkpoint, (str, os.PathLike)) else checkpoint
    cfg = config_from_dict(doc["config"])
    arch = build_arch(cfg)
    theta = np.asarray(doc["theta"], dtype=np.float64)
    if theta.shape != (arch.total_params,):
        raise ValueError(
            f"checkpoint has {theta.size} parameters, architecture needs {arch.total_params}"
        )
    shared = None
    if arch.kind == ITT and arch.space.kind == "discrete" and cfg.fast_mode == "none":
        shared = build_action_artifacts(
            cfg,
            arch,
            theta[arch.d1 :],
            sample_actions(arch.space, 0, Rng(0)),
            derive(seed, TAG_EVAL_BUILD),
        )
    scores = []
    for ep in range(episodes):
        task = EpisodeTask(
            env_seed=derive(seed, TAG_EVAL_ENV, ep),
            act_key=derive(seed, TAG_EVAL_ACT, ep),
            aset_key=derive(seed, TAG_EVAL_ASET, ep),
            build_key=derive(seed, TAG_EVAL_BUILD, ep),
            shared=shared,
        )
        reward, _ = run_episode(cfg, arch, theta, task)
        scores.append(float(reward))
    arr = np.asarray(scores)
    return EvalSummary(mean=float(arr.mean()), std=float(arr.std()), scores=tuple(scores))


COMPARE_HEADER = "task,arch,mean,std,seeds"
PVALUES_HEADER = "arch_a,arch_b,t,p"


@dataclass
class CompareResult:
    rows: list[tuple[str, str, float, float, int]]
    pvalues: list[tuple[str, str, float, float]]
    scores: list[list[float]]  # per config, per seed


def compare(
    cfgs: list[TrainConfig],
    *,
    out_dir: str | None = None,
    episodes: int = 10,
    timer=time.perf_counter,
) -> CompareResult:
    """Train each config on the shared seed list and tabulate final scores."""
    if len(cfgs) < 2:
        raise ValueError("compare needs at least two configs")
    env_ids = {c.env_id for c in cfgs}
    if len(env_ids) != 1:
        raise ValueError(f"compare needs a shared environment, got {sorted(env_ids)}")
    seed_lists = {c.seeds for c in cfgs}
    if len(seed_lists) != 1:
        raise ValueError("compare needs a shared seed list")
    seeds = cfgs[0].seeds

    scores: list[list[float]] = []
    for i, cfg in enumerate(cfgs):
        sub = None
        if out_dir is not None:
            sub = os.path.join(out_dir, f"cfg{i}_{cfg.kind}")
        result = train(cfg, write_outputs=out_dir is not None, out_dir=sub, timer=timer)
        per_seed = []
        for sr in result.per_seed:
            doc = {
                "format_version": CHECKPOINT_VERSION,
                "config": cfg.to_dict(),
                "theta": [float(x) for x in sr.theta],
                "iteration": cfg.iterations,
                "seed": sr.seed,
            }
            per_seed.append(evaluate(doc, episodes=episodes, seed=sr.seed).mean)
        scores.append(per_seed)

    rows = []
    for cfg, sc in zip(cfgs, scores):
        arr = np.asarray(sc)
        rows.append((cfg.env_id, cfg.kind, float(arr.mean()), float(arr.std()), len(seeds)))
    pvalues = []
    for i in range(len(cfgs)):
        for j in range(i + 1, len(cfgs)):
            t, p = paired_t_test(scores[i], scores[j])
            pvalues.append((f"{cfgs[i].kind}[{i}]", f"{cfgs[j].kind}[{j}]", t, p))

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "compare.csv"), "w") as fh:
            fh.write(COMPARE_HEADER + "\n")
            for task, archname, mean, std, n in rows:
                fh.write(f"{task},{archname},{mean!r},{std!r},{n}\n")
        with open(os.path.join(out_dir, "pvalues.csv"), "w") as fh:
            fh.write(PVALUES_HEADER + "\n")
            for a, b, t, p in pvalues:
                fh.write(f"{a},{b},{t!r},{p!r}\n")
    return CompareResult(rows=rows, pvalues=pvalues, scores=scores)
