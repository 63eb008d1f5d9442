"""Selection-backend benchmark: brute-force MIP vs SRP probing vs per-pair energies.

Feeds identical state/action batches to each backend and records how many
candidates were scored and the mean wall time per query.  The per-pair
baseline runs the full one-tower energy network on every (state, action)
pair, which is the linear-cost behaviour the two-tower factorization avoids.

Candidate actions are drawn from a synthetic box of the configured latent
dimension: the built-in environments have one-dimensional or enumerated
action spaces, whose latents collapse onto a curve and cannot exercise the
hash partition at large N.  States are standard-normal draws of the
environment's observation width.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _backend
from .config import TrainConfig
from .envs import env_spec
from .policy import ActionSpace, sample_actions
from .rng import Rng, derive
from .srp import build_index, query
from .towers import ALL_LINEAR, RELU_HIDDEN, TowerSpec, forward, forward_batch, param_count

TAG_BENCH_THETA = 0xB0
TAG_BENCH_STATES = 0xB1
TAG_BENCH_ACTIONS = 0xB2
TAG_BENCH_INDEX = 0xB3

BENCH_HEADER = "backend,n,mean_candidates,mean_wall_ms"


@dataclass(frozen=True)
class BenchRow:
    backend: str
    n: int
    mean_candidates: float
    mean_wall_ms: float

    def csv_row(self) -> str:
        return f"{self.backend},{self.n},{self.mean_candidates!r},{self.mean_wall_ms!r}"


def bench_select(cfg: TrainConfig, n_list, trials: int, seed: int = 0) -> list[BenchRow]:
    """Measure the three selection backends on shared random instances."""
    if trials < 1:
        raise ValueError("need trials >= 1")
    obs_dim = env_spec(cfg.env_id).obs_dim
    d = cfg.latent_dim if cfg.latent_dim > 0 else env_spec(cfg.env_id).action_space.dim
    act = RELU_HIDDEN if cfg.activation == "relu" else ALL_LINEAR
    state_spec = TowerSpec(tuple([obs_dim] + [d] * (cfg.state_layers - 1) + [d]), act)
    action_spec = TowerSpec((d, d), act)
    space = ActionSpace.box([-1.0] * d, [1.0] * d)
    iot_spec = TowerSpec(tuple([obs_dim + d] + [d] * (cfg.state_layers - 1) + [1]), act)
    all_linear = 1 if act == ALL_LINEAR else 0

    rng_theta = Rng(derive(seed, TAG_BENCH_THETA))
    theta1 = rng_theta.normals(param_count(state_spec))
    theta2 = rng_theta.normals(param_count(action_spec))
    theta_iot = rng_theta.normals(param_count(iot_spec))
    iot_dims = np.asarray(iot_spec.layer_dims, dtype=np.int64)

    states = Rng(derive(seed, TAG_BENCH_STATES)).normals(trials * obs_dim).reshape(trials, obs_dim)
    state_latents = np.array([forward(state_spec, theta1, s) for s in states])

    rows = []
    for n in n_list:
        n = int(n)
        aset = sample_actions(space, n, Rng(derive(seed, TAG_BENCH_ACTIONS, n)))
        latents = forward_batch(action_spec, theta2, aset.actions)
        index = build_index(
            latents, cfg.srp_m, cfg.median_shift, Rng(derive(seed, TAG_BENCH_INDEX, n))
        )

        t0 = time.perf_counter()
        for s_lat in state_latents:
            _backend.itt_argmax(latents, s_lat)
        brute_ms = (time.perf_counter() - t0) * 1000.0 / trials
        rows.append(BenchRow("itt_brute", n, float(n), brute_ms))

        counts = np.empty(trials)
        t0 = time.perf_counter()
        for q_i, s_lat in enumerate(state_latents):
            _, counts[q_i] = query(index, s_lat, cfg.srp_budget)
        srp_ms = (time.perf_counter() - t0) * 1000.0 / trials
        rows.append(BenchRow("itt_srp", n, float(counts.mean()), srp_ms))

        t0 = time.perf_counter()
        for s in states:
            energies = _backend.iot_energies(iot_dims, theta_iot, all_linear, s, aset.actions)
            int(np.argmin(energies))
        iot_ms = (time.perf_counter() - t0) * 1000.0 / trials
        rows.append(BenchRow("iot_pairs", n, float(n), iot_ms))
    return rows


def fit_loglog_slope(rows: list[BenchRow], backend: str) -> float:
    """Least-squares slope of log(wall time) against log(N) for one backend."""
    pts = [(r.n, r.mean_wall_ms) for r in rows if r.backend == backend]
    if len(pts) < 2:
        raise ValueError(f"need at least two sizes for backend {backend!r}")
    xs = np.log([p[0] for p in pts])
    ys = np.log([max(p[1], 1e-9) for p in pts])
    return float(np.polyfit(xs, ys, 1)[0])
