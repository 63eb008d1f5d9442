"""Pure numpy backend: reference semantics for the compiled kernels.

Each function here mirrors one hot kernel in ``_kernels.pyx``; the compiled
module must agree with this one on every draw sequence and decision rule.
Keep the two in lockstep.
"""

from __future__ import annotations

import numpy as np

from . import envs as _envs
from . import policy as _policy
from . import towers as _towers
from .numerics import argmax_first, orthogonal_gaussian_ensemble
from .rng import GOLDEN, MASK64, Rng, derive, normals, raw_array, uniforms

BACKEND_NAME = "pure"

_U64 = np.uint64

KIND_ITT = 0
KIND_IOT = 1
KIND_EXPLICIT = 2

_ENV_NAMES = {v: k for k, v in _envs.ENV_IDS.items()}


def fill_u64(key: int, start: int, n: int) -> np.ndarray:
    return raw_array(key, np.arange(int(start), int(start) + int(n), dtype=np.uint64))


def fill_uniform(key: int, start: int, n: int) -> np.ndarray:
    return uniforms(key, start, n)


def fill_normal(key: int, start: int, n: int) -> np.ndarray:
    return normals(key, start, n)


def _keyed_normals(keys: np.ndarray, start_normal: int, n: int) -> np.ndarray:
    """(B, n) normal draws, row b from stream keys[b]; matches rng.normals."""
    raw_base = np.arange(0, 2 * n, 2, dtype=np.uint64) + _U64(2 * start_normal)
    k = keys.astype(np.uint64)[:, None]
    z1 = k + (raw_base[None, :] + _U64(1)) * _U64(GOLDEN)
    z2 = k + (raw_base[None, :] + _U64(2)) * _U64(GOLDEN)
    for z in (z1, z2):
        z ^= z >> _U64(30)
        z *= _U64(0xBF58476D1CE4E5B9)
        z ^= z >> _U64(27)
        z *= _U64(0x94D049BB133111EB)
        z ^= z >> _U64(31)
    inv53 = 1.0 / (1 << 53)
    u1 = ((z1 >> _U64(11)).astype(np.float64) + 1.0) * inv53
    u2 = (z2 >> _U64(11)).astype(np.float64) * inv53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def quad_mc(
    kind: int,
    g: np.ndarray,
    hessian: np.ndarray,
    constant: float,
    theta: np.ndarray,
    sigma: float,
    m: int,
    trials: int,
    key: int,
) -> tuple[float, np.ndarray]:
    """Monte Carlo MSE and mean of the AT (kind 0) / FD (kind 1) estimator.

    Trial t consumes the substream derive(key, t): normal indices
    [0, m*d) build the ensemble, [m*d, 2*m*d) restore the row norms.
    """
    g = np.asarray(g, dtype=np.float64)
    hessian = np.asarray(hessian, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    d = g.shape[0]
    grad = g + hessian @ theta
    f0 = float(constant + g @ theta + 0.5 * theta @ (hessian @ theta))

    acc_mse = 0.0
    acc_mean = np.zeros(d)
    chunk = max(1, min(4096, int(trials)))
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        keys = np.array([derive(key, t) for t in range(done, done + b)], dtype=np.uint64)
        base = _keyed_normals(keys, 0, m * d).reshape(b, m, d)
        q = np.empty_like(base)
        ok = np.ones(b, dtype=bool)
        for i in range(m):
            v = base[:, i, :].copy()
            for j in range(i):
                v -= np.einsum("bd,bd->b", v, q[:, j, :])[:, None] * q[:, j, :]
            nv = np.sqrt(np.einsum("bd,bd->b", v, v))
            ref = np.sqrt(np.einsum("bd,bd->b", base[:, i, :], base[:, i, :]))
            ok &= nv > 1e-12 * ref
            with np.errstate(invalid="ignore", divide="ignore"):
                q[:, i, :] = v / np.where(nv > 0, nv, 1.0)[:, None]
        chi = _keyed_normals(keys, m * d, m * d).reshape(b, m, d)
        norms = np.sqrt(np.einsum("bmd,bmd->bm", chi, chi))
        eps = q * norms[:, :, None]
        if not np.all(ok):
            # essentially unreachable: fall back to the scalar reference path
            for t in np.nonzero(~ok)[0]:
                eps[t] = orthogonal_gaussian_ensemble(m, d, Rng(int(keys[t])))

        xs_p = theta[None, None, :] + sigma * eps
        vals_p = (
            constant
            + xs_p @ g
            + 0.5 * np.einsum("bmd,bmd->bm", xs_p, xs_p @ hessian)
        )
        if kind == 0:
            xs_m = theta[None, None, :] - sigma * eps
            vals_m = (
                constant
                + xs_m @ g
                + 0.5 * np.einsum("bmd,bmd->bm", xs_m, xs_m @ hessian)
            )
            est = np.einsum("bm,bmd->bd", vals_p - vals_m, eps) / (2.0 * sigma * m)
        else:
            est = np.einsum("bm,bmd->bd", vals_p - f0, eps) / (sigma * m)

        err = est - grad[None, :]
        acc_mse += float(np.einsum("bd,bd->", err, err))
        acc_mean += est.sum(axis=0)
        done += b
    return acc_mse / trials, acc_mean / trials


def itt_argmax(latents: np.ndarray, state_latent: np.ndarray) -> int:
    return argmax_first(np.asarray(latents) @ np.asarray(state_latent))


def iot_energies(
    dims: np.ndarray, params: np.ndarray, all_linear: int, state: np.ndarray, actions: np.ndarray
) -> np.ndarray:
    """Energy of every (state, action) pair through the one-tower network."""
    spec = _towers.TowerSpec(
        tuple(int(x) for x in dims),
        _towers.ALL_LINEAR if all_linear else _towers.RELU_HIDDEN,
    )
    state = np.asarray(state, dtype=np.float64)
    actions = np.asarray(actions, dtype=np.float64)
    inputs = np.concatenate(
        [np.repeat(state[None, :], actions.shape[0], axis=0), actions], axis=1
    )
    return _towers.forward_batch(spec, np.asarray(params, dtype=np.float64), inputs)[:, 0]


def srp_query(
    bucket_codes: np.ndarray,
    bucket_starts: np.ndarray,
    bucket_members: np.ndarray,
    latents: np.ndarray,
    state_latent: np.ndarray,
    state_code: int,
    budget: int,
) -> tuple[int, int]:
    """Hamming-ordered bucket probe with exact rescoring of the candidates."""
    codes = bucket_codes.astype(np.uint64)
    dists = np.bitwise_count(codes ^ _U64(int(state_code)))
    order = np.lexsort((codes, dists))
    chunks = []
    count = 0
    for b in order:
        members = bucket_members[bucket_starts[b] : bucket_starts[b + 1]]
        chunks.append(members)
        count += members.size
        if count >= budget:
            break
    cand = np.concatenate(chunks)
    scores = np.asarray(latents)[cand] @ np.asarray(state_latent)
    best = float(scores.max())
    best_idx = int(cand[scores == best].min())
    return best_idx, int(cand.size)


def rollout_episode(
    env_id: int,
    max_steps: int,
    env_seed: int,
    kind: int,
    dims1: np.ndarray,
    params1: np.ndarray,
    dims2: np.ndarray,
    params2: np.ndarray,
    all_linear: int,
    actions: np.ndarray,
    latents: np.ndarray,
    sample_per_step: int,
    n_samples: int,
    lo: np.ndarray,
    hi: np.ndarray,
    act_key: int,
) -> tuple[float, int]:
    """One full episode; see the harness for the argument conventions.

    Per-step action sampling at step t consumes n_samples * a_dim uniforms
    from ``act_key`` starting at counter t * n_samples * a_dim (row-major).
    """
    act_str = _towers.ALL_LINEAR if all_linear else _towers.RELU_HIDDEN
    spec1 = _towers.TowerSpec(tuple(int(x) for x in dims1), act_str)
    spec2 = (
        _towers.TowerSpec(tuple(int(x) for x in dims2), act_str) if len(dims2) >= 2 else None
    )
    params1 = np.asarray(params1, dtype=np.float64)
    params2 = np.asarray(params2, dtype=np.float64)
    env = _envs.make_env(_ENV_NAMES[int(env_id)], max_steps)
    discrete = env.spec.action_space.kind == "discrete"
    fixed = actions.shape[0] > 0
    a_dim = actions.shape[1] if fixed else lo.shape[0]

    fixed_latents = None
    if kind == KIND_ITT and fixed:
        if latents.shape[0] > 0:
            fixed_latents = np.asarray(latents, dtype=np.float64)
        else:
            fixed_latents = _towers.forward_batch(spec2, params2, actions)

    obs = env.reset(env_seed)
    total = 0.0
    steps = 0
    while not env.done:
        if kind == KIND_EXPLICIT:
            y = _towers.forward(spec1, params1, obs)
            action = argmax_first(y) if discrete else np.clip(y, lo, hi)
        else:
            if fixed:
                acts = actions
            else:
                rr = Rng(act_key, counter=steps * n_samples * a_dim)
                u = rr.uniforms(n_samples * a_dim).reshape(n_samples, a_dim)
                acts = lo + u * (hi - lo)
            if kind == KIND_ITT:
                s_lat = _towers.forward(spec1, params1, obs)
                if fixed:
                    scores = fixed_latents @ s_lat
                else:
                    scores = _towers.forward_batch(spec2, params2, acts) @ s_lat
                idx = argmax_first(scores)
            else:
                energies = iot_energies(dims1, params1, all_linear, obs, acts)
                idx = argmax_first(-energies)
            action = idx if discrete else acts[idx]
        obs, reward, _ = env.step(action)
        total += reward
        steps += 1
    return total, steps
