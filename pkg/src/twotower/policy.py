"""Action selection for the three policy architectures.

Two-tower selection scores a state latent against precomputed action
latents and takes the row with the maximal inner product (or samples from
the softmax over those scores).  The one-tower baseline runs the full
energy network once per candidate action; the explicit baseline maps the
state straight to an action.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import argmax_first
from .rng import Rng
from .towers import TowerSpec, forward, forward_batch


@dataclass(frozen=True)
class ActionSpace:
    kind: str  # "discrete" | "box"
    k: int = 0
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None

    @classmethod
    def discrete(cls, k: int) -> "ActionSpace":
        if k < 2:
            raise ValueError("discrete space needs k >= 2")
        return cls(kind="discrete", k=int(k))

    @classmethod
    def box(cls, lo, hi) -> "ActionSpace":
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box bounds must be 1-d arrays of equal shape")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        if not np.all(lo < hi):
            raise ValueError("box needs lo < hi componentwise")
        return cls(kind="box", lo=lo, hi=hi)

    @property
    def dim(self) -> int:
        """Width of the action encoding fed to networks (one-hot for discrete)."""
        return self.k if self.kind == "discrete" else self.lo.shape[0]


@dataclass
class ActionSet:
    actions: np.ndarray  # (N, a) rows; one-hot rows for discrete spaces
    latents: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.actions.shape[0]


def sample_actions(space: ActionSpace, n: int, rng: Rng) -> ActionSet:
    """Discrete: the full one-hot enumeration (n ignored); box: n iid uniform rows."""
    if space.kind == "discrete":
        return ActionSet(actions=np.eye(space.k))
    if n < 1:
        raise ValueError("need n >= 1 sampled actions")
    a = space.lo.shape[0]
    u = rng.uniforms(int(n) * a).reshape(int(n), a)
    return ActionSet(actions=space.lo + u * (space.hi - space.lo))


def action_latents(action_spec: TowerSpec, theta2: np.ndarray, aset: ActionSet) -> np.ndarray:
    """(N, d) matrix whose row i is the action tower applied to action i."""
    return forward_batch(action_spec, theta2, aset.actions)


def itt_select(
    state,
    state_spec: TowerSpec,
    theta1: np.ndarray,
    latents: np.ndarray,
    aset: ActionSet,
) -> tuple[np.ndarray, int]:
    """Maximum-inner-product choice: one state forward plus one (N, d) matvec."""
    if aset.size == 0:
        raise ValueError("empty action set")
    s_lat = forward(state_spec, theta1, state)
    idx = argmax_first(latents @ s_lat)
    return aset.actions[idx], idx


def itt_softmax_sample(state_latent, latents: np.ndarray, rng: Rng) -> int:
    """Sample index i with probability proportional to exp(latents[i] . state latent).

    Scores are max-shifted before exponentiation, which leaves the
    distribution unchanged.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        z = np.asarray(latents, dtype=np.float64) @ np.asarray(state_latent, dtype=np.float64)
    if z.size == 0:
        raise ValueError("empty action set")
    if not np.all(np.isfinite(z)):
        raise ValueError("non-finite selection score")
    z = z - z.max()
    p = np.exp(z)
    p /= p.sum()
    u = rng.uniform()
    return min(int(np.searchsorted(np.cumsum(p), u, side="right")), z.size - 1)


def iot_select(
    state, energy_spec: TowerSpec, theta: np.ndarray, aset: ActionSet
) -> tuple[np.ndarray, int]:
    """Argmin of the one-tower energy over the action set: N full network runs."""
    if aset.size == 0:
        raise ValueError("empty action set")
    s = np.asarray(state, dtype=np.float64)
    energies = np.empty(aset.size)
    for i in range(aset.size):
        energies[i] = forward(energy_spec, theta, np.concatenate([s, aset.actions[i]]))[0]
    idx = argmax_first(-energies)
    return aset.actions[idx], idx


def explicit_act(state, net_spec: TowerSpec, theta: np.ndarray, space: ActionSpace) -> np.ndarray:
    """Direct state-to-action network; clamp for boxes, one-hot argmax for discrete."""
    y = forward(net_spec, theta, state)
    if space.kind == "discrete":
        if y.shape != (space.k,):
            raise ValueError(f"logits have shape {y.shape}, space needs ({space.k},)")
        out = np.zeros(space.k)
        out[argmax_first(y)] = 1.0
        return out
    if y.shape != space.lo.shape:
        raise ValueError(f"output has shape {y.shape}, box needs {space.lo.shape}")
    return np.clip(y, space.lo, space.hi)
