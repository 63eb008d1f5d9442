"""Seedable classic-control environments and the rollout loop.

Dynamics constants are pinned to the standard classic-control values so
scores are comparable with the common benchmark tasks of the same names.
The only stochasticity is the initial state; everything is deterministic
given (seed, policy).  Scalar math goes through libm so the compiled
rollout kernel reproduces trajectories bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .policy import ActionSpace
from .rng import Rng, derive

TAG_ENV_INIT = 0xE0

CARTPOLE = "cartpole"
MOUNTAINCAR = "mountaincar"
MOUNTAINCAR_CONTINUOUS = "mountaincar_continuous"
PENDULUM = "pendulum"

ENV_IDS = {CARTPOLE: 0, MOUNTAINCAR: 1, MOUNTAINCAR_CONTINUOUS: 2, PENDULUM: 3}


@dataclass(frozen=True)
class EnvSpec:
    id: str
    obs_dim: int
    action_space: ActionSpace
    max_steps: int

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass(frozen=True)
class RolloutStats:
    total_reward: float
    steps: int
    seed: int


class _Env:
    """Single-owner mutable environment; construct one per worker."""

    spec: EnvSpec

    def __init__(self, max_steps: int | None = None):
        spec = self._default_spec()
        if max_steps is not None:
            spec = EnvSpec(spec.id, spec.obs_dim, spec.action_space, int(max_steps))
        self.spec = spec
        self._done = True
        self._steps = 0

    def reset(self, seed: int) -> np.ndarray:
        rng = Rng(derive(int(seed), TAG_ENV_INIT))
        self._init_state(rng)
        self._done = False
        self._steps = 0
        return self._observe()

    def step(self, action):
        if self._done:
            raise RuntimeError("step() called on a finished episode")
        reward, terminated = self._step_dynamics(action)
        self._steps += 1
        if terminated or self._steps >= self.spec.max_steps:
            self._done = True
        return self._observe(), reward, self._done

    @property
    def done(self) -> bool:
        return self._done

    def _default_spec(self) -> EnvSpec:
        raise NotImplementedError

    def _init_state(self, rng: Rng):
        raise NotImplementedError

    def _observe(self) -> np.ndarray:
        raise NotImplementedError

    def _step_dynamics(self, action) -> tuple[float, bool]:
        raise NotImplementedError


class CartPole(_Env):
    """Pole balancing; +1 reward per step, fails at |x| > 2.4 or |angle| > 12 deg."""

    GRAVITY = 9.8
    MASS_CART = 1.0
    MASS_POLE = 0.1
    TOTAL_MASS = 1.1
    HALF_LENGTH = 0.5
    POLE_MASS_LENGTH = 0.05
    FORCE_MAG = 10.0
    TAU = 0.02
    X_LIMIT = 2.4
    THETA_LIMIT = 12.0 * 2.0 * math.pi / 360.0

    def _default_spec(self) -> EnvSpec:
        return EnvSpec(CARTPOLE, 4, ActionSpace.discrete(2), 500)

    def _init_state(self, rng: Rng):
        u = rng.uniforms(4)
        self.x, self.x_dot, self.theta, self.theta_dot = (-0.05 + 0.1 * u).tolist()

    def _observe(self) -> np.ndarray:
        return np.array([self.x, self.x_dot, self.theta, self.theta_dot])

    def _step_dynamics(self, action) -> tuple[float, bool]:
        force = self.FORCE_MAG if int(action) == 1 else -self.FORCE_MAG
        cos_t = math.cos(self.theta)
        sin_t = math.sin(self.theta)
        temp = (force + self.POLE_MASS_LENGTH * self.theta_dot * self.theta_dot * sin_t) / self.TOTAL_MASS
        theta_acc = (self.GRAVITY * sin_t - cos_t * temp) / (
            self.HALF_LENGTH * (4.0 / 3.0 - self.MASS_POLE * cos_t * cos_t / self.TOTAL_MASS)
        )
        x_acc = temp - self.POLE_MASS_LENGTH * theta_acc * cos_t / self.TOTAL_MASS
        self.x += self.TAU * self.x_dot
        self.x_dot += self.TAU * x_acc
        self.theta += self.TAU * self.theta_dot
        self.theta_dot += self.TAU * theta_acc
        failed = abs(self.x) > self.X_LIMIT or abs(self.theta) > self.THETA_LIMIT
        return 1.0, failed


class MountainCar(_Env):
    """Discrete push left / none / right; -1 per step until the goal at 0.5."""

    MIN_POS = -1.2
    MAX_POS = 0.6
    MAX_SPEED = 0.07
    FORCE = 0.001
    GRAVITY = 0.0025
    GOAL = 0.5

    def _default_spec(self) -> EnvSpec:
        return EnvSpec(MOUNTAINCAR, 2, ActionSpace.discrete(3), 200)

    def _init_state(self, rng: Rng):
        self.position = -0.6 + 0.2 * rng.uniform()
        self.velocity = 0.0

    def _observe(self) -> np.ndarray:
        return np.array([self.position, self.velocity])

    def _step_dynamics(self, action) -> tuple[float, bool]:
        self.velocity += (int(action) - 1) * self.FORCE - self.GRAVITY * math.cos(3.0 * self.position)
        self.velocity = min(max(self.velocity, -self.MAX_SPEED), self.MAX_SPEED)
        self.position += self.velocity
        self.position = min(max(self.position, self.MIN_POS), self.MAX_POS)
        if self.position <= self.MIN_POS and self.velocity < 0.0:
            self.velocity = 0.0
        return -1.0, self.position >= self.GOAL


class MountainCarContinuous(_Env):
    """Throttle in [-1, 1]; +100 at the goal (0.45) minus 0.1 * throttle^2 per step."""

    MIN_POS = -1.2
    MAX_POS = 0.6
    MAX_SPEED = 0.07
    POWER = 0.0015
    GRAVITY = 0.0025
    GOAL = 0.45

    def _default_spec(self) -> EnvSpec:
        return EnvSpec(MOUNTAINCAR_CONTINUOUS, 2, ActionSpace.box([-1.0], [1.0]), 999)

    def _init_state(self, rng: Rng):
        self.position = -0.6 + 0.2 * rng.uniform()
        self.velocity = 0.0

    def _observe(self) -> np.ndarray:
        return np.array([self.position, self.velocity])

    def _step_dynamics(self, action) -> tuple[float, bool]:
        u = float(np.asarray(action).reshape(-1)[0])
        u = min(max(u, -1.0), 1.0)
        self.velocity += u * self.POWER - self.GRAVITY * math.cos(3.0 * self.position)
        self.velocity = min(max(self.velocity, -self.MAX_SPEED), self.MAX_SPEED)
        self.position += self.velocity
        self.position = min(max(self.position, self.MIN_POS), self.MAX_POS)
        if self.position <= self.MIN_POS and self.velocity < 0.0:
            self.velocity = 0.0
        reached = self.position >= self.GOAL
        reward = (100.0 if reached else 0.0) - 0.1 * u * u
        return reward, reached


class Pendulum(_Env):
    """Torque in [-2, 2]; reward -(angle^2 + 0.1 angvel^2 + 0.001 u^2), angle wrapped."""

    G = 10.0
    M = 1.0
    L = 1.0
    DT = 0.05
    MAX_SPEED = 8.0
    MAX_TORQUE = 2.0

    def _default_spec(self) -> EnvSpec:
        return EnvSpec(PENDULUM, 3, ActionSpace.box([-2.0], [2.0]), 200)

    def _init_state(self, rng: Rng):
        u = rng.uniforms(2)
        self.th = -math.pi + 2.0 * math.pi * u[0]
        self.th_dot = -1.0 + 2.0 * u[1]

    def _observe(self) -> np.ndarray:
        return np.array([math.cos(self.th), math.sin(self.th), self.th_dot])

    def _step_dynamics(self, action) -> tuple[float, bool]:
        u = float(np.asarray(action).reshape(-1)[0])
        u = min(max(u, -self.MAX_TORQUE), self.MAX_TORQUE)
        th_wrapped = math.fmod(self.th + math.pi, 2.0 * math.pi)
        if th_wrapped < 0.0:
            th_wrapped += 2.0 * math.pi
        th_wrapped -= math.pi
        cost = th_wrapped * th_wrapped + 0.1 * self.th_dot * self.th_dot + 0.001 * u * u
        new_th_dot = self.th_dot + (
            3.0 * self.G / (2.0 * self.L) * math.sin(self.th) + 3.0 / (self.M * self.L * self.L) * u
        ) * self.DT
        new_th_dot = min(max(new_th_dot, -self.MAX_SPEED), self.MAX_SPEED)
        self.th += new_th_dot * self.DT
        self.th_dot = new_th_dot
        return -cost, False


_ENV_CLASSES = {
    CARTPOLE: CartPole,
    MOUNTAINCAR: MountainCar,
    MOUNTAINCAR_CONTINUOUS: MountainCarContinuous,
    PENDULUM: Pendulum,
}


def make_env(env_id: str, max_steps: int | None = None) -> _Env:
    if env_id not in _ENV_CLASSES:
        raise ValueError(f"unknown environment {env_id!r}")
    return _ENV_CLASSES[env_id](max_steps)


def env_spec(env_id: str) -> EnvSpec:
    return make_env(env_id).spec


def rollout(env: _Env, act, max_steps: int | None = None, seed: int = 0) -> RolloutStats:
    """Reset, then step the policy closure until done; rewards are summed undiscounted."""
    cap = env.spec.max_steps if max_steps is None else int(max_steps)
    obs = env.reset(seed)
    total = 0.0
    steps = 0
    while not env.done and steps < cap:
        obs, reward, _ = env.step(act(obs))
        total += reward
        steps += 1
    return RolloutStats(total_reward=total, steps=steps, seed=int(seed))
