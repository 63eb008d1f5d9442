"""Bias-free MLP encoders and the flat two-block parameter layout.

A tower is described by its layer widths; layer k is a (dims[k+1], dims[k])
weight matrix read row-major from the flat parameter slice, applied as
y <- act(W y) with ReLU on hidden layers and a linear output layer (or
linear everywhere).  There are no bias terms anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RELU_HIDDEN = "relu_hidden_linear_out"
ALL_LINEAR = "all_linear"


@dataclass(frozen=True)
class TowerSpec:
    layer_dims: tuple[int, ...]
    activation: str = RELU_HIDDEN

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        object.__setattr__(self, "layer_dims", dims)
        if len(dims) < 2:
            raise ValueError("TowerSpec needs at least [in, out] dims")
        if any(d < 1 for d in dims):
            raise ValueError("TowerSpec dims must be positive")
        if self.activation not in (RELU_HIDDEN, ALL_LINEAR):
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def in_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def out_dim(self) -> int:
        return self.layer_dims[-1]


def param_count(spec: TowerSpec) -> int:
    dims = spec.layer_dims
    return sum(dims[i] * dims[i + 1] for i in range(len(dims) - 1))


def unflatten(spec: TowerSpec, params: np.ndarray) -> list[np.ndarray]:
    """Per-layer weight matrices as views into the flat slice."""
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (param_count(spec),):
        raise ValueError(
            f"parameter slice has length {params.size}, spec needs {param_count(spec)}"
        )
    mats = []
    ofs = 0
    dims = spec.layer_dims
    for k in range(len(dims) - 1):
        n = dims[k + 1] * dims[k]
        mats.append(params[ofs : ofs + n].reshape(dims[k + 1], dims[k]))
        ofs += n
    return mats


def flatten(mats: list[np.ndarray]) -> np.ndarray:
    return np.concatenate([np.asarray(m, dtype=np.float64).ravel() for m in mats])


def forward(spec: TowerSpec, params: np.ndarray, x) -> np.ndarray:
    """Evaluate the tower on a single input vector."""
    y = np.asarray(x, dtype=np.float64)
    if y.shape != (spec.in_dim,):
        raise ValueError(f"input has shape {y.shape}, spec needs ({spec.in_dim},)")
    mats = unflatten(spec, params)
    last = len(mats) - 1
    for k, w in enumerate(mats):
        y = w @ y
        if k < last and spec.activation == RELU_HIDDEN:
            y = np.maximum(y, 0.0)
    return y


def forward_batch(spec: TowerSpec, params: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Evaluate the tower on the rows of (n, in_dim)."""
    ys = np.asarray(xs, dtype=np.float64)
    if ys.ndim != 2 or ys.shape[1] != spec.in_dim:
        raise ValueError(f"batch has shape {ys.shape}, spec needs (*, {spec.in_dim})")
    mats = unflatten(spec, params)
    last = len(mats) - 1
    for k, w in enumerate(mats):
        ys = ys @ w.T
        if k < last and spec.activation == RELU_HIDDEN:
            ys = np.maximum(ys, 0.0)
    return ys


def split_params(
    theta: np.ndarray, state_spec: TowerSpec, action_spec: TowerSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Views of the state-tower and action-tower blocks of the flat vector."""
    theta = np.asarray(theta, dtype=np.float64)
    d1 = param_count(state_spec)
    d2 = param_count(action_spec)
    if theta.shape != (d1 + d2,):
        raise ValueError(f"theta has length {theta.size}, towers need {d1} + {d2}")
    return theta[:d1], theta[d1:]


def init_params(total: int) -> np.ndarray:
    """All-zeros parameter vector; exploration comes from ES perturbations."""
    if total < 1:
        raise ValueError("parameter count must be >= 1")
    return np.zeros(int(total))
