"""Random feature tree: sublinear approximate softmax sampling over actions.

Positive random features linearize the softmax kernel,
exp(x . y) = E[psi(x) . psi(y)] with
psi(x) = exp(-|x|^2 / 2) / sqrt(r) * (exp(w_1 . x), ..., exp(w_r . x)).
Actions sit at the leaves of a random binary tree whose every node stores
the sum of its leaves' feature vectors; a sample descends from the root,
branching left with probability a / (a + b) where a and b are the state
feature's dot products with the two child aggregates.  Telescoping the
branch probabilities gives exactly the flat psi-proportional distribution
in ceil(log2 N) binary decisions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import gaussian_matrix
from .rng import Rng


class FeatureOverflowError(FloatingPointError):
    pass


@dataclass
class FavorFeatures:
    omega: np.ndarray  # (r, d), rows iid N(0, I_d)
    shift: float = 0.0  # uniform exponent shift; rescales psi, cancels in ratios

    @property
    def r(self) -> int:
        return self.omega.shape[0]


def favor_features(r: int, d: int, rng: Rng) -> FavorFeatures:
    if r < 1:
        raise ValueError("need r >= 1 features")
    return FavorFeatures(omega=gaussian_matrix(r, d, rng))


def favor_psi(features: FavorFeatures, x) -> np.ndarray:
    """Positive feature vector with E[psi(x) . psi(y)] = exp(x . y)."""
    v = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite input")
    expo = features.omega @ v - 0.5 * float(v @ v) - features.shift
    out = np.exp(expo) / np.sqrt(features.r)
    if not np.all(np.isfinite(out)):
        raise FeatureOverflowError("feature overflow")
    return out


def shift_for(features: FavorFeatures, inputs: np.ndarray) -> float:
    """Largest projection over the given inputs; a safe uniform shift."""
    proj = np.asarray(inputs, dtype=np.float64) @ features.omega.T
    return float(proj.max())


def favor_psi_batch(features: FavorFeatures, xs: np.ndarray) -> np.ndarray:
    """Row-wise psi over an (n, d) input matrix."""
    v = np.asarray(xs, dtype=np.float64)
    expo = v @ features.omega.T - 0.5 * np.einsum("nd,nd->n", v, v)[:, None] - features.shift
    out = np.exp(expo) / np.sqrt(features.r)
    if not np.all(np.isfinite(out)):
        raise FeatureOverflowError("feature overflow")
    return out


@dataclass
class RftTree:
    """Array-encoded binary tree; node 0 is the root.

    Internal nodes have left/right child ids; leaves carry an action index.
    xi[v] is the sum of psi over the actions below v, formed bottom-up by
    exact child additions.
    """

    xi: np.ndarray  # (n_nodes, r)
    left: np.ndarray  # (n_nodes,) child id or -1
    right: np.ndarray  # (n_nodes,)
    leaf_action: np.ndarray  # (n_nodes,) action index or -1
    n_actions: int

    @property
    def depth(self) -> int:
        def rec(v: int) -> int:
            if self.left[v] < 0:
                return 0
            return 1 + max(rec(self.left[v]), rec(self.right[v]))

        return rec(0)


def build_tree(psi_rows: np.ndarray, rng: Rng) -> RftTree:
    """Shuffle the actions, then split ceil(n/2) / floor(n/2) recursively."""
    psi = np.asarray(psi_rows, dtype=np.float64)
    if psi.ndim != 2 or psi.shape[0] < 1:
        raise ValueError("need an (N, r) psi matrix with N >= 1")
    n = psi.shape[0]
    order = rng.shuffled(n)

    xi: list[np.ndarray] = []
    left: list[int] = []
    right: list[int] = []
    leaf_action: list[int] = []

    def rec(lo: int, hi: int) -> int:
        node = len(xi)
        xi.append(None)  # placeholder until children exist
        left.append(-1)
        right.append(-1)
        leaf_action.append(-1)
        if hi - lo == 1:
            action = int(order[lo])
            xi[node] = psi[action].copy()
            leaf_action[node] = action
            return node
        mid = lo + (hi - lo + 1) // 2
        l_id = rec(lo, mid)
        r_id = rec(mid, hi)
        left[node] = l_id
        right[node] = r_id
        xi[node] = xi[l_id] + xi[r_id]
        return node

    rec(0, n)
    return RftTree(
        xi=np.vstack(xi),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        leaf_action=np.asarray(leaf_action, dtype=np.int64),
        n_actions=n,
    )


def _check_state(psi_state) -> np.ndarray:
    s = np.asarray(psi_state, dtype=np.float64)
    if not np.all(np.isfinite(s)) or np.any(s <= 0.0):
        raise ValueError("state features must be positive and finite")
    return s


def sample_action(tree: RftTree, psi_state, rng: Rng) -> int:
    """Descend the tree; one binary decision per level."""
    s = _check_state(psi_state)
    v = 0
    while tree.left[v] >= 0:
        a = float(s @ tree.xi[tree.left[v]])
        b = float(s @ tree.xi[tree.right[v]])
        tot = a + b
        if not np.isfinite(tot) or tot <= 0.0:
            raise ValueError("degenerate branch weights")
        v = tree.left[v] if rng.uniform() < a / tot else tree.right[v]
    return int(tree.leaf_action[v])


def sample_many(tree: RftTree, psi_state, n: int, rng: Rng) -> np.ndarray:
    """n independent descents for a fixed state; node scores cached once."""
    s = _check_state(psi_state)
    scores = tree.xi @ s
    if not np.all(np.isfinite(scores)):
        raise ValueError("degenerate branch weights")
    out = np.empty(n, dtype=np.int64)
    left, right, leaf = tree.left, tree.right, tree.leaf_action
    for i in range(n):
        v = 0
        while left[v] >= 0:
            a = scores[left[v]]
            tot = a + scores[right[v]]
            if tot <= 0.0:
                raise ValueError("degenerate branch weights")
            v = left[v] if rng.uniform() < a / tot else right[v]
        out[i] = leaf[v]
    return out


def tree_distribution(tree: RftTree, psi_state) -> np.ndarray:
    """Analytic leaf probabilities: branch probabilities multiplied down the tree."""
    s = _check_state(psi_state)
    scores = tree.xi @ s
    probs = np.zeros(tree.n_actions)

    def rec(v: int, p: float):
        if tree.left[v] < 0:
            probs[tree.leaf_action[v]] = p
            return
        a = scores[tree.left[v]]
        b = scores[tree.right[v]]
        tot = a + b
        if tot <= 0.0:
            raise ValueError("degenerate branch weights")
        rec(tree.left[v], p * (a / tot))
        rec(tree.right[v], p * (b / tot))

    rec(0, 1.0)
    return probs


def flat_distribution(psi_rows: np.ndarray, psi_state) -> np.ndarray:
    """The exact distribution the tree realizes: p_i proportional to psi_state . psi_i."""
    s = _check_state(psi_state)
    w = np.asarray(psi_rows, dtype=np.float64) @ s
    tot = float(w.sum())
    if not np.isfinite(tot) or tot <= 0.0:
        raise ValueError("zero normalizer")
    return w / tot


def exact_softmax_distribution(action_latents: np.ndarray, state_latent) -> np.ndarray:
    """Ground-truth softmax over inner-product scores (max-shifted)."""
    z = np.asarray(action_latents, dtype=np.float64) @ np.asarray(
        state_latent, dtype=np.float64
    )
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()
