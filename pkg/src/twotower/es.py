"""Evolutionary-search gradient estimation and the quadratic test bench.

The antithetic estimator averages [F(theta + sigma*eps_i) -
F(theta - sigma*eps_i)] * eps_i / (2 sigma M) over an orthogonal Gaussian
ensemble; the forward-difference variant replaces the mirrored query with
the shared F(theta).  On quadratic objectives the smoothed gradient equals
the true gradient, the antithetic estimator has mean squared error
((D+2)/M - 1) |grad|^2, and each antithetic term reduces exactly to
(grad . eps) eps, which is what the verification suite checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .numerics import gaussian_matrix, orthogonal_gaussian_ensemble
from .rng import Rng

AT = "AT"
FD = "FD"


class EvaluationError(RuntimeError):
    """Objective returned a non-finite value; carries the perturbation index."""

    def __init__(self, index: int, value: float):
        super().__init__(f"non-finite objective value {value!r} at perturbation {index}")
        self.index = index


@dataclass
class EsConfig:
    sigma: float
    eta: float = 0.01
    perturbations: int = 0  # 0 resolves to D at training time
    iterations: int = 100
    lazy_period: int = 1
    resample_mode: str = "per_step"  # or "per_iter"

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.eta <= 0:
            raise ValueError("learning rate must be > 0")
        if self.lazy_period < 1:
            raise ValueError("lazy_period must be >= 1")
        if self.resample_mode not in ("per_step", "per_iter"):
            raise ValueError(f"unknown resample mode {self.resample_mode!r}")


@dataclass
class GradientEstimate:
    vector: np.ndarray
    kind: str
    perturbations: int
    sigma: float


@dataclass
class QuadraticObjective:
    """F(x) = c + g . x + x . H x / 2 with symmetric H."""

    g: np.ndarray
    hessian: np.ndarray
    constant: float = 0.0

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=np.float64)
        self.hessian = np.asarray(self.hessian, dtype=np.float64)
        d = self.g.shape[0]
        if self.hessian.shape != (d, d):
            raise ValueError("hessian shape does not match gradient")
        if not np.allclose(self.hessian, self.hessian.T, atol=1e-12, rtol=0.0):
            raise ValueError("hessian must be symmetric")

    @property
    def dim(self) -> int:
        return self.g.shape[0]

    def value(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        return float(self.constant + self.g @ x + 0.5 * x @ (self.hessian @ x))

    def value_batch(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.float64)
        return self.constant + xs @ self.g + 0.5 * np.einsum("ij,ij->i", xs, xs @ self.hessian)

    def grad(self, theta) -> np.ndarray:
        return self.g + self.hessian @ np.asarray(theta, dtype=np.float64)

    def __call__(self, x) -> float:
        return self.value(x)

    @classmethod
    def random(cls, dim: int, rng: Rng, hessian_scale: float = 1.0) -> "QuadraticObjective":
        g = rng.normals(dim)
        a = gaussian_matrix(dim, dim, rng)
        h = 0.5 * (a + a.T) * hessian_scale
        return cls(g=g, hessian=h, constant=rng.normal())

    @classmethod
    def random_linear(cls, dim: int, rng: Rng) -> "QuadraticObjective":
        return cls(g=rng.normals(dim), hessian=np.zeros((dim, dim)), constant=rng.normal())


def _as_theta(theta) -> np.ndarray:
    t = np.asarray(theta, dtype=np.float64)
    if t.ndim != 1:
        raise ValueError("theta must be a flat vector")
    return t


def at_gradient(f, theta, sigma: float, m: int, rng: Rng) -> GradientEstimate:
    """Antithetic estimator; issues exactly 2M objective queries."""
    theta = _as_theta(theta)
    d = theta.shape[0]
    if not 1 <= m <= d:
        raise ValueError("need 1 <= M <= D")
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    eps = orthogonal_gaussian_ensemble(m, d, rng)
    acc = np.zeros(d)
    for i in range(m):
        fp = float(f(theta + sigma * eps[i]))
        if not np.isfinite(fp):
            raise EvaluationError(i, fp)
        fm = float(f(theta - sigma * eps[i]))
        if not np.isfinite(fm):
            raise EvaluationError(i, fm)
        acc += (fp - fm) * eps[i]
    return GradientEstimate(acc / (2.0 * sigma * m), AT, m, sigma)


def fd_gradient(f, theta, sigma: float, m: int, rng: Rng) -> GradientEstimate:
    """Forward-difference estimator; M+1 queries, F(theta) shared."""
    theta = _as_theta(theta)
    d = theta.shape[0]
    if not 1 <= m <= d:
        raise ValueError("need 1 <= M <= D")
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    eps = orthogonal_gaussian_ensemble(m, d, rng)
    f0 = float(f(theta))
    if not np.isfinite(f0):
        raise EvaluationError(-1, f0)
    acc = np.zeros(d)
    for i in range(m):
        fi = float(f(theta + sigma * eps[i]))
        if not np.isfinite(fi):
            raise EvaluationError(i, fi)
        acc += (fi - f0) * eps[i]
    return GradientEstimate(acc / (sigma * m), FD, m, sigma)


def es_step(theta, estimate, eta: float) -> np.ndarray:
    """Ascent step theta + eta * estimate (the objective is a reward)."""
    vec = estimate.vector if isinstance(estimate, GradientEstimate) else np.asarray(estimate)
    theta = _as_theta(theta)
    if vec.shape != theta.shape:
        raise ValueError("estimate shape does not match theta")
    return theta + eta * vec


def at_mse_closed_form(q: QuadraticObjective, theta, m: int) -> float:
    """((D+2)/M - 1) |grad F(theta)|^2; valid for M <= D."""
    d = q.dim
    if not 1 <= m <= d:
        raise ValueError("need 1 <= M <= D")
    g = q.grad(theta)
    return ((d + 2) / m - 1.0) * float(g @ g)


def mc_gradient_stats(
    kind: str, q: QuadraticObjective, theta, sigma: float, m: int, trials: int, rng: Rng
) -> tuple[float, np.ndarray]:
    """(mean squared error, mean estimate) over fresh-ensemble trials.

    Error is measured against the smoothed gradient, which equals grad F
    exactly for quadratic objectives.
    """
    if trials < 1:
        raise ValueError("need trials >= 1")
    if kind not in (AT, FD):
        raise ValueError(f"unknown estimator kind {kind!r}")
    theta = _as_theta(theta)
    if not 1 <= m <= q.dim:
        raise ValueError("need 1 <= M <= D")
    return _backend.quad_mc(
        0 if kind == AT else 1,
        q.g,
        q.hessian,
        q.constant,
        theta,
        float(sigma),
        int(m),
        int(trials),
        rng.key,
    )


def mc_mse(
    kind: str, q: QuadraticObjective, theta, sigma: float, m: int, trials: int, rng: Rng
) -> float:
    return mc_gradient_stats(kind, q, theta, sigma, m, trials, rng)[0]


def smoothing_gradient_mc(f, theta, sigma: float, samples: int, rng: Rng) -> np.ndarray:
    """Plain Monte Carlo for the smoothed gradient: mean of F(theta + sigma*eps) eps / sigma."""
    if samples < 1:
        raise ValueError("need samples >= 1")
    theta = _as_theta(theta)
    d = theta.shape[0]
    acc = np.zeros(d)
    batch = getattr(f, "value_batch", None)
    done = 0
    chunk = 8192
    while done < samples:
        n = min(chunk, samples - done)
        eps = rng.normals(n * d).reshape(n, d)
        xs = theta[None, :] + sigma * eps
        if batch is not None:
            vals = np.asarray(batch(xs), dtype=np.float64)
        else:
            vals = np.array([float(f(x)) for x in xs])
        acc += vals @ eps
        done += n
    return acc / (sigma * samples)


def lazy_mask(ensemble: np.ndarray, layout: tuple[int, int], iteration: int, period: int) -> np.ndarray:
    """Zero the action-tower block of every perturbation on frozen iterations."""
    if period < 1:
        raise ValueError("period must be >= 1")
    ens = np.asarray(ensemble, dtype=np.float64)
    d1, d2 = layout
    if d1 + d2 != ens.shape[1]:
        raise ValueError("layout does not match ensemble width")
    if iteration % period == 0:
        return ens
    out = ens.copy()
    out[:, d1:] = 0.0
    return out
