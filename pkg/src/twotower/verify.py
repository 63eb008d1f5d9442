"""Verification suite for the ES gradient-estimator theory.

Checks, on random quadratic fixtures: the closed-form mean squared error of
the antithetic estimator, its unbiasedness, and the ordering between the
forward-difference and antithetic estimators (whose gap is a sum of
non-negative Hessian terms).  The forward-difference Monte Carlo is
validated against a higher-trial self-oracle instead of a closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .es import AT, FD, QuadraticObjective, at_mse_closed_form, mc_gradient_stats, mc_mse
from .rng import Rng, derive

DEFAULT_TRIALS = 100_000
ORACLE_TRIALS = 10_000_000

MSE_GRID = ((4, 2), (4, 4), (16, 4), (16, 16))
MSE_FIXTURES = 5
MSE_RTOL = 0.02
MEAN_RTOL = 0.01
FD_SELF_RTOL = 0.03

TAG_FIXTURE = 0x51
TAG_THETA = 0x52
TAG_MC = 0x53


@dataclass(frozen=True)
class CheckResult:
    label: str
    value: float
    reference: float
    rel_err: float
    passed: bool


def _fixture(dim: int, tag: int, index: int, seed: int, linear: bool = False):
    rng = Rng(derive(seed, TAG_FIXTURE, tag, index))
    q = (
        QuadraticObjective.random_linear(dim, rng)
        if linear
        else QuadraticObjective.random(dim, rng)
    )
    theta = Rng(derive(seed, TAG_THETA, tag, index)).normals(dim)
    return q, theta


def check_at_closed_form(trials: int = DEFAULT_TRIALS, seed: int = 90210) -> list[CheckResult]:
    """Monte Carlo MSE of the antithetic estimator vs ((D+2)/M - 1) |grad|^2."""
    out = []
    for d, m in MSE_GRID:
        for k in range(MSE_FIXTURES):
            q, theta = _fixture(d, d * 100 + m, k, seed)
            mse = mc_mse(AT, q, theta, 1.0, m, trials, Rng(derive(seed, TAG_MC, d, m, k)))
            ref = at_mse_closed_form(q, theta, m)
            rel = abs(mse - ref) / ref
            out.append(
                CheckResult(
                    label=f"at_mse D={d} M={m} fixture={k}",
                    value=mse,
                    reference=ref,
                    rel_err=rel,
                    passed=rel <= MSE_RTOL,
                )
            )
    return out


def check_unbiasedness(trials: int = DEFAULT_TRIALS, seed: int = 90211) -> list[CheckResult]:
    """Mean antithetic estimate vs the exact gradient on linear and quadratic fixtures."""
    out = []
    for d, m in ((4, 4), (16, 16)):
        for linear in (True, False):
            q, theta = _fixture(d, d * 10 + int(linear), 0, seed, linear=linear)
            _, mean_est = mc_gradient_stats(
                AT, q, theta, 1.0, m, trials, Rng(derive(seed, TAG_MC, d, int(linear)))
            )
            grad = q.grad(theta)
            rel = float(np.linalg.norm(mean_est - grad) / np.linalg.norm(grad))
            kind = "linear" if linear else "quadratic"
            out.append(
                CheckResult(
                    label=f"at_mean D={d} M={m} {kind}",
                    value=float(np.linalg.norm(mean_est)),
                    reference=float(np.linalg.norm(grad)),
                    rel_err=rel,
                    passed=rel <= MEAN_RTOL,
                )
            )
    return out


def check_fd_vs_at(
    trials: int = DEFAULT_TRIALS, oracle_trials: int = ORACLE_TRIALS, seed: int = 90212
) -> list[CheckResult]:
    """FD MSE strictly above AT MSE on curved quadratics; FD validated by self-oracle."""
    out = []
    for k in range(MSE_FIXTURES):
        q, theta = _fixture(8, 8, k, seed)
        rng_at = Rng(derive(seed, TAG_MC, 0, k))
        rng_fd = Rng(derive(seed, TAG_MC, 1, k))
        m_at = mc_mse(AT, q, theta, 1.0, 4, trials, rng_at)
        m_fd = mc_mse(FD, q, theta, 1.0, 4, trials, rng_fd)
        out.append(
            CheckResult(
                label=f"fd_gt_at fixture={k}",
                value=m_fd,
                reference=m_at,
                rel_err=0.0 if m_fd > m_at else 1.0,
                passed=m_fd > m_at,
            )
        )
    # pinned instance: H = I, g = e1, sigma = 1, D = M = 4
    q = QuadraticObjective(
        g=np.array([1.0, 0.0, 0.0, 0.0]), hessian=np.eye(4), constant=0.0
    )
    theta = np.zeros(4)
    est = mc_mse(FD, q, theta, 1.0, 4, trials, Rng(derive(seed, TAG_MC, 2)))
    oracle = mc_mse(FD, q, theta, 1.0, 4, oracle_trials, Rng(derive(seed, TAG_MC, 3)))
    rel = abs(est - oracle) / oracle
    out.append(
        CheckResult(
            label=f"fd_self_oracle trials={trials} vs {oracle_trials}",
            value=est,
            reference=oracle,
            rel_err=rel,
            passed=rel <= FD_SELF_RTOL,
        )
    )
    return out


def run_all(trials: int = DEFAULT_TRIALS, oracle_trials: int = ORACLE_TRIALS) -> list[CheckResult]:
    results = []
    results.extend(check_at_closed_form(trials))
    results.extend(check_unbiasedness(trials))
    results.extend(check_fd_vs_at(trials, oracle_trials))
    return results


def format_results(results: list[CheckResult]) -> str:
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(
            f"[{status}] {r.label}: value={r.value:.6g} reference={r.reference:.6g} "
            f"rel_err={r.rel_err:.4f}"
        )
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} checks passed")
    return "\n".join(lines)
