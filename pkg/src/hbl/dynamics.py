"""Reduced scalar eigenvalue dynamics and the closed-form rate/bound
formulas.

Each aligned singular value follows the one-dimensional recursion

    lam_{t+1} = lam_t - eta * lam_t^(2L-1) + eta * lam_t^(L-1)

with fixed points 0 and 1; everything the matrix run does in the aligned
regime reduces to r copies of this map.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, DynamicsFailureError

CONVERGENCE_TOL = 1e-10
BURN_IN_FRACTION = 0.1


@dataclass(frozen=True)
class EigenTrajectory:
    """Per-step aligned eigenvalues, shape (steps+1, r)."""

    values: np.ndarray
    eta: float
    depth: int
    m_cap: float  # M = max(1, max initial value)


@dataclass(frozen=True)
class DynamicsReport:
    """Empirical convergence-rate summary of a scalar run.

    alpha is the post-burn-in lower bound of min_i lam_i^(2L-2) (the
    asymptotic rate constant); alpha_full is the same minimum over the whole
    trajectory, which is what the global loss-decay bound needs.
    """

    alpha: float
    alpha_full: float
    c_min: float
    converged_at: Optional[int]
    predicted_decay_rate: float


def lambda_step(lam: float, eta: float, depth: int) -> float:
    """One application of the scalar recursion."""
    return lam - eta * lam ** (2 * depth - 1) + eta * lam ** (depth - 1)


def max_step_size(depth: int, m_cap: float) -> float:
    """The step-size bound min{1/L, 2/((2L-1) M^(2L-2))}; callers must stay
    strictly below it."""
    if depth < 2:
        raise ConfigurationError(f"depth must be >= 2, got {depth}")
    if m_cap <= 0:
        raise ConfigurationError(f"M must be positive, got {m_cap}")
    return min(1.0 / depth, 2.0 / ((2 * depth - 1) * m_cap ** (2 * depth - 2)))


def run_scalar_dynamics(
    lambda0,
    eta: float,
    depth: int,
    steps: int,
    burn_in_fraction: float = BURN_IN_FRACTION,
    tol: float = CONVERGENCE_TOL,
):
    """Iterate the recursion for all coordinates; returns (EigenTrajectory,
    DynamicsReport).

    Divergence (an iterate leaving (0, 2M]) aborts with the offending step:
    the theory confines iterates to (0, M], so exceeding 2M unambiguously
    signals a broken step-size contract.
    """
    lam0 = np.atleast_1d(np.asarray(lambda0, dtype=np.float64))
    if np.any(lam0 <= 0):
        raise ConfigurationError("initial values must be positive")
    m_cap = max(1.0, float(np.max(lam0)))
    bound = max_step_size(depth, m_cap)
    if eta >= bound:
        raise ConfigurationError(
            f"eta={eta} violates the step-size bound {bound:.6g}"
        )

    traj = np.empty((steps + 1, lam0.size))
    traj[0] = lam0
    for t in range(steps):
        lam = traj[t]
        nxt = lam - eta * lam ** (2 * depth - 1) + eta * lam ** (depth - 1)
        if np.any(nxt <= 0) or np.any(nxt > 2 * m_cap):
            raise DynamicsFailureError(
                f"iterate left (0, {2 * m_cap}]: {nxt}", step=t + 1
            )
        traj[t + 1] = nxt

    trajectory = EigenTrajectory(traj, eta, depth, m_cap)

    per_step_min = np.min(traj, axis=1) ** (2 * depth - 2)
    burn = int(burn_in_fraction * steps)
    alpha = float(np.min(per_step_min[burn:]))
    alpha_full = float(np.min(per_step_min))
    c_min = float(np.min(traj))
    hit = np.nonzero(np.max(np.abs(traj - 1.0), axis=1) < tol)[0]
    converged_at = int(hit[0]) if hit.size else None
    report = DynamicsReport(
        alpha=alpha,
        alpha_full=alpha_full,
        c_min=c_min,
        converged_at=converged_at,
        predicted_decay_rate=2 * depth * alpha * eta,
    )
    return trajectory, report


def closed_form_excess_loss(lambdas, depth: int) -> float:
    """1/2 sum_i (1 - lam_i^L)^2 over the r active coordinates."""
    lam = np.asarray(lambdas, dtype=np.float64)
    return float(0.5 * np.sum((1.0 - lam ** depth) ** 2))


def loss_decay_bound(l0: float, alpha: float, eta: float, depth: int, t) -> float:
    """The exponential envelope l0 * exp(-2 L alpha eta t)."""
    if alpha <= 0 or eta <= 0:
        raise ConfigurationError("alpha and eta must be positive")
    return float(l0 * np.exp(-2.0 * depth * alpha * eta * np.asarray(t, dtype=float)))
