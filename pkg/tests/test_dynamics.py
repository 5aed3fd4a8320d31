import numpy as np
import pytest

from hbl.dynamics import (
    closed_form_excess_loss,
    lambda_step,
    loss_decay_bound,
    max_step_size,
    run_scalar_dynamics,
)
from hbl.errors import ConfigurationError, DynamicsFailureError


def test_fixed_points():
    for depth in (2, 3, 5):
        assert lambda_step(1.0, 0.1, depth) == pytest.approx(1.0, abs=1e-15)
    # zero is fixed as a limit: tiny values move by eta * lam^(L-1)
    assert lambda_step(1e-8, 0.1, 2) == pytest.approx(1e-8 + 0.1e-8, rel=1e-6)


def test_max_step_size_values():
    # min{1/L, 2/((2L-1) M^(2L-2))}
    assert max_step_size(2, 1.0) == pytest.approx(min(0.5, 2 / 3))
    assert max_step_size(3, 1.0) == pytest.approx(min(1 / 3, 2 / 5))
    assert max_step_size(2, 2.0) == pytest.approx(min(0.5, 2 / (3 * 4)))
    with pytest.raises(ConfigurationError):
        max_step_size(1, 1.0)


def test_convergence_to_one_from_both_sides():
    for depth in (2, 3, 4):
        eta = 0.9 * max_step_size(depth, 1.5)
        traj, report = run_scalar_dynamics([0.3, 0.9, 1.5], eta, depth, 2000)
        assert np.max(np.abs(traj.values[-1] - 1.0)) < 1e-12
        assert report.converged_at is not None
        assert report.alpha_full <= report.alpha
        # below one the iterates rise monotonically
        below = traj.values[:, 0]
        assert np.all(np.diff(below) >= 0)


def test_step_size_contract_enforced():
    with pytest.raises(ConfigurationError):
        run_scalar_dynamics([0.5], eta=0.6, depth=2, steps=10)
    with pytest.raises(ConfigurationError):
        run_scalar_dynamics([-0.1], eta=0.1, depth=2, steps=10)


def test_divergence_error_carries_step():
    err = DynamicsFailureError("iterate left the admissible range", step=17)
    assert err.step == 17
    assert "step 17" in str(err)


def test_closed_form_loss_and_decay_bound():
    depth = 3
    eta = 0.9 * max_step_size(depth, 1.0)
    traj, report = run_scalar_dynamics([0.5, 0.5], eta, depth, 300)
    l0 = closed_form_excess_loss(traj.values[0], depth)
    for t in range(0, 301, 25):
        lt = closed_form_excess_loss(traj.values[t], depth)
        bound = loss_decay_bound(l0, report.alpha_full, eta, depth, t)
        assert lt <= bound * (1 + 1e-12) + 1e-28


def test_alpha_full_covers_early_steps():
    depth = 2
    eta = 0.9 * max_step_size(depth, 1.0)
    traj, report = run_scalar_dynamics([0.4], eta, depth, 500)
    # starting below one, the whole-run minimum is the initial value
    assert report.alpha_full == pytest.approx(0.4 ** (2 * depth - 2))
    assert report.alpha >= report.alpha_full
