"""Shared fixtures: the baseline experiment runs are expensive enough to
compute once per session and reuse across test modules."""

import pytest

from hbl.dynamics import max_step_size
from hbl.harness import ExperimentConfig, run_experiment
from hbl.network import NetworkDims, TrainConfig


def baseline_config(depth: int, rank: int = 4, **kwargs) -> ExperimentConfig:
    """The reference setup: d0=10, d_out=16, hidden 20, uniform mu=0.5."""
    dims = NetworkDims.uniform_hidden(10, 16, 20, depth, rank)
    eta = 0.9 * max_step_size(depth, 1.0)
    defaults = dict(
        dims=dims,
        init_mode="uniform",
        mu=0.5,
        train=TrainConfig(eta=eta, steps=400),
        run_id=f"L{depth}_r{rank}",
    )
    defaults.update(kwargs)
    return ExperimentConfig(**defaults)


@pytest.fixture(scope="session")
def baseline_runs():
    """Fully analyzed depth-2 and depth-3 baseline runs, Hessians assembled
    at every checkpoint."""
    return {
        depth: run_experiment(baseline_config(depth, hessian_at="all"))
        for depth in (2, 3)
    }


@pytest.fixture(scope="session")
def depth_sweep_runs():
    """Depth sweep L in {2..5}, Hessian assembled at the final step only."""
    return {
        depth: run_experiment(baseline_config(depth, hessian_at="final"))
        for depth in (2, 3, 4, 5)
    }
