import numpy as np
import pytest

from hbl.errors import OracleCapError
from hbl.hessian import (
    assemble_a_outer,
    assemble_functional,
    assemble_outer,
    assemble_pair,
    block_norm_bound,
    finite_difference_hessian,
    flatten_params,
    hf_norm_bound,
    layer_offsets,
    measured_hf_norm,
    omega_norm_bound,
    outer_gram,
    param_count,
    unflatten_params,
)
from hbl.matrixkit import spectral_norm, sym_eigvalues
from hbl.network import (
    DataModel,
    NetworkDims,
    balanced_init,
    population_excess_loss,
    residual_cross_covariance,
    sample_frames,
)


def balanced_setup(depth, widths, rank, seed, lam=None):
    dims = NetworkDims(widths, rank)
    u, v = sample_frames(dims, seed, support=dims.d_star)
    data = DataModel.whitened(dims, u, v)
    rng = np.random.default_rng(seed + 100)
    if lam is None:
        lam = np.sort(rng.uniform(0.4, 1.1, dims.d_star))[::-1]
    stack = balanced_init(dims, np.asarray(lam) ** depth, frames=(u, v))
    return dims, data, stack


def test_flatten_round_trip():
    _, _, stack = balanced_setup(3, (4, 5, 5, 3), 2, 0)
    vec = flatten_params(stack)
    assert vec.size == param_count(stack) == 4 * 5 + 5 * 5 + 5 * 3
    back = unflatten_params(stack, vec)
    for a, b in zip(back.weights, stack.weights):
        assert np.array_equal(a, b)


def test_analytic_hessian_matches_fd_at_balanced_states():
    for depth, widths in ((2, (4, 5, 3)), (3, (4, 5, 5, 3))):
        dims, data, stack = balanced_setup(depth, widths, 2, seed=depth)
        pair = assemble_pair(stack, data)
        fd = finite_difference_hessian(stack, data)
        assert np.max(np.abs(pair.h_total - fd)) < 1e-5


def test_analytic_hessian_matches_fd_off_manifold():
    # the assembly must hold for arbitrary weights, not just aligned ones
    dims, data, stack = balanced_setup(3, (4, 5, 5, 3), 2, seed=9)
    rng = np.random.default_rng(42)
    stack = stack.replace_weights(
        [w + 0.2 * rng.standard_normal(w.shape) for w in stack.weights]
    )
    pair = assemble_pair(stack, data)
    fd = finite_difference_hessian(stack, data)
    assert np.max(np.abs(pair.h_total - fd)) < 1e-5


def test_outer_part_is_psd_and_functional_has_zero_diagonal():
    dims, data, stack = balanced_setup(3, (4, 5, 5, 3), 2, seed=1)
    pair = assemble_pair(stack, data)
    evals = sym_eigvalues(pair.h_o)
    assert evals[-1] > -1e-10 * max(1.0, evals[0])
    offsets = pair.layer_offsets
    for l in range(dims.depth):
        block = pair.h_f[offsets[l] : offsets[l + 1], offsets[l] : offsets[l + 1]]
        assert np.count_nonzero(block) == 0
    assert np.max(np.abs(pair.h_f - pair.h_f.T)) < 1e-14


def test_gram_spectrum_equals_nonzero_outer_spectrum():
    dims, data, stack = balanced_setup(3, (4, 5, 5, 3), 2, seed=2)
    h_o = assemble_outer(stack, data)
    gram = outer_gram(stack, data)
    n = gram.shape[0]
    full = sym_eigvalues(h_o)
    small = sym_eigvalues(gram)
    assert np.max(np.abs(full[:n] - small)) < 1e-10
    assert np.max(np.abs(full[n:])) < 1e-10


def test_functional_part_vanishes_at_optimum():
    lam = [1.0, 1.0, 0.0]
    dims, data, stack = balanced_setup(3, (4, 5, 5, 3), 2, seed=3, lam=lam)
    h_f = assemble_functional(stack, data)
    assert np.max(np.abs(h_f)) < 1e-12


def test_norm_bounds_hold_at_balanced_states():
    for seed in range(4):
        lam = np.sort(np.random.default_rng(seed).uniform(0.5, 1.0, 3))[::-1]
        lam = np.concatenate([lam[:2], [0.0]])
        dims, data, stack = balanced_setup(3, (4, 5, 5, 3), 2, seed=seed, lam=lam)
        epsilon = population_excess_loss(stack, data)
        pair = assemble_pair(stack, data)
        hf = measured_hf_norm(pair.h_f)
        assert hf <= hf_norm_bound(stack, epsilon, dims.rank, dims.depth) + 1e-12
        assert hf <= block_norm_bound(pair.h_f, pair.layer_offsets) + 1e-12
        omega = spectral_norm(residual_cross_covariance(stack, data))
        assert omega <= omega_norm_bound(dims.rank, epsilon) + 1e-12


def test_fd_oracle_cap():
    dims, data, stack = balanced_setup(3, (4, 5, 5, 3), 2, seed=4)
    with pytest.raises(OracleCapError):
        finite_difference_hessian(stack, data, cap=10)


def test_layer_offsets():
    _, _, stack = balanced_setup(2, (4, 5, 3), 2, seed=5)
    assert layer_offsets(stack) == (0, 20, 35)
