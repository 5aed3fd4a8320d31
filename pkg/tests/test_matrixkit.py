import numpy as np
import pytest

from hbl.errors import ContractViolationError, DimensionError
from hbl.matrixkit import (
    as_matrix,
    kron,
    pad_embed,
    spectral_norm,
    svd,
    sym_eig,
    sym_eigvalues,
    sym_spectral_norm,
    unvec_row,
    vec_row,
)


def test_as_matrix_rejects_bad_input():
    with pytest.raises(DimensionError):
        as_matrix(np.zeros(3))
    with pytest.raises(ContractViolationError):
        as_matrix(np.array([[1.0, np.nan]]))


def test_vec_row_round_trip():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((3, 5))
    assert np.array_equal(unvec_row(vec_row(a), 3, 5), a)


def test_row_major_vec_kron_identity():
    # vec_row(A W B) == kron(A, B^T) vec_row(W)
    rng = np.random.default_rng(1)
    a = rng.standard_normal((4, 3))
    w = rng.standard_normal((3, 5))
    b = rng.standard_normal((5, 2))
    lhs = vec_row(a @ w @ b)
    rhs = kron(a, b.T) @ vec_row(w)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_kron_mixed_product_property():
    rng = np.random.default_rng(2)
    a, b = rng.standard_normal((3, 4)), rng.standard_normal((4, 2))
    c, d = rng.standard_normal((2, 3)), rng.standard_normal((3, 5))
    lhs = kron(a @ b, c @ d)
    rhs = kron(a, c) @ kron(b, d)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_kron_size_cap():
    with pytest.raises(DimensionError):
        kron(np.ones((100, 100)), np.ones((100, 100)), entry_cap=10**6)


def test_pad_embed_places_top_left():
    b = np.arange(6.0).reshape(2, 3)
    out = pad_embed(b, 4, 5)
    assert out.shape == (4, 5)
    assert np.array_equal(out[:2, :3], b)
    assert np.count_nonzero(out[2:, :]) == 0 and np.count_nonzero(out[:, 3:]) == 0
    with pytest.raises(DimensionError):
        pad_embed(b, 1, 3)


def test_svd_reconstructs_and_sorts():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((6, 4))
    u, s, v = svd(a)
    assert np.all(np.diff(s) <= 0)
    assert np.max(np.abs(u @ np.diag(s) @ v.T - a)) < 1e-12
    assert np.max(np.abs(u.T @ u - np.eye(4))) < 1e-12


def test_sym_eig_descending_and_orthonormal():
    rng = np.random.default_rng(4)
    m = rng.standard_normal((7, 7))
    s = m + m.T
    values, vectors = sym_eig(s)
    assert np.all(np.diff(values) <= 0)
    assert np.max(np.abs(vectors @ np.diag(values) @ vectors.T - s)) < 1e-10
    # eigvalsh and eigh may differ in the last bit
    assert np.max(np.abs(sym_eigvalues(s) - values)) < 1e-12


def test_sym_eig_rejects_asymmetric():
    with pytest.raises(ContractViolationError):
        sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_spectral_norms_agree():
    rng = np.random.default_rng(5)
    m = rng.standard_normal((8, 8))
    s = m + m.T
    assert abs(spectral_norm(s) - sym_spectral_norm(s)) < 1e-10
