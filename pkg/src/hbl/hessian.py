"""Exact assembly of the population Hessian via its Gauss-Newton split
H = H_o + H_f, plus a finite-difference oracle and the closed-form norm
bounds.

Parameters are flattened layer 1 -> layer L, each layer row-wise vectorized.
With that layout the outer-product part is A_o B_o A_o^T, where block l of
A_o^T is prod(L, l+1) ⊗ prod(l-1, 1)^T and B_o = I ⊗ sigma_xx. The
functional part has zero diagonal blocks; its (k, l) block (k > l) couples
row index pair (a, b) to column pair (c, d) through

    [prod(L,k+1)^T Omega prod(l-1,1)^T]_{a,d} * [prod(k-1,l+1)]_{b,c}

i.e. the Kronecker factors act on swapped column axes. The finite-difference
oracle pins this layout down independently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import DimensionError, OracleCapError
from .matrixkit import KRON_ENTRY_CAP, sym_spectral_norm
from .network import (
    DataModel,
    WeightStack,
    prod,
    residual_cross_covariance,
    spectral_state,
)

FD_ORACLE_CAP = 600
FD_DEFAULT_STEP = 1e-4


@dataclass(frozen=True)
class HessianPair:
    """Outer-product and functional parts over the flattened parameters."""

    h_o: np.ndarray
    h_f: np.ndarray
    layer_offsets: Tuple[int, ...]

    @property
    def h_total(self) -> np.ndarray:
        return self.h_o + self.h_f


def layer_offsets(w: WeightStack) -> Tuple[int, ...]:
    """Start index of each layer's block in the flattened parameter vector,
    plus the total count as a sentinel."""
    offsets = [0]
    for mat in w.weights:
        offsets.append(offsets[-1] + mat.size)
    return tuple(offsets)


def param_count(w: WeightStack) -> int:
    return layer_offsets(w)[-1]


def flatten_params(w: WeightStack) -> np.ndarray:
    return np.concatenate([mat.reshape(-1) for mat in w.weights])


def unflatten_params(w: WeightStack, vector: np.ndarray) -> WeightStack:
    offsets = layer_offsets(w)
    weights = []
    for i, mat in enumerate(w.weights):
        chunk = vector[offsets[i] : offsets[i + 1]]
        weights.append(chunk.reshape(mat.shape).copy())
    return w.replace_weights(weights)


def assemble_a_outer(w: WeightStack, entry_cap: int = KRON_ENTRY_CAP) -> np.ndarray:
    """The P x (d_L d_0) factor A_o of the outer-product Hessian."""
    L = w.depth
    p = param_count(w)
    d_out, d0 = w.weights[-1].shape[0], w.weights[0].shape[1]
    if p * d_out * d0 > entry_cap:
        raise DimensionError(
            f"A_o would have {p * d_out * d0} entries (cap {entry_cap})"
        )
    blocks = []
    for l in range(1, L + 1):
        left = prod(w.weights, L, l + 1)  # d_L x d_l
        right = prod(w.weights, l - 1, 1).T  # d_0 x d_(l-1)
        blocks.append(np.kron(left, right).T)
    return np.vstack(blocks)


def _apply_b_outer(a_o: np.ndarray, sigma_xx: np.ndarray) -> np.ndarray:
    """Right-multiply A_o by B_o = I ⊗ sigma_xx without forming B_o."""
    p = a_o.shape[0]
    d0 = sigma_xx.shape[0]
    d_out = a_o.shape[1] // d0
    return np.einsum("pij,jk->pik", a_o.reshape(p, d_out, d0), sigma_xx).reshape(
        p, d_out * d0
    )


def assemble_outer(
    w: WeightStack, data: DataModel, entry_cap: int = KRON_ENTRY_CAP
) -> np.ndarray:
    """The P x P outer-product Hessian A_o B_o A_o^T (symmetrized)."""
    a_o = assemble_a_outer(w, entry_cap)
    h = _apply_b_outer(a_o, data.sigma_xx) @ a_o.T
    return 0.5 * (h + h.T)


def outer_gram(w: WeightStack, data: DataModel) -> np.ndarray:
    """The (d_L d_0)-sized Gram matrix whose eigenvalues are the nonzero
    eigenvalues of H_o.

    When sigma_xx = I this is simply A_o^T A_o; otherwise the symmetrized
    form B_o^(1/2) A_o^T A_o B_o^(1/2) is used (sigma_xx^(1/2) exists since
    it is PSD).
    """
    a_o = assemble_a_outer(w)
    gram = a_o.T @ a_o
    sxx = data.sigma_xx
    if np.allclose(sxx, np.eye(sxx.shape[0]), atol=1e-14):
        return 0.5 * (gram + gram.T)
    evals, evecs = np.linalg.eigh(0.5 * (sxx + sxx.T))
    root = evecs @ np.diag(np.sqrt(np.clip(evals, 0.0, None))) @ evecs.T
    d0 = sxx.shape[0]
    d_out = a_o.shape[1] // d0
    b_root = np.kron(np.eye(d_out), root)
    sym = b_root @ gram @ b_root
    return 0.5 * (sym + sym.T)


def assemble_functional(w: WeightStack, data: DataModel) -> np.ndarray:
    """The P x P functional Hessian: zero diagonal blocks, residual-weighted
    off-diagonal blocks, symmetric by construction."""
    L = w.depth
    offsets = layer_offsets(w)
    p = offsets[-1]
    omega = residual_cross_covariance(w, data)
    h = np.zeros((p, p))
    for k in range(2, L + 1):
        for l in range(1, k):
            outer = prod(w.weights, L, k + 1).T @ omega @ prod(w.weights, l - 1, 1).T
            inner = prod(w.weights, k - 1, l + 1)  # d_(k-1) x d_l
            block = np.einsum("ad,bc->abcd", outer, inner).reshape(
                outer.shape[0] * inner.shape[0], inner.shape[1] * outer.shape[1]
            )
            h[offsets[k - 1] : offsets[k], offsets[l - 1] : offsets[l]] = block
            h[offsets[l - 1] : offsets[l], offsets[k - 1] : offsets[k]] = block.T
    return h


def assemble_pair(w: WeightStack, data: DataModel) -> HessianPair:
    return HessianPair(
        h_o=assemble_outer(w, data),
        h_f=assemble_functional(w, data),
        layer_offsets=layer_offsets(w),
    )


def _trace_loss(w: WeightStack, data: DataModel) -> float:
    """Population excess loss via the trace formula, valid for any stack
    (no alignment assumption); the constant is fixed so the realizable
    minimum is zero."""
    wc = prod(w.weights, w.depth, 1)
    quad = 0.5 * np.trace(wc @ data.sigma_xx @ wc.T)
    cross = np.trace(wc @ data.sigma_yx.T)
    return float(quad - cross + 0.5 * data.rank)


def finite_difference_hessian(
    w: WeightStack,
    data: DataModel,
    step: float = FD_DEFAULT_STEP,
    cap: int = FD_ORACLE_CAP,
) -> np.ndarray:
    """Central second differences of the population loss over the flattened
    parameters. Independent oracle for the analytic assembly; O(P^2) loss
    evaluations, hence the size cap."""
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    p = param_count(w)
    if p > cap:
        raise OracleCapError(f"P={p} exceeds the FD oracle cap {cap}")

    x0 = flatten_params(w)

    def loss(vec):
        return _trace_loss(unflatten_params(w, vec), data)

    f0 = loss(x0)
    hess = np.empty((p, p))
    for i in range(p):
        xi = x0.copy()
        xi[i] = x0[i] + step
        f_plus = loss(xi)
        xi[i] = x0[i] - step
        f_minus = loss(xi)
        hess[i, i] = (f_plus - 2.0 * f0 + f_minus) / step**2
        for j in range(i + 1, p):
            xij = x0.copy()
            xij[i] = x0[i] + step
            xij[j] = x0[j] + step
            fpp = loss(xij)
            xij[j] = x0[j] - step
            fpm = loss(xij)
            xij[i] = x0[i] - step
            fmm = loss(xij)
            xij[j] = x0[j] + step
            fmp = loss(xij)
            val = (fpp - fpm - fmp + fmm) / (4.0 * step**2)
            hess[i, j] = val
            hess[j, i] = val
    return hess


def hf_norm_bound(w: WeightStack, epsilon: float, rank: int, depth: int) -> float:
    """Closed-form bound on ||H_f||_2 at excess loss epsilon:
    ||S^(1/L)||^(L-2) * sqrt(2 L (L-1) r) * sqrt(epsilon)."""
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    state = spectral_state(w)
    sigma_norm = float(np.max(np.abs(state.lambdas))) if state.lambdas.size else 0.0
    return sigma_norm ** (depth - 2) * np.sqrt(2.0 * depth * (depth - 1) * rank) * np.sqrt(
        epsilon
    )


def block_norm_bound(h_f: np.ndarray, offsets: Tuple[int, ...]) -> float:
    """Root-sum-square of per-block spectral norms; upper-bounds ||H_f||_2."""
    total = 0.0
    n_layers = len(offsets) - 1
    for k in range(n_layers):
        for l in range(n_layers):
            block = h_f[offsets[k] : offsets[k + 1], offsets[l] : offsets[l + 1]]
            if np.any(block):
                total += np.linalg.norm(block, 2) ** 2
    return float(np.sqrt(total))


def omega_norm_bound(rank: int, epsilon: float) -> float:
    """Bound sqrt(2 r epsilon) on the residual cross-covariance norm."""
    return float(np.sqrt(2.0 * rank * max(epsilon, 0.0)))


def measured_hf_norm(h_f: np.ndarray) -> float:
    return sym_spectral_norm(h_f)
