"""The deep linear network: dimensions, balanced initialization, population
loss/gradient, and full-matrix gradient descent.

Index conventions follow the reversed-range product: prod(W, k, l) for k >= l
is W^k @ W^(k-1) @ ... @ W^l, and the "ascending" product for k < l is the
transpose chain (W^k)^T ... (W^l)^T, i.e. prod(W, l, k).T.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, ContractViolationError, RegimeViolationError
from .matrixkit import as_matrix, pad_embed, svd

FRAME_ORTHONORMALITY_TOL = 1e-10

# Off-pattern mass above this means a stack has left the aligned regime;
# roughly 100x the rounding accumulated over 1e4 steps at desk scale.
STRUCTURE_RESIDUAL_TOL = 1e-6


@dataclass(frozen=True)
class NetworkDims:
    """Layer widths d0..dL plus the effective rank r of the target map."""

    widths: Tuple[int, ...]
    rank: int

    def __post_init__(self):
        if len(self.widths) < 3:
            raise ConfigurationError("need depth >= 2 (at least three widths)")
        if any(w < 1 for w in self.widths):
            raise ConfigurationError(f"all widths must be positive: {self.widths}")
        if self.hidden_min < self.d_star:
            raise ConfigurationError(
                f"width condition violated: min hidden width {self.hidden_min} "
                f"< d* = {self.d_star}"
            )
        if not 1 <= self.rank <= self.d_star:
            raise ConfigurationError(
                f"rank {self.rank} outside [1, d*={self.d_star}]"
            )

    @property
    def depth(self) -> int:
        return len(self.widths) - 1

    @property
    def d0(self) -> int:
        return self.widths[0]

    @property
    def d_out(self) -> int:
        return self.widths[-1]

    @property
    def d_star(self) -> int:
        return min(self.d0, self.d_out)

    @property
    def hidden_min(self) -> int:
        return min(self.widths[1:-1])

    @property
    def param_count(self) -> int:
        return sum(
            self.widths[l] * self.widths[l - 1] for l in range(1, self.depth + 1)
        )

    @classmethod
    def uniform_hidden(cls, d0: int, d_out: int, hidden: int, depth: int, rank: int):
        """Widths d0, hidden, ..., hidden, d_out with depth-1 hidden layers."""
        return cls((d0,) + (hidden,) * (depth - 1) + (d_out,), rank)


@dataclass(frozen=True)
class WeightStack:
    """The L weight matrices plus the frozen singular-vector frames U, V."""

    weights: Tuple[np.ndarray, ...]
    u: np.ndarray  # d_L x d*
    v: np.ndarray  # d_0 x d*

    def __post_init__(self):
        for a, b in zip(self.weights[1:], self.weights[:-1]):
            if a.shape[1] != b.shape[0]:
                raise ConfigurationError(
                    f"weight shapes do not chain: {b.shape} -> {a.shape}"
                )
        d_star = self.u.shape[1]
        for name, frame in (("U", self.u), ("V", self.v)):
            gram = frame.T @ frame
            if np.max(np.abs(gram - np.eye(d_star))) > FRAME_ORTHONORMALITY_TOL:
                raise ContractViolationError(f"{name} columns are not orthonormal")

    @property
    def depth(self) -> int:
        return len(self.weights)

    @property
    def widths(self) -> Tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    @property
    def d_star(self) -> int:
        return self.u.shape[1]

    def replace_weights(self, weights) -> "WeightStack":
        return WeightStack(tuple(weights), self.u, self.v)


@dataclass(frozen=True)
class DataModel:
    """Population second moments and the target's effective rank."""

    sigma_xx: np.ndarray
    sigma_yx: np.ndarray
    rank: int

    def __post_init__(self):
        sxx = as_matrix(self.sigma_xx)
        if np.max(np.abs(sxx - sxx.T)) > 1e-10 * max(1.0, np.max(np.abs(sxx))):
            raise ContractViolationError("sigma_xx must be symmetric")
        evals = np.linalg.eigvalsh(0.5 * (sxx + sxx.T))
        if evals.size and evals[0] < -1e-10 * max(1.0, evals[-1]):
            raise ContractViolationError("sigma_xx must be positive semidefinite")

    @classmethod
    def whitened(cls, dims: NetworkDims, u, v, q: Optional[int] = None):
        """The default construction: sigma_xx is a zero-padded identity of
        rank q (q = d* unless overridden) and sigma_yx = U I_r V^T with I_r
        padded to d* x d*."""
        q = dims.d_star if q is None else q
        if not dims.rank <= q <= dims.d0:
            raise ConfigurationError(f"q={q} outside [r={dims.rank}, d0={dims.d0}]")
        sigma_xx = pad_embed(np.eye(q), dims.d0, dims.d0)
        i_r = pad_embed(np.eye(dims.rank), dims.d_star, dims.d_star)
        sigma_yx = u @ i_r @ v.T
        model = cls(sigma_xx, sigma_yx, dims.rank)
        # The aligned dynamics need the active columns of V inside the
        # support of sigma_xx.
        top = v[:q, : dims.rank]
        if np.max(np.abs(top.T @ top - np.eye(dims.rank))) > 1e-8:
            raise ConfigurationError(
                "active columns of V are not supported on the first "
                f"{q} input coordinates; use aligned frames"
            )
        return model


@dataclass(frozen=True)
class TrainConfig:
    """Gradient-descent settings. The step-size bound is checked against the
    initial stack at run start (it depends on the initial singular values)."""

    eta: float
    steps: int
    checkpoint_stride: int = 0  # 0 means geometric checkpoints
    seed: int = 0

    def __post_init__(self):
        if self.eta <= 0:
            raise ConfigurationError(f"step size must be positive, got {self.eta}")
        if self.steps < 0:
            raise ConfigurationError(f"steps must be >= 0, got {self.steps}")

    def validate_step_size(self, depth: int, m_cap: float):
        from .dynamics import max_step_size

        bound = max_step_size(depth, m_cap)
        if self.eta >= bound:
            raise ConfigurationError(
                f"eta={self.eta} violates the step-size bound {bound:.6g} "
                f"for L={depth}, M={m_cap}"
            )


class SpectralState(NamedTuple):
    """Aligned eigenvalues plus the worst off-pattern entry across layers."""

    lambdas: np.ndarray  # length d*
    residual: float


def sample_frames(dims: NetworkDims, seed: int, support: Optional[int] = None):
    """Frames (U, V) from the SVD of a Gaussian d_L x d_0 matrix.

    When support=q < d0 is given, the first r columns of V are forced into
    the span of the first q input coordinates (QR preserves the prefix span),
    so the stack stays aligned with a rank-q whitened input covariance.
    """
    rng = np.random.default_rng(seed)
    if support is None or support >= dims.d0:
        a = rng.standard_normal((dims.d_out, dims.d0))
        u, _, v = svd(a)
        return u, v
    if support < dims.rank:
        raise ConfigurationError(f"support {support} smaller than rank {dims.rank}")
    gu = rng.standard_normal((dims.d_out, dims.d_star))
    u, _ = np.linalg.qr(gu)
    gv = rng.standard_normal((dims.d0, dims.d_star))
    gv[support:, : dims.rank] = 0.0
    v, _ = np.linalg.qr(gv)
    return u, v


def balanced_init(
    dims: NetworkDims,
    singular_values: Sequence[float],
    frames=None,
    seed: Optional[int] = None,
) -> WeightStack:
    """Balanced initialization from the end-to-end singular values.

    singular_values is the diagonal of the end-to-end map (length d*,
    nonnegative, descending); each layer carries its 1/L-th power:
    W^L = pad(U S^(1/L)), middle layers pad(S^(1/L)), W^1 = pad(S^(1/L) V^T).
    """
    sv = np.asarray(singular_values, dtype=np.float64)
    if sv.size != dims.d_star:
        raise ConfigurationError(
            f"need {dims.d_star} singular values, got {sv.size}"
        )
    if np.any(sv < 0):
        raise ConfigurationError("singular values must be nonnegative")
    if np.any(np.diff(sv) > 0):
        raise ConfigurationError("singular values must be descending")
    if frames is not None:
        u, v = frames
        u = as_matrix(u)
        v = as_matrix(v)
    else:
        u, v = sample_frames(dims, 0 if seed is None else seed)
    root = np.diag(sv ** (1.0 / dims.depth))
    L = dims.depth
    weights = []
    for l in range(1, L + 1):
        if l == 1 and L == 1:
            raise ConfigurationError("depth must be >= 2")
        if l == 1:
            core = root @ v.T
        elif l == L:
            core = u @ root
        else:
            core = root
        weights.append(pad_embed(core, dims.widths[l], dims.widths[l - 1]))
    return WeightStack(tuple(weights), u, v)


def prod(weights: Sequence[np.ndarray], hi: int, lo: int) -> np.ndarray:
    """Descending product W^hi @ ... @ W^lo (1-based layer indices).

    The empty range hi == lo - 1 yields the identity of width d_hi, which is
    what the edge blocks of the gradient and Hessian formulas require.
    """
    if hi < lo - 1:
        raise ValueError(f"invalid layer range {hi}:{lo}")
    if hi == lo - 1:
        n = weights[hi].shape[1] if hi < len(weights) else weights[-1].shape[0]
        return np.eye(n)
    out = weights[hi - 1]
    for l in range(hi - 1, lo - 1, -1):
        out = out @ weights[l - 1]
    return out


def end_to_end(w: WeightStack) -> np.ndarray:
    """The d_L x d_0 product W^L ... W^1."""
    return prod(w.weights, w.depth, 1)


def residual_cross_covariance(w: WeightStack, data: DataModel) -> np.ndarray:
    """The residual second moment W^(L:1) sigma_xx - sigma_yx."""
    return end_to_end(w) @ data.sigma_xx - data.sigma_yx


def population_gradient(w: WeightStack, data: DataModel, layer: int) -> np.ndarray:
    """Gradient of the population loss with respect to W^layer."""
    L = w.depth
    if not 1 <= layer <= L:
        raise ValueError(f"layer {layer} outside 1..{L}")
    omega = residual_cross_covariance(w, data)
    left = prod(w.weights, L, layer + 1)  # d_L x d_layer
    right = prod(w.weights, layer - 1, 1)  # d_(layer-1) x d_0
    return left.T @ omega @ right.T


def gd_step(w: WeightStack, data: DataModel, eta: float) -> WeightStack:
    """One synchronous gradient step; all layers update from the same
    pre-step stack. Frames are carried over unchanged."""
    L = w.depth
    omega = residual_cross_covariance(w, data)
    new_weights = []
    for layer in range(1, L + 1):
        left = prod(w.weights, L, layer + 1)
        right = prod(w.weights, layer - 1, 1)
        grad = left.T @ omega @ right.T
        new_weights.append(w.weights[layer - 1] - eta * grad)
    return w.replace_weights(new_weights)


def spectral_state(w: WeightStack) -> SpectralState:
    """Extract the shared diagonal lambda_1..lambda_d* and the worst
    off-pattern entry over all layers.

    Middle layers must be padded diagonals; W^1 must be pad(diag V^T) and
    W^L pad(U diag). For L = 2 the diagonal is read off U^T W^L.
    """
    L = w.depth
    ds = w.d_star
    if L >= 3:
        lambdas = np.diag(w.weights[1][:ds, :ds]).copy()
    else:
        lambdas = np.diag(w.u.T @ w.weights[-1][:, :ds]).copy()
    residual = 0.0
    diag = np.diag(lambdas)
    for layer in range(1, L + 1):
        actual = w.weights[layer - 1]
        if layer == 1:
            core = diag @ w.v.T
        elif layer == L:
            core = w.u @ diag
        else:
            core = diag
        expected = pad_embed(core, actual.shape[0], actual.shape[1])
        residual = max(residual, float(np.max(np.abs(actual - expected))))
    return SpectralState(lambdas, residual)


def population_excess_loss(
    w: WeightStack, data: DataModel, residual_tol: float = STRUCTURE_RESIDUAL_TOL
) -> float:
    """Excess population loss 1/2 sum_{i<=r} (1 - s_i)^2, where s_i are the
    aligned singular values of the end-to-end map.

    Only valid inside the shared-spectral-structure regime; a stack whose
    off-pattern residual exceeds residual_tol raises RegimeViolationError.
    """
    state = spectral_state(w)
    if state.residual > residual_tol:
        raise RegimeViolationError(
            f"structure residual {state.residual:.3e} exceeds {residual_tol:.0e}"
        )
    aligned = np.diag(w.u.T @ end_to_end(w) @ w.v)[: data.rank]
    return float(0.5 * np.sum((1.0 - aligned) ** 2))
