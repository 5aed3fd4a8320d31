"""Closed-form Hessian spectrum predictions and their verification against
assembled matrices.

At an aligned state with active eigenvalues lam_1..lam_r the nonzero
spectrum of the outer-product Hessian splits into a dominant cluster of r^2
values

    nu_{i,j} = sum_{l=1}^L lam_i^(2(L-l)) lam_j^(2(l-1)),   i, j <= r

and a bulk cluster holding lam_i^(2(L-1)) with multiplicity d0 + dL - 2r
per active i; the remaining (dL - r)(d0 - r) Gram-space eigenvalues are
zero. Under uniform initialization the two clusters collapse to single
values with exact ratio L.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import ConfigurationError, ContractViolationError, DimensionError
from .network import NetworkDims, WeightStack, spectral_state

ZERO_FLOOR_REL = 1e-8

# The interval envelope for the dominant/bulk ratio collapses to zero width
# at convergence, while the measured ratio carries eigensolver rounding;
# envelope membership is therefore checked with this relative guard.
RATIO_ENVELOPE_RTOL = 1e-12
RAYLEIGH_MATCH_TOL = 1e-8
EIGVEC_NORM_FLOOR = 1e-12

DOMINANT = "dominant"
BULK = "bulk"
ZERO = "zero"


@dataclass(frozen=True)
class SpectrumPrediction:
    """Predicted eigenvalue multisets of the outer-product Hessian."""

    dominant_values: np.ndarray  # descending, length r^2
    bulk_values: np.ndarray  # descending, length (d0 + dL - 2r) r
    zero_count: int  # Gram-space zeros, (dL - r)(d0 - r)
    m: float
    delta: float
    gap_condition_ok: bool

    @property
    def dominant_count(self) -> int:
        return self.dominant_values.size

    @property
    def bulk_count(self) -> int:
        return self.bulk_values.size


@dataclass(frozen=True)
class SpectrumReport:
    """Measured eigenvalues labeled against a prediction."""

    eigenvalues: np.ndarray  # descending
    cluster_of: Tuple[str, ...]
    ambiguous: Tuple[bool, ...]
    ratio: float  # mean(dominant) / mean(bulk)
    ratio_range: Tuple[float, float]  # (min dom / max bulk, max dom / min bulk)
    weyl_slack: float
    prediction: SpectrumPrediction
    match_errors: Dict[str, float]

    @property
    def counts(self) -> Dict[str, int]:
        out = {DOMINANT: 0, BULK: 0, ZERO: 0}
        for label in self.cluster_of:
            out[label] += 1
        return out

    @property
    def counts_match(self) -> bool:
        c = self.counts
        return (
            c[DOMINANT] == self.prediction.dominant_count
            and c[BULK] == self.prediction.bulk_count
        )


@dataclass(frozen=True)
class RatioFit:
    """Least-squares fit of the dominant/bulk ratio against depth."""

    slope: float
    intercept: float
    max_rel_dev: float  # max over depths of |ratio / L - 1|
    envelope_ok: bool  # every ratio inside the two-sided interval bound


def dominant_eigenvalue(lam_i: float, lam_j: float, depth: int) -> float:
    """nu_{i,j} by direct summation of the L-term product series."""
    l = np.arange(1, depth + 1)
    return float(
        np.sum(lam_i ** (2.0 * (depth - l)) * lam_j ** (2.0 * (l - 1)))
    )


def gap_condition(m: float, delta: float, depth: int) -> bool:
    """(m + delta)/(m - delta) < L^(1/(2(L-1))) keeps the clusters apart."""
    if m - delta <= 0:
        return False
    return (m + delta) / (m - delta) < depth ** (1.0 / (2.0 * (depth - 1)))


def predict_spectrum(
    lambdas, dims: NetworkDims, input_rank: Optional[int] = None
) -> SpectrumPrediction:
    """Predicted H_o spectrum at an aligned state with the given r active
    eigenvalues.

    input_rank is the rank of the whitened input covariance (default d0,
    the full-rank case). Each rank-deficient input direction removes one
    bulk pair per active eigenvalue, so the bulk multiplicity is
    input_rank + d_out - 2r per active value.
    """
    q = dims.d0 if input_rank is None else input_rank
    if not dims.rank <= q <= dims.d0:
        raise ConfigurationError(
            f"input rank {q} outside [rank={dims.rank}, d0={dims.d0}]"
        )
    lam = np.asarray(lambdas, dtype=np.float64)
    if lam.ndim != 1 or lam.size == 0:
        raise DimensionError("lambdas must be a nonempty vector")
    if lam.size > dims.d_star:
        raise DimensionError(
            f"{lam.size} eigenvalues exceed d* = {dims.d_star}"
        )
    if np.any(lam <= 0):
        raise ConfigurationError("active eigenvalues must be positive")
    r = lam.size
    depth = dims.depth

    dom = np.array(
        [
            dominant_eigenvalue(lam[i], lam[j], depth)
            for i in range(r)
            for j in range(r)
        ]
    )
    bulk_mult = q + dims.d_out - 2 * r
    bulk = np.repeat(lam ** (2 * (depth - 1)), bulk_mult)
    m = 0.5 * (np.max(lam) + np.min(lam))
    delta = 0.5 * (np.max(lam) - np.min(lam))
    return SpectrumPrediction(
        dominant_values=np.sort(dom)[::-1],
        bulk_values=np.sort(bulk)[::-1],
        zero_count=dims.d_out * dims.d0 - r * r - bulk.size,
        m=float(m),
        delta=float(delta),
        gap_condition_ok=gap_condition(float(m), float(delta), depth),
    )


def _interval(values: np.ndarray, slack: float) -> Tuple[float, float]:
    return float(np.min(values) - slack), float(np.max(values) + slack)


def classify_clusters(
    eigenvalues, prediction: SpectrumPrediction, slack: float
) -> SpectrumReport:
    """Label each measured eigenvalue by the slack-widened predicted interval
    it falls in.

    Values at most max(slack, 1e-8 * lam_max) in magnitude are labeled zero.
    A value inside both widened intervals, or inside neither, is assigned to
    the nearest predicted value and flagged ambiguous. Count mismatches are
    reported through the result, not raised.
    """
    eigs = np.asarray(eigenvalues, dtype=np.float64)
    if eigs.ndim != 1:
        raise DimensionError("eigenvalues must be a vector")
    if np.any(np.diff(eigs) > 0):
        raise ContractViolationError("eigenvalues must be sorted descending")
    if slack < 0:
        raise ConfigurationError(f"slack must be >= 0, got {slack}")

    lam_max = float(np.max(np.abs(eigs))) if eigs.size else 0.0
    zero_thresh = max(slack, ZERO_FLOOR_REL * lam_max)
    dom_lo, dom_hi = _interval(prediction.dominant_values, slack)
    bulk_lo, bulk_hi = _interval(prediction.bulk_values, slack)

    labels = []
    flags = []
    for e in eigs:
        if abs(e) <= zero_thresh:
            labels.append(ZERO)
            flags.append(False)
            continue
        in_dom = dom_lo <= e <= dom_hi
        in_bulk = bulk_lo <= e <= bulk_hi
        if in_dom != in_bulk:
            labels.append(DOMINANT if in_dom else BULK)
            flags.append(False)
            continue
        # Overlapping intervals or no interval: nearest predicted value.
        d_dom = float(np.min(np.abs(prediction.dominant_values - e)))
        d_bulk = float(np.min(np.abs(prediction.bulk_values - e)))
        d_zero = abs(e)
        nearest = min((d_dom, DOMINANT), (d_bulk, BULK), (d_zero, ZERO))
        labels.append(nearest[1])
        flags.append(True)

    labels_t = tuple(labels)
    dom_meas = eigs[[l == DOMINANT for l in labels_t]]
    bulk_meas = eigs[[l == BULK for l in labels_t]]
    zero_meas = eigs[[l == ZERO for l in labels_t]]

    if dom_meas.size and bulk_meas.size:
        ratio = float(np.mean(dom_meas) / np.mean(bulk_meas))
        ratio_range = (
            float(np.min(dom_meas) / np.max(bulk_meas)),
            float(np.max(dom_meas) / np.min(bulk_meas)),
        )
    else:
        ratio = float("nan")
        ratio_range = (float("nan"), float("nan"))

    match_errors = {}
    for label, measured, predicted in (
        (DOMINANT, dom_meas, prediction.dominant_values),
        (BULK, bulk_meas, prediction.bulk_values),
        (ZERO, zero_meas, np.zeros(zero_meas.size)),
    ):
        if measured.size == predicted.size and measured.size:
            match_errors[label] = float(
                np.max(np.abs(np.sort(measured)[::-1] - predicted))
            )
        elif measured.size == predicted.size:
            match_errors[label] = 0.0
        else:
            match_errors[label] = float("nan")

    return SpectrumReport(
        eigenvalues=eigs,
        cluster_of=labels_t,
        ambiguous=tuple(flags),
        ratio=ratio,
        ratio_range=ratio_range,
        weyl_slack=float(slack),
        prediction=prediction,
        match_errors=match_errors,
    )


def verify_weyl_sandwich(h_eigs, h_o_eigs, hf_norm: float) -> float:
    """Worst excess of |lam_k(H) - lam_k(H_o)| over ||H_f||_2; zero when the
    eigenvalue sandwich holds."""
    a = np.asarray(h_eigs, dtype=np.float64)
    b = np.asarray(h_o_eigs, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractViolationError(
            f"spectra have different lengths: {a.shape} vs {b.shape}"
        )
    if np.any(np.diff(a) > 0) or np.any(np.diff(b) > 0):
        raise ContractViolationError("spectra must be sorted descending")
    if hf_norm < 0:
        raise ConfigurationError(f"hf_norm must be >= 0, got {hf_norm}")
    if a.size == 0:
        return 0.0
    return float(np.max(np.maximum(0.0, np.abs(a - b) - hf_norm)))


def _complete_basis(frame: np.ndarray) -> np.ndarray:
    """Extend orthonormal columns to a full orthonormal basis; the original
    columns come first, unchanged."""
    n, k = frame.shape
    q, _ = np.linalg.qr(np.hstack([frame, np.eye(n)]))
    q = q[:, :n]
    # QR may flip signs of the leading columns; undo so they equal the frame.
    for i in range(k):
        if np.dot(q[:, i], frame[:, i]) < 0:
            q[:, i] = -q[:, i]
    if np.max(np.abs(q[:, :k] - frame)) > 1e-10:
        raise ContractViolationError("basis completion moved the input frame")
    return q


def verify_eigenvectors(
    w: WeightStack, a_o: np.ndarray, h_o: np.ndarray, rank: Optional[int] = None
) -> float:
    """Check that A_o (u_i kron v_j) are eigenvectors of H_o with the
    predicted eigenvalues.

    Runs over the dominant pairs (i, j <= r) and bulk pairs (one index <= r),
    using basis completions of the U, V frames. Returns the largest relative
    eigenpair residual ||H_o v - rho v|| / ||v||; Rayleigh quotients must
    match the predicted values within 1e-8 relative and pairs with both
    indices beyond r must map to (near) zero vectors.
    """
    state = spectral_state(w)
    lam = state.lambdas
    if rank is None:
        rank = int(np.sum(lam > 1e-12))
    depth = w.depth
    d_out, d0 = w.weights[-1].shape[0], w.weights[0].shape[1]
    u_full = _complete_basis(w.u)
    v_full = _complete_basis(w.v)
    lam_full = np.zeros(max(d_out, d0))
    lam_full[: lam.size] = lam
    lam_max = max(
        float(np.max(np.abs(np.linalg.eigvalsh(h_o)))), 1e-300
    )

    max_residual = 0.0
    for i in range(d_out):
        for j in range(d0):
            vec = a_o @ np.kron(u_full[:, i], v_full[:, j])
            norm = float(np.linalg.norm(vec))
            if i >= rank and j >= rank:
                if norm > 1e-8:
                    raise ContractViolationError(
                        f"pair ({i}, {j}) beyond rank {rank} maps to a "
                        f"vector of norm {norm:.3e}"
                    )
                continue
            if norm < EIGVEC_NORM_FLOOR:
                raise ContractViolationError(
                    f"pair ({i}, {j}) should be a nonzero eigenvector but "
                    f"has norm {norm:.3e}"
                )
            if i < rank and j < rank:
                predicted = dominant_eigenvalue(lam[i], lam[j], depth)
            elif i < rank:
                predicted = lam[i] ** (2 * (depth - 1))
            else:
                predicted = lam[j] ** (2 * (depth - 1))
            hv = h_o @ vec
            rho = float(vec @ hv) / norm**2
            if abs(rho - predicted) > RAYLEIGH_MATCH_TOL * max(1.0, abs(predicted)):
                raise ContractViolationError(
                    f"Rayleigh quotient {rho:.12g} for pair ({i}, {j}) does "
                    f"not match the predicted {predicted:.12g}"
                )
            residual = float(np.linalg.norm(hv - rho * vec)) / norm
            max_residual = max(max_residual, residual / lam_max)
    return max_residual * lam_max


def ratio_envelope(depth: int, m: float, delta: float) -> Tuple[float, float]:
    """Two-sided interval that must contain the dominant/bulk ratio."""
    if m - delta <= 0:
        raise ConfigurationError("need m > delta > -m for the ratio envelope")
    lo = depth * ((m - delta) / (m + delta)) ** (2 * (depth - 1))
    hi = depth * ((m + delta) / (m - delta)) ** (2 * (depth - 1))
    return float(lo), float(hi)


def ratio_theta_L(reports: Dict[int, SpectrumReport]) -> RatioFit:
    """Least-squares fit of the measured mean ratio against depth.

    Needs at least three depths. Also checks every ratio against the
    two-sided interval envelope derived from the report's own (m, delta).
    """
    if len(reports) < 3:
        raise ConfigurationError(
            f"ratio fit needs >= 3 depths, got {len(reports)}"
        )
    depths = np.array(sorted(reports), dtype=np.float64)
    ratios = np.array([reports[int(d)].ratio for d in depths])
    if not np.all(np.isfinite(ratios)):
        raise ConfigurationError("every report must have a finite ratio")
    slope, intercept = np.polyfit(depths, ratios, 1)
    max_rel_dev = float(np.max(np.abs(ratios / depths - 1.0)))
    envelope_ok = True
    for d in depths:
        rep = reports[int(d)]
        lo, hi = ratio_envelope(int(d), rep.prediction.m, rep.prediction.delta)
        guard = RATIO_ENVELOPE_RTOL * hi
        if not lo - guard <= rep.ratio <= hi + guard:
            envelope_ok = False
    return RatioFit(
        slope=float(slope),
        intercept=float(intercept),
        max_rel_dev=max_rel_dev,
        envelope_ok=envelope_ok,
    )
