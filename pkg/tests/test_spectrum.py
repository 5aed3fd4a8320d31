import numpy as np
import pytest

from hbl.errors import ConfigurationError, ContractViolationError, DimensionError
from hbl.hessian import assemble_a_outer, assemble_outer
from hbl.matrixkit import sym_eigvalues
from hbl.network import DataModel, NetworkDims, balanced_init, sample_frames
from hbl.spectrum import (
    BULK,
    DOMINANT,
    ZERO,
    classify_clusters,
    dominant_eigenvalue,
    gap_condition,
    predict_spectrum,
    ratio_theta_L,
    verify_eigenvectors,
    verify_weyl_sandwich,
)

DIMS = NetworkDims.uniform_hidden(6, 7, 8, 3, 3)


def predicted_multiset(pred):
    return np.sort(
        np.concatenate(
            [pred.dominant_values, pred.bulk_values, np.zeros(pred.zero_count)]
        )
    )[::-1]


def test_counts_and_usi_values():
    pred = predict_spectrum(np.full(3, 0.8), DIMS)
    assert pred.dominant_count == 9
    assert pred.bulk_count == (6 + 7 - 2 * 3) * 3 == 21
    assert pred.zero_count == (7 - 3) * (6 - 3) == 12
    # uniform values collapse to exactly two nonzero levels with ratio L
    assert np.max(np.abs(pred.dominant_values - 3 * 0.8**4)) < 1e-15
    assert np.max(np.abs(pred.bulk_values - 0.8**4)) < 1e-15
    assert pred.gap_condition_ok
    assert pred.delta == 0.0


def test_dominant_value_closed_forms():
    rng = np.random.default_rng(0)
    for depth in (2, 3, 4, 5):
        for _ in range(20):
            li, lj = rng.uniform(0.3, 1.5, 2)
            direct = dominant_eigenvalue(li, lj, depth)
            closed = (li ** (2 * depth) - lj ** (2 * depth)) / (li**2 - lj**2)
            assert direct == pytest.approx(closed, rel=1e-12)
        li = rng.uniform(0.3, 1.5)
        assert dominant_eigenvalue(li, li, depth) == pytest.approx(
            depth * li ** (2 * (depth - 1)), rel=1e-12
        )


def test_predict_spectrum_input_validation():
    with pytest.raises(DimensionError):
        predict_spectrum(np.ones(7), DIMS)  # more values than d*
    with pytest.raises(ConfigurationError):
        predict_spectrum(np.array([0.5, -0.1]), DIMS)


def test_gap_condition_separates_clusters():
    rng = np.random.default_rng(1)
    for depth in (2, 3, 4, 5):
        dims = NetworkDims.uniform_hidden(6, 7, 8, depth, 3)
        edge = depth ** (1.0 / (2 * (depth - 1)))
        m = 0.9
        delta = 0.8 * m * (edge - 1) / (edge + 1)
        lam = np.sort(rng.uniform(m - delta, m + delta, 3))[::-1]
        pred = predict_spectrum(lam, dims)
        assert pred.gap_condition_ok
        assert np.min(pred.dominant_values) > np.max(pred.bulk_values)
        assert gap_condition(m, delta, depth)
        assert not gap_condition(m, 2 * m * (edge - 1) / (edge + 1), depth)


def test_self_classification_is_exact():
    lam = np.array([0.9, 0.8, 0.7])
    pred = predict_spectrum(lam, DIMS)
    report = classify_clusters(predicted_multiset(pred), pred, slack=0.0)
    counts = report.counts
    assert counts[DOMINANT] == pred.dominant_count
    assert counts[BULK] == pred.bulk_count
    assert counts[ZERO] == pred.zero_count
    assert report.counts_match
    assert not any(report.ambiguous)
    assert max(report.match_errors.values()) == 0.0


def test_labels_stable_under_half_slack_perturbation():
    lam = np.array([0.82, 0.8, 0.78])
    pred = predict_spectrum(lam, DIMS)
    base = predicted_multiset(pred)
    gap = np.min(pred.dominant_values) - np.max(pred.bulk_values)
    slack = 0.25 * gap
    rng = np.random.default_rng(2)
    noisy = np.sort(base + rng.uniform(-slack / 2, slack / 2, base.size))[::-1]
    clean = classify_clusters(base, pred, slack)
    shaken = classify_clusters(noisy, pred, slack)
    assert clean.cluster_of == shaken.cluster_of


def test_classification_contract_checks():
    pred = predict_spectrum(np.array([0.8, 0.8]), DIMS)
    with pytest.raises(ContractViolationError):
        classify_clusters(np.array([1.0, 2.0]), pred, 0.0)
    with pytest.raises(ConfigurationError):
        classify_clusters(np.array([2.0, 1.0]), pred, -1.0)


def test_weyl_sandwich():
    eigs = np.array([5.0, 3.0, 1.0, 0.0])
    assert verify_weyl_sandwich(eigs, eigs, 0.0) == 0.0
    shifted = eigs + 0.5
    assert verify_weyl_sandwich(shifted, eigs, 0.5) == 0.0  # boundary case
    assert verify_weyl_sandwich(shifted, eigs, 0.2) == pytest.approx(0.3)
    with pytest.raises(ContractViolationError):
        verify_weyl_sandwich(eigs, eigs[:2], 0.0)


def test_eigenvector_structure_at_balanced_states():
    for depth in (2, 3):
        dims = NetworkDims.uniform_hidden(6, 7, 8, depth, 3)
        u, v = sample_frames(dims, depth, support=dims.d_star)
        data = DataModel.whitened(dims, u, v)
        rng = np.random.default_rng(depth)
        lam = np.zeros(dims.d_star)
        lam[:3] = np.sort(rng.uniform(0.6, 0.9, 3))[::-1]
        stack = balanced_init(dims, lam**depth, frames=(u, v))
        a_o = assemble_a_outer(stack)
        h_o = assemble_outer(stack, data)
        lam_max = sym_eigvalues(h_o)[0]
        residual = verify_eigenvectors(stack, a_o, h_o, rank=3)
        assert residual < 1e-8 * lam_max


def test_ratio_fit_requires_three_depths():
    lam = np.array([0.8, 0.8])
    pred = predict_spectrum(lam, DIMS)
    report = classify_clusters(predicted_multiset(pred), pred, 0.0)
    with pytest.raises(ConfigurationError):
        ratio_theta_L({3: report})


def test_ratio_fit_recovers_unit_slope():
    reports = {}
    for depth in (2, 3, 4, 5):
        dims = NetworkDims.uniform_hidden(6, 7, 8, depth, 3)
        pred = predict_spectrum(np.full(3, 0.85), dims)
        reports[depth] = classify_clusters(predicted_multiset(pred), pred, 0.0)
    fit = ratio_theta_L(reports)
    assert fit.slope == pytest.approx(1.0, abs=1e-12)
    assert fit.intercept == pytest.approx(0.0, abs=1e-12)
    assert fit.max_rel_dev < 1e-12
    assert fit.envelope_ok
