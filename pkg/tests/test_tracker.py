import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sltrack.assessment import Aspect, AspectBinning, reference_probabilities
from sltrack.harness.evaluation import sample_outcome_frequencies
from sltrack.stats import chi2_cdf, chi2_quantile
from sltrack.tracker import (
    MeasurementScan,
    MotionModel,
    NumericalError,
    ReferenceModel,
    SensorModel,
    TrackState,
    associate_nn,
    association_reference,
    gate_clutter_rate,
    mahalanobis_sq,
    predict,
    reference_coeffs,
    steady_state_innovation_covs,
    transformed_likelihood_value,
    update,
)

R = 0.75**2 * np.eye(2)


def sensor(pd=0.9, lam=4.0, fov=20000.0):
    return SensorModel(pd, lam, fov, R)


def state(p=1.0):
    return TrackState(np.array([0.0, 0.0, 1.0, 0.0]), p * np.eye(4))


def test_cv_model():
    m = MotionModel.constant_velocity(2.0, 0.5)
    assert m.transition[0, 2] == 2.0 and m.transition[1, 3] == 2.0
    g = np.array([[2.0, 0], [0, 2.0], [2.0, 0], [0, 2.0]])
    assert np.allclose(m.process_noise, 0.25 * g @ g.T)


def test_predict_propagates_moments():
    m = MotionModel.constant_velocity(1.0, 0.1)
    p = predict(state(), m)
    assert np.allclose(p.mean, [1.0, 0.0, 1.0, 0.0])
    assert np.allclose(p.covariance, m.transition @ state().covariance @ m.transition.T + m.process_noise)
    assert p.time_step == 1


def test_predict_rejects_bad_covariance():
    bad = TrackState(np.zeros(4), np.full((4, 4), np.nan))
    with pytest.raises(NumericalError):
        predict(bad, MotionModel.constant_velocity())


def test_association_picks_nearest_inside_gate():
    s = sensor()
    scan = MeasurementScan(np.array([[5.0, 5.0], [0.3, -0.2], [0.4, 0.4]]))
    innov = associate_nn(state(), scan, s)
    assert innov.assoc_index == 2
    assert transformed_likelihood_value(innov) == pytest.approx(mahalanobis_sq([0.3, -0.2], innov.innovation_cov))


def test_association_tie_goes_to_lowest_index():
    scan = MeasurementScan(np.array([[0.5, 0.0], [-0.5, 0.0], [0.0, 0.5]]))
    assert associate_nn(state(), scan, sensor()).assoc_index == 1


def test_association_outside_gate_and_empty_scan():
    far = MeasurementScan(np.array([[50.0, 0.0]]))
    assert associate_nn(state(), far, sensor()).assoc_index == 0
    empty = associate_nn(state(), MeasurementScan(np.zeros((0, 2))), sensor())
    assert empty.assoc_index == 0 and transformed_likelihood_value(empty) is None


def test_update_joseph_matches_standard_form():
    s = sensor()
    pred = TrackState(np.array([1.0, 2.0, 0.5, -0.5]), np.diag([2.0, 3.0, 0.5, 0.5]) + 0.1)
    innov = associate_nn(pred, MeasurementScan(np.array([[1.5, 1.0]])), s)
    post = update(pred, innov, s)
    h = s.meas_matrix
    k = pred.covariance @ h.T @ np.linalg.inv(innov.innovation_cov)
    assert np.allclose(post.mean, pred.mean + k @ innov.residual)
    assert np.allclose(post.covariance, (np.eye(4) - k @ h) @ pred.covariance, atol=1e-12)
    assert np.allclose(post.covariance, post.covariance.T)


def test_update_on_miss_is_identity():
    st_ = state()
    innov = associate_nn(st_, MeasurementScan(np.zeros((0, 2))), sensor())
    assert update(st_, innov, sensor()) is st_


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_covariance_stays_positive_definite(seed):
    rng = np.random.default_rng(seed)
    m = MotionModel.constant_velocity(1.0, 0.2)
    s = sensor()
    x = state(10.0)
    for _ in range(50):
        x = predict(x, m)
        z = s.meas_matrix @ x.mean + rng.normal(0, 0.75, 2)
        x = update(x, associate_nn(x, MeasurementScan(z[None, :]), s), s)
        assert np.all(np.linalg.eigvalsh(x.covariance) > 0)


def test_nis_is_chi_square_for_consistent_filter():
    rng = np.random.default_rng(7)
    m = MotionModel.constant_velocity(1.0, 0.2)
    s = sensor()
    truth = np.array([0.0, 0.0, 1.0, 0.5])
    x = TrackState(truth.copy(), 0.01 * np.eye(4))
    chol = np.linalg.cholesky(m.process_noise + 1e-15 * np.eye(4))
    nis = []
    for _ in range(4000):
        truth = m.transition @ truth + chol @ rng.standard_normal(4)
        x = predict(x, m)
        z = truth[:2] + rng.normal(0, 0.75, 2)
        innov = associate_nn(x, MeasurementScan(z[None, :]), s, 0.9999999)
        nis.append(transformed_likelihood_value(innov))
        x = update(x, innov, s)
    assert np.mean(nis[100:]) == pytest.approx(2.0, abs=0.1)


# ---------------------------------------------------------------- reference distribution


def test_reference_corner_case_is_exact():
    ref = reference_coeffs(sensor(pd=1.0, lam=0.0))
    assert (ref.c0_tilde, ref.c1_tilde) == (0.0, 1.0)
    ref = association_reference(sensor(pd=1.0, lam=0.0))
    assert (ref.c0_tilde, ref.c1_tilde) == (0.0, 1.0)


def test_reference_needs_clutter_unless_perfect_detection():
    with pytest.raises(ValueError):
        reference_coeffs(sensor(pd=0.9, lam=0.0))


def test_closed_form_coefficients_frozen():
    # (1 - p_D) rho^(lam + p_D) / e^lam / (lam + p_D)!  and  p_D rho^(lam + p_D - 1) (lam + p_D) / e^lam / (lam + p_D)!
    ref = reference_coeffs(sensor())
    rho, em = 4.0 / 20000.0, 4.9
    fact = math.gamma(em + 1)
    assert ref.c0_tilde == pytest.approx(0.1 * rho**em * math.exp(-4) / fact, rel=1e-12)
    assert ref.c1_tilde == pytest.approx(0.9 * rho ** (em - 1) * em * math.exp(-4) / fact, rel=1e-12)
    # the missed weight scales with the clutter density, not with 1 - p_D
    ratio = 0.1 * rho / (0.9 * em)
    assert ref.c0_tilde / ref.normalizer == pytest.approx(ratio / (1 + ratio), rel=1e-12)
    assert ref.c0_tilde / ref.normalizer < 1e-5


def test_survival_without_clutter():
    ref = ReferenceModel(0.1, 0.9, 2)
    for t in (0.0, 1.0, 5.0):
        assert ref.survival(t) == pytest.approx(1 - 0.9 * chi2_cdf(t, 2))
    gate = chi2_quantile(0.99, 2)
    probs = ref.bin_probs((0.0, 1.0, 3.0), gate)
    assert sum(probs) + ref.missed_prob(gate) == pytest.approx(1.0)
    assert ref.missed_prob(gate) == pytest.approx(0.1 + 0.9 * 0.01)


def test_gate_clutter_rate():
    s = sensor()
    cov = np.diag([0.8, 0.9])
    assert gate_clutter_rate(s, cov) == pytest.approx(4 / 20000 * math.pi * math.sqrt(0.72))


def test_steady_state_innovation_covariance_is_fixed_point():
    m = MotionModel.constant_velocity(1.0, 0.2)
    sensors = [sensor(), sensor(), sensor()]
    a = steady_state_innovation_covs(m, sensors, steps=400)
    b = steady_state_innovation_covs(m, sensors, steps=800)
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=1e-10)
    assert a[0][0, 0] > a[1][0, 0] > a[2][0, 0] > R[0, 0]


@pytest.mark.parametrize("pd,lam", [(0.9, 4.0), (0.6, 4.0), (0.9, 2.0), (0.99, 8.0)])
def test_sampled_outcomes_match_reference(pd, lam):
    s = sensor(pd, lam)
    cov = steady_state_innovation_covs(MotionModel.constant_velocity(1.0, 0.2), [s])[0]
    binning = AspectBinning.create(3, 2, 0.999, 4.0)
    freq = sample_outcome_frequencies(s, cov, binning, 20_000, np.random.default_rng(3))
    ref = reference_probabilities(Aspect.OVERALL, binning, association_reference(s, cov), lam)
    assert np.max(np.abs(freq - ref)) < 0.015
