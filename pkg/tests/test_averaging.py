import numpy as np
import pytest

from finsleravg import preset
from finsleravg.averaging import (
    AveragingError,
    InadmissibleFieldError,
    NotPositiveDefiniteError,
    TimelikeField,
    average_lorentzian_metric,
    average_positive_metric,
    average_riemannian_metric,
    check_timelike_condition,
    flip,
    lorentz_to_positive,
    positive_to_lorentz,
)

# frozen from an independent mpmath quadrature of the finslerian-lorentz preset
# (eps = 1/20, warp = 1), X = e0, unit weight, density sqrt|det g~|
FROZEN_H = {
    (0.0, 0.0): [0.91334012096599943, 0.99007176601522264],
    (0.3, -0.2): [0.91332298350956878, 1.8118284010412638],
}


def test_flip_is_an_involution_and_keeps_determinant(rng):
    for _ in range(20):
        A = rng.normal(size=(3, 3)) + 3 * np.eye(3)
        g = A.T @ np.diag([-1.0, 1.0, 1.0]) @ A
        X = np.linalg.solve(A, [1.0, 0.2, -0.1])
        gt = flip(g, X)
        np.testing.assert_allclose(flip(gt, X), g, atol=1e-12 * np.abs(g).max())
        assert abs(np.linalg.det(gt)) == pytest.approx(abs(np.linalg.det(g)), rel=1e-10)


def test_lorentz_to_positive_requires_timelike_X():
    with pytest.raises(InadmissibleFieldError):
        lorentz_to_positive(np.diag([-1.0, 1.0]), np.array([0.0, 1.0]))


def test_positive_to_lorentz_checks_definiteness():
    with pytest.raises(NotPositiveDefiniteError):
        positive_to_lorentz(np.diag([1.0, -1.0]), np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        positive_to_lorentz(np.eye(2), np.zeros(2))


def test_timelike_field_from_expressions():
    X = TimelikeField(["exp(x1)", "0.5*x0"], 2)
    np.testing.assert_allclose(X([2.0, 0.0]), [1.0, 1.0])
    with pytest.raises(ValueError, match="x only"):
        TimelikeField(["y0", "1"], 2)


def test_timelike_condition_for_finslerian_example():
    lag = preset("finslerian-lorentz", 3, eps=0.05)
    rep = check_timelike_condition(lag, np.array([1.0, 0, 0]), np.zeros(3))
    assert rep.passed and rep.weak_passed
    # large eps turns the y0-y0 entry positive near the spatial directions
    bad = preset("finslerian-lorentz", 3, eps=0.45)
    rep = check_timelike_condition(bad, np.array([1.0, 0, 0]), np.zeros(3))
    assert not rep.passed and rep.weak_passed


def test_pipeline_flags_inadmissible_field():
    lag = preset("minkowski", 2)
    with pytest.raises(AveragingError) as info:
        average_lorentzian_metric(lag, np.array([0.0, 1.0]), [np.zeros(2)])
    assert info.value.stage == "admissibility"
    assert info.value.point_index == 0


@pytest.mark.parametrize("x", sorted(FROZEN_H))
def test_positive_average_matches_frozen_oracle(x):
    lag = preset("finslerian-lorentz", 2)
    h = average_positive_metric(lag, np.array([1.0, 0.0]), np.array(x))
    np.testing.assert_allclose(np.diag(h.coeffs), FROZEN_H[x], rtol=1e-12)
    assert abs(h.coeffs[0, 1]) < 1e-14


def test_averaged_metric_differs_from_pointwise_for_finsler():
    lag = preset("finslerian-lorentz", 3)
    res = average_lorentzian_metric(lag, np.array([1.0, 0, 0]), [np.zeros(3)])
    rec = res.records[0]
    assert rec.ell.n_negative == 1 and rec.h.n_negative == 0
    assert rec.ell.coeffs[0, 0] > -1.0  # the quartic term raises g_00 on average
    assert rec.error_estimate < 1e-8


def test_reference_override_changes_back_transform():
    lag = preset("warped", 2)
    X = np.array([1.0, 0.0])
    V = np.array([1.0, 0.3])
    a = average_lorentzian_metric(lag, X, [np.zeros(2)]).records[0].ell.coeffs
    b = average_lorentzian_metric(lag, X, [np.zeros(2)], V=V).records[0].ell.coeffs
    assert np.count_nonzero(np.abs(a - b) > 1e-6)


def test_riemannian_average_of_euclidean_structure():
    lag = preset("randers-positive", 3, b=0.0)
    h = average_riemannian_metric(lag, np.zeros(3), 12)
    np.testing.assert_allclose(h.coeffs, np.eye(3), atol=1e-14)
    with pytest.raises(ValueError):
        average_riemannian_metric(preset("minkowski", 2), np.zeros(2))


def test_positive_mode_metric_average_is_positive():
    lag = preset("randers-positive", 2, b=0.5)
    h = average_riemannian_metric(lag, np.zeros(2), 24)
    assert h.n_negative == 0
    assert h.coeffs[1, 1] > h.coeffs[0, 0]
