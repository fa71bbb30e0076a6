import math

import numpy as np
import pytest

from finsleravg import preset
from finsleravg.lagrangians import Lagrangian
from finsleravg.quadrature import (
    UNIT,
    EmptyHyperboloidError,
    QuadratureConfig,
    QuadratureDomain,
    WeightSpec,
    adapted_frame,
    build_hyperboloid_domain,
    build_indicatrix_domain,
    build_slab_domain,
    build_sphere_domain,
    integrate,
    pairwise_sum,
    sphere_area,
    sphere_grid,
)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_sphere_grid_total_measure(d):
    nodes, w = sphere_grid(d, 12)
    np.testing.assert_allclose(np.linalg.norm(nodes, axis=1), 1.0, atol=1e-15)
    assert w.sum() == pytest.approx(sphere_area(d), rel=1e-13)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_sphere_grid_integrates_low_moments(d):
    nodes, w = sphere_grid(d, 8)
    n = d + 1
    # the second moment of each coordinate is area / n; odd moments vanish
    second = (w[:, None] * nodes ** 2).sum(axis=0)
    np.testing.assert_allclose(second, sphere_area(d) / n, rtol=1e-13)
    np.testing.assert_allclose((w[:, None] * nodes ** 3).sum(axis=0), 0.0, atol=1e-13)


def test_pairwise_sum_is_order_fixed():
    a = np.random.default_rng(0).normal(size=(1001, 3))
    s1 = pairwise_sum(a)
    s2 = pairwise_sum(a.copy())
    assert np.array_equal(s1, s2)
    np.testing.assert_allclose(s1, a.sum(axis=0), rtol=1e-12)


def test_integrate_rejects_non_finite_values():
    dom = QuadratureDomain("sphere", np.zeros(2), np.eye(2), np.ones(2), np.ones(2))
    with pytest.raises(ValueError, match="node 1"):
        integrate(dom, np.array([1.0, np.nan]))


def test_minkowski_sphere_average_of_constant():
    lag = preset("minkowski", 3)
    dom = build_sphere_domain(lag, np.zeros(3), 10)
    res = integrate(dom, np.full(dom.size, 3.5))
    assert res.average == pytest.approx(3.5, rel=1e-14)
    assert res.normalizer == pytest.approx(4 * math.pi, rel=1e-13)


def test_indicatrix_of_euclidean_norm_is_the_sphere():
    lag = preset("randers-positive", 3, b=0.0)
    ind = build_indicatrix_domain(lag, np.zeros(3), 12)
    sph = build_sphere_domain(lag, np.zeros(3), 12)
    f = lambda nodes: nodes[:, 0] ** 2 + 2 * nodes[:, 2] ** 4
    a = integrate(ind, f(ind.nodes)).average
    b = integrate(sph, f(sph.nodes)).average
    assert a == pytest.approx(b, rel=1e-13)


def test_indicatrix_nodes_lie_on_unit_level_set():
    lag = preset("randers-positive", 2, b=0.5)
    dom = build_indicatrix_domain(lag, np.zeros(2), 16)
    y = dom.nodes
    F = np.linalg.norm(y, axis=1) + 0.5 * y[:, 1]
    np.testing.assert_allclose(F, 1.0, atol=1e-14)


def test_indicatrix_area_is_riemannian_for_quadratic_norms():
    # for F^2 = y.A.y the induced measure is the Riemannian area of the unit sphere
    rng = np.random.default_rng(3)
    B = rng.normal(size=(3, 3))
    A = np.eye(3) + 0.1 * (B + B.T)
    terms = " + ".join(f"{float(A[i, j])!r}*y{i}*y{j}" for i in range(3) for j in range(3))
    lag = Lagrangian.from_text(terms, 3, "positive")
    dom = build_indicatrix_domain(lag, np.zeros(3), 24)
    assert dom.measure_weights.sum() == pytest.approx(4 * math.pi, rel=1e-12)


def test_truncation_is_bounded_by_double_precision():
    lag = preset("minkowski", 2)
    with pytest.raises(ValueError, match="truncation"):
        build_hyperboloid_domain(lag, np.zeros(2), np.array([1.0, 0.0]), truncation=20)


def test_hyperboloid_nodes_on_level_set_and_future():
    lag = preset("finslerian-lorentz", 3)
    dom = build_hyperboloid_domain(lag, np.array([0.2, 0.0, 0.1]), np.array([1.0, 0, 0]), truncation=4, nodes_t=32,
                                   nodes_sphere=8)
    assert dom.metadata["level_set_residual"] < 1e-12
    assert dom.metadata["future_fraction"] == 1.0
    both = build_hyperboloid_domain(lag, np.array([0.2, 0.0, 0.1]), np.array([1.0, 0, 0]), truncation=4,
                                    nodes_t=32, nodes_sphere=8, both_branches=True)
    assert both.size == 2 * dom.size


def test_minkowski_hyperboloid_volume_closed_form():
    # y = sqrt(2) (cosh t, sinh t w) on L = -1, |y|^2 = 2 cosh 2t, psi^2 = (2 cosh 2t)^-3,
    # induced measure (sqrt 2)^3 sinh t dt dw
    lag = preset("minkowski", 3)
    dom = build_hyperboloid_domain(lag, np.zeros(3), np.array([1.0, 0, 0]), truncation=12, nodes_t=256,
                                   nodes_sphere=16)
    vol = integrate(dom, np.ones(dom.size)).normalizer
    from scipy.integrate import quad

    ref = 2 * math.pi * quad(lambda t: 2 * math.sqrt(2) * math.sinh(t) / (2 * math.cosh(2 * t)) ** 3, 0, 40)[0]
    assert vol == pytest.approx(ref, rel=1e-9)


def test_hyperboloid_needs_timelike_orientation():
    lag = preset("minkowski", 2)
    with pytest.raises(EmptyHyperboloidError):
        build_hyperboloid_domain(lag, np.zeros(2), np.array([0.0, 1.0]))


def test_hyperboloid_for_riemannian_fiber_is_empty():
    lag = Lagrangian.from_text("0.5*(y0^2 + y1^2)", 2)
    with pytest.raises(EmptyHyperboloidError):
        adapted_frame(lag, np.zeros(2), np.array([1.0, 0.0]))


def test_slab_lorentz_invariant_weight_inputs():
    lag = preset("minkowski", 2)
    dom = build_slab_domain(lag, np.zeros(2), 2.0, nodes_per_axis=12)
    assert np.all(np.abs(dom.nodes[:, 0]) <= 2.0)
    assert np.all(dom.psi2 >= 0)
    assert dom.metadata["axis"] == 0


def test_weight_spec_validation():
    with pytest.raises(ValueError):
        WeightSpec("gaussian")
    with pytest.raises(ValueError):
        WeightSpec(power=0)
    assert WeightSpec().resolved_power(4) == 4
    assert UNIT.psi2(preset("minkowski", 2), np.zeros(2), np.eye(2)).tolist() == [1.0, 1.0]


def test_quadrature_config_round_trip_and_unknown_keys():
    cfg = QuadratureConfig.from_dict({"sphere_nodes": 10, "hyperboloid": {"truncation": 6}, "weight": {"power": 1}})
    assert cfg.sphere_nodes == 10 and cfg.truncation == 6.0 and cfg.weight.power == 1
    assert QuadratureConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError, match="hyperboloid.T"):
        QuadratureConfig.from_dict({"hyperboloid": {"T": 3}})


@pytest.mark.parametrize("n", [2, 3, 4])
def test_default_weight_tail_is_negligible(n):
    lag = preset("finslerian-lorentz", n)
    dom = build_hyperboloid_domain(lag, np.full(n, 0.1), np.eye(n)[0], nodes_sphere=8)
    assert dom.metadata["relative_tail"] < 1e-9


def test_unit_power_weight_diverges_in_four_dimensions():
    # weight ~ exp(-2t) against measure ~ sinh(t)^2: the tail does not decay
    lag = preset("minkowski", 4)
    dom = build_hyperboloid_domain(lag, np.zeros(4), np.eye(4)[0], nodes_sphere=8, weight=WeightSpec(power=1))
    assert dom.metadata["relative_tail"] > 0.1


def test_minkowski_hyperboloid_average_matches_frozen_oracle():
    # (int tanh(t)^2 sech(2t) dt) / (pi/2) over the real line, mpmath at 30 digits
    frozen = 0.27323954473516268615
    lag = preset("minkowski", 2)
    dom = build_hyperboloid_domain(lag, np.zeros(2), np.array([1.0, 0.0]), truncation=12, nodes_t=256,
                                   weight=WeightSpec(power=1))
    f = (dom.nodes[:, 1] / dom.nodes[:, 0]) ** 2
    assert integrate(dom, f).average == pytest.approx(frozen, abs=1e-9)


def test_odd_integrand_on_symmetric_slab_vanishes():
    lag = preset("minkowski", 3)
    dom = build_slab_domain(lag, np.zeros(3), 3.0, nodes_per_axis=10)
    assert abs(integrate(dom, dom.nodes[:, 0] / np.linalg.norm(dom.nodes, axis=1)).average) < 1e-14
