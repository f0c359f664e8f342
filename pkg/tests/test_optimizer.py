import itertools

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from garza.catalog import REFERENCE, instantiate
from garza.design import Design, information_matrix, loewner_compare
from garza.errors import CriterionError
from garza.optimizer import (Criterion, directional_derivative, equivalence_check,
                             optimize, support_class)
from garza.reduction import reduce_design

def quadratic():
    return instantiate("polynomial", (0.0, 0.0, 0.0), (-1.0, 1.0))


def test_linear_regression_uses_the_endpoints():
    res = optimize(instantiate("polynomial", (0.0, 0.0), (-1.0, 1.0)))
    np.testing.assert_allclose(res.design.locations, [-1.0, 1.0])
    np.testing.assert_allclose(res.design.weights, [0.5, 0.5], atol=1e-12)
    assert res.equivalence.optimal


def test_quadratic_regression_on_symmetric_interval():
    res = optimize(quadratic())
    np.testing.assert_allclose(res.design.locations, [-1.0, 0.0, 1.0], atol=1e-6)
    np.testing.assert_allclose(res.design.weights, [1 / 3] * 3, atol=1e-6)
    assert res.equivalence.max_violation <= 1e-4
    assert res.case_label == "c"


def test_variance_function_of_quadratic_design():
    # d(x) = 3 - 9 x^2 / 2 + 9 x^4 / 2 for equal weights on {-1, 0, 1}
    m = quadratic()
    d = Design([-1.0, 0.0, 1.0], [1 / 3] * 3)
    eq = equivalence_check(m, d)
    x = eq.grid
    np.testing.assert_allclose(eq.derivative + 3, 3 - 4.5 * x ** 2 + 4.5 * x ** 4, atol=1e-12)
    assert eq.max_violation == pytest.approx(0.0, abs=1e-12)
    top = x[np.isclose(eq.derivative, eq.max_violation, atol=1e-12)]
    np.testing.assert_allclose(top, [-1.0, 0.0, 1.0], atol=1e-12)


def test_perturbed_design_is_flagged():
    m = quadratic()
    eq = equivalence_check(m, Design([-1.0, 0.2, 1.0], [0.3, 0.4, 0.3]))
    assert eq.max_violation > 1e-2
    assert not eq.optimal


def test_one_point_design_is_singular():
    m = instantiate("polynomial", (0.0, 0.0), (-1.0, 1.0))
    with pytest.raises(CriterionError):
        equivalence_check(m, Design([0.5], [1.0]))


def test_emax_design_has_uniform_weights_and_known_interior_point(models):
    m = models["emax3"]
    res = optimize(m)
    np.testing.assert_allclose(res.design.weights, [1 / 3] * 3, atol=1e-6)
    lo, hi = m.x_region
    ed50 = m.theta[2]
    # interior point of the saturated D-optimal Emax design
    np.testing.assert_allclose(res.design.locations, [lo, hi * ed50 / (hi + 2 * ed50), hi],
                               atol=1e-6)
    assert res.equivalence.optimal


@pytest.mark.parametrize("name, expected", [
    ("weighted_ii", [0.0, 3 - np.sqrt(3), 3 + np.sqrt(3)]),
    ("weighted_iv", [-np.sqrt(1.5), 0.0, np.sqrt(1.5)]),
])
def test_weighted_polynomial_matches_classical_nodes(models, name, expected):
    res = optimize(models[name])
    np.testing.assert_allclose(res.design.locations, expected, atol=1e-6)


@pytest.mark.parametrize("name", sorted(REFERENCE))
def test_d_optimal_outputs_pass_equivalence_and_are_reduction_fixed_points(models, name):
    m = models[name]
    res = optimize(m)
    case, _, _ = support_class(m)
    assert res.design.size <= case.max_support
    assert res.equivalence.max_violation <= 1e-4
    rep = reduce_design(m, res.design)
    assert rep.output.size == res.design.size
    np.testing.assert_allclose(rep.output.locations, res.design.locations, rtol=0, atol=1e-7)
    np.testing.assert_allclose(rep.output.weights, res.design.weights, rtol=0, atol=1e-7)


@pytest.mark.parametrize("kind, kw", [("A", {}), ("E", {}), ("Phi", {"exponent": -2.0}),
                                      ("Phi", {"exponent": 0.5})])
def test_other_criteria_are_certified(models, kind, kw):
    m = models["emax3"]
    crit = Criterion(kind, **kw)
    res = optimize(m, crit)
    assert res.equivalence.max_violation <= 1e-4
    assert np.all(res.design.weights > 1e-3)


def _c_oracle(model, c_vec, pinned, grid=400):
    # saturated design: c' M^-1 c = sum a_i^2 / w_i with a = H^-1 c, best w ~ |a|
    lo, hi = model.psi.interval

    def value(t):
        H = model.info_vector(np.array([pinned[0], t, pinned[1]]))
        a = np.linalg.solve(H, c_vec)
        return np.sum(np.abs(a)) ** 2

    ts = np.linspace(lo, hi, grid)[1:-1]
    vals = [value(t) for t in ts]
    i = int(np.argmin(vals))
    best = minimize_scalar(value, bounds=(ts[max(i - 1, 0)], ts[min(i + 1, len(ts) - 1)]),
                           method="bounded", options={"xatol": 1e-12})
    return min(best.fun, vals[i])


def test_c_optimal_value_matches_saturated_closed_form(models):
    m = models["emax3"]
    c_vec = np.array([0.0, 1.0, 1.0])
    res = optimize(m, Criterion("c", vector=tuple(c_vec)))
    lo, hi = m.psi.interval
    assert res.value == pytest.approx(_c_oracle(m, c_vec, (lo, hi)), rel=1e-6)


def test_c_criterion_checks_estimability():
    crit = Criterion("c", vector=(0.0, 1.0))
    M = np.array([[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(CriterionError):
        crit.value(M)
    assert Criterion("c", vector=(1.0, 0.0)).value(M) == pytest.approx(1.0)
    with pytest.raises(CriterionError):
        Criterion("c", vector=(1.0, 0.0, 0.0)).value(M)


@pytest.mark.parametrize("kw", [{"kind": "Q"}, {"kind": "c"}, {"kind": "Phi"},
                                {"kind": "Phi", "exponent": 0.0},
                                {"kind": "Phi", "exponent": 1.0},
                                {"kind": "Phi", "exponent": float("inf")}])
def test_invalid_criteria(kw):
    with pytest.raises(CriterionError):
        Criterion(**kw)


def test_criteria_never_prefer_a_dominated_matrix(rng):
    kinds = [Criterion("D"), Criterion("A"), Criterion("E"), Criterion("Phi", exponent=-1.0),
             Criterion("Phi", exponent=0.5)]
    checked = 0
    while checked < 100:
        p = int(rng.integers(2, 6))
        G = rng.normal(size=(p, p))
        M1 = G @ G.T + 0.05 * np.eye(p)
        H = rng.normal(size=(p, int(rng.integers(1, p + 1))))
        M2 = M1 + rng.uniform(0, 1) * H @ H.T
        if not loewner_compare(M1, M2).dominates:
            continue
        for crit in kinds:
            assert crit.value(M2) <= crit.value(M1) + 1e-12 * (1 + abs(crit.value(M1)))
        checked += 1


def test_criterion_gradients_match_finite_differences(rng):
    p = 3
    G = rng.normal(size=(p, p))
    M = G @ G.T + np.eye(p)
    E = rng.normal(size=(p, p))
    E = E + E.T
    for crit in [Criterion("D"), Criterion("A"), Criterion("E"), Criterion("c", vector=(1, 2, 3)),
                 Criterion("Phi", exponent=-0.5)]:
        _, g = crit.loss_and_grad(M)
        h = 1e-6
        fd = (crit.value(M + h * E) - crit.value(M - h * E)) / (2 * h)
        assert np.sum(g * E) == pytest.approx(fd, rel=1e-6, abs=1e-8)


def test_directional_derivative_matches_mixing(models):
    # derivative toward a one-point design equals d/dt of the gain at t = 0
    m = models["exponential3"]
    d = Design([0.1, 2.0, 5.0], [0.2, 0.5, 0.3])
    M = information_matrix(m, d)
    x = 1.3
    h = m.info_vector(m.c_of_x(np.array([x])))[:, 0]
    for crit in [Criterion("D"), Criterion("A"), Criterion("Phi", exponent=-2.0)]:
        t = 1e-6
        mixed = (1 - t) * M + t * np.outer(h, h)
        fd = -(crit.value(mixed) - crit.value(M)) / t
        assert directional_derivative(m, M, crit, x)[0] == pytest.approx(fd, rel=1e-4)


def test_optimizer_is_deterministic(models):
    a = optimize(models["sigmoid_emax"], seed=3)
    b = optimize(models["sigmoid_emax"], seed=3)
    assert np.array_equal(a.design.locations, b.design.locations)
    assert np.array_equal(a.design.weights, b.design.weights)


def test_unbounded_region_is_rejected():
    m = instantiate("weighted_polynomial", (0.0, 0.0, 0.0), (0.0, float("inf")),
                    {"variant": "ii"})
    with pytest.raises(CriterionError):
        optimize(m)


def test_support_never_exceeds_case_bound(models):
    for name in ["emax_pk1", "polynomial3", "poisson_pos"]:
        res = optimize(models[name], n_starts=4)
        assert res.design.size <= 4


def test_random_designs_never_beat_the_optimum(models, rng):
    m = models["logexp3"]
    res = optimize(m)
    lo, hi = m.x_region
    for size, _ in itertools.product(range(3, 7), range(10)):
        x = np.sort(rng.uniform(lo, hi, size))
        d = Design.build(x, rng.dirichlet(np.ones(size)), "x", normalize=True)
        assert Criterion("D").value(information_matrix(m, d)) >= res.value - 1e-9
