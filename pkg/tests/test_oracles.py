import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from garza.catalog import REFERENCE
from garza.errors import OracleError
from garza.oracles import (det_D, det_D1, det_full_pivot, det_g, leave_one_out,
                           leave_one_out_d1, sign_pattern_check, weights_from_nodes)
from garza.psi import PsiSystem, normalize_signs, verify_signs


def normalized(model):
    psi = model.psi
    if not psi.bounded:
        lo, hi = psi.interval
        psi = psi.restricted(lo if np.isfinite(lo) else -2.0, hi if np.isfinite(hi) else 2.0)
    cert = verify_signs(psi, 128)
    return normalize_signs(psi, cert.signs)[0]


def spread_points(rng, a, b, n):
    """Sorted points in [a, b] with gaps of at least (b-a)/(4n)."""
    while True:
        p = np.sort(rng.uniform(a, b, n))
        if n == 1 or np.min(np.diff(p)) > (b - a) / (4 * n):
            return p


def null_weights(system, nodes, total):
    """Oracle: null vector with first entry 1 from a 40-digit linear solve.

    The solve is exact for the double-precision function values, so the
    comparison measures only the error of the determinant route.
    """
    rows = np.vstack([np.ones_like(nodes), system.values(nodes)[: system.k - 1]])
    with mpmath.workdps(40):
        A = mpmath.matrix(rows[:, 1:].tolist())
        sol = mpmath.lu_solve(A, mpmath.matrix((-rows[:, 0]).tolist()))
        r = np.array([1.0] + [float(v) for v in sol])
    w = np.abs(r)
    w[0::2] *= total / w[0::2].sum()
    w[1::2] *= total / w[1::2].sum()
    return w


@given(arrays(float, (4, 4), elements=st.floats(-10, 10)))
def test_full_pivot_matches_lapack(M):
    assert det_full_pivot(M) == pytest.approx(np.linalg.det(M), rel=1e-9, abs=1e-9)


def test_full_pivot_small_cases():
    assert det_full_pivot([[2.0]]) == 2.0
    assert det_full_pivot(np.zeros((3, 3))) == 0.0
    assert det_full_pivot([[0.0, 1.0], [1.0, 0.0]]) == -1.0
    with pytest.raises(ValueError):
        det_full_pivot(np.ones((2, 3)))


def test_monomial_determinants_by_hand():
    mono = PsiSystem((lambda c: c, lambda c: c * c), (0.0, 1.0))
    # g = det [[1, 1], [2a, 2b]] = 2(b - a)
    assert det_g(mono, [0.2, 0.7]) == pytest.approx(1.0)
    # D1 over {0, 0.5, 1}: increments (0.5, 0.5) and (0.25, 0.75)
    assert det_D1(mono, [0.0, 0.5, 1.0]) == pytest.approx(0.5 * 0.75 - 0.5 * 0.25)
    assert det_D(mono, [[0.0, 0.5], [0.5, 1.0]]) == pytest.approx(0.25)


@pytest.mark.parametrize("name", sorted(REFERENCE))
def test_determinants_positive_on_random_configurations(models, name, rng):
    system = normalized(models[name])
    a, b = system.interval
    k = system.k
    for _ in range(20):
        m = int(rng.integers(1, k + 1))
        assert det_g(system, spread_points(rng, a, b, m)) > 0
        ends = spread_points(rng, a, b, 2 * m)
        assert det_D(system, ends.reshape(m, 2)) > 0
        assert det_D1(system, spread_points(rng, a, b, m + 1)) > 0


@pytest.mark.parametrize("name", sorted(REFERENCE))
def test_weights_from_nodes_match_null_space(models, name, rng):
    system = normalized(models[name])
    a, b = system.interval
    for _ in range(10):
        nodes = spread_points(rng, a, b, system.k + 1)
        w = weights_from_nodes(system, nodes, 1.0)
        assert np.all(w > 0)
        np.testing.assert_allclose(w, null_weights(system, nodes, 1.0), rtol=1e-8)
        r = w * (-1.0) ** np.arange(w.size)
        assert sign_pattern_check(system, nodes, r).kind == "alternating"


def test_leave_one_out():
    out = list(leave_one_out([1.0, 2.0, 3.0]))
    assert [j for j, _ in out] == [0, 1, 2]
    np.testing.assert_array_equal(out[1][1], [1.0, 3.0])


def test_leave_one_out_noise_is_small_for_spread_nodes(models):
    system = normalized(models["emax3"])
    d, noise = leave_one_out_d1(system, np.linspace(*system.interval, 5))
    assert np.all(d > 100 * noise)


def test_sign_pattern_check_kinds(models):
    system = normalized(models["polynomial2"])
    pts = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
    r = weights_from_nodes(system, pts, 1.0) * (-1.0) ** np.arange(5)
    assert sign_pattern_check(system, pts, r).holds
    assert sign_pattern_check(system, pts[:4], np.zeros(4)).kind == "zero"
    with pytest.raises(OracleError):
        sign_pattern_check(system, pts, np.abs(r))
    with pytest.raises(OracleError):
        sign_pattern_check(system, pts, r[:3])
    many = np.linspace(-1, 1, 7)
    assert sign_pattern_check(system, many, np.zeros(7)).kind == "zero"


def test_oracle_preconditions(models):
    system = normalized(models["emax3"])
    with pytest.raises(OracleError):
        det_g(system, [0.5, 0.4])
    with pytest.raises(OracleError):
        det_g(system, np.linspace(0.3, 0.9, 5))
    with pytest.raises(OracleError):
        det_D(system, [[0.3, 0.5], [0.4, 0.9]])
    with pytest.raises(OracleError):
        det_D1(system, [0.5])
    with pytest.raises(OracleError):
        weights_from_nodes(system, np.linspace(0.3, 0.9, 4), 1.0)


def test_interlacing_violation_is_reported():
    # a non-Chebyshev pair: psi1 = c^2 on [-1, 1] gives D1 of mixed sign
    bad = PsiSystem((lambda c: c * c, lambda c: c ** 3), (-1.0, 1.0))
    with pytest.raises(OracleError, match="D1"):
        weights_from_nodes(bad, np.array([-1.0, 0.1, 1.0]), 1.0)
