import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from garza.catalog import reference_model
from garza.design import (Design, coalesce, information_matrix, loewner_compare,
                          merge_designs, to_c_space, to_x_space)
from garza.errors import DesignError, RangeError, ShapeError


def test_design_validation():
    Design([0.0, 1.0], [0.5, 0.5])
    with pytest.raises(DesignError):
        Design([1.0, 0.0], [0.5, 0.5])
    with pytest.raises(DesignError):
        Design([0.0, 1.0], [1.0, 0.0])
    with pytest.raises(DesignError):
        Design([0.0, 1.0], [0.5, 0.6])
    with pytest.raises(DesignError):
        Design([0.0], [1.0], space="z")
    with pytest.raises(DesignError):
        Design([], [])
    with pytest.raises(DesignError):
        Design([0.0, np.nan], [0.5, 0.5])
    sub = Design([0.0, 1.0], [0.2, 0.3], normalized=False)
    assert sub.total == pytest.approx(0.5)


def test_arrays_are_frozen():
    d = Design([0.0, 1.0], [0.5, 0.5])
    with pytest.raises(ValueError):
        d.locations[0] = 3.0


def test_build_sorts_and_coalesces():
    d = Design.build([1.0, 0.0, 1.0 + 1e-12], [0.2, 0.5, 0.3])
    np.testing.assert_allclose(d.locations, [0.0, 1.0])
    np.testing.assert_allclose(d.weights, [0.5, 0.5])
    loc, w = coalesce([0.0, 0.0], [0.1, 0.9])
    assert loc.tolist() == [0.0] and w.tolist() == [1.0]


def test_space_round_trip_reorders_for_decreasing_transform():
    m = reference_model("emax3")
    d = Design([0.0, 1.0, 4.0], [0.2, 0.3, 0.5])
    c = to_c_space(m, d)
    assert np.all(np.diff(c.locations) > 0)
    np.testing.assert_allclose(c.weights, [0.5, 0.3, 0.2])
    back = to_x_space(m, c)
    np.testing.assert_allclose(back.locations, d.locations, atol=1e-12)
    np.testing.assert_allclose(back.weights, d.weights)


def test_information_matrix_in_either_space_agrees():
    m = reference_model("logexp3")
    d = Design([0.0, 1.0, 2.5], [0.2, 0.3, 0.5])
    np.testing.assert_allclose(information_matrix(m, d), information_matrix(m, to_c_space(m, d)))
    with pytest.raises(RangeError):
        information_matrix(m, Design([10.0], [1.0]))


def test_information_polynomial_by_hand():
    m = reference_model("polynomial2")
    d = Design([-1.0, 0.0, 1.0], [1 / 3] * 3)
    expect = np.array([[1, 0, 2 / 3], [0, 2 / 3, 0], [2 / 3, 0, 2 / 3]])
    np.testing.assert_allclose(information_matrix(m, d), expect)


def test_loewner_relations():
    A = np.diag([1.0, 1.0])
    assert loewner_compare(A, A).relation == "equal"
    assert loewner_compare(A, np.diag([2.0, 1.0])).relation == "dominates"
    assert loewner_compare(np.diag([2.0, 1.0]), A).relation == "dominated"
    v = loewner_compare(A, np.diag([2.0, 0.5]))
    assert v.relation == "incomparable" and v.margin == pytest.approx(-0.5)
    assert loewner_compare(A, np.diag([2.0, 1.0])).dominates
    with pytest.raises(ShapeError):
        loewner_compare(A, np.eye(3))
    with pytest.raises(ShapeError):
        loewner_compare(A, np.array([[1.0, 1.0], [0.0, 1.0]]))


@given(arrays(float, (3, 3), elements=st.floats(-3, 3)))
def test_adding_psd_always_dominates(B):
    A = B @ B.T + np.eye(3)
    extra = B.T @ B
    assert loewner_compare(A, A + extra).dominates


def test_merge_designs():
    d1 = Design([0.0, 4.0], [0.5, 0.5])
    d2 = Design([1.0, 4.0], [0.25, 0.75])
    m = merge_designs(d1, 0.4, d2)
    np.testing.assert_allclose(m.locations, [0.0, 1.0, 4.0])
    np.testing.assert_allclose(m.weights, [0.2, 0.15, 0.65])
    with pytest.raises(DesignError):
        merge_designs(d1, 1.0, d2)
    with pytest.raises(DesignError):
        merge_designs(d1, 0.5, Design([0.5], [1.0], space="c"))


@given(st.lists(st.tuples(st.floats(0, 4), st.floats(0.01, 1)), min_size=1, max_size=8),
       st.floats(0.05, 0.95))
def test_merged_information_is_convex_combination(pts, a):
    m = reference_model("emax3")
    d = Design.build([p[0] for p in pts], [p[1] for p in pts], normalize=True)
    e = Design([0.0, 2.0, 4.0], [0.3, 0.3, 0.4])
    merged = merge_designs(e, a, d)
    expect = a * information_matrix(m, e) + (1 - a) * information_matrix(m, d)
    np.testing.assert_allclose(information_matrix(m, merged), expect, rtol=1e-9, atol=1e-12)
