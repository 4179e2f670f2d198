import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dogip.coefficients import (constant_matrix, matrix_field, parse_polynomial, scalar_field)
from dogip.errors import CoefficientError


def test_parse_and_degree():
    p = parse_polynomial("1 + 2*x*y^2 - (z - 1)**2")
    assert p.degree == 3 and p.nvars == 3
    pts = np.array([[1.0, 2.0, 3.0], [0.5, -1.0, 0.0]])
    want = 1 + 2 * pts[:, 0] * pts[:, 1] ** 2 - (pts[:, 2] - 1) ** 2
    np.testing.assert_allclose(p(pts), want)


@settings(max_examples=50, deadline=None)
@given(a=st.integers(-5, 5), b=st.integers(-5, 5), n=st.integers(0, 4),
       x=st.floats(-2, 2), y=st.floats(-2, 2))
def test_parse_matches_python(a, b, n, x, y):
    text = f"({a}*x + {b}*y + 1)^{n}"
    assert parse_polynomial(text)(np.array([[x, y]]))[0] == pytest.approx((a * x + b * y + 1) ** n,
                                                                          rel=1e-12, abs=1e-12)
    assert parse_polynomial(text).degree <= n


@pytest.mark.parametrize("bad", ["sin(x)", "x^-1", "x^0.5", "w+1", "x/2", "import os", "x +"])
def test_parse_rejects(bad):
    with pytest.raises(CoefficientError):
        parse_polynomial(bad)


def test_scalar_field_variants():
    assert scalar_field(2.5, 2)(np.zeros((3, 2))).tolist() == [2.5] * 3
    assert scalar_field("1+x", 2).degree == 1
    with pytest.raises(CoefficientError):
        scalar_field("z", 2)


def test_matrix_fields():
    M = matrix_field("identity", 3)
    assert M.isotropic and M(np.zeros((2, 3))).shape == (2, 3, 3)
    D = matrix_field("diag:1,2", 2)
    assert not D.isotropic
    np.testing.assert_allclose(D(np.zeros((1, 2)))[0], np.diag([1, 2]))
    iso = matrix_field("iso:1+x*y", 2)
    assert iso.isotropic and iso.degree == 2
    np.testing.assert_allclose(iso(np.array([[2.0, 3.0]]))[0], 7 * np.eye(2))
    with pytest.raises(CoefficientError):
        matrix_field("diag:1,2", 3)
    with pytest.raises(CoefficientError):
        matrix_field("bogus", 2)


def test_constant_matrix_checks():
    with pytest.raises(CoefficientError):
        constant_matrix([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(CoefficientError):
        constant_matrix([[1.0, 2.0], [2.0, 1.0]])
    assert constant_matrix(3 * np.eye(2)).isotropic
