from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from singularpde.expression import Expression, ExpressionError

vals = st.floats(-3, 3, allow_nan=False)


@given(vals, vals)
def test_evaluates_like_numpy(x, t):
    e = Expression("0.5 + 0.3*cos(x)*(1 + t) - x^2/L", ("x", "t"), {"L": 2.0})
    assert e(np.float64(x), np.float64(t)) == pytest.approx(0.5 + 0.3 * np.cos(x) * (1 + t) - x**2 / 2.0)


def test_constant_broadcasts_over_arrays():
    e = Expression("2*pi", ("x",))
    out = e(np.zeros(5))
    assert out.shape == (5,) and np.allclose(out, 2 * np.pi)


def test_exact_derivative():
    e = Expression("sin(x1)*x2", ("x1", "x2"))
    d = e.diff("x1")
    assert d(np.float64(0.3), np.float64(2.0)) == pytest.approx(2.0 * np.cos(0.3))


@pytest.mark.parametrize("src", ["__import__('os')", "x.real", "y + 1", "foo(x)", "x;1", "lambda: 1", "x[0]"])
def test_rejects_unsafe_or_unknown_input(src):
    with pytest.raises(ExpressionError):
        Expression(src, ("x",))
