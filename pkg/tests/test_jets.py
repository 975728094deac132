import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from monge_legendre import jets
from monge_legendre.jets import Jet, JetError
from oracles import ANALYTIC_FUNCTIONS, JET_NS, MP_NS, multi_indices, richardson_partial


def random_jet(rng, nv, order, batch=()):
    n = jets.basis(nv, order).size
    c = rng.normal(size=(n,) + batch) + 1j * rng.normal(size=(n,) + batch)
    return Jet(c, nv, order)


def naive_product(a: Jet, b: Jet) -> np.ndarray:
    """Double-loop Cauchy product over multi-indices."""
    B = jets.basis(a.num_vars, a.order)
    out = np.zeros_like(a.coeffs)
    for i, mi in enumerate(B.monomials):
        for j, mj in enumerate(B.monomials):
            m = tuple(x + y for x, y in zip(mi, mj))
            if sum(m) <= a.order:
                out[B.index[m]] += a.coeffs[i] * b.coeffs[j]
    return out


# -- examples --------------------------------------------------------------------


def test_square_of_variable():
    x = jets.variable(0, 3.0, 1, 2)
    assert np.allclose((x * x).coeffs, [9, 6, 1])


def test_variable_at_zero():
    x = jets.variable(0, 0.0, 2, 2)
    expected = np.zeros(jets.basis(2, 2).size)
    expected[jets.basis(2, 2).index[(1, 0)]] = 1
    assert np.array_equal(x.coeffs, expected)


def test_bilinear_mixed_partial():
    xy = jets.variable(0, 2.0, 2, 2) * jets.variable(1, 5.0, 2, 2)
    assert jets.partial(xy, (1, 1)) == 1
    assert jets.partial(xy, (0, 0)) == 10


def test_difference_of_squares():
    x = jets.variable(0, 0.0, 1, 2)
    assert np.allclose(((1 + x) * (1 - x)).coeffs, [1, 0, -1])


def test_geometric_series():
    x = jets.variable(0, 0.0, 1, 3)
    assert np.allclose((1 / (1 - x)).coeffs, [1, 1, 1, 1])


def test_leibniz_first_order():
    rng = np.random.default_rng(1)
    a, b = random_jet(rng, 1, 3), random_jet(rng, 1, 3)
    c = (a * b).coeffs
    assert np.isclose(c[1], a.coeffs[0] * b.coeffs[1] + a.coeffs[1] * b.coeffs[0])


def test_exp_series():
    e = jets.exp(jets.variable(0, 0.0, 1, 3))
    assert np.allclose(e.coeffs, [1, 1, 1 / 2, 1 / 6])


def test_log_inverts_exp():
    x = jets.variable(0, 0.7, 1, 4)
    assert np.abs((jets.log(jets.exp(x)) - x).coeffs).max() < 1e-15


def test_partial_of_monomial():
    x, y = jets.variable(0, 1.0, 2, 3), jets.variable(1, 1.0, 2, 3)
    assert jets.partial(x * x * y, (1, 1)) == pytest.approx(2)


def test_partial_zero_index_is_value():
    rng = np.random.default_rng(2)
    a = random_jet(rng, 3, 2)
    assert jets.partial(a, (0, 0, 0)) == a.value


# -- errors -------------------------------------------------------------------------


def test_variable_index_out_of_range():
    with pytest.raises(JetError):
        jets.variable(2, 0.0, 2, 2)


def test_mismatched_jets():
    with pytest.raises(JetError):
        jets.variable(0, 0.0, 2, 2) + jets.variable(0, 0.0, 2, 3)


def test_division_by_zero_constant_term():
    with pytest.raises(ZeroDivisionError):
        1 / jets.variable(0, 0.0, 1, 2)


def test_log_of_zero():
    with pytest.raises(JetError):
        jets.log(jets.variable(0, 0.0, 1, 2))


def test_partial_degree_too_high():
    with pytest.raises(JetError):
        jets.partial(jets.variable(0, 0.0, 1, 2), (3,))


def test_order_cap():
    with pytest.raises(JetError):
        jets.variable(0, 0.0, 2, jets.MAX_ORDER + 1)


# -- properties ---------------------------------------------------------------------

shapes = st.tuples(st.integers(1, 6), st.integers(1, 4))


@given(shapes, st.integers(0, 2**32 - 1))
def test_ring_axioms(shape, seed):
    nv, order = shape
    rng = np.random.default_rng(seed)
    a, b, c = (random_jet(rng, nv, order) for _ in range(3))
    tol = 1e-12
    assert np.abs(((a * b) * c - a * (b * c)).coeffs).max() < tol * 100
    assert np.abs((a * b - b * a).coeffs).max() < tol
    assert np.abs((a * (b + c) - (a * b + a * c)).coeffs).max() < tol * 10


@given(st.tuples(st.integers(1, 3), st.integers(1, 4)), st.integers(0, 2**32 - 1))
def test_leibniz_against_naive_loop(shape, seed):
    nv, order = shape
    rng = np.random.default_rng(seed)
    a, b = random_jet(rng, nv, order), random_jet(rng, nv, order)
    assert np.allclose((a * b).coeffs, naive_product(a, b), atol=1e-12)


@pytest.mark.parametrize("name,deriv", [("exp", np.exp), ("sin", np.cos), ("cos", lambda x: -np.sin(x))])
def test_chain_rule_first_order(name, deriv):
    rng = np.random.default_rng(3)
    a = random_jet(rng, 4, 3)
    fa = jets.analytic(name, a)
    B = jets.basis(4, 3)
    for v in range(4):
        i = B.index[tuple(int(k == v) for k in range(4))]
        assert np.isclose(fa.coeffs[i], deriv(a.coeffs[0]) * a.coeffs[i])


def test_batched_matches_scalar():
    rng = np.random.default_rng(4)
    a = random_jet(rng, 3, 3, (5,))
    b = random_jet(rng, 3, 3, (5,))
    full = jets.sqrt(a * a + jets.exp(b))
    for k in range(5):
        ak, bk = a.select(k), b.select(k)
        assert np.allclose(full.select(k).coeffs, jets.sqrt(ak * ak + jets.exp(bk)).coeffs)


def test_integer_and_real_powers_agree():
    x = jets.variable(0, 1.3, 2, 4) + 0.5 * jets.variable(1, 0.2, 2, 4)
    assert np.allclose((x**3).coeffs, jets.power(x, 3.0).coeffs)
    assert np.allclose((x**-2).coeffs, (1 / (x * x)).coeffs)


def test_diff_lowers_order():
    x, y = jets.variable(0, 0.5, 2, 3), jets.variable(1, -1.0, 2, 3)
    f = x**3 * y
    d = f.diff(0)
    assert d.order == 2
    assert jets.partial(d, (1, 1)) == pytest.approx(jets.partial(f, (2, 1)))


@pytest.mark.parametrize("name,nv,fn,x0", ANALYTIC_FUNCTIONS, ids=[f[0] for f in ANALYTIC_FUNCTIONS])
def test_partials_match_finite_differences(name, nv, fn, x0):
    order = 4
    xs = [jets.variable(i, x0[i], nv, order) for i in range(nv)]
    jet = fn(JET_NS, *xs)
    f = lambda *x: fn(MP_NS, *x)  # noqa: E731
    for m in multi_indices(nv, order):
        exact = complex(jets.partial(jet, m))
        ref = richardson_partial(f, x0, m)
        assert abs(exact.imag) < 1e-12
        assert abs(exact.real - ref) <= 1e-6 * max(1.0, abs(ref)), (m, exact, ref)
