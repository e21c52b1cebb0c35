import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helicap.forms import (FormError, PolyForm, Polynomial, evaluate, exterior_derivative, liouville_primitive,
                           pullback_linear, scale_form, standard_symplectic, volume_form, wedge, wedge_power)
from helicap.oracles import wedge_by_permutations
from helicap.suite import random_form, random_polynomial


def x(j, m):
    return Polynomial.variable(j, m)


def dx(m, *idx):
    return PolyForm.basis(m, *idx)


@st.composite
def form_pair(draw, max_dim=6):
    m = draw(st.integers(1, max_dim))
    p = draw(st.integers(0, m))
    q = draw(st.integers(0, m - p))
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    return random_form(rng, m, p, max_degree=3), random_form(rng, m, q, max_degree=3), rng


# -- algebraic identities, exact ------------------------------------------

@settings(max_examples=150, deadline=None)
@given(form_pair())
def test_graded_commutativity(pair):
    a, b, _ = pair
    assert wedge(a, b) == wedge(b, a) * (-1) ** (a.degree * b.degree)


@settings(max_examples=150, deadline=None)
@given(form_pair())
def test_associativity(pair):
    a, b, rng = pair
    c = random_form(rng, a.dim, int(rng.integers(0, a.dim - a.degree - b.degree + 1)))
    assert (a ^ b) ^ c == a ^ (b ^ c)


@settings(max_examples=150, deadline=None)
@given(form_pair())
def test_leibniz(pair):
    a, b, _ = pair
    if a.degree + b.degree == a.dim:
        # d(a ∧ b) lands in degree dim + 1 and is the zero form
        assert (a ^ b).d().is_zero()
        return
    assert (a ^ b).d() == (a.d() ^ b) + (a ^ b.d()) * (-1) ** a.degree


def test_d_squared_vanishes_on_1000_forms(rng):
    for _ in range(1000):
        m = int(rng.integers(1, 7))
        a = random_form(rng, m, int(rng.integers(0, m + 1)), max_degree=3, nterms=3)
        dda = a.d().d()
        assert dda.is_zero()


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bilinearity(seed):
    rng = np.random.default_rng(seed)
    a, a2 = random_form(rng, 4, 1), random_form(rng, 4, 1)
    b = random_form(rng, 4, 2)
    c = Fraction(int(rng.integers(-9, 10)), 7)
    assert wedge(a * c + a2, b) == wedge(a, b) * c + wedge(a2, b)


def test_odd_form_squares_to_zero(rng):
    for _ in range(30):
        a = random_form(rng, 6, int(rng.choice([1, 3])), nterms=3)
        assert wedge(a, a).is_zero()


# -- documented examples ----------------------------------------------------

def test_wedge_basis():
    w = wedge(dx(2, 0), dx(2, 1))
    assert w == dx(2, 0, 1)
    assert w.coefficient(0, 1) == Polynomial.constant(1, 2)
    assert wedge(dx(2, 1), dx(2, 0)) == -dx(2, 0, 1)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_symplectic_power_is_n_factorial_volume(n):
    m = 2 * n
    top = wedge_power(standard_symplectic(m), n)
    assert top == volume_form(m) * math.factorial(n)
    # independent check: alternation formula on the standard basis
    e = np.eye(m)
    point = np.zeros(m)
    value = standard_symplectic(m).evaluate(point, e[:2])
    acc = standard_symplectic(m)
    for k in range(2, n + 1):
        value = wedge_by_permutations(acc, standard_symplectic(m), point, e[: 2 * k])
        acc = acc ^ standard_symplectic(m)
    assert value == pytest.approx(math.factorial(n), rel=1e-12)


def test_wedge_overflow_raises():
    with pytest.raises(FormError):
        wedge(dx(3, 0, 1), dx(3, 1, 2))


def test_dimension_mismatch_raises():
    with pytest.raises(FormError):
        wedge(dx(3, 0), dx(4, 1))


def test_d_examples():
    m = 2
    assert (PolyForm.function(x(0, m)) ^ dx(m, 1)).d() == dx(m, 0, 1)
    for dim in (2, 4, 6):
        assert liouville_primitive(dim).d() == standard_symplectic(dim)
    p = random_polynomial(np.random.default_rng(3), 5, max_degree=3, nterms=6)
    assert PolyForm.function(p).d().d().is_zero()


def test_d_of_top_form_is_recorded_zero():
    top = PolyForm.function(x(0, 3) * x(1, 3)) * 1 ^ volume_form(3)
    d = exterior_derivative(top)
    assert d.is_zero() and d.degree == 4 and d.dim == 3
    assert d.d().is_zero()


def test_evaluate_examples():
    assert evaluate(dx(2, 0, 1), [0.3, -1.2], [[1, 0], [0, 1]]) == 1.0
    om = standard_symplectic(4)
    assert evaluate(om, [0, 0, 0, 0], [[1, 0, 0, 0], [0, 0, 1, 0]]) == 0.0
    a = random_form(np.random.default_rng(5), 4, 3)
    v = [0.2, 0.5, -1.0, 0.7]
    assert evaluate(a, [0.1, 0.2, 0.3, 0.4], [v, [1, 2, 3, 4], v]) == 0.0


def test_evaluate_arity():
    with pytest.raises(FormError):
        evaluate(dx(3, 0, 1), [0, 0, 0], [[1, 0, 0]])
    with pytest.raises(FormError):
        evaluate(dx(3, 0), [0, 0], [[1, 0, 0]])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_evaluate_alternating_and_matches_permutation_oracle(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6))
    p = int(rng.integers(1, m))
    q = int(rng.integers(0, m - p + 1))
    a, b = random_form(rng, m, p), random_form(rng, m, q)
    point = rng.uniform(-1, 1, m)
    vecs = rng.uniform(-1, 1, (p + q, m))
    w = a ^ b
    direct = w.evaluate(point, vecs)
    assert direct == pytest.approx(wedge_by_permutations(a, b, point, vecs), rel=1e-9, abs=1e-12)
    if p + q >= 2:
        swapped = vecs.copy()
        swapped[[0, 1]] = swapped[[1, 0]]
        assert w.evaluate(point, swapped) == -direct


def test_scale_form():
    om = standard_symplectic(4)
    assert scale_form(om, 1) == om
    c = Fraction(3, 2)
    assert wedge_power(scale_form(om, c), 2) == wedge_power(om, 2) * c ** 2
    assert scale_form(liouville_primitive(4), c).d() == scale_form(om, c)


def test_pullback_by_symplectic_matrix_preserves_omega():
    A = [[Fraction(2), 0, 0, 0], [0, Fraction(1, 2), 0, 0], [0, 0, 1, 1], [0, 0, 0, 1]]
    om = standard_symplectic(4)
    assert pullback_linear(om, A) == om
    B = [[2, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
    assert pullback_linear(om, B) != om


def test_json_round_trip(rng):
    for _ in range(50):
        m = int(rng.integers(1, 6))
        a = random_form(rng, m, int(rng.integers(0, m + 1)), max_degree=3, nterms=3)
        assert PolyForm.loads(a.dumps()) == a
    data = dx(3, 0, 2).to_json()
    assert data["terms"][0]["idx"] == [1, 3]


def test_polynomial_exactness():
    p = Polynomial(2, {(1, 0): Fraction(1, 3), (0, 2): 2})
    assert (p * 3).terms[(1, 0)] == 1
    assert p.derivative(1) == Polynomial(2, {(0, 1): 4})
    assert p([3.0, 1.0]) == pytest.approx(3.0)
