import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import resultant_norm

from cyclopip.cyclo import (
    Conductor,
    CycloElement,
    conj,
    cyclotomic_polynomial,
    cyclotomic_unit,
    cyclotomic_unit_inverse,
    discriminant,
    divides,
    exact_div,
    from_text,
    galois_apply,
    log_embedding,
    mult_matrix,
    norm,
    norm_many,
    to_text,
    unit_indices,
)

CONDUCTORS = [5, 7, 8, 9, 12, 15, 16, 25, 27, 32]


def elements(N, bound=4):
    c = Conductor(N)
    return st.lists(st.integers(-bound, bound), min_size=c.n, max_size=c.n).map(
        lambda v: CycloElement(c, tuple(v)))


def nonzero(N, bound=4):
    return elements(N, bound).filter(lambda a: not a.is_zero())


@pytest.mark.parametrize("N", [1, 2, 6, 10, -3])
def test_conductor_rejects(N):
    with pytest.raises(ValueError):
        Conductor(N)


def test_conductor_of_needs_prime():
    with pytest.raises(ValueError):
        Conductor.of(15, 1)
    assert Conductor.of(2, 5).N == 32


@pytest.mark.parametrize("N", CONDUCTORS)
def test_degree_and_polynomial(N):
    c = Conductor(N)
    assert c.n == sympy.totient(N)
    x = sympy.Symbol("x")
    ref = sympy.Poly(sympy.cyclotomic_poly(N, x), x).all_coeffs()[::-1]
    assert list(cyclotomic_polynomial(c)) == [int(v) for v in ref]


@pytest.mark.parametrize("N", CONDUCTORS)
def test_discriminant_matches_sympy(N):
    x = sympy.Symbol("x")
    assert discriminant(Conductor(N)) == abs(sympy.discriminant(sympy.cyclotomic_poly(N, x), x))


@pytest.mark.parametrize("N", [8, 9, 15])
def test_ring_axioms(N):
    @given(elements(N), elements(N), elements(N))
    @settings(max_examples=30)
    def check(a, b, c):
        assert a * b == b * a
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a - a == CycloElement.scalar(a.conductor, 0)
    check()


@pytest.mark.parametrize("N", [7, 12, 16])
def test_norm_matches_resultant(N):
    @given(nonzero(N, 5))
    @settings(max_examples=25)
    def check(a):
        assert norm(a) == resultant_norm(a.coeffs, N)
    check()


@pytest.mark.parametrize("N", [9, 16])
def test_norm_is_multiplicative(N):
    @given(nonzero(N), nonzero(N))
    @settings(max_examples=25)
    def check(a, b):
        assert norm(a * b) == norm(a) * norm(b)
        assert norm_many([a, b, a * b]) == [norm(a), norm(b), norm(a * b)]
    check()


def test_norm_of_one_minus_zeta():
    # Phi_N(1) = p for N = p^s
    for N, p in [(5, 5), (8, 2), (9, 3), (16, 2), (25, 5)]:
        c = Conductor(N)
        assert norm(CycloElement.one(c) - CycloElement.zeta(c)) == p


def test_zeta_powers_wrap():
    c = Conductor(12)
    z = CycloElement.zeta(c)
    assert z ** 12 == CycloElement.one(c)
    assert z ** 6 == CycloElement.scalar(c, -1)
    assert CycloElement.zeta(c, 5) == z ** 5


def test_mult_matrix_rows():
    c = Conductor(8)
    a = CycloElement(c, (1, 2, 0, -1))
    M = mult_matrix(a)
    for i, row in enumerate(M):
        assert tuple(row) == (a * CycloElement.zeta(c, i)).coeffs


@pytest.mark.parametrize("N", [7, 16])
def test_galois_is_a_ring_map(N):
    @given(elements(N), elements(N), st.sampled_from(Conductor(N).units_mod()))
    @settings(max_examples=25)
    def check(a, b, t):
        assert galois_apply(a * b, t) == galois_apply(a, t) * galois_apply(b, t)
        assert conj(conj(a)) == a
    check()


@pytest.mark.parametrize("N", [5, 16, 27])
def test_cyclotomic_units_invert(N):
    c = Conductor(N)
    for j in unit_indices(c):
        u = cyclotomic_unit(c, j)
        assert u * cyclotomic_unit_inverse(c, j) == CycloElement.one(c)
        assert abs(norm(u)) == 1


def test_cyclotomic_unit_rejects_bad_index():
    with pytest.raises(ValueError):
        cyclotomic_unit(Conductor(16), 4)


@pytest.mark.parametrize("N", [9, 16])
def test_exact_division(N):
    @given(nonzero(N), nonzero(N))
    @settings(max_examples=20)
    def check(a, b):
        assert exact_div(a * b, b) == a
        assert divides(b, a * b)
    check()


def test_divides_false():
    c = Conductor(8)
    two = CycloElement.scalar(c, 2)
    assert not divides(two, CycloElement.one(c))


@pytest.mark.parametrize("N", [16, 15])
def test_units_have_zero_log_sum(N):
    c = Conductor(N)
    for j in unit_indices(c):
        assert abs(log_embedding(cyclotomic_unit(c, j)).values.sum()) < 1e-9


def test_log_embedding_of_product():
    c = Conductor(16)
    a = CycloElement(c, (3, 1, 0, -2, 0, 1, 0, 0))
    b = CycloElement(c, (1, 0, 5, 0, 0, 0, -1, 1))
    la, lb, lab = (log_embedding(x).values for x in (a, b, a * b))
    assert np.allclose(la + lb, lab)
    # 2 * sum of the log vector is ln|N(a)|, one entry per conjugate pair
    assert math.isclose(2 * la.sum(), math.log(abs(norm(a))), rel_tol=1e-12)


def test_log_embedding_high_precision_agrees():
    c = Conductor(16)
    a = CycloElement(c, (1, 1, 1, 0, 0, 0, 0, 0))
    lo = log_embedding(a).values
    hi = log_embedding(a, precision=200).values
    assert np.allclose(lo, hi)


def test_log_embedding_of_zero():
    with pytest.raises(ValueError):
        log_embedding(CycloElement.scalar(Conductor(8), 0))


def test_text_round_trip():
    c = Conductor(9)
    a = CycloElement(c, (1, -2, 0, 3, 0, 7))
    assert from_text(to_text(a)) == a
    with pytest.raises(ValueError):
        from_text("9:1,2")
