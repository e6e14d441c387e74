import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import resultant_norm

from cyclopip.cyclo import Conductor, CycloElement, norm
from cyclopip.ideal import certify_factorization
from cyclopip.pip import random_element, unit_equivalent
from cyclopip.precomp import (
    CapacityError,
    GeneratorTable,
    ProductForm,
    SplitPrime,
    StoreError,
    block_split,
    coefficient_log_bound,
    find_split_primes,
    precompute,
    reconstruct_form,
    rewrite_to_small,
    size_reduce,
    store_from_text,
    store_to_text,
    unit_basis,
)
from cyclopip.relations import make_rng


def elements(N, lo=-4, hi=4):
    c = Conductor(N)
    return st.lists(st.integers(lo, hi), min_size=c.n, max_size=c.n).map(
        lambda v: CycloElement(c, tuple(v))).filter(lambda a: not a.is_zero())


@pytest.mark.parametrize("N", [8, 15, 16, 23])
def test_split_primes(N):
    c = Conductor(N)
    sps = find_split_primes(c, 3)
    for sp in sps:
        assert sympy.isprime(sp.q) and sp.q % N == 1
        for r in sp.roots:
            assert sympy.n_order(r, sp.q) == N
        assert len(set(sp.roots)) == c.n
    assert sps[0].q < sps[1].q < sps[2].q
    with pytest.raises(ValueError):
        SplitPrime.make(4 * N + 2, c)
    with pytest.raises(ValueError):
        SplitPrime.make(next(q for q in sympy.primerange(3, 10 ** 4) if q % N != 1), c)


@given(elements(16, -1000, 1000))
@settings(max_examples=50)
def test_evaluate_interpolate(a):
    c = a.conductor
    sp = find_split_primes(c, 1)[0]
    v = sp.evaluate(a)
    assert sp.interpolate(v) == [x % sp.q for x in a.coeffs]
    # evaluation is a ring map
    b = CycloElement.zeta(c, 3) + CycloElement.one(c)
    prod = sp.evaluate(a * b)
    assert prod == tuple(x * y % sp.q for x, y in zip(v, sp.evaluate(b)))
    # the product of the residues is the norm mod q
    assert math.prod(v) % sp.q == norm(a) % sp.q


@given(st.lists(elements(8), min_size=1, max_size=4), st.data())
@settings(max_examples=40)
def test_product_form_matches_direct_arithmetic(elems, data):
    c = elems[0].conductor
    table = GeneratorTable(c, find_split_primes(c, 2))
    exps = data.draw(st.lists(st.integers(-3, 3), min_size=len(elems), max_size=len(elems)))
    pf = ProductForm(table)
    pos = CycloElement.one(c)
    neg = CycloElement.one(c)
    for a, e in zip(elems, exps):
        pf = pf.mul(ProductForm.of(table, a, e))
    # recompute from the compacted terms, since equal bases merge
    for i, e in pf.terms.items():
        a = table.elements[i]
        if e > 0:
            pos = pos * a ** e
        else:
            neg = neg * a ** (-e)
    num, den = pf.expand()
    assert den > 0
    assert num * neg == pos * den
    if all(e >= 0 for e in pf.terms.values()):
        assert den == 1 and reconstruct_form(pf) == pos


def test_product_form_log_is_additive():
    c = Conductor(16)
    table = GeneratorTable(c)
    a = CycloElement(c, (1, 2, 0, 0, 0, 0, 0, 1))
    b = CycloElement(c, (3, 0, -1, 0, 0, 0, 0, 0))
    pf = ProductForm.of(table, a, 2).mul(ProductForm.of(table, b), -1)
    ref = 2 * np.array([math.log(abs(x)) for x in _embed_abs(a)]) - np.array([math.log(abs(x)) for x in _embed_abs(b)])
    assert np.allclose(pf.log().values, ref, atol=1e-8)
    assert pf.to_text() == "0:2 1:-1"


def _embed_abs(a):
    c = a.conductor
    out = []
    for k in c.embedding_exponents():
        z = complex(0)
        for i, x in enumerate(a.coeffs):
            z += x * complex(math.cos(2 * math.pi * k * i / c.N), math.sin(2 * math.pi * k * i / c.N))
        out.append(abs(z))
    return out


@given(elements(16, -50, 50))
@settings(max_examples=40)
def test_coefficient_bound_is_an_upper_bound(a):
    pf = ProductForm.of(GeneratorTable(a.conductor), a)
    assert max(abs(x) for x in a.coeffs) <= math.exp(coefficient_log_bound(a.conductor, pf.log().values))


def test_capacity_error():
    c = Conductor(16)
    table = GeneratorTable(c, find_split_primes(c, 1))
    a = CycloElement(c, (5, 3, 0, 1, 0, 0, 2, 0))
    pf = ProductForm.of(table, a, 12)
    with pytest.raises(CapacityError) as err:
        reconstruct_form(pf, extra_primes=False)
    assert err.value.needed_bits > err.value.have_bits
    assert reconstruct_form(pf) == a ** 12  # the table grows
    assert len(table.primes) > 1


def test_opaque_table_cannot_grow():
    c = Conductor(8)
    table = GeneratorTable(c, find_split_primes(c, 1))
    table.add_opaque(ProductForm(table).log(), [(1, 1, 1, 1)])
    with pytest.raises(CapacityError):
        table.add_primes(find_split_primes(c, 1, start=1 << 29))
    with pytest.raises(ValueError):
        table.add_opaque(ProductForm(table).log(), [])


@pytest.mark.parametrize("N", [16, 32, 15])
def test_size_reduce_keeps_the_ideal_and_shrinks(N):
    c = Conductor(N)
    rng = make_rng(2, N)
    units, _ = unit_basis(c)
    for _ in range(5):
        g = random_element(c, rng, 2)
        table = GeneratorTable(c)
        pf = ProductForm.of(table, g)
        for u in units[:3]:
            pf = pf.mul(ProductForm.of(table, u), int(rng.integers(-6, 7)))
        red, x = size_reduce(pf, search=True)
        num, den = red.expand()
        assert den == 1 and unit_equivalent(num, g)
        # the largest embedding does not grow
        assert red.log().values.max() <= pf.log().values.max() + 1e-9


def test_block_split():
    H = [[5, 0, 0, 0], [2, 1, 0, 0], [3, 0, 1, 0], [0, 0, 0, 1]]
    assert block_split(H, 0) == 1
    assert block_split(H, 2) == 2
    H2 = [[5, 0, 0], [2, 3, 0], [1, 0, 1]]
    assert block_split(H2, 0) == 2
    assert block_split([[1, 0], [0, 1]], 0) == 0


@pytest.fixture(scope="module")
def store16():
    return precompute(Conductor(16), 80, seed=1)


def test_store_rows_generate_hnf_rows(store16):
    st_ = store16
    assert st_.h == 1 and st_.certified
    assert st_.stats["verified_rows"] == len(st_.fb)
    H = st_.h1()
    assert len(H) == st_.i0
    for i in range(st_.i0, len(st_.hnf)):
        assert st_.hnf[i][i] == 1
        assert not any(st_.hnf[j][i] for j in range(i + 1, len(st_.hnf)))


def test_store_round_trip(store16):
    text = store_to_text(store16)
    again = store_from_text(text)
    assert store_to_text(again) == text
    assert again.hnf == store16.hnf and again.i0 == store16.i0
    assert [sp.q for sp in again.table.primes] == [sp.q for sp in store16.table.primes]


def test_store_detects_corruption(store16):
    text = store_to_text(store16)
    lines = text.split("\n")
    k = next(i for i, s in enumerate(lines) if s.startswith("h "))
    lines[k] = "h 2"
    with pytest.raises(StoreError):
        store_from_text("\n".join(lines))
    with pytest.raises(StoreError):
        store_from_text(text[: len(text) // 2])
    with pytest.raises(StoreError):
        store_from_text("")


@given(st.data())
@settings(max_examples=30)
def test_rewrite_to_small(store16, data):
    m = len(store16.fb)
    y = data.draw(st.lists(st.integers(-3, 3), min_size=m, max_size=m))
    ys, terms = rewrite_to_small(y, store16)
    acc = list(ys) + [0] * (m - store16.i0)
    for j, e in terms.items():
        assert j >= store16.i0
        acc = [a + e * h for a, h in zip(acc, store16.hnf[j])]
    assert acc == y
    with pytest.raises(KeyError):
        rewrite_to_small(y + [0], store16)


def test_stored_generators_reconstruct(store16):
    # the opaque entries still carry enough to rebuild beta_i exactly
    for i in range(len(store16.fb)):
        pf = ProductForm(store16.table, {store16.beta[i]: 1})
        b = reconstruct_form(pf, extra_primes=False)
        assert certify_factorization(b, store16.fb.primes, store16.hnf[i])
        assert abs(resultant_norm(b.coeffs, 16)) == math.prod(
            P.norm ** e for P, e in zip(store16.fb.primes, store16.hnf[i]))
