import math

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import resultant_norm

from cyclopip import relations
from cyclopip.cyclo import Conductor, CycloElement, discriminant, norm
from cyclopip.ideal import certify_factorization, ideal_from_generator, valuation
from cyclopip.relations import (
    FactorBase,
    Relation,
    RelationSearch,
    SamplerConfig,
    bach_bound,
    galois_orbit,
    make_rng,
    sample_hamming,
    sample_sparse_element,
    sample_unit_variation,
    smooth_factor,
    table1_benchmark,
    table1_csv,
    try_relation,
)


def test_bach_bound():
    c = Conductor(23)
    assert bach_bound(c) == math.ceil(12 * math.log(discriminant(c)) ** 2)


@pytest.mark.parametrize("N,B", [(16, 100), (23, 200), (15, 60)])
def test_factor_base_is_complete(N, B):
    c = Conductor(N)
    fb = FactorBase.build(c, B)
    assert all(P.norm <= B for P in fb)
    assert fb.primes == sorted(fb.primes)
    # every split prime p <= B contributes n primes
    for p in sympy.primerange(2, B + 1):
        if p % N == 1:
            assert sum(1 for P in fb if P.p == p) == c.n
    one = FactorBase.build(c, B, degree_one_only=True)
    assert all(P.f == 1 for P in one)


def test_factor_base_restrict_and_perm():
    c = Conductor(16)
    fb = FactorBase.build(c, 200)
    small = fb.restrict(50)
    assert all(P.norm <= 50 for P in small) and len(small) < len(fb)
    perm = fb.galois_perm(3)
    assert sorted(x for x in perm if x >= 0) == list(range(len(fb)))


def test_is_smooth_norm():
    fb = FactorBase.build(Conductor(16), 100)
    assert fb.is_smooth_norm(2 ** 5 * 17 * 97)
    assert fb.is_smooth_norm(3 ** 4)
    assert not fb.is_smooth_norm(2 * 5)  # primes above 5 have norm 5^4 > 100


@given(st.integers(1, 10 ** 12), st.integers(2, 2000))
@settings(max_examples=200)
def test_smooth_factor_matches_sympy(x, B):
    ref = sympy.factorint(x)
    got = smooth_factor(x, B)
    if all(p <= B for p in ref):
        assert got == ref
    else:
        assert got is None


def test_smooth_factor_large_bound():
    x = 1000003 * 999983 * 8
    assert smooth_factor(x, 2 * 10 ** 6) == {2: 3, 999983: 1, 1000003: 1}
    with pytest.raises(ValueError):
        smooth_factor(0, 10)


def test_samplers():
    c = Conductor(64)
    rng = make_rng(1)
    a = sample_sparse_element(c, 5, 2, rng)
    assert a.coeffs[0] == 1 and sum(1 for x in a.coeffs if x) == 5
    assert max(abs(x) for x in a.coeffs) <= 2
    h = sample_hamming(c, 10, rng)
    assert sorted(set(h.coeffs)) == [0, 1] and sum(h.coeffs) == 10
    u = sample_unit_variation(c, 5, 0, rng)
    assert abs(norm(u)) == 1
    with pytest.raises(ValueError):
        sample_unit_variation(c, 4, 1, rng)


def test_streams_are_reproducible():
    a = make_rng(7, 3).integers(0, 1 << 30, 5).tolist()
    b = make_rng(7, 3).integers(0, 1 << 30, 5).tolist()
    c = make_rng(7, 4).integers(0, 1 << 30, 5).tolist()
    assert a == b and a != c


def _holds(r: Relation, fb) -> bool:
    J = ideal_from_generator(r.generator)
    expected = 1
    for P, e in zip(fb.primes, r.exponents):
        if e:
            expected *= P.norm ** e
            if valuation(J, P) != e:
                return False
    return abs(resultant_norm(r.generator.coeffs, fb.conductor.N)) == expected


def test_try_relation_and_orbit():
    c = Conductor(16)
    fb = FactorBase.build(c, 200)
    a = CycloElement(c, (1, 1, 0, 0, 0, 0, 0, 1))
    r = try_relation(a, fb)
    assert r is not None and _holds(r, fb)
    orbit = galois_orbit(r, fb)
    assert orbit
    for s in orbit:
        assert _holds(s, fb)
        assert certify_factorization(s.generator, fb.primes, s.exponents)
    # not smooth: norm has a prime factor above the bound
    big = CycloElement(c, (1000, 1, 0, 0, 0, 0, 0, 0))
    assert try_relation(big, fb) is None


def test_relation_text_round_trip():
    c = Conductor(16)
    fb = FactorBase.build(c, 200)
    r = try_relation(CycloElement(c, (1, 1, 0, 0, 0, 0, 0, 1)), fb)
    assert Relation.from_text(r.to_text()) == r


def test_search_collects_verified_relations_and_counts_samples():
    c = Conductor(23)
    fb = FactorBase.build(c, 200)
    before = relations.samples_drawn()
    search = RelationSearch(fb, seed=3, cfg=SamplerConfig(kind="sparse"))
    rels = search.collect(60)
    assert len(rels) >= 60
    assert relations.samples_drawn() - before == search.stats.samples > 0
    assert len({r.exponents for r in rels}) == len(rels)
    for r in rels[:20]:
        assert _holds(r, fb)
    assert search.stats.rejected == 0


def test_search_is_deterministic():
    fb = FactorBase.build(Conductor(16), 100)
    a = RelationSearch(fb, seed=5).collect(30)
    b = RelationSearch(fb, seed=5).collect(30)
    assert [r.exponents for r in a] == [r.exponents for r in b]


def test_table1_rows():
    rows = table1_benchmark(Conductor(64), [4, 8, 16], trials=10, seed=0)
    assert [w for w, _, _ in rows] == [4, 8, 16]
    text = table1_csv(rows)
    assert text.splitlines()[0] == "weight,random_mean,unitvar_mean"
    assert len(text.splitlines()) == 4
    with pytest.raises(ValueError):
        table1_benchmark(Conductor(64), [4], trials=0)
