"""The principal ideal problem, short generators and gamma-SVP in ideal lattices.

``solve_pip`` works from a fresh class group computation or from a
precomputation store.  It decomposes the ideal over the factor base and
solves for the exponent vector in the relation lattice.  The generator is
size-reduced by cyclotomic units and written out by CRT.  A "principal"
verdict is checked exactly.  A "not_principal" verdict is only issued when
the class group is certified.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import latred, zlinalg
from .classgroup import ClassGroupResult, compute_class_group
from .cyclo import (
    CycloElement,
    cyclotomic_unit_inverse,
    discriminant,
    divides,
    exact_div,
    log_embedding,
    norm,
)
from .descent import DescentParams, full_descent
from .ideal import Ideal, ideal_mul, ideal_pow, prime_ideal
from .precomp import (
    GeneratorTable,
    PrecompStore,
    ProductForm,
    decode_units,
    reconstruct_form,
    rewrite_to_small,
    size_reduce,
    unit_basis,
)

PRINCIPAL = "principal"
NOT_PRINCIPAL = "not_principal"
INDETERMINATE = "indeterminate"


class IndeterminateError(RuntimeError):
    """Raised when a negative answer is requested from an uncertified group."""


@dataclass
class PipAnswer:
    verdict: str
    generator: CycloElement | None = None
    form: ProductForm | None = None
    transcript: list = field(default_factory=list)

    @property
    def is_principal(self) -> bool:
        return self.verdict == PRINCIPAL

    def report(self) -> str:
        from .cyclo import to_text
        lines = [f"verdict: {self.verdict}"]
        if self.generator is not None:
            lines.append(f"generator: {to_text(self.generator)}")
        lines += [f"# {t}" for t in self.transcript]
        return "\n".join(lines) + "\n"


def is_generator(g: CycloElement, I: Ideal) -> bool:
    """(g) = I, by |N(g)| = N(I) together with g in I."""
    if not I.is_integral:
        J = Ideal(I.conductor, I.basis, 1)
        d = I.denominator
        return is_generator(g * d, J)
    return abs(norm(g)) == I.integral_norm() and I.contains(g)


def unit_equivalent(g: CycloElement, h: CycloElement) -> bool:
    """g/h is a unit: equal absolute norms and mutual divisibility."""
    if abs(norm(g)) != abs(norm(h)):
        return False
    return divides(g, h) and divides(h, g)


def torsion_match(g: CycloElement, target: CycloElement):
    """j and sign with g = +-zeta^j * target, or None."""
    c = g.conductor
    for j in range(c.N):
        z = CycloElement.zeta(c, j) * target
        if z == g:
            return (1, j)
        if -z == g:
            return (-1, j)
    return None


# ---------------------------------------------------------------------------
# generator assembly
# ---------------------------------------------------------------------------

def _finish(form: ProductForm, I: Ideal, transcript: list) -> PipAnswer:
    form, x = size_reduce(form)
    transcript.append(f"unit_reduction {' '.join(map(str, x))}")
    g = reconstruct_form(form)
    transcript.append(f"reconstructed over {len(form.table.primes)} split primes")
    if not is_generator(g, I):
        raise AssertionError("reconstructed element does not generate the ideal")
    transcript.append("check (g) = I: norm and membership ok")
    return PipAnswer(PRINCIPAL, g, form, transcript)


def _descent_form(table: GeneratorTable, dec) -> ProductForm:
    form = ProductForm(table)
    for g, s in zip(dec.gens, dec.gen_exps):
        form = form.times(table.add(g), s)
    return form


def _reduce_mod_kernel(x, kernel):
    if not kernel:
        return list(x)
    w = latred.babai_nearest_plane(kernel, x)
    return [a - b for a, b in zip(x, zlinalg.vecmat(w, kernel))]


def solve_pip(I: Ideal, source, *, params: DescentParams | None = None, seed=0,
              B: int | None = None, route: str = "direct") -> PipAnswer:
    """Decide whether the integral ideal I is principal.

    ``source`` is a ClassGroupResult, a PrecompStore, or None (then a class
    group at bound ``B`` is computed).  Fractional inputs are scaled by their
    denominator first.
    """
    c = I.conductor
    transcript = []
    if not I.is_integral:
        transcript.append(f"scaled by denominator {I.denominator}")
        I = Ideal(c, I.basis, 1)
    if source is None:
        if B is None:
            raise ValueError("a bound is needed for a fresh computation")
        source = compute_class_group(c, B, seed=seed)
    if params is None:
        params = DescentParams(k=c.n, l=min(c.n, 8), enforce_window=False)
    if I.is_unit:
        transcript.append("unit ideal")
        return PipAnswer(PRINCIPAL, CycloElement.one(c), None, transcript)
    if isinstance(source, PrecompStore):
        return _solve_with_store(I, source, params, seed, route, transcript)
    if isinstance(source, ClassGroupResult):
        return _solve_fresh(I, source, params, seed, route, transcript)
    raise TypeError("source must be a ClassGroupResult or a PrecompStore")


def _solve_fresh(I, cg: ClassGroupResult, params, seed, route, transcript):
    c = I.conductor
    fb = cg.fb
    transcript.append(f"class group h={cg.h} divisors={cg.divisors} certified={cg.certified}")
    dec = full_descent(I, fb, params, seed=seed, route=route)
    y = dec.exponent_vector(fb)
    transcript.append(f"descent: {len(dec.gens)} elements, {sum(1 for e in y if e)} primes")
    z = zlinalg.solve_hnf(cg.hnf, y)
    if z is None:
        return _negative(cg.certified, transcript, "exponent vector outside the relation lattice")
    x = zlinalg.vecmat(z, cg.transform)
    x = _reduce_mod_kernel(x, cg.kernel)
    transcript.append(f"relation combination: {sum(1 for v in x if v)} relations")
    xbits = max((abs(v).bit_length() for v in x), default=0) + len(x).bit_length()
    table = GeneratorTable(c, [], max(40, xbits + 24))
    form = _descent_form(table, dec)
    for r, lv, e in zip(cg.relations, cg.logs, x):
        if e:
            known = lv if lv.precision >= table.precision else None
            form = form.times(table.add(r.generator, known), e)
    return _finish(form, I, transcript)


def _solve_with_store(I, store: PrecompStore, params, seed, route, transcript):
    c = I.conductor
    fb = store.fb
    transcript.append(f"store h={store.h} divisors={store.divisors} certified={store.certified}")
    dec = full_descent(I, fb, params, seed=seed, route=route)
    y = dec.exponent_vector(fb)
    transcript.append(f"descent: {len(dec.gens)} elements, {sum(1 for e in y if e)} primes")
    y_small, terms = rewrite_to_small(y, store)
    transcript.append(f"rewrite: {len(terms)} large primes moved onto {store.i0} small primes")
    z = zlinalg.solve_hnf(store.h1(), y_small)
    if z is None:
        return _negative(store.certified, transcript, "exponent vector outside the relation lattice")
    table = store.table.child()
    form = _descent_form(table, dec)
    for j, e in terms.items():
        form = form.times(store.beta[j], e)
    for i, e in enumerate(z):
        if e:
            form = form.times(store.beta[i], e)
    return _finish(form, I, transcript)


def _negative(certified: bool, transcript, why: str) -> PipAnswer:
    transcript.append(why)
    if not certified:
        transcript.append("class group not certified: no negative answer")
        return PipAnswer(INDETERMINATE, None, None, transcript)
    transcript.append("not principal, conditional on the certified class group")
    return PipAnswer(NOT_PRINCIPAL, None, None, transcript)


# ---------------------------------------------------------------------------
# short generators
# ---------------------------------------------------------------------------

def short_generator(g, search: bool = True):
    """Divide a generator by a cyclotomic-unit product close to it in log space.

    Accepts a CycloElement or a ProductForm.  Returns (g', x) where
    g' = g / prod u_j^x_j; for product forms g' is reconstructed by CRT.
    """
    if isinstance(g, ProductForm):
        form, x = size_reduce(g, search)
        return reconstruct_form(form), x
    c = g.conductor
    x = decode_units(c, log_embedding(g).values, search)
    units, _ = unit_basis(c)
    out = g
    for u, e in zip(units, x):
        if e > 0:
            inv = unit_inverse(u)
            out = out * inv ** e
        elif e < 0:
            out = out * u ** (-e)
    return out, x


def plant_short_generator(c, sigma: float, rng, mask: int = 1):
    """(g0, g) with g0 rounded Gaussian and g = g0 * prod u_j^e_j, |e_j| <= mask."""
    while True:
        g0 = CycloElement(c, tuple(int(v) for v in np.rint(rng.normal(0.0, sigma, c.n))))
        if not g0.is_zero():
            break
    units, _ = unit_basis(c)
    g = g0
    exps = []
    for u in units:
        e = int(rng.integers(-mask, mask + 1))
        exps.append(e)
        if e > 0:
            g = g * u ** e
        elif e < 0:
            g = g * unit_inverse(u) ** (-e)
    return g0, g, exps


def random_element(c, rng, bound: int = 3) -> CycloElement:
    """Nonzero element with coefficients uniform in [-bound, bound]."""
    while True:
        a = CycloElement(c, tuple(int(v) for v in rng.integers(-bound, bound + 1, c.n)))
        if not a.is_zero():
            return a


def unit_inverse(u: CycloElement) -> CycloElement:
    """Inverse of a unit of Z[zeta]."""
    c = u.conductor
    if c.is_prime_power:
        # u_j = 1 + ... + zeta^(j-1) when it has that shape
        co = u.coeffs
        j = sum(1 for v in co if v)
        if all(v == 1 for v in co[:j]) and not any(co[j:]) and math.gcd(j, c.N) == 1 and j > 1:
            return cyclotomic_unit_inverse(c, j)
    return exact_div(CycloElement.one(c), u)


# ---------------------------------------------------------------------------
# gamma-SVP
# ---------------------------------------------------------------------------

def trivial_cpm(I: Ideal, y, store):
    """The plug that assumes I itself is principal: J = O_K."""
    return {}


class RandomWalkCpm:
    """Search small products J of store primes with I*J principal.

    The class of J is known from its exponent vector, so every candidate
    costs one HNF solve.
    """

    def __init__(self, max_primes: int = 2, seed=0):
        self.max_primes = max_primes
        self.seed = seed

    def __call__(self, I, y, store):
        from itertools import combinations_with_replacement
        small = list(range(store.i0))
        y_small, _ = rewrite_to_small(y, store)
        H1 = store.h1()
        for t in range(1, self.max_primes + 1):
            for combo in combinations_with_replacement(small, t):
                v = list(y_small)
                for i in combo:
                    v[i] += 1
                if zlinalg.solve_hnf(H1, v) is not None:
                    out = {}
                    for i in combo:
                        P = store.fb.primes[i]
                        out[P] = out.get(P, 0) + 1
                    return out
        raise RuntimeError("no close principal multiple found")


@dataclass
class SvpResult:
    vector: CycloElement
    multiplier: dict
    length: float
    reference: float
    transcript: list


def gamma_svp(I: Ideal, store: PrecompStore, cpm=trivial_cpm, *, params=None, seed=0) -> SvpResult:
    """A short element of I via a principal multiple I*J and its short generator."""
    c = I.conductor
    params = params or DescentParams(k=c.n, l=min(c.n, 8), enforce_window=False)
    transcript = []
    dec = full_descent(I, store.fb, params, seed=seed)
    y = dec.exponent_vector(store.fb)
    J = cpm(I, y, store)
    IJ = I
    for P, e in sorted(J.items()):
        IJ = ideal_mul(IJ, ideal_pow(prime_ideal(P), e))
    transcript.append(f"multiplier: {len(J)} primes")
    ans = solve_pip(IJ, store, params=params, seed=seed)
    if not ans.is_principal:
        raise RuntimeError("the close principal multiple is not principal")
    beta = ans.generator
    if not I.contains(beta):
        raise AssertionError("short element is not in the ideal")
    length = math.sqrt(sum(x * x for x in beta.coeffs))
    n = c.n
    nI = I.integral_norm()
    ref = math.sqrt(n) * math.exp(math.log(nI) / n + math.log(abs(discriminant(c))) / (2 * n))
    transcript.append(f"|beta| = {length:.6g}, sqrt(n) N(I)^(1/n) |Delta|^(1/2n) = {ref:.6g}")
    return SvpResult(beta, J, length, ref, transcript + ans.transcript)
