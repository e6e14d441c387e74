"""Ideals of Z[zeta_N] as lower-triangular HNF bases, and prime ideals.

An :class:`Ideal` is ``basis / denominator`` where ``basis`` is the lower
HNF (see :mod:`cyclopip.zlinalg`) of an integral lattice closed under
multiplication by zeta.  Row ``i`` of the basis has its pivot in column
``i``, so ``basis[0][0]`` is the least positive integer in the integral part.

Prime ideals are described by a monic irreducible factor ``g`` of Phi_N mod p:
the prime is (p, g(zeta)).  Valuations use an anti-uniformizer tau with
tau * P contained in pO; for an integral x, ``x in P`` iff ``x * tau`` is
divisible by p.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from sympy import factorint, primitive_root

from . import zlinalg
from .cyclo import (
    Conductor,
    CycloElement,
    _cyclotomic_coeffs,
    mult_matrix,
    norm,
)


# ---------------------------------------------------------------------------
# polynomials over F_p (lists, low degree first, no trailing zeros)
# ---------------------------------------------------------------------------

def _trim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _pmod(a, m, p):
    a = [x % p for x in a]
    _trim(a)
    dm = len(m) - 1
    inv = pow(m[-1], -1, p)
    while len(a) - 1 >= dm:
        q = a[-1] * inv % p
        shift = len(a) - 1 - dm
        for i, c in enumerate(m):
            a[shift + i] = (a[shift + i] - q * c) % p
        _trim(a)
    return a


def _pdivmod(a, m, p):
    a = [x % p for x in a]
    _trim(a)
    dm = len(m) - 1
    inv = pow(m[-1], -1, p)
    q = [0] * max(len(a) - dm, 1)
    while len(a) - 1 >= dm:
        c = a[-1] * inv % p
        shift = len(a) - 1 - dm
        q[shift] = c
        for i, mc in enumerate(m):
            a[shift + i] = (a[shift + i] - c * mc) % p
        _trim(a)
    return _trim(q), a


def _pmul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim([x % p for x in out])


def _pmulmod(a, b, m, p):
    return _pmod(_pmul(a, b, p), m, p)


def _ppowmod(a, e, m, p):
    result = [1]
    base = _pmod(a, m, p)
    while e:
        if e & 1:
            result = _pmulmod(result, base, m, p)
        e >>= 1
        if e:
            base = _pmulmod(base, base, m, p)
    return result


def _pgcd(a, b, p):
    a = _trim([x % p for x in a])
    b = _trim([x % p for x in b])
    while b:
        a, b = b, _pmod(a, b, p)
    if a:
        inv = pow(a[-1], -1, p)
        a = [x * inv % p for x in a]
    return a


def _psub(a, b, p):
    n = max(len(a), len(b))
    a = a + [0] * (n - len(a))
    b = b + [0] * (n - len(b))
    return _trim([(x - y) % p for x, y in zip(a, b)])


def _peval(a, x, p):
    acc = 0
    for c in reversed(a):
        acc = (acc * x + c) % p
    return acc


def _equal_degree_split(g, f, p, rng):
    """Split a squarefree product of degree-f irreducibles over F_p."""
    d = len(g) - 1
    if d == f:
        return [g]
    while True:
        a = [rng.randrange(p) for _ in range(d)]
        _trim(a)
        if len(a) < 2:
            continue
        if p == 2:
            t = a[:]
            s = a[:]
            for _ in range(f - 1):
                s = _pmulmod(s, s, g, p)
                t = _psub(t, [(-x) % p for x in s], p)  # t += s
            h = _pgcd(g, t, p)
        else:
            e = (p ** f - 1) // 2
            h = _pgcd(g, _psub(_ppowmod(a, e, g, p), [1], p), p)
        if 0 < len(h) - 1 < d:
            q, _ = _pdivmod(g, h, p)
            return _equal_degree_split(h, f, p, rng) + _equal_degree_split(q, f, p, rng)


def _mult_order(a, m):
    if m == 1:
        return 1
    k, x = 1, a % m
    while x != 1:
        x = x * a % m
        k += 1
    return k


# ---------------------------------------------------------------------------
# prime ideals
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class PrimeIdeal:
    """The prime (p, poly(zeta)) of Z[zeta_N]; ``poly`` is monic mod p."""

    norm: int
    p: int
    poly: tuple
    N: int
    f: int = field(compare=False)
    e: int = field(compare=False)

    @property
    def conductor(self) -> Conductor:
        return Conductor(self.N)

    @property
    def root(self):
        """The root v with poly = zeta - v, for degree-one primes."""
        if self.f != 1:
            return None
        return (-self.poly[0]) % self.p

    @property
    def is_split(self) -> bool:
        return self.f == 1 and self.e == 1

    @property
    def generator(self) -> CycloElement:
        """poly(zeta) lifted to Z; the prime is (p, generator)."""
        return CycloElement.from_list(self.conductor, list(self.poly))

    @property
    def anti_uniformizer(self) -> CycloElement:
        return _anti_uniformizer(self)

    def contains(self, a: CycloElement) -> bool:
        if self.f == 1:
            return residue(a, self) == 0
        return not _pmod(list(a.coeffs), list(self.poly), self.p)

    def __str__(self):
        return f"({self.p}, {self.f}, {','.join(map(str, self.poly))})"

    def __repr__(self):
        return f"PrimeIdeal(N={self.N}, p={self.p}, f={self.f}, poly={self.poly})"


@lru_cache(maxsize=None)
def _anti_uniformizer(P: PrimeIdeal) -> CycloElement:
    phi = [x % P.p for x in _cyclotomic_coeffs(P.N)]
    tau, r = _pdivmod(phi, list(P.poly), P.p)
    assert not r
    return CycloElement.from_list(P.conductor, tau)


@lru_cache(maxsize=None)
def _all_primes_above(N: int, p: int):
    c = Conductor(N)
    n = c.n
    if N % p == 0:
        pa = p ** dict(c.factorization)[p]
        m = N // pa
        e = pa // p * (p - 1)
    else:
        m, e = N, 1
    f = _mult_order(p, m)
    base = [x % p for x in _cyclotomic_coeffs(m)]
    if f == 1 and m > 1:
        w = pow(primitive_root(p), (p - 1) // m, p) if p > 2 else 1
        roots = sorted({pow(w, k, p) for k in range(1, m + 1) if math.gcd(k, m) == 1})
        factors = [[(-v) % p, 1] for v in roots]
    elif m == 1:
        factors = [[p - 1, 1]]
    else:
        rng = random.Random(p * 1000003 + N)
        factors = _equal_degree_split(base, f, p, rng)
    assert len(factors) * f * e == n
    out = [PrimeIdeal(p ** f, p, tuple(g), N, f, e) for g in factors]
    return tuple(sorted(out))


def primes_above(c: Conductor, p: int, bound=None, degree_one_only: bool = False):
    """Prime ideals above the rational prime p, of norm at most ``bound``."""
    out = []
    for P in _all_primes_above(c.N, p):
        if bound is not None and P.norm > bound:
            continue
        if degree_one_only and P.f != 1:
            continue
        out.append(P)
    return out


def residue(a: CycloElement, P: PrimeIdeal) -> int:
    """Image of a in O/P = F_p for a degree-one prime."""
    if P.f != 1:
        raise ValueError("residue needs a degree-one prime")
    return _peval(list(a.coeffs), P.root, P.p)


def galois_prime(P: PrimeIdeal, t: int) -> PrimeIdeal:
    """The image of P under zeta -> zeta^t."""
    N = P.N
    if math.gcd(t, N) != 1:
        raise ValueError("t must be a unit mod N")
    if P.f == 1 and P.e == 1:
        tinv = pow(t, -1, N)
        v = pow(P.root, tinv, P.p)
        return PrimeIdeal(P.p, P.p, ((-v) % P.p, 1), N, 1, 1)
    # g(x^t) vanishes on the image
    g = list(P.poly)
    gt = [0] * ((len(g) - 1) * t + 1)
    for i, c in enumerate(g):
        gt[i * t] = c
    for Q in _all_primes_above(N, P.p):
        if not _pmod(gt, list(Q.poly), P.p):
            return Q
    raise AssertionError("no image prime found")


def element_valuation(a: CycloElement, P: PrimeIdeal, limit=None) -> int:
    """v_P(a) for a nonzero integral a."""
    if a.is_zero():
        raise ValueError("valuation of zero")
    tau = P.anti_uniformizer
    p = P.p
    v = 0
    x = a
    while P.contains(x):
        y = x * tau
        if any(c % p for c in y.coeffs):
            break
        x = CycloElement(x.conductor, tuple(c // p for c in y.coeffs))
        v += 1
        if limit is not None and v >= limit:
            break
    return v


# ---------------------------------------------------------------------------
# ideals
# ---------------------------------------------------------------------------

def _content(rows):
    g = 0
    for row in rows:
        for x in row:
            if x:
                g = math.gcd(g, x)
                if g == 1:
                    return 1
    return g


@dataclass(frozen=True)
class Ideal:
    """A fractional ideal ``basis / denominator`` in canonical form."""

    conductor: Conductor
    basis: tuple
    denominator: int = 1

    @staticmethod
    def make(c: Conductor, rows, denominator: int = 1) -> "Ideal":
        rows = [list(r) for r in rows]
        g = math.gcd(_content(rows), denominator)
        if g > 1:
            rows = [[x // g for x in r] for r in rows]
            denominator //= g
        return Ideal(c, tuple(tuple(r) for r in rows), denominator)

    @staticmethod
    def unit(c: Conductor) -> "Ideal":
        return Ideal.make(c, zlinalg.identity(c.n))

    @property
    def n(self) -> int:
        return self.conductor.n

    @property
    def is_integral(self) -> bool:
        return self.denominator == 1

    @property
    def is_unit(self) -> bool:
        return self.denominator == 1 and all(self.basis[i][i] == 1 for i in range(self.n))

    def integral_norm(self) -> int:
        """Norm of the integral part ``basis``."""
        return math.prod(self.basis[i][i] for i in range(self.n))

    def min_integer(self) -> int:
        return self.basis[0][0]

    def rows(self):
        return [list(r) for r in self.basis]

    def elements(self):
        return [CycloElement(self.conductor, r) for r in self.basis]

    def contains(self, a: CycloElement) -> bool:
        y = [x * self.denominator for x in a.coeffs]
        return zlinalg.solve_hnf(self.rows(), y) is not None

    def __str__(self):
        return f"{self.denominator}|" + zlinalg.matrix_to_text(self.rows())


def ideal_norm(I: Ideal) -> Fraction:
    return Fraction(I.integral_norm(), I.denominator ** I.n)


def ideal_from_generator(a: CycloElement) -> Ideal:
    if a.is_zero():
        raise ValueError("zero generator")
    D = abs(norm(a))
    return Ideal.make(a.conductor, zlinalg.hnf_mod(mult_matrix(a), D))


def ideal_from_generators(c: Conductor, elems) -> Ideal:
    """Integral ideal generated (as an O-module) by the given elements."""
    elems = [e for e in elems if not e.is_zero()]
    if not elems:
        raise ValueError("zero ideal")
    D = 0
    for e in elems:
        D = math.gcd(D, norm(e))
    rows = []
    for e in elems:
        rows.extend(mult_matrix(e))
    return Ideal.make(c, zlinalg.hnf_mod(rows, D))


def _scaled_rows(I: Ideal, k: int):
    return [[x * k for x in r] for r in I.basis]


def _mul_integral(A, B, c: Conductor):
    """Product of two integral HNF bases (lists of rows)."""
    n = c.n
    NA = math.prod(A[i][i] for i in range(n))
    NB = math.prod(B[i][i] for i in range(n))
    D = NA * NB
    if NA == 1:
        return [list(r) for r in B]
    if NB == 1:
        return [list(r) for r in A]
    # A*B = A*m + A*beta*O + ... ; random beta in B until the norm is right
    mB = B[0][0]
    gens = [[x * mB for x in r] for r in A]
    rng = random.Random(D)
    picks = [B[-1]]
    for attempt in range(40):
        for beta in picks:
            M = mult_matrix(CycloElement(c, tuple(beta)))
            gens.extend(zlinalg.matmul(A, M))
        H = zlinalg.hnf_mod(gens, D, shrink=False)
        if math.prod(H[i][i] for i in range(n)) == D:
            return H
        comb = [rng.randint(-3, 3) for _ in range(n)]
        picks = [zlinalg.vecmat(comb, B)]
    raise AssertionError("ideal product failed to converge")


def ideal_mul(a: Ideal, b: Ideal) -> Ideal:
    if a.conductor != b.conductor:
        raise ValueError("conductor mismatch")
    H = _mul_integral(a.rows(), b.rows(), a.conductor)
    return Ideal.make(a.conductor, H, a.denominator * b.denominator)


def ideal_pow(a: Ideal, k: int) -> Ideal:
    if k < 0:
        return ideal_pow(ideal_inverse(a), -k)
    result = Ideal.unit(a.conductor)
    base = a
    while k:
        if k & 1:
            result = ideal_mul(result, base)
        k >>= 1
        if k:
            base = ideal_mul(base, base)
    return result


def _two_element(I: Ideal):
    """beta with I = dO + beta*O where d = min(I cap Z)."""
    c = I.conductor
    n = I.n
    rows = I.rows()
    d = rows[0][0]
    D = I.integral_norm()
    target = rows
    rng = random.Random(D * 31 + d)
    cand = rows[-1]
    dI = [[d if i == j else 0 for j in range(n)] for i in range(n)]
    for _ in range(200):
        M = mult_matrix(CycloElement(c, tuple(cand)))
        H = zlinalg.hnf_mod(dI + M, d, shrink=False)
        if H == target:
            return CycloElement(c, tuple(cand))
        comb = [rng.randint(-2, 2) for _ in range(n)]
        cand = zlinalg.vecmat(comb, rows)
    raise AssertionError("no two-element representation found")


def ideal_inverse(a: Ideal) -> Ideal:
    c = a.conductor
    n = a.n
    if a.integral_norm() == 0:
        raise ValueError("zero ideal")
    if a.basis[0][0] == 1:
        k = a.denominator
        return Ideal.make(c, [[k * x for x in r] for r in zlinalg.identity(n)])
    d = a.basis[0][0]
    beta = _two_element(Ideal(c, a.basis, 1))
    # J = {y : y*beta in dO}; lower HNF puts the zero-right-block rows first
    M = mult_matrix(beta)
    big = []
    for i in range(n):
        row = [0] * (2 * n)
        row[i] = 1
        row[n:] = M[i]
        big.append(row)
    for i in range(n):
        row = [0] * (2 * n)
        row[n + i] = d
        big.append(row)
    H = zlinalg.hnf_mod(big, d, shrink=False)
    J = [r[:n] for r in H[:n]]
    # (basis/den)^-1 = den * J / d
    J = [[x * a.denominator for x in r] for r in J]
    return Ideal.make(c, zlinalg.hnf(J), d)


def ideal_div(a: Ideal, b: Ideal) -> Ideal:
    return ideal_mul(a, ideal_inverse(b))


def prime_ideal(P: PrimeIdeal) -> Ideal:
    c = P.conductor
    n = c.n
    rows = [[P.p if i == j else 0 for j in range(n)] for i in range(n)]
    rows += mult_matrix(P.generator)
    return Ideal.make(c, zlinalg.hnf_mod(rows, P.norm))


def _divide_out(rows, P: PrimeIdeal, c: Conductor):
    """Basis of I * P^-1 given I inside P (as I*tau/p)."""
    tau = P.anti_uniformizer
    M = mult_matrix(tau)
    prod = zlinalg.matmul(rows, M)
    p = P.p
    if any(x % p for r in prod for x in r):
        return None
    return zlinalg.hnf([[x // p for x in r] for r in prod])


def _integral_valuation(rows, P: PrimeIdeal, c: Conductor) -> int:
    v = 0
    while True:
        if not all(P.contains(CycloElement(c, tuple(r))) for r in rows):
            return v
        nxt = _divide_out(rows, P, c)
        if nxt is None:
            return v
        rows = nxt
        v += 1


def valuation(I: Ideal, P: PrimeIdeal) -> int:
    """Exact P-adic valuation of a fractional ideal."""
    if I.conductor.N != P.N:
        raise ValueError("conductor mismatch")
    c = I.conductor
    v = _integral_valuation(I.rows(), P, c)
    if I.denominator > 1:
        k = 0
        d = I.denominator
        while d % P.p == 0:
            d //= P.p
            k += 1
        v -= k * P.e
    return v


def factor_over(I: Ideal, fb) -> list | None:
    """Exponent vector of an integral ideal over the factor base, or None.

    ``fb`` is any sequence of PrimeIdeal sorted as the factor base is.
    """
    if not I.is_integral:
        raise ValueError("integral ideal expected")
    nI = I.integral_norm()
    index = {P: i for i, P in enumerate(fb)}
    by_p = {}
    for P in fb:
        by_p.setdefault(P.p, []).append(P)
    out = [0] * len(fb)
    if nI == 1:
        return out
    rem = nI
    for p in sorted(by_p):
        if rem % p:
            continue
        k = 0
        while rem % p == 0:
            rem //= p
            k += 1
        got = 0
        for P in by_p[p]:
            v = valuation(I, P)
            out[index[P]] = v
            got += v * P.f
        if got != k:
            return None
    if rem != 1:
        return None
    return out


def factor_element(a: CycloElement, fb, a_norm: int | None = None, by_p=None):
    """Exponent vector of (a) over fb, or None if (a) is not fb-smooth."""
    if a_norm is None:
        a_norm = norm(a)
    rem = abs(a_norm)
    if by_p is None:
        by_p = primes_by_rational(fb)
    out = [0] * len(fb)
    for p, items in by_p.items():
        if rem % p:
            continue
        k = 0
        while rem % p == 0:
            rem //= p
            k += 1
        got = 0
        for i, P in items:
            v = element_valuation(a, P, limit=k // P.f + 1)
            out[i] = v
            got += v * P.f
        if got != k:
            return None
    if rem != 1:
        return None
    return out


def primes_by_rational(fb):
    by_p = {}
    for i, P in enumerate(fb):
        by_p.setdefault(P.p, []).append((i, P))
    return by_p


# ---------------------------------------------------------------------------
# independent verification
# ---------------------------------------------------------------------------

@lru_cache(maxsize=4096)
def prime_power_basis(P: PrimeIdeal, k: int):
    """HNF basis of P^k, built without anti-uniformizers."""
    c = P.conductor
    n = c.n
    if P.is_split:
        # P^k = (p^k, zeta - v') with v' the Hensel lift of the root
        q = P.p ** k
        v = P.root
        phi = _cyclotomic_coeffs(P.N)
        dphi = [i * phi[i] for i in range(1, len(phi))]
        for _ in range(k.bit_length() + 1):
            fv = sum(cf * pow(v, i, q) for i, cf in enumerate(phi)) % q
            dv = sum(cf * pow(v, i, q) for i, cf in enumerate(dphi)) % q
            v = (v - fv * pow(dv, -1, q)) % q
        rows = [[0] * n for _ in range(n)]
        rows[0][0] = q
        for i in range(1, n):
            rows[i][0] = (-pow(v, i, q)) % q
            rows[i][i] = 1
        return tuple(tuple(r) for r in rows)
    if k == 1:
        return prime_ideal(P).basis
    half = prime_power_basis(P, k // 2)
    rows = _mul_integral([list(r) for r in half], [list(r) for r in half], c)
    if k % 2:
        rows = _mul_integral(rows, [list(r) for r in prime_ideal(P).basis], c)
    return tuple(tuple(r) for r in rows)


def certify_factorization(a: CycloElement, primes, exps) -> bool:
    """Check (a) = prod P^e using only HNF membership and a Bareiss norm.

    a must lie in every P^e, and |N(a)| must equal prod N(P)^e.  Together these
    force equality of ideals.
    """
    detn = abs(zlinalg.det(mult_matrix(a)))
    expected = 1
    for P, e in zip(primes, exps):
        if e < 0:
            return False
        if e == 0:
            continue
        expected *= P.norm ** e
    if detn != expected:
        return False
    for P, e in zip(primes, exps):
        if e == 0:
            continue
        basis = prime_power_basis(P, e)
        if zlinalg.solve_hnf([list(r) for r in basis], list(a.coeffs)) is None:
            return False
    return True


# ---------------------------------------------------------------------------
# text form
# ---------------------------------------------------------------------------

def ideal_to_text(I: Ideal) -> str:
    return f"N={I.conductor.N} den={I.denominator}\n" + zlinalg.matrix_to_text(I.rows())


def ideal_from_text(text: str) -> Ideal:
    head, _, body = text.strip().partition("\n")
    fields = dict(kv.split("=") for kv in head.split())
    c = Conductor(int(fields["N"]))
    rows = zlinalg.matrix_from_text(body)
    return Ideal.make(c, rows, int(fields["den"]))


def prime_to_text(P: PrimeIdeal) -> str:
    return f"{P.N}:{P.p}:{P.f}:{P.e}:" + ",".join(map(str, P.poly))


def prime_from_text(s: str) -> PrimeIdeal:
    N, p, f, e, poly = s.strip().split(":")
    p = int(p)
    f = int(f)
    return PrimeIdeal(p ** f, p, tuple(int(x) for x in poly.split(",")), int(N), f, int(e))
