"""Exact arithmetic in the cyclotomic field Q(zeta_N).

Elements of Z[zeta_N] are stored as coefficient tuples on the power basis
1, zeta, ..., zeta^(n-1) with n = phi(N).  Products are reduced modulo the
N-th cyclotomic polynomial.  Prime-power conductors are the main target; any
N with N % 4 != 2 is accepted so that small composite fields can be handled
by the same code.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np
import sympy

from . import _kernels


class PrecisionError(ArithmeticError):
    """Raised when a floating-point evaluation cannot reach the requested accuracy."""


def _factorize(N):
    return tuple(sorted(sympy.factorint(N).items()))


@dataclass(frozen=True)
class Conductor:
    """The conductor N of Q(zeta_N); build with ``Conductor(N)`` or ``Conductor.of(p, s)``."""

    N: int

    def __post_init__(self):
        N = self.N
        if not isinstance(N, int) or N <= 2:
            raise ValueError(f"conductor must be an integer > 2, got {N!r}")
        if N % 4 == 2:
            raise ValueError(f"N = {N} is 2 mod 4; use N/2, which gives the same field")

    @classmethod
    def of(cls, p: int, s: int = 1) -> "Conductor":
        if not sympy.isprime(p):
            raise ValueError(f"p = {p} is not prime")
        if s < 1:
            raise ValueError("s must be positive")
        return cls(p**s)

    @property
    def factorization(self):
        return _factorize(self.N)

    @property
    def is_prime_power(self) -> bool:
        return len(self.factorization) == 1

    @property
    def p(self) -> int:
        if not self.is_prime_power:
            raise ValueError(f"N = {self.N} is not a prime power")
        return self.factorization[0][0]

    @property
    def s(self) -> int:
        if not self.is_prime_power:
            raise ValueError(f"N = {self.N} is not a prime power")
        return self.factorization[0][1]

    @property
    def n(self) -> int:
        return _tables(self.N).n

    @property
    def unit_rank(self) -> int:
        return self.n // 2 - 1

    def units_mod(self):
        """All t in [1, N) with gcd(t, N) = 1; these index the Galois group."""
        return _tables(self.N).galois

    def embedding_exponents(self):
        """k in [1, N/2) coprime to N: one complex embedding per conjugate pair."""
        return _tables(self.N).emb

    def __str__(self):
        return f"Q(zeta_{self.N})"


class _Tables:
    """Per-conductor constant data (reduction rules, roots mod primes, ...)."""

    def __init__(self, N):
        self.N = N
        self.galois = tuple(t for t in range(1, N) if math.gcd(t, N) == 1)
        self.n = len(self.galois)
        self.emb = tuple(k for k in self.galois if 2 * k < N)
        self.phi = _cyclotomic_coeffs(N)
        n = self.n
        top = max(2 * n - 1, N)
        # red[i] = x^(n+i) mod Phi_N as a dense int list, for n <= n+i < top
        red = []
        cur = [-c for c in self.phi[:n]]  # x^n
        for _ in range(n, top):
            red.append(cur)
            lead = cur[n - 1]
            nxt = [0] + cur[: n - 1]
            if lead:
                nxt = [a - lead * b for a, b in zip(nxt, self.phi[:n])]
            cur = nxt
        self.red = red
        self.red_np = np.array(red, dtype=np.int64) if red else np.zeros((0, n), dtype=np.int64)
        self.red_max = max((abs(x) for row in red for x in row), default=0)
        self.red_sparse = [[(j, v) for j, v in enumerate(row) if v] for row in red]
        self._norm_primes = []  # (q, powers) with q = 1 mod N
        self._fixed_tables = {}

    # -- primes q = 1 mod N below 2^26 with all n roots of Phi_N ------------
    def norm_prime(self, idx):
        while len(self._norm_primes) <= idx:
            start = self._norm_primes[-1][0] if self._norm_primes else (1 << 26)
            q = start - 1
            q -= (q - 1) % self.N
            while not sympy.isprime(q):
                q -= self.N
            g = sympy.primitive_root(q)
            w = pow(g, (q - 1) // self.N, q)
            roots = [pow(w, k, q) for k in self.galois]
            powers = np.empty((self.n, self.n), dtype=np.int64)
            col = np.ones(self.n, dtype=np.int64)
            rts = np.array(roots, dtype=np.int64)
            for i in range(self.n):
                powers[i] = col
                col = (col * rts) % q
            self._norm_primes.append((q, powers))
        return self._norm_primes[idx]

    def fixed_table(self, bits):
        """cos/sin(2 pi i k / N) scaled by 2^bits, as Python ints."""
        tab = self._fixed_tables.get(bits)
        if tab is None:
            with mpmath.workprec(bits + 32):
                scale = mpmath.mpf(2) ** bits
                cos_t, sin_t = [], []
                for k in self.emb:
                    cs, sn = [], []
                    for i in range(self.n):
                        ang = 2 * mpmath.pi * ((i * k) % self.N) / self.N
                        cs.append(int(mpmath.nint(mpmath.cos(ang) * scale)))
                        sn.append(int(mpmath.nint(mpmath.sin(ang) * scale)))
                    cos_t.append(cs)
                    sin_t.append(sn)
            tab = (cos_t, sin_t)
            self._fixed_tables[bits] = tab
        return tab


@lru_cache(maxsize=None)
def _tables(N):
    return _Tables(N)


def _cyclotomic_coeffs(N):
    """Coefficients (low to high) of Phi_N by exact division of x^N - 1."""
    if len(_factorize(N)) == 1:
        p, s = _factorize(N)[0]
        m = p ** (s - 1)
        out = [0] * (m * (p - 1) + 1)
        for i in range(p):
            out[i * m] = 1
        return tuple(out)
    # generic: Phi_N = (x^N - 1) / prod_{d | N, d < N} Phi_d
    num = [-1] + [0] * (N - 1) + [1]
    for d in sympy.divisors(N)[:-1]:
        num = _poly_exact_div(num, list(_cyclotomic_coeffs(d)))
    return tuple(num)


def _poly_exact_div(a, b):
    a = list(a)
    out = [0] * (len(a) - len(b) + 1)
    for i in range(len(out) - 1, -1, -1):
        q = a[i + len(b) - 1] // b[-1]
        out[i] = q
        for j, bj in enumerate(b):
            a[i + j] -= q * bj
    assert not any(a), "non-exact polynomial division"
    return out


def cyclotomic_polynomial(c: Conductor):
    """Coefficients of Phi_N from the constant term up; monic of degree phi(N)."""
    return _tables(c.N).phi


def discriminant(c: Conductor) -> int:
    """|disc(Q(zeta_N))| = N^n / prod_{p | N} p^(n/(p-1))."""
    n = c.n
    val = c.N**n
    for p, _ in c.factorization:
        val //= p ** (n // (p - 1))
    return val


# ---------------------------------------------------------------------------
# ring arithmetic
# ---------------------------------------------------------------------------

def _bits(x):
    return int(x).bit_length()


def _reduce(prod, tab):
    """Reduce a coefficient list of length <= top modulo Phi_N (Python ints)."""
    n = tab.n
    res = list(prod[:n]) + [0] * max(0, n - len(prod))
    for i in range(n, len(prod)):
        c = prod[i]
        if c:
            for j, v in tab.red_sparse[i - n]:
                res[j] += c * v
    return res


def _polymul(a, b):
    """Full product of two integer coefficient sequences."""
    la, lb = len(a), len(b)
    ma = max((abs(x) for x in a), default=0)
    mb = max((abs(x) for x in b), default=0)
    if ma == 0 or mb == 0:
        return [0] * (la + lb - 1)
    if _bits(ma) + _bits(mb) + _bits(min(la, lb)) < 62:
        return [int(x) for x in np.convolve(np.array(a, dtype=np.int64), np.array(b, dtype=np.int64))]
    # Kronecker substitution with signed digits
    K = _bits(ma) + _bits(mb) + _bits(min(la, lb)) + 2
    X = 0
    for x in reversed(a):
        X = (X << K) + x
    Y = 0
    for y in reversed(b):
        Y = (Y << K) + y
    Z = X * Y
    mask = (1 << K) - 1
    half = 1 << (K - 1)
    out = []
    for _ in range(la + lb - 1):
        d = Z & mask
        if d >= half:
            d -= 1 << K
        out.append(d)
        Z = (Z - d) >> K
    return out


@dataclass(frozen=True, eq=True)
class CycloElement:
    """An element of Z[zeta_N] on the power basis (index i <-> zeta^i)."""

    conductor: Conductor
    coeffs: tuple

    def __post_init__(self):
        n = self.conductor.n
        if len(self.coeffs) != n:
            raise ValueError(f"expected {n} coefficients, got {len(self.coeffs)}")

    # constructors --------------------------------------------------------
    @classmethod
    def from_list(cls, c: Conductor, coeffs) -> "CycloElement":
        """Build from any integer sequence; longer inputs are reduced mod Phi_N."""
        coeffs = [int(x) for x in coeffs]
        tab = _tables(c.N)
        if len(coeffs) > tab.n:
            if len(coeffs) > len(tab.red) + tab.n:
                coeffs = _fold(coeffs, c.N)
            coeffs = _reduce(coeffs, tab)
        else:
            coeffs = coeffs + [0] * (tab.n - len(coeffs))
        return cls(c, tuple(coeffs))

    @classmethod
    def scalar(cls, c: Conductor, v: int) -> "CycloElement":
        return cls(c, (int(v),) + (0,) * (c.n - 1))

    @classmethod
    def one(cls, c: Conductor) -> "CycloElement":
        return cls.scalar(c, 1)

    @classmethod
    def zeta(cls, c: Conductor, k: int = 1) -> "CycloElement":
        k %= c.N
        v = [0] * (k + 1)
        v[k] = 1
        return cls.from_list(c, v)

    # basic queries -------------------------------------------------------
    @property
    def n(self) -> int:
        return self.conductor.n

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def height(self) -> int:
        return max(abs(x) for x in self.coeffs)

    def l1(self) -> int:
        return sum(abs(x) for x in self.coeffs)

    # arithmetic ----------------------------------------------------------
    def _check(self, other):
        if self.conductor != other.conductor:
            raise ValueError(f"conductor mismatch: {self.conductor.N} vs {other.conductor.N}")

    def __add__(self, other):
        if isinstance(other, int):
            other = CycloElement.scalar(self.conductor, other)
        self._check(other)
        return CycloElement(self.conductor, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return CycloElement(self.conductor, tuple(-a for a in self.coeffs))

    def __sub__(self, other):
        if isinstance(other, int):
            other = CycloElement.scalar(self.conductor, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, np.integer)):
            return CycloElement(self.conductor, tuple(a * int(other) for a in self.coeffs))
        return mul(self, other)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative powers need exact division; use exact_div")
        out = CycloElement.one(self.conductor)
        base = self
        while e:
            if e & 1:
                out = out * base
            e >>= 1
            if e:
                base = base * base
        return out

    def __repr__(self):
        return f"CycloElement({to_text(self)})"


def _fold(coeffs, N):
    out = [0] * N
    for i, c in enumerate(coeffs):
        out[i % N] += c
    return out


def mul(a: CycloElement, b: CycloElement) -> CycloElement:
    """Exact product reduced modulo Phi_N."""
    a._check(b)
    tab = _tables(a.conductor.N)
    prod = _polymul(a.coeffs, b.coeffs)
    return CycloElement(a.conductor, tuple(_reduce(prod, tab)))


def mult_matrix(a: CycloElement):
    """Rows are the coefficient vectors of a, a*zeta, ..., a*zeta^(n-1)."""
    tab = _tables(a.conductor.N)
    n = tab.n
    phi_low = tab.phi[:n]
    rows = [list(a.coeffs)]
    cur = list(a.coeffs)
    for _ in range(n - 1):
        lead = cur[-1]
        cur = [0] + cur[:-1]
        if lead:
            cur = [x - lead * b for x, b in zip(cur, phi_low)]
        rows.append(cur)
    return rows


def galois_apply(a: CycloElement, t: int) -> CycloElement:
    """Image of a under zeta -> zeta^t."""
    N = a.conductor.N
    if math.gcd(t, N) != 1:
        raise ValueError(f"t = {t} is not invertible mod {N}")
    t %= N
    tab = _tables(N)
    v = [0] * N
    for i, c in enumerate(a.coeffs):
        if c:
            v[(i * t) % N] += c
    return CycloElement(a.conductor, tuple(_reduce(v, tab)))


def conj(a: CycloElement) -> CycloElement:
    """Complex conjugation zeta -> zeta^-1."""
    return galois_apply(a, a.conductor.N - 1)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def norm_bound_bits(a: CycloElement) -> int:
    """Bits of a rigorous bound on |N(a)|, using |sigma(a)| <= ||a||_1."""
    l1 = a.l1()
    return a.n * max(1, l1.bit_length())


def norm(a: CycloElement) -> int:
    """The absolute norm Res(Phi_N, P), exactly, via CRT over primes q = 1 mod N."""
    if a.is_zero():
        raise ValueError("norm of zero")
    return norm_many([a])[0]


def norm_many(elems) -> list:
    """Norms of a batch of elements of the same field (vectorised residues)."""
    if not elems:
        return []
    c = elems[0].conductor
    tab = _tables(c.N)
    bits = max(norm_bound_bits(e) for e in elems) + 2
    residues = []
    moduli = []
    total = 0
    idx = 0
    raw = np.array([e.coeffs for e in elems], dtype=object)
    while total <= bits:
        q, powers = tab.norm_prime(idx)
        cm = np.array((raw % q).tolist(), dtype=np.int64)
        residues.append(_kernels.norm_residues(cm, powers, q))
        moduli.append(q)
        total += q.bit_length() - 1
        idx += 1
    out = []
    for b in range(len(elems)):
        x, M = 0, 1
        for res, q in zip(residues, moduli):
            r = int(res[b])
            # CRT step
            t = ((r - x) * pow(M, -1, q)) % q
            x += M * t
            M *= q
        if x > M // 2:
            x -= M
        if x == 0:
            raise ValueError("norm of zero")
        out.append(x)
    return out


# ---------------------------------------------------------------------------
# log embedding
# ---------------------------------------------------------------------------

FLOAT_PRECISION = 40
MAX_PRECISION = 1 << 15


def _fixed_to_float(x: int, precision: int) -> float:
    if precision > 60:
        x >>= precision - 60
        precision = 60
    return math.ldexp(float(x), -precision)


@dataclass(frozen=True)
class LogVector:
    """(ln|sigma_k(a)|)_k over one embedding per conjugate pair.

    Entries are kept as integers scaled by 2^precision so that integer linear
    combinations stay exact; ``values`` gives the float64 view.
    """

    fixed: tuple
    precision: int
    _values: np.ndarray = field(default=None, compare=False, repr=False)

    @classmethod
    def from_floats(cls, vals, precision=FLOAT_PRECISION):
        return cls(tuple(int(round(float(v) * (1 << precision))) for v in vals), precision)

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            object.__setattr__(self, "_values", np.array([_fixed_to_float(x, self.precision) for x in self.fixed]))
        return self._values

    def __len__(self):
        return len(self.fixed)

    def _align(self, other):
        p = min(self.precision, other.precision)
        a = [x >> (self.precision - p) if self.precision > p else x for x in self.fixed]
        b = [x >> (other.precision - p) if other.precision > p else x for x in other.fixed]
        return a, b, p

    def __add__(self, other):
        a, b, p = self._align(other)
        return LogVector(tuple(x + y for x, y in zip(a, b)), p)

    def __sub__(self, other):
        a, b, p = self._align(other)
        return LogVector(tuple(x - y for x, y in zip(a, b)), p)

    def __neg__(self):
        return LogVector(tuple(-x for x in self.fixed), self.precision)

    def scale(self, k: int) -> "LogVector":
        return LogVector(tuple(k * x for x in self.fixed), self.precision)

    def total(self) -> float:
        """Sum of entries, i.e. ln|N(a)|/2."""
        return _fixed_to_float(sum(self.fixed), self.precision)

    @staticmethod
    def zero(length, precision=FLOAT_PRECISION):
        return LogVector((0,) * length, precision)

    @staticmethod
    def combine(coeffs, vectors) -> "LogVector":
        """Exact integer combination sum_i coeffs[i] * vectors[i]."""
        p = min(v.precision for v in vectors)
        acc = [0] * len(vectors[0])
        for k, v in zip(coeffs, vectors):
            k = int(k)
            if k == 0:
                continue
            sh = v.precision - p
            for j, x in enumerate(v.fixed):
                acc[j] += k * (x >> sh if sh else x)
        return LogVector(tuple(acc), p)


def _float_log_embedding(a: CycloElement, precision: int):
    tab = _tables(a.conductor.N)
    N = a.conductor.N
    k = np.array(tab.emb, dtype=float)
    i = np.arange(a.n, dtype=float)
    W = np.exp(2j * np.pi * np.outer(i, k) / N)
    z = np.array(a.coeffs, dtype=float) @ W
    mag = np.abs(z)
    err = a.l1() * a.n * 4.0 * np.finfo(float).eps
    if mag.min() <= err * 2.0**precision:
        return None
    return np.log(mag)


def log_embedding(a: CycloElement, precision: int = FLOAT_PRECISION) -> LogVector:
    """Log vector (ln|sigma_k(a)|) for the embeddings zeta -> e^(2 pi i k / N), 0 < k < N/2.

    ``precision`` is the number of fractional bits the entries are accurate to.
    Up to 40 bits a float64 evaluation is used when it is well conditioned;
    otherwise the embeddings are evaluated in exact fixed point and the
    working precision doubles until every |sigma_k(a)| is resolved.
    """
    if a.is_zero():
        raise ValueError("log embedding of zero")
    if precision <= FLOAT_PRECISION and a.height() < (1 << 40):
        vals = _float_log_embedding(a, precision)
        if vals is not None:
            return LogVector.from_floats(vals, precision)
    tab = _tables(a.conductor.N)
    l1 = a.l1()
    guard = 16
    work = precision + guard + l1.bit_length()
    while work <= MAX_PRECISION:
        bits = ((work + 63) // 64) * 64
        cos_t, sin_t = tab.fixed_table(bits)
        ok = True
        sq = []
        for cs, sn in zip(cos_t, sin_t):
            re = sum(c * x for c, x in zip(a.coeffs, cs) if c)
            im = sum(c * x for c, x in zip(a.coeffs, sn) if c)
            m2 = re * re + im * im
            # |error| <= l1 in units of 2^-bits; need relative error < 2^-(precision+guard)
            if m2 <= (l1 << (precision + guard)) ** 2:
                ok = False
                break
            sq.append(m2)
        if ok:
            with mpmath.workprec(precision + 64):
                out = []
                shift = mpmath.mpf(2) ** precision
                for m2 in sq:
                    val = mpmath.log(mpmath.mpf(m2)) / 2 - bits * mpmath.log(2)
                    out.append(int(mpmath.nint(val * shift)))
            return LogVector(tuple(out), precision)
        work *= 2
    raise PrecisionError("embedding too close to zero for the maximum working precision")


# ---------------------------------------------------------------------------
# units
# ---------------------------------------------------------------------------

def cyclotomic_unit(c: Conductor, j: int) -> CycloElement:
    """u_j = (zeta^j - 1)/(zeta - 1) = 1 + zeta + ... + zeta^(j-1)."""
    N = c.N
    if math.gcd(j, N) != 1 or j % N == 1:
        raise ValueError(f"u_{j} is not a cyclotomic unit for N = {N}")
    j %= N
    return CycloElement.from_list(c, [1] * j)


def cyclotomic_unit_inverse(c: Conductor, j: int) -> CycloElement:
    """1/u_j, which is sum_{i<k} zeta^(i j) with k = j^-1 mod N."""
    N = c.N
    j %= N
    k = pow(j, -1, N)
    v = [0] * N
    for i in range(k):
        v[(i * j) % N] += 1
    return CycloElement(c, tuple(_reduce(v, _tables(N))))


def unit_indices(c: Conductor):
    """Indices j of the r = n/2 - 1 units u_j with 1 < j < N/2, gcd(j, N) = 1."""
    return tuple(j for j in c.embedding_exponents() if j != 1)


# ---------------------------------------------------------------------------
# exact division
# ---------------------------------------------------------------------------

def adjugate(b: CycloElement) -> CycloElement:
    """prod_{t != 1} sigma_t(b), so that b * adjugate(b) = N(b)."""
    out = CycloElement.one(b.conductor)
    for t in b.conductor.units_mod()[1:]:
        out = out * galois_apply(b, t)
    return out


def exact_div(a: CycloElement, b: CycloElement) -> CycloElement:
    """a / b, raising ValueError unless the quotient lies in Z[zeta]."""
    if b.is_zero():
        raise ZeroDivisionError("division by zero element")
    adj = adjugate(b)
    nb = (b * adj).coeffs[0]
    num = a * adj
    if any(x % nb for x in num.coeffs):
        raise ValueError("quotient is not integral")
    return CycloElement(a.conductor, tuple(x // nb for x in num.coeffs))


def divides(b: CycloElement, a: CycloElement) -> bool:
    try:
        exact_div(a, b)
    except ValueError:
        return False
    return True


# ---------------------------------------------------------------------------
# text form
# ---------------------------------------------------------------------------

def to_text(a: CycloElement) -> str:
    return f"{a.conductor.N}:" + ",".join(str(x) for x in a.coeffs)


def from_text(s: str) -> CycloElement:
    head, _, body = s.strip().partition(":")
    c = Conductor(int(head))
    coeffs = [int(x) for x in body.split(",")] if body else []
    if len(coeffs) != c.n:
        raise ValueError(f"expected {c.n} coefficients for N = {c.N}")
    return CycloElement(c, tuple(coeffs))
