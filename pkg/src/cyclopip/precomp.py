"""Generators in product form and the persistent precomputation store.

Generators that come out of the class group are products of many relation
elements with large exponents.  They are never expanded on the power basis.
Each base element instead carries its log vector and its residues at a few
primes q = 1 (mod N).  Products combine these homomorphically.  A generator
is only written out once it has been size-reduced by cyclotomic units.  Its
coefficients are then recovered by CRT over enough of those primes.

The store keeps the relation HNF, the residues and log vectors of the
size-reduced row generators beta_i, and the factor base.  Later PIP queries
only run the descent and linear algebra over it, with no relation search.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy

from . import latred, zlinalg
from .classgroup import (
    ClassGroupResult,
    _pick_frame,
    compute_class_group,
    cyclotomic_unit_generators,
)
from .cyclo import (
    Conductor,
    CycloElement,
    LogVector,
    log_embedding,
)
from .ideal import certify_factorization, prime_from_text, prime_to_text
from .relations import FactorBase, bach_bound

FORMAT_VERSION = 1
SPLIT_PRIME_START = 1 << 30


class CapacityError(ValueError):
    """The split primes cannot hold the coefficients being reconstructed."""

    def __init__(self, msg, needed_bits=None, have_bits=None):
        super().__init__(msg)
        self.needed_bits = needed_bits
        self.have_bits = have_bits


class ResidueCollision(ArithmeticError):
    """A base element vanishes at a split prime it is raised to a negative power at."""


class StoreError(ValueError):
    """A store file is corrupt, truncated or of an unsupported version."""


# ---------------------------------------------------------------------------
# split primes
# ---------------------------------------------------------------------------

def _inverse_mod(M, q):
    """Inverse of an integer matrix modulo a prime q < 2^31 (numpy int64)."""
    n = len(M)
    A = np.concatenate([np.array(M, dtype=np.int64) % q, np.eye(n, dtype=np.int64)], axis=1)
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r, col]), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix mod q")
        if piv != col:
            A[[col, piv]] = A[[piv, col]]
        inv = pow(int(A[col, col]), -1, q)
        A[col] = (A[col] * inv) % q
        f = A[:, col].copy()
        f[col] = 0
        A = (A - np.outer(f, A[col]) % q) % q
    return A[:, n:]


@dataclass(frozen=True)
class SplitPrime:
    """A prime q = 1 (mod N) with the n primitive N-th roots of unity mod q."""

    q: int
    N: int
    roots: tuple

    @staticmethod
    def make(q: int, c: Conductor) -> "SplitPrime":
        if (q - 1) % c.N or not sympy.isprime(q):
            raise ValueError(f"{q} is not a prime = 1 mod {c.N}")
        if q >= 1 << 31:
            raise ValueError("split primes must stay below 2^31")
        w = pow(sympy.primitive_root(q), (q - 1) // c.N, q)
        return SplitPrime(q, c.N, tuple(pow(w, k, q) for k in c.units_mod()))

    def evaluate(self, a: CycloElement) -> tuple:
        q = self.q
        co = [x % q for x in a.coeffs]
        out = []
        for r in self.roots:
            acc = 0
            for x in reversed(co):
                acc = (acc * r + x) % q
            out.append(acc)
        return tuple(out)

    def interpolate(self, values) -> list:
        """Coefficients mod q of the element with the given residues."""
        Vi = _vandermonde_inverse(self)
        v = np.array([int(x) % self.q for x in values], dtype=object)
        return [int(x) % self.q for x in Vi.astype(object).dot(v)]


@lru_cache(maxsize=64)
def _vandermonde_inverse(sp: SplitPrime):
    n = len(sp.roots)
    V = [[pow(r, i, sp.q) for i in range(n)] for r in sp.roots]
    return _inverse_mod(V, sp.q)


def find_split_primes(c: Conductor, count: int, start: int = SPLIT_PRIME_START, avoid=()):
    """The first ``count`` primes q = 1 mod N above ``start``."""
    N = c.N
    q = start + ((1 - start) % N)
    out = []
    avoid = set(avoid)
    while len(out) < count:
        if q not in avoid and sympy.isprime(q):
            out.append(SplitPrime.make(q, c))
        q += N
    return out


# ---------------------------------------------------------------------------
# coefficient bounds from log vectors
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _complex_vandermonde_inverse_abs(N: int):
    c = Conductor(N)
    n = c.n
    ks = np.array(c.units_mod(), dtype=float)
    V = np.exp(2j * np.pi * np.outer(ks, np.arange(n)) / N)
    emb = list(c.embedding_exponents())
    pos = [emb.index(min(k, N - k)) for k in c.units_mod()]
    return np.abs(np.linalg.inv(V)), np.array(pos)


def coefficient_log_bound(c: Conductor, logv) -> float:
    """ln of an upper bound on max |coefficient| from the log embedding."""
    W, pos = _complex_vandermonde_inverse_abs(c.N)
    L = np.asarray(logv, dtype=float)[pos]
    with np.errstate(divide="ignore"):
        terms = np.log(W) + L[None, :]
    per_row = np.logaddexp.reduce(terms, axis=1)
    # head room for rounding in the log vector and in the inverse
    return float(per_row.max()) + 1e-6 * (1 + float(np.abs(L).max()))


# ---------------------------------------------------------------------------
# generator tables and product forms
# ---------------------------------------------------------------------------

class GeneratorTable:
    """Base elements with log vectors and residues at a list of split primes.

    Elements may be opaque (``None``): then only the stored residues and log
    are known, and no new split primes can be added for them.
    """

    def __init__(self, c: Conductor, primes=(), precision: int = 40):
        self.conductor = c
        self.primes = list(primes)
        self.precision = precision
        self.elements = []
        self.logs = []
        self.residues = []  # residues[i][j] tuple or None (not yet computed)
        self._index = {}

    def __len__(self):
        return len(self.elements)

    def child(self) -> "GeneratorTable":
        """A table sharing this one's entries that can grow independently."""
        t = GeneratorTable(self.conductor, self.primes, self.precision)
        t.elements = list(self.elements)
        t.logs = list(self.logs)
        t.residues = [list(r) for r in self.residues]
        t._index = dict(self._index)
        return t

    def add(self, a: CycloElement, logv: LogVector | None = None) -> int:
        if a.is_zero():
            raise ValueError("zero base element")
        i = self._index.get(a)
        if i is not None:
            return i
        if logv is None:
            logv = log_embedding(a, self.precision)
        self.elements.append(a)
        self.logs.append(logv)
        self.residues.append([None] * len(self.primes))
        i = len(self.elements) - 1
        self._index[a] = i
        return i

    def add_opaque(self, logv: LogVector, residues) -> int:
        residues = [tuple(r) for r in residues]
        if len(residues) != len(self.primes):
            raise ValueError("one residue vector per split prime expected")
        self.elements.append(None)
        self.logs.append(logv)
        self.residues.append(residues)
        return len(self.elements) - 1

    def add_primes(self, primes):
        for sp in primes:
            if any(sp.q == t.q for t in self.primes):
                continue
            for i, a in enumerate(self.elements):
                if a is None:
                    raise CapacityError("cannot extend split primes of an opaque generator table")
            self.primes.append(sp)
            for r in self.residues:
                r.append(None)

    def residue(self, i: int, j: int) -> tuple:
        r = self.residues[i][j]
        if r is None:
            r = self.primes[j].evaluate(self.elements[i])
            self.residues[i][j] = r
        return r


@dataclass
class ProductForm:
    """prod table[i]^terms[i], never expanded."""

    table: GeneratorTable
    terms: dict = field(default_factory=dict)

    @staticmethod
    def of(table: GeneratorTable, a: CycloElement, e: int = 1) -> "ProductForm":
        return ProductForm(table, {table.add(a): e} if e else {})

    def copy(self) -> "ProductForm":
        return ProductForm(self.table, dict(self.terms))

    def mul(self, other: "ProductForm", k: int = 1) -> "ProductForm":
        """self * other^k (both over the same table)."""
        if other.table is not self.table:
            raise ValueError("product forms over different tables")
        out = dict(self.terms)
        for i, e in other.terms.items():
            v = out.get(i, 0) + k * e
            if v:
                out[i] = v
            else:
                out.pop(i, None)
        return ProductForm(self.table, out)

    def times(self, i: int, e: int) -> "ProductForm":
        out = dict(self.terms)
        v = out.get(i, 0) + e
        if v:
            out[i] = v
        else:
            out.pop(i, None)
        return ProductForm(self.table, out)

    def log(self) -> LogVector:
        items = sorted(self.terms.items())
        if not items:
            c = self.table.conductor
            return LogVector.zero(len(c.embedding_exponents()), self.table.precision)
        return LogVector.combine([e for _, e in items], [self.table.logs[i] for i, _ in items])

    def residues(self, j: int) -> tuple:
        sp = self.table.primes[j]
        q = sp.q
        acc = [1] * len(sp.roots)
        for i, e in self.terms.items():
            r = self.table.residue(i, j)
            for t, x in enumerate(r):
                if x == 0:
                    if e < 0:
                        raise ResidueCollision(f"base {i} vanishes at split prime {q}")
                    acc[t] = 0
                else:
                    acc[t] = acc[t] * pow(x, e, q) % q
        return tuple(acc)

    def expand(self) -> tuple:
        """Exact (numerator, denominator) by direct multiplication; desk scale only."""
        from .cyclo import adjugate
        c = self.table.conductor
        num = CycloElement.one(c)
        den = 1
        for i, e in sorted(self.terms.items()):
            a = self.table.elements[i]
            if a is None:
                raise ValueError("opaque base element")
            if e > 0:
                num = num * a ** e
            else:
                adj = adjugate(a)
                nb = (a * adj).coeffs[0]
                num = num * adj ** (-e)
                den *= nb ** (-e)
        if den < 0:
            num, den = -num, -den
        g = 0
        for x in num.coeffs:
            g = math.gcd(g, x)
        g = math.gcd(g, den)
        if g > 1:
            num = CycloElement(c, tuple(x // g for x in num.coeffs))
            den //= g
        return num, den

    def to_text(self) -> str:
        return " ".join(f"{i}:{e}" for i, e in sorted(self.terms.items()))


def reconstruct_form(pf: ProductForm, capacity_bits: float | None = None,
                     extra_primes: bool = True) -> CycloElement:
    """Exact coefficients of an integral product form by CRT over the split primes.

    The coefficient bound comes from the log vector.  ``capacity_bits``
    overrides it.  Primes are added to the table when it can grow.  Any prime
    left over afterwards re-checks the result.
    """
    table = pf.table
    c = table.conductor
    if capacity_bits is None:
        lb = coefficient_log_bound(c, pf.log().values)
        capacity_bits = lb / math.log(2)
    need = capacity_bits + 2  # |a| < 2^need / 2 with a margin for rounding
    have = 0.0
    used = 0
    while have < need:
        if used == len(table.primes):
            if not extra_primes:
                raise CapacityError(
                    f"split primes hold {have:.1f} bits, {need:.1f} needed", need, have)
            start = max(sp.q for sp in table.primes) + 1 if table.primes else SPLIT_PRIME_START
            table.add_primes(find_split_primes(c, 1, start))
        have += math.log2(table.primes[used].q)
        used += 1
    mod = 1
    coeffs = [0] * c.n
    for j in range(used):
        sp = table.primes[j]
        cj = sp.interpolate(pf.residues(j))
        # incremental CRT
        inv = pow(mod, -1, sp.q)
        for i in range(c.n):
            t = ((cj[i] - coeffs[i]) * inv) % sp.q
            coeffs[i] += mod * t
        mod *= sp.q
    half = mod // 2
    coeffs = [x - mod if x > half else x for x in coeffs]
    a = CycloElement(c, tuple(coeffs))
    for j in range(used, len(table.primes)):
        if table.primes[j].evaluate(a) != pf.residues(j):
            raise AssertionError("reconstruction disagrees with a check prime")
    return a


# ---------------------------------------------------------------------------
# size reduction by cyclotomic units
# ---------------------------------------------------------------------------

@lru_cache(maxsize=16)
def unit_basis(c: Conductor):
    """Independent cyclotomic units and their log vectors (float rows)."""
    r = c.unit_rank
    gens = cyclotomic_unit_generators(c)
    if r == 0:
        return (), np.zeros((0, len(c.embedding_exponents())))
    logs = [log_embedding(u).values for u in gens]
    if len(gens) > r:
        idx = sorted(_pick_frame(logs, r))
        gens = [gens[i] for i in idx]
        logs = [logs[i] for i in idx]
    return tuple(gens), np.array(logs)


def decode_units(c: Conductor, logv, search: bool = False, max_nodes: int = 200_000) -> list:
    """Exponents x with sum x_j Log(u_j) close to logv.

    Plain nearest plane by default.  With ``search`` the lattice points
    within a multiple of the nearest-plane distance are enumerated too, and
    the one leaving the smallest sum of squared embeddings is kept.
    """
    units, B = unit_basis(c)
    if not units:
        return []
    t = np.asarray(logv, dtype=float)
    tc = t - t.mean()
    xb = latred.babai_nearest_plane(B, tc)
    if not search:
        return xb
    d2 = float(np.sum((tc - np.array(xb, dtype=float) @ B) ** 2))
    # wider balls only pay off while the enumeration stays within budget
    factor = 1.5 if len(units) < 24 else 1.0
    cands = [list(xb)] + latred.close_vectors(B, tc, d2 * factor, max_nodes)
    return min(cands, key=lambda x: _embedding_weight(t, B, x))


def _embedding_weight(t, B, x) -> float:
    # log of sum over conjugate pairs of |sigma(g / u^x)|^2
    return float(np.logaddexp.reduce(2 * (t - np.array(x, dtype=float) @ B)))


def size_reduce(pf: ProductForm, search: bool = False) -> tuple:
    """pf / prod u_j^x_j with x from decode_units; returns (form, x)."""
    c = pf.table.conductor
    x = decode_units(c, pf.log().values, search)
    units, _ = unit_basis(c)
    out = pf
    for u, e in zip(units, x):
        if e:
            out = out.times(pf.table.add(u), -e)
    return out, x


# ---------------------------------------------------------------------------
# the store
# ---------------------------------------------------------------------------

def block_split(H, i0: int) -> int:
    """Smallest i >= i0 with H = (H1 0 / H2 I) for an i x i block H1."""
    m = len(H)
    i = m
    while i > i0:
        t = i - 1
        if H[t][t] != 1 or any(H[s][t] for s in range(t + 1, m)):
            break
        i -= 1
    return i


@dataclass
class PrecompStore:
    conductor: Conductor
    fb: FactorBase
    hnf: list
    i0: int
    table: GeneratorTable
    beta: list  # table index of beta_i for each HNF row
    divisors: tuple
    h: int
    certified: bool
    margin: float
    seed: object
    version: int = FORMAT_VERSION
    stats: dict = field(default_factory=dict)

    @property
    def bound(self) -> int:
        return self.fb.bound

    @property
    def small_primes(self):
        return self.fb.primes[: self.i0]

    def h1(self):
        return [row[: self.i0] for row in self.hnf[: self.i0]]

    def capacity_bits(self) -> float:
        return sum(math.log2(sp.q) for sp in self.table.primes)


def precompute(c: Conductor, B: int, split_primes=None, seed=0, *, cg: ClassGroupResult | None = None,
               capacity_bits: int | None = None, verify_rows: int | None = None,
               precision: int = 40, **cg_kwargs) -> PrecompStore:
    """Build a store: class group, row generators beta_i, residues and logs.

    ``split_primes`` is a list of primes q = 1 mod N (or a count).  By
    default enough primes are taken for ``capacity_bits`` (64 + 8n).
    ``verify_rows`` limits how many rows are expanded and checked exactly
    against their factorization (all by default).
    """
    if cg is None:
        cg = compute_class_group(c, B, seed=seed, **cg_kwargs)
    fb = cg.fb
    H = cg.hnf
    U = cg.transform
    m = len(fb)
    if capacity_bits is None:
        capacity_bits = 64 + 8 * c.n
    rels = cg.relations
    # precision for exact-enough log combinations
    ubits = max((abs(x).bit_length() for row in U for x in row), default=0)
    prec = max(precision, ubits + (len(rels)).bit_length() + 40)
    work = GeneratorTable(c, [], prec)
    alpha_idx = [work.add(r.generator) for r in rels]
    units, _ = unit_basis(c)
    for u in units:
        work.add(u)
    # split primes: skip any at which a base element vanishes
    if isinstance(split_primes, int):
        primes = find_split_primes(c, split_primes)
    elif split_primes:
        primes = [SplitPrime.make(int(q), c) for q in split_primes]
    else:
        primes = []
        bits = 0.0
        start = SPLIT_PRIME_START
        while bits < capacity_bits:
            sp = find_split_primes(c, 1, start)[0]
            start = sp.q + 1
            if all(0 not in sp.evaluate(a) for a in work.elements):
                primes.append(sp)
                bits += math.log2(sp.q)
    for sp in primes:
        if any(0 in sp.evaluate(a) for a in work.elements):
            raise ResidueCollision(f"a base element vanishes at split prime {sp.q}")
    work.add_primes(primes)
    forms = []
    for i in range(m):
        pf = ProductForm(work, {alpha_idx[t]: int(e) for t, e in enumerate(U[i]) if e})
        pf, _x = size_reduce(pf)
        forms.append(pf)
    nverify = m if verify_rows is None else min(verify_rows, m)
    checked = 0
    for i in range(nverify):
        beta = reconstruct_form(forms[i], extra_primes=False)
        if not certify_factorization(beta, fb.primes, H[i]):
            raise AssertionError(f"row {i}: beta does not generate its HNF row")
        checked += 1
    table = GeneratorTable(c, primes, precision)
    beta_idx = []
    for pf in forms:
        lv = pf.log()
        # store logs at the table's precision
        sh = lv.precision - precision
        lv = LogVector(tuple(x >> sh for x in lv.fixed), precision) if sh > 0 else lv
        beta_idx.append(table.add_opaque(lv, [pf.residues(j) for j in range(len(primes))]))
    small = min(bach_bound(c), fb.bound)
    i0 = sum(1 for P in fb if P.norm <= small)
    i0 = block_split(H, i0)
    return PrecompStore(c, fb, [list(r) for r in H], i0, table, beta_idx, cg.divisors, cg.h,
                        cg.certified, cg.margin, seed,
                        stats={"verified_rows": checked, "relations": len(rels)})


def rewrite_to_small(y, store: PrecompStore):
    """Move exponents on primes past i0 onto the small primes using H's unit rows.

    Returns (y_small, terms) with prod P^y = prod (beta_j)^terms[j] * prod_{i<i0} P_i^y_small[i].
    """
    H = store.hnf
    m = len(H)
    if len(y) != m:
        raise KeyError("exponent vector does not match the store's factor base")
    y = list(y)
    terms = {}
    for j in range(m - 1, store.i0 - 1, -1):
        e = y[j]
        if e:
            terms[j] = e
            row = H[j]
            for t in range(j + 1):
                if row[t]:
                    y[t] -= e * row[t]
    assert not any(y[store.i0:])
    return y[: store.i0], terms


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _log_to_text(lv: LogVector) -> str:
    return f"{lv.precision}:" + ",".join(map(str, lv.fixed))


def _log_from_text(s: str) -> LogVector:
    p, _, body = s.partition(":")
    return LogVector(tuple(int(x) for x in body.split(",")), int(p))


def store_to_text(store: PrecompStore) -> str:
    c = store.conductor
    lines = [
        f"cyclopip-store {store.version}",
        f"conductor {c.N}",
        f"bound {store.fb.bound}",
        f"degree_one_only {int(store.fb.degree_one_only)}",
        f"seed {store.seed!r}",
        f"certified {int(store.certified)}",
        f"margin {store.margin!r}",
        f"h {store.h}",
        "divisors " + " ".join(map(str, store.divisors)),
        f"i0 {store.i0}",
        f"precision {store.table.precision}",
        "split_primes " + " ".join(str(sp.q) for sp in store.table.primes),
        f"factor_base {len(store.fb)}",
    ]
    lines += [prime_to_text(P) for P in store.fb]
    lines.append(f"hnf {len(store.hnf)}")
    lines += [" ".join(map(str, r)) for r in store.hnf]
    lines.append(f"generators {len(store.beta)}")
    for i in store.beta:
        res = ";".join(",".join(map(str, r)) for r in store.table.residues[i])
        lines.append(_log_to_text(store.table.logs[i]) + " | " + res)
    body = "\n".join(lines) + "\n"
    digest = hashlib.sha256(body.encode()).hexdigest()
    return body + f"sha256 {digest}\n"


def store_from_text(text: str) -> PrecompStore:
    body, sep, tail = text.rpartition("sha256 ")
    if not sep or not tail.strip():
        raise StoreError("missing checksum line (truncated store?)")
    if hashlib.sha256(body.encode()).hexdigest() != tail.strip():
        raise StoreError("checksum mismatch")
    lines = body.split("\n")
    pos = 0

    def take(key):
        nonlocal pos
        line = lines[pos]
        pos += 1
        k, _, v = line.partition(" ")
        if k != key:
            raise StoreError(f"expected {key!r}, found {k!r}")
        return v

    magic = lines[pos].split()
    pos += 1
    if len(magic) != 2 or magic[0] != "cyclopip-store":
        raise StoreError("not a store file")
    if int(magic[1]) != FORMAT_VERSION:
        raise StoreError(f"unsupported store version {magic[1]}")
    import ast
    c = Conductor(int(take("conductor")))
    bound = int(take("bound"))
    d1 = bool(int(take("degree_one_only")))
    seed = ast.literal_eval(take("seed"))
    certified = bool(int(take("certified")))
    margin = float(take("margin"))
    h = int(take("h"))
    divisors = tuple(int(x) for x in take("divisors").split())
    i0 = int(take("i0"))
    precision = int(take("precision"))
    qs = [int(x) for x in take("split_primes").split()]
    m = int(take("factor_base"))
    primes = [prime_from_text(lines[pos + i]) for i in range(m)]
    pos += m
    fb = FactorBase(c, bound, primes, d1)
    k = int(take("hnf"))
    H = [[int(x) for x in lines[pos + i].split()] for i in range(k)]
    pos += k
    g = int(take("generators"))
    table = GeneratorTable(c, [SplitPrime.make(q, c) for q in qs], precision)
    beta = []
    for i in range(g):
        left, _, right = lines[pos + i].partition(" | ")
        res = [tuple(int(x) for x in part.split(",")) for part in right.split(";")] if qs else []
        beta.append(table.add_opaque(_log_from_text(left), res))
    pos += g
    return PrecompStore(c, fb, H, i0, table, beta, divisors, h, certified, margin, seed)


def store_save(store: PrecompStore, path) -> None:
    with open(path, "w") as fh:
        fh.write(store_to_text(store))


def store_load(path) -> PrecompStore:
    with open(path) as fh:
        return store_from_text(fh.read())
