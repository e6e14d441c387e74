"""Relation search: factor bases, samplers, smoothness tests, Galois orbits.

A relation is an element alpha with (alpha) a power product of factor-base
primes.  Every relation is checked twice before it is accepted: once by the
anti-uniformizer valuations that produced its exponent vector, and once by
:func:`cyclopip.ideal.certify_factorization`, which uses only HNF membership
in prime powers and a Bareiss determinant for the norm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import sympy

from .cyclo import (
    Conductor,
    CycloElement,
    cyclotomic_unit,
    discriminant,
    galois_apply,
    norm_many,
)
from .ideal import (
    PrimeIdeal,
    certify_factorization,
    factor_element,
    galois_prime,
    primes_above,
    primes_by_rational,
)

TRIAL_LIMIT = 1 << 20


def bach_bound(c: Conductor) -> int:
    """ceil(12 ln^2 |disc|)."""
    return math.ceil(12 * math.log(discriminant(c)) ** 2)


# ---------------------------------------------------------------------------
# factor base
# ---------------------------------------------------------------------------

@dataclass
class FactorBase:
    """All prime ideals of norm at most ``bound``, sorted by (norm, p, poly)."""

    conductor: Conductor
    bound: int
    primes: list
    degree_one_only: bool = False
    index: dict = field(init=False, repr=False)
    by_p: dict = field(init=False, repr=False)
    primorial: int = field(init=False, repr=False)

    def __post_init__(self):
        self.primes = sorted(self.primes)
        self.index = {P: i for i, P in enumerate(self.primes)}
        self.by_p = primes_by_rational(self.primes)
        self.primorial = math.prod(self.by_p)
        self._perms = {}

    @classmethod
    def build(cls, c: Conductor, bound: int, degree_one_only: bool = False) -> "FactorBase":
        primes = []
        for p in sympy.primerange(2, bound + 1):
            primes.extend(primes_above(c, p, bound, degree_one_only))
        return cls(c, bound, primes, degree_one_only)

    def __len__(self):
        return len(self.primes)

    def __getitem__(self, i) -> PrimeIdeal:
        return self.primes[i]

    def __iter__(self):
        return iter(self.primes)

    def rational_primes(self):
        return sorted(self.by_p)

    def restrict(self, bound: int) -> "FactorBase":
        return FactorBase(self.conductor, bound, [P for P in self.primes if P.norm <= bound],
                          self.degree_one_only)

    def galois_perm(self, t: int):
        """perm[i] = index of sigma_t(P_i), or -1 when the image is not in the base."""
        perm = self._perms.get(t)
        if perm is None:
            perm = []
            for P in self.primes:
                Q = galois_prime(P, t)
                perm.append(self.index.get(Q, -1))
            self._perms[t] = perm
        return perm

    def is_smooth_norm(self, x: int) -> bool:
        x = abs(x)
        while x > 1:
            g = math.gcd(x, self.primorial)
            if g == 1:
                return False
            x //= g
        return True


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def make_rng(seed, stream: int = 0) -> np.random.Generator:
    """Independent, reproducible stream ``stream`` derived from ``seed``."""
    ss = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.PCG64(ss.spawn(stream + 1)[stream]))


def sample_random_element(c: Conductor, A: int, rng: np.random.Generator) -> CycloElement:
    """Coefficients i.i.d. uniform on [-A, A]."""
    if A < 1:
        raise ValueError("A must be positive")
    coeffs = rng.integers(-A, A + 1, size=c.n)
    return CycloElement(c, tuple(int(x) for x in coeffs))


def sample_sparse_element(c: Conductor, weight: int, A: int, rng: np.random.Generator) -> CycloElement:
    """1 plus (weight - 1) further monomials with nonzero coefficients in [-A, A]."""
    n = c.n
    weight = max(1, min(weight, n))
    pos = rng.choice(np.arange(1, n), size=weight - 1, replace=False)
    coeffs = [0] * n
    coeffs[0] = 1
    for i in pos:
        v = int(rng.integers(1, A + 1))
        coeffs[int(i)] = v if rng.integers(2) else -v
    return CycloElement(c, tuple(coeffs))


def sample_unit_variation(c: Conductor, a: int, h: int, rng: np.random.Generator) -> CycloElement:
    """u_a plus h random signed monomials +-zeta^i."""
    if math.gcd(a, c.N) != 1 or a % c.N == 1:
        raise ValueError(f"invalid unit index {a}")
    if h < 0:
        raise ValueError("h must be non-negative")
    coeffs = [0] * c.N
    for i in range(a % c.N):
        coeffs[i] = 1
    for _ in range(h):
        i = int(rng.integers(c.N))
        coeffs[i] += 1 if rng.integers(2) else -1
    return CycloElement.from_list(c, coeffs)


def sample_hamming(c: Conductor, weight: int, rng: np.random.Generator) -> CycloElement:
    """A random 0/1 coefficient vector of the given Hamming weight."""
    pos = rng.choice(c.n, size=min(weight, c.n), replace=False)
    coeffs = [0] * c.n
    for i in pos:
        coeffs[int(i)] = 1
    return CycloElement(c, tuple(coeffs))


# ---------------------------------------------------------------------------
# smoothness
# ---------------------------------------------------------------------------

_small_primes_cache = {}


def _primes_upto(B):
    ps = _small_primes_cache.get(B)
    if ps is None:
        ps = list(sympy.primerange(2, B + 1))
        _small_primes_cache[B] = ps
    return ps


def smooth_factor(x: int, B: int) -> dict | None:
    """Prime factorization of x if every prime factor is at most B, else None."""
    if x == 0:
        raise ValueError("zero has no factorization")
    x = abs(x)
    out = {}
    for p in _primes_upto(min(B, TRIAL_LIMIT)):
        if x == 1:
            break
        if x % p == 0:
            k = 0
            while x % p == 0:
                x //= p
                k += 1
            out[p] = k
    if x == 1:
        return out
    if B <= TRIAL_LIMIT:
        return None
    stack = [x]
    while stack:
        y = stack.pop()
        if y == 1:
            continue
        if sympy.isprime(y):
            if y > B:
                return None
            out[y] = out.get(y, 0) + 1
            continue
        d = sympy.pollard_rho(y) or sympy.pollard_pm1(y)
        if not d:
            d = min(sympy.factorint(y))
        stack.extend([d, y // d])
    return dict(sorted(out.items()))


# ---------------------------------------------------------------------------
# relations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Relation:
    exponents: tuple
    generator: CycloElement

    def to_text(self) -> str:
        from .cyclo import to_text
        return " ".join(map(str, self.exponents)) + " | " + to_text(self.generator)

    @staticmethod
    def from_text(s: str) -> "Relation":
        from .cyclo import from_text
        left, _, right = s.partition("|")
        return Relation(tuple(int(x) for x in left.split()), from_text(right))


@dataclass
class RelationStats:
    """Counters for the relation search; shared by whoever drives it."""

    samples: int = 0
    smooth: int = 0
    accepted: int = 0
    orbit_members: int = 0
    duplicates: int = 0
    certified: int = 0
    rejected: int = 0

    def as_dict(self):
        return dict(self.__dict__)


def _certify(a: CycloElement, exps, fb: FactorBase, stats: RelationStats | None) -> bool:
    ok = certify_factorization(a, fb.primes, exps)
    if stats is not None:
        if ok:
            stats.certified += 1
        else:
            stats.rejected += 1
    return ok


def try_relation(a: CycloElement, fb: FactorBase, a_norm: int | None = None,
                 stats: RelationStats | None = None) -> Relation | None:
    """A verified relation for a, or None when (a) is not smooth over fb."""
    if a.is_zero():
        raise ValueError("zero element")
    if a_norm is None:
        a_norm = norm_many([a])[0]
    if not fb.is_smooth_norm(a_norm):
        return None
    exps = factor_element(a, fb.primes, a_norm, fb.by_p)
    if exps is None:
        return None
    if not _certify(a, exps, fb, stats):
        return None
    return Relation(tuple(exps), a)


def galois_orbit(r: Relation, fb: FactorBase, stats: RelationStats | None = None):
    """Verified conjugate relations sigma_t(r) for t != 1, deduplicated."""
    c = fb.conductor
    seen = {r.exponents}
    out = []
    for t in c.units_mod()[1:]:
        perm = fb.galois_perm(t)
        exps = [0] * len(fb)
        ok = True
        for i, e in enumerate(r.exponents):
            if e:
                j = perm[i]
                if j < 0:
                    ok = False
                    break
                exps[j] = e
        if not ok:
            continue
        key = tuple(exps)
        if key in seen:
            if stats is not None:
                stats.duplicates += 1
            continue
        seen.add(key)
        g = galois_apply(r.generator, t)
        if not _certify(g, exps, fb, stats):
            continue
        if stats is not None:
            stats.orbit_members += 1
        out.append(Relation(key, g))
    return out


@dataclass
class SamplerConfig:
    """How candidate elements are drawn.

    ``kind`` is ``"dense"`` (uniform on [-A, A]^n), ``"sparse"`` (few nonzero
    monomials) or ``"unitvar"`` (variations around cyclotomic units); ``auto``
    picks dense for small degree and sparse otherwise.
    """

    kind: str = "auto"
    A: int = 1
    weight: int = 4
    unit_h: int = 1

    def resolved(self, c: Conductor) -> str:
        if self.kind != "auto":
            return self.kind
        return "dense" if c.n <= 12 else "sparse"

    def dense_bound(self, c: Conductor) -> int:
        """A, widened in tiny degree so that the sample space is not exhausted."""
        if self.kind != "auto":
            return self.A
        A = self.A
        while (2 * A + 1) ** c.n < 10_000:
            A += 1
        return A


def draw(c: Conductor, cfg: SamplerConfig, rng, widen: int = 0) -> CycloElement:
    kind = cfg.resolved(c)
    if kind == "dense":
        return sample_random_element(c, cfg.dense_bound(c), rng)
    if kind == "sparse":
        w = int(rng.integers(2, min(cfg.weight + widen, c.n) + 1))
        return sample_sparse_element(c, w, cfg.A, rng)
    if kind == "unitvar":
        from .cyclo import unit_indices
        idx = unit_indices(c)
        a = int(idx[int(rng.integers(len(idx)))]) if idx else 1
        if a == 1:
            return sample_random_element(c, cfg.A, rng)
        return sample_unit_variation(c, a, cfg.unit_h, rng)
    raise ValueError(f"unknown sampler kind {kind!r}")


# process-wide count of candidates drawn by any RelationSearch
_SAMPLES_DRAWN = [0]


def samples_drawn() -> int:
    return _SAMPLES_DRAWN[0]


class RelationSearch:
    """Append-only accumulator of verified relations (with Galois orbits)."""

    def __init__(self, fb: FactorBase, seed, cfg: SamplerConfig | None = None,
                 orbits: bool = True, batch: int = 256, stream: int = 0):
        self.fb = fb
        self.cfg = cfg or SamplerConfig()
        self.orbits = orbits
        self.batch = batch
        self.rng = make_rng(seed, stream)
        self.relations: list = []
        self.stats = RelationStats()
        self._seen = set()
        # extra sparse weight, raised whenever a whole batch brings nothing new
        self.widen = 0

    def add(self, r: Relation) -> bool:
        if r.exponents in self._seen:
            self.stats.duplicates += 1
            return False
        self._seen.add(r.exponents)
        self.relations.append(r)
        return True

    def _add_with_orbit(self, r: Relation):
        if not self.add(r):
            return
        self.stats.accepted += 1
        if self.orbits:
            for s in galois_orbit(r, self.fb, self.stats):
                if s.exponents not in self._seen:
                    self._seen.add(s.exponents)
                    self.relations.append(s)

    def collect(self, target: int, max_samples: int | None = None):
        """Draw candidates until at least ``target`` relations are stored."""
        c = self.fb.conductor
        if max_samples is None:
            max_samples = 2000 * target + 100_000
        drawn = 0
        while len(self.relations) < target:
            if drawn >= max_samples:
                raise RuntimeError(
                    f"relation budget exhausted: {len(self.relations)}/{target} after {drawn} samples")
            before = len(self.relations)
            elems = []
            while len(elems) < self.batch:
                a = draw(c, self.cfg, self.rng, self.widen)
                if not a.is_zero():
                    elems.append(a)
            drawn += len(elems)
            self.stats.samples += len(elems)
            _SAMPLES_DRAWN[0] += len(elems)
            norms = norm_many(elems)
            for a, na in zip(elems, norms):
                if not self.fb.is_smooth_norm(na):
                    continue
                self.stats.smooth += 1
                r = try_relation(a, self.fb, na, self.stats)
                if r is not None:
                    self._add_with_orbit(r)
                if len(self.relations) >= target:
                    break
            if len(self.relations) == before and self.cfg.weight + self.widen < c.n:
                self.widen += 1
        return self.relations


# ---------------------------------------------------------------------------
# norm-size benchmark
# ---------------------------------------------------------------------------

def table1_benchmark(c: Conductor, weights, trials: int, seed=0):
    """Rows (weight, mean log2|N| of random 0/1 vectors, mean log2|N| of u_w + zeta^i)."""
    if trials < 1:
        raise ValueError("trials must be positive")
    rows = []
    for w in weights:
        rng = make_rng(seed, w)
        rand = [sample_hamming(c, w, rng) for _ in range(trials)]
        var = []
        a = w if math.gcd(w, c.N) == 1 else w + 1
        while math.gcd(a, c.N) != 1:
            a += 1
        u = cyclotomic_unit(c, a)
        while len(var) < trials:
            i = int(rng.integers(c.n))
            sign = 1 if rng.integers(2) else -1
            coeffs = list(u.coeffs)
            coeffs[i] += sign
            e = CycloElement(c, tuple(coeffs))
            if not e.is_zero():
                var.append(e)
        r_logs = [math.log2(abs(x)) for x in norm_many(rand)]
        v_logs = [math.log2(abs(x)) for x in norm_many(var)]
        rows.append((w, sum(r_logs) / len(r_logs), sum(v_logs) / len(v_logs)))
    return rows


def table1_csv(rows) -> str:
    lines = ["weight,random_mean,unitvar_mean"]
    lines += [f"{w},{r:.2f},{u:.2f}" for w, r, u in rows]
    return "\n".join(lines) + "\n"
