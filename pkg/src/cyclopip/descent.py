"""Smooth decompositions of ideals by lattice reduction (the q-descent).

Short elements are taken from the sublattice spanned by the first k rows of
an ideal's lower HNF, which only involves 1, zeta, ..., zeta^(k-1).  A
short alpha in I gives (alpha) = I * C with C of small norm; when C factors
over small primes the class of I is rewritten over those primes.  Large
primes left over are pushed down through a list of decreasing stage bounds.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import latred
from .cyclo import Conductor, CycloElement, discriminant, norm
from .ideal import (
    Ideal,
    PrimeIdeal,
    element_valuation,
    ideal_from_generator,
    ideal_inverse,
    ideal_mul,
    ideal_pow,
    prime_ideal,
    prime_to_text,
    primes_above,
    valuation,
)
from .relations import FactorBase, bach_bound, make_rng, smooth_factor

log = logging.getLogger(__name__)


class DescentError(RuntimeError):
    """A descent stage ran out of trials.  ``partial`` holds the work so far."""

    def __init__(self, msg, stats=None, partial=None):
        super().__init__(msg)
        self.stats = stats or {}
        self.partial = partial


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------

@dataclass
class DescentParams:
    """Shape of the reduction used in each round.

    ``k`` is the sublattice dimension and ``l`` the BKZ block size.  When they
    are not given they follow k = n^(1/2+eps) (HKZ) or
    k = n^min(4a-1, b+2a-1-eps), l = n^a (BKZ), clamped to 2 <= l <= k <= n.
    """

    eps: float = 0.05
    a: float = 0.45
    b: float = 1.0
    mode: str = "BKZ"
    k: int | None = None
    l: int | None = None
    A: int = 2
    stages: list | None = None
    max_trials: int = 2000
    randomize: int = 3
    candidates: int = 8
    enforce_window: bool = True

    def window_violations(self):
        out = []
        if self.mode != "BKZ":
            return out
        a, b, e = self.a, self.b, self.eps
        if not 2 - 3 * a + 2 * e <= b <= 7 * a - 2:
            out.append(f"b = {b} outside [{2 - 3 * a + 2 * e:.4g}, {7 * a - 2:.4g}]")
        if not 2 / 5 + e / 5 <= a <= 1 / 2:
            out.append(f"a = {a} outside [{2 / 5 + e / 5:.4g}, 0.5]")
        return out

    def validate(self):
        if self.mode not in ("HKZ", "BKZ"):
            raise ValueError(f"unknown reduction mode {self.mode!r}")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.A < 1 or self.max_trials < 1:
            raise ValueError("A and max_trials must be positive")
        bad = self.window_violations()
        if bad:
            msg = "descent parameters outside the admissible window: " + "; ".join(bad)
            if self.enforce_window:
                raise ValueError(msg)
            warnings.warn(msg, stacklevel=2)
        return self

    def block(self, n: int) -> int:
        if self.l is not None:
            l = self.l
        else:
            l = round(n ** self.a)
        return max(2, min(l, n))

    def dimension(self, n: int, b: float | None = None) -> int:
        if self.k is not None:
            k = self.k
        elif self.mode == "HKZ":
            k = round(n ** (0.5 + self.eps))
        else:
            b = self.b if b is None else b
            k = round(n ** min(4 * self.a - 1, b + 2 * self.a - 1 - self.eps))
        lo = self.block(n) if self.mode == "BKZ" else 2
        return max(min(lo, n), min(k, n))


# ---------------------------------------------------------------------------
# short elements
# ---------------------------------------------------------------------------

def sublattice(I: Ideal, k: int):
    """The k x k leading block of I's HNF: a basis of I cap (Z + ... + Z zeta^(k-1))."""
    n = I.n
    if not 1 <= k <= n:
        raise ValueError(f"k = {k} outside [1, {n}]")
    if not I.is_integral:
        raise ValueError("integral ideal expected")
    return [list(r[:k]) for r in I.basis[:k]]


def sublattice_det(I: Ideal, k: int) -> int:
    return math.prod(I.basis[i][i] for i in range(k))


def reduce_sublattice(I: Ideal, k: int, mode: str = "BKZ", l: int = 2):
    rows = sublattice(I, k)
    if mode == "HKZ":
        return latred.hkz(rows)
    if mode == "BKZ":
        return latred.bkz(rows, l) if l >= 2 else latred.lll(rows)
    if mode == "LLL":
        return latred.lll(rows)
    raise ValueError(f"unknown reduction mode {mode!r}")


def _embed(c: Conductor, v) -> CycloElement:
    return CycloElement(c, tuple(int(x) for x in v) + (0,) * (c.n - len(v)))


def short_element(I: Ideal, k: int, mode: str = "BKZ", l: int = 2) -> CycloElement:
    """First vector of the reduced sublattice, as an element of I."""
    red = reduce_sublattice(I, k, mode, l)
    alpha = _embed(I.conductor, red[0])
    if not I.contains(alpha):
        raise AssertionError("reduced vector left the ideal")
    return alpha


def lemma_hkz_log_bound(n: int, k: int, ideal_norm: int) -> float:
    """ln of n^n * N(I)^(n/k)."""
    return n * math.log(n) + n / k * math.log(ideal_norm)


def lemma_bkz_log_bound(n: int, k: int, l: int, ideal_norm: int, slack: float = 2.0) -> float:
    """ln of n^(n/2) * l^(slack * kn/(2l)) * N(I)^(n/k)."""
    return (n / 2) * math.log(n) + slack * k * n / (2 * l) * math.log(l) + n / k * math.log(ideal_norm)


def initial_norm_log_bound(c: Conductor) -> float:
    """ln of 2^(n^(3/2) log2(n) / 2) * sqrt|Delta|."""
    n = c.n
    return n ** 1.5 * math.log2(n) / 2 * math.log(2) + 0.5 * math.log(abs(discriminant(c)))


def _candidates(c: Conductor, red, count: int):
    """Short elements from a reduced basis: its rows, then sums and differences."""
    seen = set()
    out = []
    rows = [tuple(r) for r in red]
    pool = list(rows)
    m = min(len(rows), 4)
    for i in range(m):
        for j in range(i + 1, m):
            pool.append(tuple(x + y for x, y in zip(rows[i], rows[j])))
            pool.append(tuple(x - y for x, y in zip(rows[i], rows[j])))
    pool.sort(key=latred.norm2)
    for v in pool:
        if not any(v):
            continue
        key = v if next(x for x in v if x) > 0 else tuple(-x for x in v)
        if key in seen:
            continue
        seen.add(key)
        out.append(_embed(c, v))
        if len(out) >= count:
            break
    return out


# ---------------------------------------------------------------------------
# smoothness of (alpha) / I
# ---------------------------------------------------------------------------

def cofactor(alpha: CycloElement, I_norm: int, vI, bound: int, degree_one_only: bool = False):
    """Factor C = (alpha)/I over primes of norm <= bound, for alpha in I.

    ``vI(P)`` returns v_P(I).  Returns {P: v_P(C)} or None when C is not
    smooth.  Primes of I whose rational prime does not divide N(C) are
    matched exactly by alpha, since v_P(alpha) >= v_P(I) everywhere and the
    p-parts of the norms agree.
    """
    na = abs(norm(alpha))
    cn, rem = divmod(na, I_norm)
    if rem:
        raise AssertionError("alpha is not in the ideal")
    if cn == 1:
        return {}
    fac = smooth_factor(cn, bound)
    if fac is None:
        return None
    c = alpha.conductor
    out = {}
    for p, k in fac.items():
        got = 0
        for P in primes_above(c, p):
            v = element_valuation(alpha, P) - vI(P)
            if v < 0:
                raise AssertionError("alpha is not in the ideal")
            if v:
                if P.norm > bound or (degree_one_only and P.f != 1):
                    return None
                out[P] = v
                got += v * P.f
        if got != k:
            raise AssertionError("valuations disagree with the norm")
    return out


class _ValuationCache:
    def __init__(self, I: Ideal):
        self.I = I
        self.nI = I.integral_norm()
        self.cache = {}

    def __call__(self, P: PrimeIdeal) -> int:
        if self.nI % P.p:
            return 0
        v = self.cache.get(P)
        if v is None:
            v = valuation(self.I, P)
            self.cache[P] = v
        return v


# ---------------------------------------------------------------------------
# decompositions
# ---------------------------------------------------------------------------

@dataclass
class Decomposition:
    """I = prod (gens[j])^gen_exps[j] * prod primes[i]^exps[i]."""

    conductor: Conductor
    gens: list = field(default_factory=list)
    gen_exps: list = field(default_factory=list)
    primes: list = field(default_factory=list)
    exps: list = field(default_factory=list)
    tree: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    def add_prime(self, P: PrimeIdeal, e: int):
        if e == 0:
            return
        for i, Q in enumerate(self.primes):
            if Q == P:
                self.exps[i] += e
                return
        self.primes.append(P)
        self.exps.append(e)

    def add_gen(self, g: CycloElement, s: int):
        self.gens.append(g)
        self.gen_exps.append(s)

    def compact(self):
        keep = [(P, e) for P, e in zip(self.primes, self.exps) if e]
        self.primes = [P for P, _ in keep]
        self.exps = [e for _, e in keep]
        return self

    def max_norm(self) -> int:
        return max((P.norm for P, e in zip(self.primes, self.exps) if e), default=1)

    def exponent_vector(self, fb: FactorBase):
        y = [0] * len(fb)
        for P, e in zip(self.primes, self.exps):
            if not e:
                continue
            i = fb.index.get(P)
            if i is None:
                raise KeyError(f"prime {P} is not in the factor base")
            y[i] += e
        return y

    def recombine(self) -> Ideal:
        """The ideal this decomposition describes, by exact ideal arithmetic."""
        c = self.conductor
        out = Ideal.unit(c)
        for g, s in zip(self.gens, self.gen_exps):
            out = ideal_mul(out, ideal_pow(ideal_from_generator(g), s))
        for P, e in zip(self.primes, self.exps):
            if e:
                out = ideal_mul(out, ideal_pow(prime_ideal(P), e))
        return out

    def verify(self, I: Ideal) -> bool:
        return self.recombine() == I

    def to_text(self) -> str:
        from .cyclo import to_text
        lines = [f"decomposition N={self.conductor.N}"]
        for g, s in zip(self.gens, self.gen_exps):
            lines.append(f"gen {s} {to_text(g)}")
        for P, e in zip(self.primes, self.exps):
            if e:
                lines.append(f"prime {e} {prime_to_text(P)}")
        for node in self.tree:
            lines.append("node " + " ".join(f"{k}={v}" for k, v in node.items()))
        return "\n".join(lines) + "\n"


def _random_exponents(fb_small, params: DescentParams, rng, trial: int):
    """Sparse random exponents on the small primes; the first trial uses none."""
    if trial == 0 or not fb_small or params.randomize <= 0:
        return {}
    t = min(params.randomize, len(fb_small))
    idx = rng.choice(len(fb_small), size=t, replace=False)
    out = {}
    for i in idx:
        x = int(rng.integers(0, params.A + 1))
        if x:
            out[fb_small[int(i)]] = x
    return out


def _twist(I: Ideal, xs: dict) -> Ideal:
    J = I
    for P, x in sorted(xs.items()):
        J = ideal_mul(J, ideal_pow(prime_ideal(P), x))
    return J


def _search(I: Ideal, vI, fb_small, params: DescentParams, bound: int, rng, n_for_shape: int,
            b: float | None, degree_one_only: bool, stats: dict, route: str = "direct"):
    """Find alpha and exponents with I = (alpha)^s * prod P^e, all P of norm <= bound."""
    c = I.conductor
    n = c.n
    l = params.block(n)
    k = params.dimension(n_for_shape, b) if route == "direct" else n
    mode = params.mode
    for trial in range(params.max_trials):
        stats["trials"] = stats.get("trials", 0) + 1
        xs = _random_exponents(fb_small, params, rng, trial)
        J = _twist(I, xs)
        if route == "direct":
            target, d = J, 1

            def vT(P, xs=xs):
                return vI(P) + xs.get(P, 0)
        else:
            # alpha in c = d * J^-1 gives (alpha) = c * b with b = (alpha) J / d integral
            d = J.basis[0][0]
            inv = ideal_inverse(J)
            target = Ideal.make(c, [[x * d // inv.denominator for x in r] for r in inv.basis])

            def vT(P, xs=xs, d=d):
                vd = 0
                m = d
                while m % P.p == 0:
                    m //= P.p
                    vd += 1
                return vd * P.e - vI(P) - xs.get(P, 0)
        red = reduce_sublattice(target, k, mode, l)
        tn = target.integral_norm()
        for alpha in _candidates(c, red, params.candidates):
            stats["candidates"] = stats.get("candidates", 0) + 1
            C = cofactor(alpha, tn, vT, bound, degree_one_only)
            if C is None:
                continue
            # direct: (alpha) = I * X * C  ->  I = (alpha) * X^-1 * C^-1
            # inverse: (alpha) = d * (I X)^-1 * C  ->  I = (d/alpha) * X^-1 * C
            exps = {}
            for P, x in xs.items():
                exps[P] = exps.get(P, 0) - x
            sign = -1 if route == "direct" else 1
            for P, v in C.items():
                exps[P] = exps.get(P, 0) + sign * v
            gens = [(alpha, 1)] if route == "direct" else [(alpha, -1)]
            if d != 1:
                gens.append((CycloElement.scalar(c, d), 1))
            return gens, {P: e for P, e in exps.items() if e}, {"k": k, "l": l, "trial": trial}
    return None


def small_primes(fb: FactorBase, limit: int | None = None):
    """Primes of the factor base of norm at most min(bound, 12 ln^2 |Delta|)."""
    bb = bach_bound(fb.conductor) if limit is None else limit
    return [P for P in fb if P.norm <= min(bb, fb.bound)]


def descent_round(q: PrimeIdeal, params: DescentParams, fb_small, target_bound: int,
                  seed=0, b: float | None = None, degree_one_only: bool = False):
    """Rewrite the class of q over primes of norm <= target_bound.

    Returns (alpha, exps) with q = (alpha) * prod P^exps[P], verified by
    ideal arithmetic.
    """
    if q.norm <= target_bound:
        raise ValueError("prime is already below the target bound")
    c = q.conductor
    Q = prime_ideal(q)
    rng = make_rng(seed, 7)
    stats = {}

    def vI(P):
        return 1 if P == q else 0

    found = _search(Q, vI, list(fb_small), params, target_bound, rng, c.n, b,
                    degree_one_only, stats)
    if found is None:
        raise DescentError(f"no smooth element for {q} after {params.max_trials} trials", stats)
    gens, exps, info = found
    alpha = gens[0][0]
    if not Q.contains(alpha):
        raise AssertionError("descent element is not in q")
    return alpha, exps, dict(stats, **info)


def initial_decomposition(I: Ideal, fb: FactorBase, params: DescentParams, bound: int,
                          seed=0, route: str = "direct", degree_one_only: bool = False) -> Decomposition:
    """I = (gens) * prod P^e with every P of norm at most ``bound``.

    ``route="inverse"`` reduces in d * I^-1 (d = min(I cap Z)) instead of in I
    itself; both give cofactors of norm about sqrt|Delta| times the
    reduction's approximation factor.
    """
    if not I.is_integral:
        raise ValueError("integral ideal expected")
    c = I.conductor
    dec = Decomposition(c)
    stats = {}
    dec.stats = stats
    if I.is_unit:
        return dec
    vI = _ValuationCache(I)
    # fast path: I already factors over small primes
    fac = smooth_factor(I.integral_norm(), bound)
    if fac is not None:
        ok = True
        exps = {}
        for p, k in fac.items():
            got = 0
            for P in primes_above(c, p):
                v = vI(P)
                if v:
                    if P.norm > bound:
                        ok = False
                    exps[P] = v
                    got += v * P.f
            ok = ok and got == k
        if ok:
            for P, e in sorted(exps.items()):
                dec.add_prime(P, e)
            dec.tree.append({"stage": 0, "route": "direct-factor", "primes": len(exps)})
            return dec
    rng = make_rng(seed, 5)
    small = small_primes(fb)
    found = _search(I, vI, small, params, bound, rng, c.n, None, degree_one_only, stats, route)
    if found is None:
        raise DescentError(f"initial decomposition failed after {params.max_trials} trials",
                           stats, dec)
    gens, exps, info = found
    for g, s in gens:
        dec.add_gen(g, s)
    for P, e in sorted(exps.items()):
        dec.add_prime(P, e)
    dec.tree.append({"stage": 0, "route": route, **info})
    return dec


def full_descent(I: Ideal, fb: FactorBase, params: DescentParams | None = None, seed=0,
                 route: str = "direct", degree_one_only: bool = False, verify: bool = True,
                 partial: Decomposition | None = None) -> Decomposition:
    """Decompose I over the factor base through the stage bounds in ``params.stages``.

    The stage list must decrease and end at (or below) the factor base bound;
    it defaults to the factor base bound alone.  Exponents accumulate across
    rounds.  A partial decomposition from a failed run can be resumed.
    """
    params = (params or DescentParams()).validate()
    c = I.conductor
    stages = list(params.stages) if params.stages else [fb.bound]
    if stages[-1] > fb.bound:
        stages.append(fb.bound)
    if any(x <= y for x, y in zip(stages, stages[1:])):
        raise ValueError("stage bounds must decrease")
    small = small_primes(fb)
    if partial is None:
        dec = initial_decomposition(I, fb, params, stages[0], seed, route, degree_one_only)
    else:
        dec = partial
    rounds = 0
    nst = len(stages)
    for si, bound in enumerate(stages[1:], start=1):
        b = params.b - si * params.eps
        while True:
            todo = [(P, e) for P, e in zip(dec.primes, dec.exps) if e and P.norm > bound]
            if not todo:
                break
            P, e = todo[0]
            try:
                alpha, exps, info = descent_round(P, params, small, bound, (seed, rounds),
                                                  b, degree_one_only)
            except DescentError as exc:
                exc.partial = dec
                raise
            rounds += 1
            # P = (alpha) * prod Q^exps  ->  P^e = (alpha)^e * prod Q^(e*exps)
            dec.add_prime(P, -e)
            dec.add_gen(alpha, e)
            for Q, x in sorted(exps.items()):
                dec.add_prime(Q, e * x)
            dec.tree.append({"stage": si, "prime": P.norm, "exponent": e,
                             "arity": len(exps), "gen": len(dec.gens) - 1, **info})
    dec.compact()
    leftover = [P for P in dec.primes if P not in fb.index]
    if leftover:
        raise DescentError(f"{len(leftover)} primes remain outside the factor base", {}, dec)
    dec.stats["rounds"] = rounds
    dec.stats["stages"] = nst
    if verify and not dec.verify(I):
        raise AssertionError("decomposition does not recombine to the input ideal")
    return dec
