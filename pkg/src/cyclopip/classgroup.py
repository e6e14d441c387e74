"""Class group computation by relation collection, with analytic certification.

The loop: gather verified relations over a factor base, take the HNF of the
relation matrix, turn left-kernel vectors into units, and compare
``det(H) * R_units`` against an Euler-product estimate h* of hR.  A run is
certified when h*(1 - tol) <= det(H) * R_units < 1.5 h*; the group structure is
then the Smith form of H.

Unit lattices are measured in coordinates relative to a frame of cyclotomic
units: coordinates of genuine units are rational with small denominators, so
the volume comes out as (frame volume) * (integer index) exactly.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import latred, zlinalg
from .cyclo import (
    Conductor,
    CycloElement,
    LogVector,
    cyclotomic_unit,
    discriminant,
    exact_div,
    log_embedding,
    unit_indices,
)
from .ideal import _mult_order
from .relations import (
    FactorBase,
    Relation,
    RelationSearch,
    SamplerConfig,
    bach_bound,
)

log = logging.getLogger(__name__)

DEFAULT_P0 = 1 << 20
# h* is the Euler-product value of hR divided by this constant
HSTAR_DIVISOR = 1.25
CERT_UPPER = 1.5
CERT_LOWER = 0.8
# kernels from the HNF transform with entries this small are used unreduced
KERNEL_LLL_BITS = 16


class NonConvergenceError(RuntimeError):
    """The relation budget ran out before the class group was certified."""

    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


# ---------------------------------------------------------------------------
# analytic side
# ---------------------------------------------------------------------------

def _sieve(limit):
    s = np.ones(limit + 1, dtype=bool)
    s[:2] = False
    for i in range(2, int(limit ** 0.5) + 1):
        if s[i]:
            s[i * i::i] = False
    return np.nonzero(s)[0]


def splitting_type(c: Conductor, p: int):
    """(e, f, g) for the rational prime p in Q(zeta_N)."""
    N = c.N
    if N % p == 0:
        pa = p ** dict(c.factorization)[p]
        m = N // pa
        e = pa // p * (p - 1)
    else:
        m, e = N, 1
    f = _mult_order(p, m)
    g = c.n // (e * f)
    return e, f, g


def roots_of_unity(c: Conductor) -> int:
    return 2 * c.N if c.N % 2 else c.N


def euler_product_estimate(c: Conductor, P0: int = DEFAULT_P0, precision: int = 53) -> float:
    """h*, from the class number formula with the Euler product cut at P0.

    Returns the estimate of hR divided by HSTAR_DIVISOR.  ``precision`` is
    accepted for interface symmetry; the sum is accumulated in float64 with
    compensated (math.fsum) addition.
    """
    if P0 < 2:
        raise ValueError("P0 must be at least 2")
    N, n = c.N, c.n
    primes = _sieve(P0)
    # multiplicative order of each residue class mod N
    order = np.zeros(N, dtype=np.int64)
    for t in c.units_mod():
        order[t] = _mult_order(t, N)
    ps = primes[np.gcd(primes, N) == 1]
    f = order[ps % N]
    pf = ps.astype(float)
    terms = np.log1p(-1.0 / pf) - (n / f) * np.log1p(-np.power(pf, -f.astype(float)))
    total = math.fsum(terms.tolist())
    for p, _ in c.factorization:
        e, fp, g = splitting_type(c, p)
        total += math.log1p(-1.0 / p) - g * math.log1p(-float(p) ** (-fp))
    r2 = n // 2
    log_hr = (math.log(roots_of_unity(c)) + 0.5 * math.log(discriminant(c))
              - r2 * math.log(2 * math.pi) + total)
    return math.exp(log_hr) / HSTAR_DIVISOR


# ---------------------------------------------------------------------------
# unit lattices
# ---------------------------------------------------------------------------

def cyclotomic_unit_generators(c: Conductor):
    """Generators of the cyclotomic units modulo torsion.

    For N a prime power these are u_j, 1 < j < N/2.  Otherwise the group is
    generated by 1 - zeta^a when the order of zeta^a is not a prime power, and
    by quotients (1 - zeta^a)/(1 - zeta^b) of elements of equal prime-power order.
    """
    if c.is_prime_power:
        return [cyclotomic_unit(c, j) for j in unit_indices(c)]
    N = c.N
    one = CycloElement.one(c)
    gens = []
    anchor = {}
    for a in range(1, N // 2 + 1):
        order = N // math.gcd(a, N)
        x = one - CycloElement.zeta(c, a)
        if _is_composite_order(order):
            gens.append(x)
        else:
            if order in anchor:
                gens.append(exact_div(x, anchor[order]))
            else:
                anchor[order] = x
    return gens


def _is_composite_order(m: int) -> bool:
    """True when m > 1 is not a prime power."""
    if m == 1:
        return False
    p = min(d for d in range(2, m + 1) if m % d == 0)
    while m % p == 0:
        m //= p
    return m > 1


def regulator_from_volume(vol: float, r: int) -> float:
    """Regulator of a rank-r lattice of log vectors with Euclidean covolume vol.

    Log vectors here use ln|sigma| (not 2 ln|sigma|) on n/2 coordinates and lie on
    the trace-zero hyperplane, whence the 2^r and sqrt(r + 1) factors.
    """
    return (2 ** r) * vol / math.sqrt(r + 1)


def _pick_frame(vecs, r, tol=1e-8):
    """Greedy choice of r independent vectors, shortest first."""
    order = sorted(range(len(vecs)), key=lambda i: float(np.dot(vecs[i], vecs[i])))
    chosen = []
    Q = []
    for i in order:
        v = np.array(vecs[i], dtype=float)
        w = v.copy()
        for q in Q:
            w -= np.dot(w, q) * q
        nv = np.linalg.norm(v)
        if nv > 0 and np.linalg.norm(w) > tol * max(1.0, nv):
            Q.append(w / np.linalg.norm(w))
            chosen.append(i)
            if len(chosen) == r:
                break
    return chosen


@dataclass
class LatticeVolume:
    volume: float
    rank: int
    denominator: int
    index: int
    frame_volume: float


def real_lattice_volume(vectors, r: int, frame=None, max_den: int = 720, tol: float = 1e-6):
    """Covolume of the lattice generated by real vectors of rank r.

    Coordinates relative to ``frame`` (r independent vectors, defaulting to a
    greedy choice among ``vectors``) must be rational with denominator at most
    ``max_den``; the volume is then frame_volume * [integer index] / den^r.
    Returns None when the vectors do not span rank r.
    """
    V = np.array([np.asarray(v, dtype=float) for v in vectors])
    if frame is None:
        idx = _pick_frame(list(V), r)
        if len(idx) < r:
            return None
        F = V[idx]
    else:
        F = np.array([np.asarray(v, dtype=float) for v in frame])
        idx = _pick_frame(list(F), r)
        if len(idx) < r:
            raise ValueError("frame does not have full rank")
        F = F[idx]
    fvol = math.sqrt(abs(np.linalg.det(F @ F.T)))
    coords, *_ = np.linalg.lstsq(F.T, V.T, rcond=None)
    coords = coords.T
    resid = np.abs(coords @ F - V).max() if len(V) else 0.0
    if resid > tol * max(1.0, np.abs(V).max()):
        raise ValueError(f"vectors do not lie in the span of the frame (residual {resid:.3g})")
    den = None
    for D in range(1, max_den + 1):
        X = coords * D
        if np.abs(X - np.rint(X)).max() < tol * D:
            den = D
            break
    if den is None:
        raise ValueError("coordinates are not rational with a small denominator; raise precision")
    C = [[int(x) for x in row] for row in np.rint(coords * den)]
    H = zlinalg.hnf(C, ncols=r)
    if len(H) < r:
        return None
    index = math.prod(H[i][i] for i in range(r))
    vol = fvol * index / den ** r
    return LatticeVolume(vol, r, den, index, fvol)


def unit_log_vectors(elems, precision: int = 40):
    return [log_embedding(e, precision) for e in elems]


def cyclotomic_regulator(c: Conductor, precision: int = 40) -> float:
    """Regulator of the cyclotomic units (h+ times the field regulator)."""
    r = c.unit_rank
    if r == 0:
        return 1.0
    logs = [v.values for v in unit_log_vectors(cyclotomic_unit_generators(c), precision)]
    lv = real_lattice_volume(logs, r)
    if lv is None:
        raise ValueError("cyclotomic unit logs are rank deficient")
    return regulator_from_volume(lv.volume, r)


# ---------------------------------------------------------------------------
# the main loop
# ---------------------------------------------------------------------------

@dataclass
class ClassGroupResult:
    conductor: Conductor
    fb: FactorBase
    relations: list
    matrix: list
    hnf: list
    transform: list
    kernel: list
    divisors: tuple
    h: int
    regulator: float
    h_star: float
    margin: float
    certified: bool
    seed: object
    bound: int
    warnings: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    logs: list = field(default_factory=list, repr=False)

    @property
    def hR(self) -> float:
        return self.h * self.regulator

    def report(self) -> str:
        lines = [
            f"conductor: {self.conductor.N}",
            f"degree: {self.conductor.n}",
            f"bound: {self.bound}",
            f"seed: {self.seed}",
            f"factor_base: {len(self.fb)}",
            f"relations: {len(self.relations)}",
            f"divisors: {' '.join(map(str, self.divisors))}",
            f"h: {self.h}",
            f"regulator: {self.regulator:.10g}",
            f"h_star: {self.h_star:.10g}",
            f"margin: {self.margin:.6f}",
            f"certified: {'yes' if self.certified else 'no'}",
        ]
        for w in self.warnings:
            lines.append(f"warning: {w}")
        return "\n".join(lines) + "\n"


def _relation_logs(relations, cache, precision):
    out = []
    for r in relations:
        key = (r.generator, precision)
        v = cache.get(key)
        if v is None:
            v = log_embedding(r.generator, precision)
            cache[key] = v
        out.append(v)
    return out


def kernel_units_logs(kernel, logs):
    """Log vectors of the units prod alpha_i^K[j][i], as floats."""
    out = []
    for row in kernel:
        out.append(LogVector.combine(row, logs).values)
    return out


def compute_class_group(c: Conductor, B: int, A: int = 1, seed=0, *,
                        sampler: SamplerConfig | None = None, P0: int = DEFAULT_P0,
                        max_relations: int = 20000, extra: int = 10,
                        degree_one_only: bool = False) -> ClassGroupResult:
    """Relation collection until det(H) * R_units is certified against h*."""
    t0 = time.time()
    fb = FactorBase.build(c, B, degree_one_only)
    m = len(fb)
    r = c.unit_rank
    warnings = []
    bb = bach_bound(c)
    if B < bb:
        warnings.append(f"bound {B} is below the Bach bound {bb}")
    if m == 0:
        raise ValueError("empty factor base")
    cfg = sampler or SamplerConfig(A=A)
    search = RelationSearch(fb, seed, cfg)
    h_star = euler_product_estimate(c, P0)
    frame = [v.values for v in unit_log_vectors(cyclotomic_unit_generators(c))] if r else []
    logs_cache = {}
    history = []
    target = m + r + extra
    while True:
        if target > max_relations:
            raise NonConvergenceError(
                f"no certified class group within {max_relations} relations",
                {"history": history, "stats": search.stats.as_dict()})
        try:
            search.collect(target)
        except RuntimeError as exc:
            raise NonConvergenceError(str(exc), {"history": history,
                                                 "stats": search.stats.as_dict()}) from exc
        rels = search.relations
        M = [list(x.exponents) for x in rels]
        H_full, U = zlinalg.hnf_with_transform(M)
        k0 = sum(1 for row in H_full if not any(row))
        H = H_full[k0:]
        if len(H) < m:
            history.append({"relations": len(rels), "rank": len(H)})
            target *= 2
            continue
        d = math.prod(H[i][i] for i in range(m))
        kernel = U[:k0]
        if kernel and max(abs(x).bit_length() for row in kernel for x in row) > KERNEL_LLL_BITS:
            kernel = latred.lll(kernel)
        if r:
            need = max((abs(x).bit_length() for row in kernel for x in row), default=0)
            prec = 40 if need + len(rels).bit_length() < 12 else need + len(rels).bit_length() + 40
            logs = _relation_logs(rels, logs_cache, prec)
            unit_logs = kernel_units_logs(kernel, logs)
            lv = real_lattice_volume(unit_logs, r, frame=frame) if unit_logs else None
            R = regulator_from_volume(lv.volume, r) if lv is not None else 0.0
        else:
            logs = _relation_logs(rels, logs_cache, 40)
            R = 1.0
        margin = d * R / h_star
        history.append({"relations": len(rels), "det": d, "R": R, "margin": margin})
        log.info("N=%d rels=%d det=%d R=%.6g margin=%.4f", c.N, len(rels), d, R, margin)
        if R > 0 and CERT_LOWER <= margin < CERT_UPPER:
            break
        if R > 0 and margin < CERT_LOWER:
            # the factor base does not generate the class group; more relations cannot fix this
            raise NonConvergenceError(
                f"det(H)*R = {d * R:.6g} is below h* = {h_star:.6g}: the factor base "
                f"does not appear to generate the class group; raise the bound",
                {"history": history, "stats": search.stats.as_dict()})
        target *= 2
    divisors = tuple(x for x in zlinalg.snf(H) if x != 1) or (1,)
    h = math.prod(divisors)
    stats = search.stats.as_dict()
    stats["seconds"] = time.time() - t0
    return ClassGroupResult(
        conductor=c, fb=fb, relations=list(rels), matrix=M, hnf=H, transform=U[k0:],
        kernel=kernel, divisors=divisors, h=h, regulator=R, h_star=h_star,
        margin=margin, certified=True, seed=seed, bound=B, warnings=warnings,
        stats=stats, history=history, logs=logs)
