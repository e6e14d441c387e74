"""The maximal real subfield K+ = Q(zeta + zeta^-1).

Elements of K+ are kept as CycloElements fixed by complex conjugation.
Coordinates on the power basis of theta = zeta + zeta^-1 are available
through ``real_coordinates``.  The norm equation N_{K/K+}(x) = g is a plug
point; ``brute_force_norm_equation`` solves it by enumeration for n <= 8.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from . import latred, zlinalg
from .cyclo import (
    Conductor,
    CycloElement,
    PrecisionError,
    conj,
    cyclotomic_unit,
    norm,
    unit_indices,
)

MAX_SIGN_PRECISION = 4096


def is_real(a: CycloElement) -> bool:
    return conj(a) == a


def relative_norm(a: CycloElement) -> CycloElement:
    """a * conj(a), an element of K+."""
    if a.is_zero():
        raise ValueError("relative norm of zero")
    return a * conj(a)


@lru_cache(maxsize=None)
def _theta_powers(N: int):
    c = Conductor(N)
    theta = CycloElement.zeta(c, 1) + CycloElement.zeta(c, N - 1)
    out = [CycloElement.one(c)]
    for _ in range(c.n // 2 - 1):
        out.append(out[-1] * theta)
    return tuple(out)


def real_coordinates(b: CycloElement) -> list:
    """Integer coordinates of b in K+ on 1, theta, ..., theta^(n/2 - 1)."""
    if not is_real(b):
        raise ValueError("element is not fixed by complex conjugation")
    rows = [list(t.coeffs) for t in _theta_powers(b.conductor.N)]
    x = zlinalg.solve_left(rows, list(b.coeffs))
    if x is None:
        raise ValueError("element is not in Z[theta]")
    return x


def from_real_coordinates(c: Conductor, coords) -> CycloElement:
    out = CycloElement.scalar(c, 0)
    for t, x in zip(_theta_powers(c.N), coords):
        if x:
            out = out + t * int(x)
    return out


def real_norm(b: CycloElement) -> int:
    """N_{K+/Q}(b), the determinant of multiplication by b on Z[theta]."""
    if not is_real(b):
        raise ValueError("element is not fixed by complex conjugation")
    M = [real_coordinates(b * t) for t in _theta_powers(b.conductor.N)]
    return zlinalg.det(M)


# ---------------------------------------------------------------------------
# signatures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Signature:
    """Bit i is 1 when the i-th real embedding is negative."""
    bits: tuple

    def __xor__(self, other: "Signature") -> "Signature":
        return Signature(tuple(a ^ b for a, b in zip(self.bits, other.bits)))

    def __len__(self):
        return len(self.bits)

    @property
    def is_zero(self) -> bool:
        return not any(self.bits)


def _real_values_float(b: CycloElement):
    c = b.conductor
    k = np.array(c.embedding_exponents(), dtype=float)
    i = np.arange(c.n, dtype=float)
    vals = np.array(b.coeffs, dtype=float) @ np.cos(2 * np.pi * np.outer(i, k) / c.N)
    err = (b.l1() + 1) * c.n * 8.0 * np.finfo(float).eps
    return vals, err


def signature(b: CycloElement) -> Signature:
    """Signs of b under the real embeddings zeta + zeta^-1 -> 2 cos(2 pi k / N)."""
    if not is_real(b):
        raise ValueError("element is not fixed by complex conjugation")
    if b.is_zero():
        raise ValueError("signature of zero")
    vals, err = _real_values_float(b)
    bits = []
    c = b.conductor
    for k, v in zip(c.embedding_exponents(), vals):
        if abs(v) > err:
            bits.append(int(v < 0))
            continue
        bits.append(_sign_bit_mp(b, k))
    return Signature(tuple(bits))


def _sign_bit_mp(b: CycloElement, k: int) -> int:
    N = b.conductor.N
    prec = 128
    while prec <= MAX_SIGN_PRECISION:
        with mpmath.workprec(prec):
            v = mpmath.fsum(x * mpmath.cospi(mpmath.mpf(2 * i * k) / N) for i, x in enumerate(b.coeffs) if x)
            if abs(v) > mpmath.mpf(b.l1() + 1) * mpmath.mpf(2) ** (8 - prec):
                return int(v < 0)
        prec *= 2
    raise PrecisionError("sign undecidable at the maximum precision")


# ---------------------------------------------------------------------------
# real units and totally positive generators
# ---------------------------------------------------------------------------

def real_units(c: Conductor):
    """-1 and the real cyclotomic units zeta^((1 - j)/2) * u_j."""
    N = c.N
    half = pow(2, -1, N) if N % 2 else None
    out = [CycloElement.scalar(c, -1)]
    for j in unit_indices(c):
        e = (1 - j) // 2 if half is None else ((1 - j) * half) % N
        u = CycloElement.zeta(c, e % N) * cyclotomic_unit(c, j)
        assert is_real(u)
        out.append(u)
    return out


@dataclass
class PositivityResult:
    solvable: bool
    element: CycloElement
    exponents: list

    def __bool__(self):
        return self.solvable


def _solve_gf2(rows, target):
    """x over F2 with sum x_i rows_i = target, or None."""
    m = len(rows)
    # rows as bit masks, each tagged with the set of input rows it combines
    pack = lambda bits: sum(int(b) << i for i, b in enumerate(bits))
    t = pack(target)
    work = [(pack(r), 1 << i) for i, r in enumerate(rows)]
    basis = []
    for v, mask in work:
        for bv, bm in basis:
            if v ^ bv < v:
                v, mask = v ^ bv, mask ^ bm
        if v:
            basis.append((v, mask))
            basis.sort(reverse=True)
    acc = 0
    for bv, bm in basis:
        if t ^ bv < t:
            t ^= bv
            acc ^= bm
    if t:
        return None
    return [(acc >> i) & 1 for i in range(m)]


def signature_matrix(units):
    return [list(signature(u).bits) for u in units]


def make_totally_positive(g: CycloElement, units=None) -> PositivityResult:
    """g * prod u_i^x_i with every real embedding positive, x over F2.

    ``units`` defaults to ``real_units``.  When the signature of g is not in
    the span of the unit signatures the result is marked unsolvable and
    carries g unchanged.
    """
    if units is None:
        units = real_units(g.conductor)
    target = signature(g).bits
    x = _solve_gf2(signature_matrix(units), list(target))
    if x is None:
        return PositivityResult(False, g, [])
    out = g
    for u, e in zip(units, x):
        if e:
            out = out * u
    assert signature(out).is_zero
    return PositivityResult(True, out, x)


# ---------------------------------------------------------------------------
# the norm equation N_{K/K+}(x) = g
# ---------------------------------------------------------------------------

def _real_embedding_rows(c: Conductor):
    k = np.array(c.embedding_exponents(), dtype=float)
    i = np.arange(c.n, dtype=float)
    ang = 2 * np.pi * np.outer(i, k) / c.N
    return math.sqrt(2) * np.hstack([np.cos(ang), np.sin(ang)])


def brute_force_norm_equation(g: CycloElement, max_nodes: int = 2_000_000):
    """x with x * conj(x) = g, by enumerating x with T2(x) = Tr(g); n <= 8 only."""
    c = g.conductor
    if c.n > 8:
        raise ValueError("the enumeration plug is limited to degree 8")
    if not is_real(g):
        raise ValueError("right-hand side is not in K+")
    vals, _ = _real_values_float(g)
    if (vals <= 0).any():
        return None
    trace = 2 * float(vals.sum())
    target_norm = norm(g)
    rows = _real_embedding_rows(c)
    for x in latred.close_vectors(rows, np.zeros(rows.shape[1]), trace * (1 + 1e-9) + 1e-9, max_nodes):
        a = CycloElement(c, tuple(x))
        if a.is_zero() or norm(a) ** 2 != target_norm:
            continue
        if relative_norm(a) == g:
            return a
    return None


def solve_relative_norm(g: CycloElement, plug=brute_force_norm_equation, units=None):
    """Adjust g to be totally positive, then hand it to a norm-equation plug.

    Returns (x, adjusted g) with x * conj(x) equal to the adjusted g, or
    (None, adjusted g) when the plug finds nothing.  An unsolvable sign
    system gives (None, None).
    """
    pos = make_totally_positive(g, units)
    if not pos:
        return None, None
    return plug(pos.element), pos.element
