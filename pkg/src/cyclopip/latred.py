"""Lattice reduction (LLL, BKZ, HKZ) and Babai decoding.

Bases are lists of integer rows.  Reduction runs in float64 through the
kernels in :mod:`cyclopip._kernels` whenever entries are small enough for
exact integer arithmetic in doubles; larger bases are first shrunk by
reducing a truncated copy (augmented with an identity block so the copy
stays independent) and applying the recovered transform exactly.  If that
stalls, an exact integral LLL takes over.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import _kernels

FLOAT_BITS = 40
TRUNC_BITS = 30


class EnumerationBudgetError(RuntimeError):
    """Raised when an exact shortest-vector search exceeds its node budget."""


def _bits(rows):
    m = 0
    for r in rows:
        for x in r:
            if x:
                b = abs(x).bit_length()
                if b > m:
                    m = b
    return m


def _to_float(rows):
    return np.array(rows, dtype=np.float64)


def _to_int(arr):
    return [[int(x) for x in row] for row in np.rint(arr)]


def _apply(U, rows):
    return [[sum(u * r[j] for u, r in zip(urow, rows) if u) for j in range(len(rows[0]))]
            for urow in U]


def _float_lll(rows, delta):
    """LLL in doubles; returns (rows, U) or None when entries overflow."""
    k = len(rows)
    B = _to_float(rows)
    U = np.eye(k)
    if _kernels.lll_fp(B, U, delta) < 0:
        return None
    return _to_int(B), _to_int(U)


def _truncated_pass(rows, delta):
    """Reduce a truncated, identity-augmented copy; return the transform."""
    k = len(rows)
    shift = _bits(rows) - TRUNC_BITS
    aug = [[x >> shift for x in r] + [1 if i == j else 0 for j in range(k)]
           for i, r in enumerate(rows)]
    B = _to_float(aug)
    U = np.eye(k)
    if _kernels.lll_fp(B, U, delta) < 0:
        return None
    return _to_int(U)


def integral_lll(rows, delta=Fraction(99, 100)):
    """Exact LLL on independent integer rows (all-integer Gram-Schmidt).

    Returns (reduced rows, U) with U * rows = reduced.
    """
    delta = Fraction(delta)
    a, bden = delta.numerator, delta.denominator
    b = [list(r) for r in rows]
    n = len(b)
    H = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    if n <= 1:
        return b, H

    def dot(x, y):
        return sum(p * q for p, q in zip(x, y))

    # 1-indexed as in the usual presentation: d[0] = 1, d[i] = Gram det of first i
    d = [1] + [0] * n
    lam = [[0] * (n + 1) for _ in range(n + 1)]
    bb = [None] + b
    HH = [None] + H

    def redi(k, l):
        if 2 * abs(lam[k][l]) <= d[l]:
            return
        q = (2 * lam[k][l] + d[l]) // (2 * d[l])
        HH[k] = [x - q * y for x, y in zip(HH[k], HH[l])]
        bb[k] = [x - q * y for x, y in zip(bb[k], bb[l])]
        lam[k][l] -= q * d[l]
        for i in range(1, l):
            lam[k][i] -= q * lam[l][i]

    def swapi(k, kmax):
        HH[k], HH[k - 1] = HH[k - 1], HH[k]
        bb[k], bb[k - 1] = bb[k - 1], bb[k]
        for j in range(1, k - 1):
            lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
        lm = lam[k][k - 1]
        B = (d[k - 2] * d[k] + lm * lm) // d[k - 1]
        for i in range(k + 1, kmax + 1):
            t = lam[i][k]
            lam[i][k] = (d[k] * lam[i][k - 1] - lm * t) // d[k - 1]
            lam[i][k - 1] = (B * t + lm * lam[i][k]) // d[k]
        d[k - 1] = B

    d[1] = dot(bb[1], bb[1])
    if d[1] == 0:
        raise ValueError("dependent rows")
    k, kmax = 2, 1
    while k <= n:
        if k > kmax:
            kmax = k
            for j in range(1, k + 1):
                u = dot(bb[k], bb[j])
                for i in range(1, j):
                    u = (d[i] * u - lam[k][i] * lam[j][i]) // d[i - 1]
                if j < k:
                    lam[k][j] = u
                else:
                    if u == 0:
                        raise ValueError("dependent rows")
                    d[k] = u
        redi(k, k - 1)
        if bden * d[k] * d[k - 2] < a * d[k - 1] ** 2 - bden * lam[k][k - 1] ** 2:
            swapi(k, kmax)
            k = max(2, k - 1)
        else:
            for l in range(k - 2, 0, -1):
                redi(k, l)
            k += 1
    return bb[1:], HH[1:]


def _matmul(A, B):
    Bt = list(zip(*B))
    return [[sum(x * y for x, y in zip(r, c) if x) for c in Bt] for r in A]


def lll(rows, delta: float = 0.99, transform: bool = False):
    """LLL-reduce independent integer rows.  Returns rows, or (rows, U)."""
    rows = [[int(x) for x in r] for r in rows]
    k = len(rows)
    U = [[1 if i == j else 0 for j in range(k)] for i in range(k)]
    if k <= 1:
        return (rows, U) if transform else rows
    last_bits = None
    while True:
        bits = _bits(rows)
        if bits <= FLOAT_BITS:
            res = _float_lll(rows, delta)
            if res is not None:
                rows, V = res
                U = _matmul(V, U)
                break
        elif last_bits is None or bits < last_bits:
            V = _truncated_pass(rows, delta)
            if V is not None:
                last_bits = bits
                rows = _apply(V, rows)
                U = _matmul(V, U)
                continue
        rows, V = integral_lll(rows, Fraction(delta).limit_denominator(1000))
        U = _matmul(V, U)
        break
    return (rows, U) if transform else rows


def _float_gso(rows):
    B = _to_float(rows)
    return _kernels.gso(B)


def gso_norms(rows):
    """Squared Gram-Schmidt norms |b*_i|^2, computed exactly."""
    B = [[Fraction(x) for x in r] for r in rows]
    out = []
    star = []
    for b in B:
        v = list(b)
        for s, ss in star:
            mu = sum(x * y for x, y in zip(b, s)) / ss
            v = [x - mu * y for x, y in zip(v, s)]
        ss = sum(x * x for x in v)
        star.append((v, ss))
        out.append(ss)
    return out


def _insert(rows, start, coeffs):
    """Make sum coeffs[j]*rows[start+j] a basis vector at position ``start``.

    Pairwise extended-gcd steps keep the transform unimodular.
    """
    rows = [list(r) for r in rows]
    idx = [start + j for j, c in enumerate(coeffs) if c]
    x = {start + j: int(c) for j, c in enumerate(coeffs) if c}
    if not idx:
        return rows
    piv = idx[0]
    for j in idx[1:]:
        a, b = x[piv], x[j]
        g, u, w = _xgcd(a, b)
        ri, rj = rows[piv], rows[j]
        rows[piv] = [(a // g) * p + (b // g) * q for p, q in zip(ri, rj)]
        rows[j] = [-w * p + u * q for p, q in zip(ri, rj)]
        x[piv] = g
        x[j] = 0
    if x[piv] < 0:
        rows[piv] = [-v for v in rows[piv]]
    row = rows.pop(piv)
    rows.insert(start, row)
    return rows


def _xgcd(a, b):
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def bkz(rows, block: int, delta: float = 0.99, max_tours: int | None = None,
        max_nodes: int = 2_000_000):
    """BKZ reduction with local Schnorr-Euchner enumeration."""
    rows = lll(rows, delta)
    k = len(rows)
    if k <= 1 or block < 2:
        return rows
    block = min(block, k)
    if max_tours is None:
        max_tours = 2 * k
    for _ in range(max_tours):
        changed = False
        for s in range(k - 1):
            e = min(s + block, k)
            mu, r, _ = _float_gso(rows)
            coeffs, blen, _nodes = _kernels.enum_svp(mu, r, s, e, r[s] * 0.999, max_nodes)
            if blen < r[s] * 0.999 and np.any(coeffs):
                rows = _insert(rows, s, [int(c) for c in coeffs])
                rows = lll(rows, delta)
                changed = True
        if not changed:
            break
    return rows


def hkz(rows, max_nodes: int = 50_000_000):
    """HKZ reduction: every projected first vector is a shortest one."""
    rows = [[int(x) for x in r] for r in rows]
    if len(rows) == 1:
        r = rows[0]
        sign = -1 if next(x for x in reversed(r) if x) < 0 else 1
        return [[sign * x for x in r]]
    out = bkz(rows, len(rows), max_nodes=max_nodes)
    # confirm b1 is shortest with a full-budget enumeration
    mu, r, _ = _float_gso(out)
    coeffs, blen, nodes = _kernels.enum_svp(mu, r, 0, len(out), r[0] * 0.999, max_nodes)
    if nodes > max_nodes:
        raise EnumerationBudgetError("enumeration budget exhausted")
    if blen < r[0] * 0.999 and np.any(coeffs):
        out = hkz(lll(_insert(out, 0, [int(c) for c in coeffs])), max_nodes)
    return out


def shortest_vector(rows, max_nodes: int = 50_000_000):
    return hkz(rows, max_nodes)[0]


def babai_nearest_plane(basis, target):
    """Integer coefficients x with x*basis close to target (nearest plane).

    ``basis`` may be real; ``target`` is projected onto its span implicitly.
    """
    B = np.array(basis, dtype=np.float64)
    t = np.array(target, dtype=np.float64)
    _mu, r, bstar = _kernels.gso(B)
    x = _kernels.nearest_plane(B, bstar, r, t)
    return [int(v) for v in x]


def close_vectors(basis, target, radius2: float, max_nodes: int = 200_000):
    """Coefficient vectors x with |target - x*basis|^2 <= radius2.

    Depth-first enumeration over a QR factorization, each level visited in
    zig-zag order around its projected center.  Stops after ``max_nodes``
    nodes, in which case the list is partial.
    """
    B = np.array(basis, dtype=np.float64)
    k = len(B)
    if k == 0:
        return []
    Q, R = np.linalg.qr(B.T)
    y = Q.T @ np.array(target, dtype=np.float64)
    x = np.zeros(k)
    out = []
    budget = [max_nodes]

    def walk(i, dist):
        c = (y[i] - R[i, i + 1:] @ x[i + 1:]) / R[i, i]
        base = round(c)
        s = 0
        misses = 0
        while misses < 2 and budget[0] > 0:
            v = base + s
            d = dist + (R[i, i] * (v - c)) ** 2
            budget[0] -= 1
            if d <= radius2:
                misses = 0
                x[i] = v
                if i == 0:
                    out.append([int(t) for t in x])
                else:
                    walk(i - 1, d)
            else:
                misses += 1
            s = -s if s > 0 else -s + 1
        x[i] = 0

    walk(k - 1, 0.0)
    return out


def babai_round_off(basis, target):
    """Round the real coordinates of target in the given basis."""
    B = np.array(basis, dtype=np.float64)
    t = np.array(target, dtype=np.float64)
    coords, *_ = np.linalg.lstsq(B.T, t, rcond=None)
    return [int(v) for v in np.rint(coords)]


def root_hermite_bound(k: int, det: float) -> float:
    """det^(1/k) as a float even when det is a huge integer."""
    if det <= 0:
        raise ValueError("determinant must be positive")
    return math.exp(math.log(det) / k)


def norm2(v) -> int:
    return sum(x * x for x in v)
