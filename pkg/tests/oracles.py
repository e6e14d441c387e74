"""Independent reference implementations used as test oracles.

Nothing here calls into cyclopip's linear algebra or factorization code, so
agreement with the package is a genuine cross-check.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import sympy

# Class numbers of Q(zeta_N), taken from a computer-algebra system and frozen.
CLASS_NUMBERS = {5: 1, 7: 1, 8: 1, 9: 1, 11: 1, 12: 1, 13: 1, 15: 1, 16: 1, 23: 3, 29: 8, 31: 9}
CLASS_GROUP_DIVISORS = {23: (3,), 29: (2, 2, 2), 31: (9,)}


# ---------------------------------------------------------------------------
# Hermite and Smith forms by plain Euclidean row and column operations
# ---------------------------------------------------------------------------

def naive_hnf(M):
    """Lower row HNF: pivots are the last nonzero entries, increasing down the rows,
    and entries in a pivot column below the pivot are reduced into [0, pivot)."""
    rows = [list(map(int, r)) for r in M if any(r)]
    if not rows:
        return []
    ncols = len(M[0])
    placed = []  # pivot rows found so far, from the last column leftwards
    for j in range(ncols - 1, -1, -1):
        active = [r for r in rows if r[j]]
        rest = [r for r in rows if not r[j]]
        if not active:
            continue
        while len(active) > 1:
            active.sort(key=lambda r: abs(r[j]))
            p = active[0]
            nxt = [p]
            for r in active[1:]:
                q = r[j] // p[j]
                r = [a - q * b for a, b in zip(r, p)]
                if r[j]:
                    nxt.append(r)
                elif any(r):
                    rest.append(r)
            active = nxt
        p = active[0]
        if p[j] < 0:
            p = [-a for a in p]
        # rows placed earlier sit below this one in the final matrix
        for k, r in enumerate(placed):
            q = r[j] // p[j]
            if q:
                placed[k] = [a - q * b for a, b in zip(r, p)]
        placed.append(p)
        rows = rest
    return placed[::-1]


def naive_snf(M):
    """Nonzero elementary divisors, by repeated min-pivot elimination."""
    A = [list(map(int, r)) for r in M]
    if not A or not A[0]:
        return []
    m, n = len(A), len(A[0])
    divs = []
    t = 0
    while t < min(m, n):
        nz = [(abs(A[i][j]), i, j) for i in range(t, m) for j in range(t, n) if A[i][j]]
        if not nz:
            break
        _, i, j = min(nz)
        A[t], A[i] = A[i], A[t]
        for r in A:
            r[t], r[j] = r[j], r[t]
        while True:
            done = True
            p = A[t][t]
            for i in range(t + 1, m):
                q = A[i][t] // p
                if q:
                    A[i] = [a - q * b for a, b in zip(A[i], A[t])]
                if A[i][t]:
                    done = False
            for j in range(t + 1, n):
                q = A[t][j] // p
                if q:
                    for r in A:
                        r[j] -= q * r[t]
                if A[t][j]:
                    done = False
            if done:
                # the pivot must divide the rest of the matrix
                bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n) if A[i][j] % p), None)
                if bad is None:
                    break
                A[t] = [a + b for a, b in zip(A[t], A[bad[0]])]
                continue
            nz = [(abs(A[i][t]), i, t) for i in range(t, m) if A[i][t]]
            nz += [(abs(A[t][j]), t, j) for j in range(t, n) if A[t][j]]
            _, i, j = min(nz)
            A[t], A[i] = A[i], A[t]
            for r in A:
                r[t], r[j] = r[j], r[t]
        divs.append(abs(A[t][t]))
        t += 1
    return sorted(divs)


def in_row_lattice(A, y) -> bool:
    return naive_hnf(list(A) + [list(y)]) == naive_hnf(A)


def rational_rank(M) -> int:
    return sympy.Matrix(M).rank() if M else 0


def naive_det(M) -> int:
    """Laplace-free determinant over Q by Gaussian elimination with fractions."""
    A = [[Fraction(x) for x in r] for r in M]
    n = len(A)
    d = Fraction(1)
    for k in range(n):
        p = next((i for i in range(k, n) if A[i][k]), None)
        if p is None:
            return 0
        if p != k:
            A[k], A[p] = A[p], A[k]
            d = -d
        d *= A[k][k]
        for i in range(k + 1, n):
            f = A[i][k] / A[k][k]
            A[i] = [a - f * b for a, b in zip(A[i], A[k])]
    assert d.denominator == 1
    return int(d)


# ---------------------------------------------------------------------------
# number-field facts through sympy polynomials
# ---------------------------------------------------------------------------

_x = sympy.Symbol("x")


def resultant_norm(coeffs, N: int) -> int:
    """N_{K/Q}(a) as Res(Phi_N, a(x)) with sympy."""
    phi = sympy.Poly(sympy.cyclotomic_poly(N, _x), _x)
    a = sympy.Poly(list(reversed([int(c) for c in coeffs])), _x)
    if a.is_zero:
        return 0
    return int(sympy.resultant(phi, a))


def prime_power_norm_matches(coeffs, N: int, norms_and_exps) -> bool:
    expected = math.prod(q ** e for q, e in norms_and_exps)
    return abs(resultant_norm(coeffs, N)) == expected


# ---------------------------------------------------------------------------
# lattices
# ---------------------------------------------------------------------------

def brute_force_lambda1(basis) -> float:
    """Shortest nonzero vector length, by Fincke-Pohst over a Cholesky factor.

    The basis is LLL-reduced by sympy first so the search stays small.
    """
    from sympy import ZZ
    from sympy.polys.matrices import DomainMatrix
    k0 = len(basis)
    dm = DomainMatrix([[ZZ(int(x)) for x in r] for r in basis], (k0, len(basis[0])), ZZ)
    B = np.array([[int(x) for x in r] for r in dm.lll().to_list()], dtype=float)
    G = B @ B.T
    R2 = min(float(np.dot(b, b)) for b in B)
    L = np.linalg.cholesky(G)  # G = L L^T
    Q = L.T
    k = len(B)
    best = [R2]
    x = [0] * k

    def rec(i, acc):
        # ||x B||^2 = ||Q x||^2 with Q upper triangular
        s = sum(Q[i, j] * x[j] for j in range(i + 1, k))
        rem = best[0] - acc
        if rem < -1e-9:
            return
        w = math.sqrt(max(rem, 0.0)) / abs(Q[i, i])
        c = -s / Q[i, i]
        for v in range(math.ceil(c - w - 1e-9), math.floor(c + w + 1e-9) + 1):
            x[i] = v
            d = acc + (Q[i, i] * v + s) ** 2
            if i == 0:
                if any(x) and d > 1e-9:
                    best[0] = min(best[0], d)
            else:
                rec(i - 1, d)
        x[i] = 0

    rec(k - 1, 0.0)
    return math.sqrt(best[0])

