"""Exact integer linear algebra: HNF, SNF, kernels, determinants, left solving.

Matrices are lists of rows of Python ints.  The Hermite form used throughout
is the *lower* row form: each nonzero row ends in a positive pivot, pivot
columns increase with the row index, and every entry below a pivot lies in
[0, pivot).  For a square nonsingular input this is lower triangular, which
is the shape used for ideal bases.

Internally the lower form is obtained from the usual upper form by reversing
column order on the way in and row/column order on the way out.
"""
from __future__ import annotations

import math

import numpy as np


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _as_rows(M):
    return [[int(x) for x in row] for row in M]


def _ncols(M, ncols=None):
    if ncols is not None:
        return ncols
    return len(M[0]) if M else 0


def identity(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def transpose(M):
    return [list(r) for r in zip(*M)]


def matmul(A, B):
    Bt = transpose(B)
    return [[sum(a * b for a, b in zip(row, col) if a and b) for col in Bt] for row in A]


def vecmat(x, A):
    """Row vector times matrix."""
    if not A:
        return []
    out = [0] * len(A[0])
    for xi, row in zip(x, A):
        if xi:
            for j, v in enumerate(row):
                if v:
                    out[j] += xi * v
    return out


def _xgcd(a, b):
    """Return (g, u, v) with u*a + v*b = g = gcd(a, b) >= 0."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


# ---------------------------------------------------------------------------
# Hermite normal form
# ---------------------------------------------------------------------------

def _hnf_upper(A, want_u):
    """Upper row HNF by min-pivot Euclid on object arrays; zero rows last."""
    R = len(A)
    C = len(A[0]) if R else 0
    A = np.array(A, dtype=object).reshape(R, C)
    U = np.array(identity(R), dtype=object).reshape(R, R) if want_u else None
    r = 0
    for c in range(C):
        if r == R:
            break
        while True:
            col = A[r:, c]
            nz = [i + r for i in np.flatnonzero(col != 0)]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(A[i, c]))
            if len(nz) == 1:
                break
            p = A[piv, c]
            for i in nz:
                if i == piv:
                    continue
                q = A[i, c] // p
                rem = A[i, c] - q * p
                # nearest quotient keeps remainders (and fill-in) small
                if 2 * abs(rem) > abs(p):
                    q += 1 if (rem > 0) == (p > 0) else -1
                if q:
                    A[i] -= q * A[piv]
                    if want_u:
                        U[i] -= q * U[piv]
        if not nz:
            continue
        piv = nz[0]
        if piv != r:
            A[[r, piv]] = A[[piv, r]]
            if want_u:
                U[[r, piv]] = U[[piv, r]]
        if A[r, c] < 0:
            A[r] = -A[r]
            if want_u:
                U[r] = -U[r]
        p = A[r, c]
        for i in range(r):
            q = A[i, c] // p
            if q:
                A[i] -= q * A[r]
                if want_u:
                    U[i] -= q * U[r]
        r += 1
    return A, U, r


def hnf_with_transform(M):
    """Return (H, U) with U*M = H, |det U| = 1.

    H has the same shape as M: its first (rows - rank) rows are zero and the
    remaining rows are ``hnf(M)``.  The leading rows of U therefore form a
    basis of the left kernel of M.
    """
    M = _as_rows(M)
    R = len(M)
    if R == 0:
        return [], []
    rev = [row[::-1] for row in M]
    A, U, rank = _hnf_upper(rev, True)
    H = [[int(x) for x in A[i][::-1]] for i in range(R - 1, -1, -1)]
    Uo = [[int(x) for x in U[i]] for i in range(R - 1, -1, -1)]
    return H, Uo


def hnf(M, ncols=None):
    """Canonical lower row HNF of the row lattice of M (nonzero rows only)."""
    M = _as_rows(M)
    if not M:
        return []
    rev = [row[::-1] for row in M]
    A, _, rank = _hnf_upper(rev, False)
    return [[int(x) for x in A[i][::-1]] for i in range(rank - 1, -1, -1)]


def hnf_mod(M, D, ncols=None, shrink=True):
    """Lower HNF of the lattice spanned by M and D * Z^m.

    With ``shrink`` (the default) D must be a multiple of the determinant of
    that lattice, and the working modulus drops by each pivot found.  Without
    it only D * Z^m inside the lattice is assumed and all work is mod D.
    Entries stay below D either way; the result is square lower triangular.
    """
    M = _as_rows(M)
    m = _ncols(M, ncols)
    D = abs(int(D))
    if D == 0:
        raise ValueError("modulus must be nonzero")
    # upper form on reversed columns
    rows = [[x % D for x in row[::-1]] for row in M]
    rows = [r for r in rows if any(r)]
    piv_rows = []
    R = D
    for c in range(m):
        if R == 1:
            for cc in range(c, m):
                e = [0] * m
                e[cc] = 1
                piv_rows.append(e)
            break
        p = [0] * m
        p[c] = R
        rest_rows = []
        for row in rows:
            b = row[c] % R
            row = row[:c] + [b] + row[c + 1:]
            if b:
                a = p[c]
                g, u, v = _xgcd(a, b)
                new_p = [u * x + v * y for x, y in zip(p, row)]
                row = [(b // g) * x - (a // g) * y for x, y in zip(p, row)]
                p = new_p
            rest_rows.append(row)
        d = p[c]
        p = [x % R if j > c else x for j, x in enumerate(p)]
        piv_rows.append(p)
        if shrink:
            R //= d
        rows = []
        for row in rest_rows:
            row = [0] * (c + 1) + [x % R for x in row[c + 1:]]
            if any(row):
                rows.append(row)
    H = piv_rows
    for c in range(1, m):
        pc = H[c][c]
        for i in range(c):
            q = H[i][c] // pc
            if q:
                H[i] = [x - q * y for x, y in zip(H[i], H[c])]
    return _upper_to_lower(H)


def _upper_to_lower(H):
    return [row[::-1] for row in H[::-1]]


def is_hnf(H) -> bool:
    """True iff H is in the lower row Hermite form used by this module."""
    last = -1
    pivots = []
    for row in H:
        nz = [j for j, x in enumerate(row) if x]
        if not nz or nz[-1] <= last or row[nz[-1]] <= 0:
            return False
        last = nz[-1]
        pivots.append(last)
    for i, c in enumerate(pivots):
        for k in range(i + 1, len(H)):
            if not (0 <= H[k][c] < H[i][c]):
                return False
    return True


def pivot_columns(H):
    return [max(j for j, x in enumerate(row) if x) for row in H]


def solve_hnf(H, y):
    """Integer z with z*H = y for H in lower HNF, or None."""
    y = [int(v) for v in y]
    z = [0] * len(H)
    for i in range(len(H) - 1, -1, -1):
        row = H[i]
        c = max(j for j, x in enumerate(row) if x)
        q, rem = divmod(y[c], row[c])
        if rem:
            return None
        if q:
            z[i] = q
            for j in range(c + 1):
                if row[j]:
                    y[j] -= q * row[j]
    if any(y):
        return None
    return z


def solve_left(A, y):
    """Some integer x with x*A = y, or None when y is outside the row lattice."""
    A = _as_rows(A)
    if not A:
        return [] if not any(y) else None
    H, U = hnf_with_transform(A)
    k = sum(1 for row in H if not any(row))
    z = solve_hnf(H[k:], y)
    if z is None:
        return None
    return vecmat(z, U[k:])


def kernel(M):
    """Rows forming a Z-basis of {v : v*M = 0}."""
    M = _as_rows(M)
    if not M:
        return []
    H, U = hnf_with_transform(M)
    k = sum(1 for row in H if not any(row))
    return U[:k]


# ---------------------------------------------------------------------------
# determinants
# ---------------------------------------------------------------------------

def det(M) -> int:
    """Determinant by fraction-free (Bareiss) elimination."""
    A = _as_rows(M)
    n = len(A)
    if n == 0:
        return 1
    if any(len(r) != n for r in A):
        raise ValueError("determinant of a non-square matrix")
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            sw = next((i for i in range(k + 1, n) if A[i][k] != 0), None)
            if sw is None:
                return 0
            A[k], A[sw] = A[sw], A[k]
            sign = -sign
        akk = A[k][k]
        for i in range(k + 1, n):
            aik = A[i][k]
            row_i, row_k = A[i], A[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
        prev = akk
    return sign * A[n - 1][n - 1]


def rank(M) -> int:
    return len(hnf(M)) if M else 0


# ---------------------------------------------------------------------------
# Smith normal form
# ---------------------------------------------------------------------------

def _snf_mod(A, D):
    """Elementary divisors of a nonsingular square matrix with |det| = D."""
    m = len(A)
    dtype = np.int64 if D < (1 << 30) else object
    X = np.array([[x % D for x in row] for row in A], dtype=dtype).reshape(m, m)
    out = []
    Dt = D
    t = 0
    while t < m:
        if Dt == 1:
            out.extend([1] * (m - t))
            break
        S = X[t:, t:] % Dt
        X[t:, t:] = S
        while True:
            nzi, nzj = np.nonzero(X[t:, t:])
            if len(nzi) == 0:
                out.extend([Dt] * (m - t))
                return out
            vals = np.array([min(int(X[t + i, t + j]), Dt - int(X[t + i, t + j])) for i, j in zip(nzi, nzj)])
            k = int(np.argmin(vals))
            i, j = t + nzi[k], t + nzj[k]
            X[[t, i]] = X[[i, t]]
            X[:, [t, j]] = X[:, [j, t]]
            a = int(X[t, t])
            if 2 * a > Dt:
                a -= Dt
            done = True
            for r in range(t + 1, m):
                v = int(X[r, t])
                if v:
                    q = v // a
                    X[r, t:] = (X[r, t:] - q * X[t, t:]) % Dt
                    if X[r, t]:
                        done = False
            for cidx in range(t + 1, m):
                v = int(X[t, cidx])
                if v:
                    q = v // a
                    X[t:, cidx] = (X[t:, cidx] - q * X[t:, t]) % Dt
                    if X[t, cidx]:
                        done = False
            if not done:
                continue
            g = math.gcd(a, Dt)
            sub = X[t + 1:, t + 1:]
            bad = np.nonzero(sub % g)
            if len(bad[0]):
                r = t + 1 + bad[0][0]
                X[t, t:] = (X[t, t:] + X[r, t:]) % Dt
                continue
            out.append(g)
            Dt //= g
            X[t, t] = g
            t += 1
            break
    return out


def _chain(divs):
    d = [abs(x) for x in divs]
    changed = True
    while changed:
        changed = False
        for i in range(len(d)):
            for j in range(i + 1, len(d)):
                a, b = d[i], d[j]
                g = math.gcd(a, b)
                l = a // g * b if g else 0
                if (a, b) != (g, l):
                    d[i], d[j] = g, l
                    changed = True
    return d


def snf(M):
    """Nonzero elementary divisors d_1 | d_2 | ... of M."""
    H = hnf(M)
    if not H:
        return []
    r = len(H)
    if r == len(H[0]):
        D = 1
        for i in range(r):
            D *= H[i][i]
        return sorted(_snf_mod(H, D))
    # general case: alternate row and column Hermite reductions until diagonal
    X = H
    while True:
        diag = all(X[i][j] == 0 for i in range(len(X)) for j in range(len(X[0])) if i != j)
        if diag and len(X) <= len(X[0]):
            break
        X = hnf(transpose(X))
    divs = [X[i][i] for i in range(min(len(X), len(X[0]))) if X[i][i]]
    return sorted(_chain(divs))


# ---------------------------------------------------------------------------
# text form
# ---------------------------------------------------------------------------

def matrix_to_text(M) -> str:
    rows = len(M)
    cols = len(M[0]) if rows else 0
    lines = [f"{rows} {cols}"]
    lines += [" ".join(str(x) for x in row) for row in M]
    return "\n".join(lines)


def matrix_from_text(text: str):
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    rows, cols = (int(x) for x in lines[0].split())
    M = [[int(x) for x in ln.split()] for ln in lines[1 : rows + 1]]
    if len(M) != rows or any(len(r) != cols for r in M):
        raise ValueError("matrix text does not match its header")
    return M
