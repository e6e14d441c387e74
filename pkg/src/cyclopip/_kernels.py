"""Numeric inner loops shared by several modules.

Every function here is plain numpy-compatible Python decorated with
:func:`cyclopip._accel.kernel`, so the same source runs either compiled or
interpreted.
"""
import numpy as np

from ._accel import kernel


# ---------------------------------------------------------------------------
# modular evaluation (norms)
# ---------------------------------------------------------------------------

@kernel
def norm_residues(coeffs, powers, q):
    """Product over all roots of P(root) mod q, for each row of ``coeffs``.

    ``coeffs`` is (batch, n) already reduced mod q, ``powers[i, k]`` is
    root_k^i mod q.  Requires q < 2^26 so that every partial sum fits in int64.
    """
    batch, n = coeffs.shape
    out = np.empty(batch, dtype=np.int64)
    for b in range(batch):
        acc = 1
        for k in range(powers.shape[1]):
            s = 0
            for i in range(n):
                s += coeffs[b, i] * powers[i, k]
            acc = (acc * (s % q)) % q
        out[b] = acc
    return out


# ---------------------------------------------------------------------------
# Gram-Schmidt / LLL on integer-valued float64 bases
# ---------------------------------------------------------------------------

@kernel
def gso(B):
    """Return (mu, r, bstar) with r[i] = |b*_i|^2 for the rows of B."""
    k, d = B.shape
    mu = np.zeros((k, k))
    r = np.zeros(k)
    bstar = np.zeros((k, d))
    for i in range(k):
        _gso_row(B, mu, r, bstar, i)
    return mu, r, bstar


@kernel
def _gso_row(B, mu, r, bstar, i):
    v = B[i].copy()
    for j in range(i):
        if r[j] > 0.0:
            m = np.dot(B[i], bstar[j]) / r[j]
        else:
            m = 0.0
        mu[i, j] = m
        v -= m * bstar[j]
    mu[i, i] = 1.0
    bstar[i] = v
    r[i] = np.dot(v, v)


@kernel
def lll_fp(B, U, delta):
    """In-place LLL on the rows of B with exact integer updates.

    B and U hold integers in float64; callers guarantee the input entries are
    far below 2^52.  U accumulates the row transformation.  Returns the number
    of swaps, or -1 if an entry grew past 2^52 (the caller then falls back to
    exact arithmetic).
    """
    k, d = B.shape
    if k <= 1:
        return 0
    mu = np.zeros((k, k))
    r = np.zeros(k)
    bstar = np.zeros((k, d))
    limit = 4503599627370496.0  # 2^52
    _gso_row(B, mu, r, bstar, 0)
    i = 1
    swaps = 0
    while i < k:
        if swaps > 50000000:
            return -1
        _gso_row(B, mu, r, bstar, i)
        for _rep in range(16):
            changed = False
            for j in range(i - 1, -1, -1):
                q = np.floor(mu[i, j] + 0.5)
                if q != 0.0:
                    changed = True
                    B[i] -= q * B[j]
                    U[i] -= q * U[j]
                    for t in range(j + 1):
                        mu[i, t] -= q * mu[j, t]
            if not changed:
                break
            _gso_row(B, mu, r, bstar, i)
        for t in range(d):
            if abs(B[i, t]) > limit:
                return -1
        for t in range(U.shape[1]):
            if abs(U[i, t]) > limit:
                return -1
        if r[i] >= (delta - mu[i, i - 1] ** 2) * r[i - 1]:
            i += 1
        else:
            tmp = B[i].copy()
            B[i] = B[i - 1]
            B[i - 1] = tmp
            tmp = U[i].copy()
            U[i] = U[i - 1]
            U[i - 1] = tmp
            swaps += 1
            _gso_row(B, mu, r, bstar, i - 1)
            if i > 1:
                i -= 1
    return swaps


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------

@kernel
def enum_svp(mu, r, start, stop, radius2, max_nodes):
    """Schnorr-Euchner enumeration of the projected block [start, stop).

    Returns (coefficients, squared length, nodes).  Coefficients are relative
    to rows start..stop-1; an all-zero vector means nothing strictly shorter
    than ``radius2`` turned up within the node budget.
    """
    m = stop - start
    best = np.zeros(m)
    best_len = radius2
    x = np.zeros(m)
    c = np.zeros(m)
    dx = np.zeros(m)
    ddx = np.zeros(m)
    part = np.zeros(m + 1)
    x[0] = 1.0
    dx[0] = 1.0
    ddx[0] = 1.0
    i = 0
    nodes = 0
    while True:
        nodes += 1
        if nodes > max_nodes:
            break
        diff = x[i] - c[i]
        li = part[i + 1] + diff * diff * r[start + i]
        if li < best_len:
            if i == 0:
                if li > 0.0:
                    best_len = li
                    for j in range(m):
                        best[j] = x[j]
            else:
                i -= 1
                part[i + 1] = li
                s = 0.0
                for j in range(i + 1, m):
                    s -= x[j] * mu[start + j, start + i]
                c[i] = s
                x[i] = np.floor(s + 0.5)
                if s >= x[i]:
                    dx[i] = 1.0
                    ddx[i] = 1.0
                else:
                    dx[i] = -1.0
                    ddx[i] = -1.0
                continue
        else:
            i += 1
            if i >= m:
                break
        if part[i + 1] == 0.0:
            x[i] += 1.0
        else:
            x[i] += dx[i]
            ddx[i] = -ddx[i]
            dx[i] = ddx[i] - dx[i]
    return best, best_len, nodes


# ---------------------------------------------------------------------------
# Babai
# ---------------------------------------------------------------------------

@kernel
def nearest_plane(B, bstar, r, t):
    """Coefficients x of the Babai nearest-plane lattice point for target t."""
    k = B.shape[0]
    x = np.zeros(k)
    v = t.copy()
    for i in range(k - 1, -1, -1):
        c = np.dot(v, bstar[i]) / r[i]
        xi = np.floor(c + 0.5)
        x[i] = xi
        v -= xi * B[i]
    return x
