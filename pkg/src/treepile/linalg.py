"""Exact linear algebra over the rationals.

Two solver families live here.  Fraction-free (Bareiss) elimination is used
for small dense systems and as an independent oracle.  Larger systems go
through p-adic lifting: a blocked LU factorization modulo a prime (the
trailing updates are float64 matrix products, exact because every partial
sum stays below 2**53), then rational reconstruction, then an exact check
supplied by the caller.  A reconstruction is only returned after it passes
that check, so the result is certified rather than probabilistic.
"""

import math
from fractions import Fraction

import numpy as np

from . import kernels

# float64 holds integers exactly up to 2**53; with p < 2**21 a dot product of
# up to 2048 residues stays below 2**53.
LIFT_BLOCK = 64
LIFT_PRIME_BITS = 21
MATMUL_CHUNK = 2048
LEAF = 8
CRT_PRIME_BITS = 31


def is_prime(n):
    if n < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def primes_below(bits, count, skip=0):
    """The largest ``count`` primes below 2**bits, after skipping ``skip``."""
    out = []
    n = (1 << bits) - 1
    while len(out) < count + skip:
        if is_prime(n):
            out.append(n)
        n -= 2
    return out[skip:]


# -- fraction-free elimination -------------------------------------------


def bareiss_det(a):
    """Determinant of an integer (or exact) square matrix, fraction-free."""
    m = [list(row) for row in a]
    n = len(m)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        piv = next((i for i in range(k, n) if m[i][k] != 0), None)
        if piv is None:
            return 0
        if piv != k:
            m[k], m[piv] = m[piv], m[k]
            sign = -sign
        akk = m[k][k]
        for i in range(k + 1, n):
            aik = m[i][k]
            row_i, row_k = m[i], m[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
            row_i[k] = 0
        prev = akk
    return sign * m[n - 1][n - 1]


def bareiss_solve(a, b):
    """Solve A x = b exactly for a nonsingular rational matrix.

    Rows are cleared of denominators, then one-step Bareiss elimination runs
    on the augmented integer matrix, pivoting on the first nonzero entry at
    or below the diagonal.  Returns a list of Fractions, or None when A is
    singular.
    """
    n = len(a)
    rows = []
    for i in range(n):
        entries = [Fraction(v) for v in a[i]] + [Fraction(b[i])]
        den = 1
        for v in entries:
            den = math.lcm(den, v.denominator)
        rows.append([int(v * den) for v in entries])
    prev = 1
    for k in range(n):
        piv = next((i for i in range(k, n) if rows[i][k] != 0), None)
        if piv is None:
            return None
        rows[k], rows[piv] = rows[piv], rows[k]
        akk = rows[k][k]
        row_k = rows[k]
        for i in range(k + 1, n):
            row_i = rows[i]
            aik = row_i[k]
            if aik == 0:
                if prev != 1:
                    for j in range(k + 1, n + 1):
                        row_i[j] = row_i[j] * akk // prev
                else:
                    for j in range(k + 1, n + 1):
                        row_i[j] *= akk
            else:
                for j in range(k + 1, n + 1):
                    row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
            row_i[k] = 0
        prev = akk
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        s = Fraction(rows[i][n])
        for j in range(i + 1, n):
            if rows[i][j]:
                s -= rows[i][j] * x[j]
        x[i] = s / rows[i][i]
    return x


# -- modular LU and p-adic lifting ----------------------------------------


def _fmod(x, p):
    """x mod p for float64 arrays of exact integers below 2**53.

    Much faster than np.mod here.  Correctly rounded division can only
    overshoot an exact multiple of p, so a single upward correction suffices.
    """
    x = np.asarray(x, dtype=np.float64)
    r = x - np.floor(x / p) * p
    np.add(r, p, out=r, where=r < 0)
    return r


def _matmul_mod(a, b, p):
    """(a @ b) mod p for float64 arrays of residues, exact for p < 2**21."""
    k = a.shape[1]
    if k <= MATMUL_CHUNK:
        return _fmod(a @ b, p)
    out = np.zeros((a.shape[0], b.shape[1]))
    for c in range(0, k, MATMUL_CHUNK):
        out = _fmod(out + _fmod(a[:, c : c + MATMUL_CHUNK] @ b[c : c + MATMUL_CHUNK], p), p)
    return out


def _tri_inverse(t, p, unit):
    """Inverse mod p of a lower unit-triangular or upper triangular block."""
    b = t.shape[0]
    if b > LEAF:
        h = b // 2
        if unit:
            i1 = _tri_inverse(t[:h, :h], p, True)
            i2 = _tri_inverse(t[h:, h:], p, True)
            x = np.zeros((b, b))
            x[:h, :h], x[h:, h:] = i1, i2
            x[h:, :h] = _fmod(-_matmul_mod(_matmul_mod(i2, t[h:, :h], p), i1, p), p)
            return x
        i1 = _tri_inverse(t[:h, :h], p, False)
        i2 = _tri_inverse(t[h:, h:], p, False)
        x = np.zeros((b, b))
        x[:h, :h], x[h:, h:] = i1, i2
        x[:h, h:] = _fmod(-_matmul_mod(_matmul_mod(i1, t[:h, h:], p), i2, p), p)
        return x
    if unit:
        x = np.eye(b)
        for j in range(1, b):
            x[j] = _fmod(x[j] - _fmod(t[j, :j] @ x[:j], p), p)
        return x
    x = np.zeros((b, b))
    for j in range(b - 1, -1, -1):
        inv = pow(int(t[j, j]), p - 2, p)
        row = np.zeros(b)
        row[j] = 1.0
        if j + 1 < b:
            row = _fmod(row - _fmod(t[j, j + 1 :] @ x[j + 1 :], p), p)
        x[j] = _fmod(row * inv, p)
    return x


class _Singular(Exception):
    pass


class ModularLU:
    """LU factorization with row pivoting over Z/p, stored in float64.

    Columns are split recursively so nearly all the work is in matrix
    products; pivots are the first nonzero entry at or below the diagonal.
    """

    def __init__(self, a, p, block=LIFT_BLOCK):
        if p >= 1 << LIFT_PRIME_BITS:
            raise ValueError("prime too large for exact float64 products")
        self.p = p
        self.block = block
        self.lu = np.mod(np.asarray(a, dtype=np.int64), p).astype(np.float64)
        self.n = n = self.lu.shape[0]
        self.perm = np.arange(n)
        self.singular = False
        try:
            self._factor(0, n)
        except _Singular:
            self.singular = True
            return
        lu = self.lu
        self._blocks = [(k0, min(k0 + block, n)) for k0 in range(0, n, block)]
        self._linv = [_tri_inverse(lu[k0:k1, k0:k1], p, True) for k0, k1 in self._blocks]
        self._uinv = [_tri_inverse(lu[k0:k1, k0:k1], p, False) for k0, k1 in self._blocks]

    def _factor(self, j0, w):
        lu, p = self.lu, self.p
        j1 = j0 + w
        if w <= LEAF:
            # factor a contiguous copy of the panel, then replay its swaps
            panel = np.array(lu[j0:, j0:j1], order="F")
            swaps = []
            for c in range(w):
                nz = np.flatnonzero(panel[c:, c])
                if nz.size == 0:
                    raise _Singular
                i = c + int(nz[0])
                if i != c:
                    panel[[i, c]] = panel[[c, i]]
                    swaps.append((j0 + i, j0 + c))
                inv = pow(int(panel[c, c]), p - 2, p)
                col = _fmod(panel[c + 1 :, c] * inv, p)
                panel[c + 1 :, c] = col
                if c + 1 < w:
                    panel[c + 1 :, c + 1 :] = _fmod(panel[c + 1 :, c + 1 :] - np.outer(col, panel[c, c + 1 :]), p)
            lu[j0:, j0:j1] = panel
            for i, j in swaps:
                lu[[i, j], :j0] = lu[[j, i], :j0]
                lu[[i, j], j1:] = lu[[j, i], j1:]
                self.perm[[i, j]] = self.perm[[j, i]]
            return
        h = w // 2
        m = j0 + h
        self._factor(j0, h)
        linv = _tri_inverse(lu[j0:m, j0:m], p, True)
        lu[j0:m, m:j1] = _matmul_mod(linv, lu[j0:m, m:j1], p)
        if h <= MATMUL_CHUNK:
            lu[m:, m:j1] = _fmod(lu[m:, m:j1] - lu[m:, j0:m] @ lu[j0:m, m:j1], p)
        else:
            lu[m:, m:j1] = _fmod(lu[m:, m:j1] - _matmul_mod(lu[m:, j0:m], lu[j0:m, m:j1], p), p)
        self._factor(m, w - h)

    def solve(self, b):
        p, lu = self.p, self.lu
        y = np.mod(np.asarray(b, dtype=np.int64)[self.perm], p).astype(np.float64)
        for (k0, k1), linv in zip(self._blocks, self._linv):
            y[k0:k1] = _fmod(linv @ y[k0:k1], p)
            if k1 < self.n:
                y[k1:] = _fmod(y[k1:] - _fmod(lu[k1:, k0:k1] @ y[k0:k1], p), p)
        for (k0, k1), uinv in zip(reversed(self._blocks), reversed(self._uinv)):
            y[k0:k1] = _fmod(uinv @ y[k0:k1], p)
            if k0 > 0:
                y[:k0] = _fmod(y[:k0] - _fmod(lu[:k0, k0:k1] @ y[k0:k1], p), p)
        return y.astype(np.int64)


def rational_reconstruction(u, m):
    """Find n/d with n = d*u mod m, |n|, d <= sqrt(m/2); None if none exists."""
    u %= m
    bound = math.isqrt(m // 2)
    r0, r1 = m, u
    s0, s1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if s1 == 0 or abs(s1) > bound:
        return None
    if s1 < 0:
        r1, s1 = -r1, -s1
    if math.gcd(r1, s1) != 1:
        return None
    return Fraction(r1, s1)


def _reconstruct_vector(xs, m):
    """Common-denominator reconstruction; returns (numerators, denominator)."""
    den = 1
    nums = []
    bound = math.isqrt(m // 2)
    for x in xs:
        u = den * x % m
        if u > m // 2:
            u -= m
        if abs(u) <= bound:
            nums.append(u)
            continue
        q = rational_reconstruction(u, m)
        if q is None:
            return None
        den *= q.denominator
        if den > bound:
            return None
        nums = [v * q.denominator for v in nums]
        nums.append(q.numerator)
    return nums, den


def dixon_solve(a, b, verify, max_steps=4000, primes=None):
    """Solve A x = b for an integer matrix by p-adic lifting.

    ``verify(numerators, denominator)`` must return True exactly when the
    candidate solves the system; lifting continues until a reconstruction
    passes.  Returns (numerators, denominator) or None if A is singular
    modulo every tried prime.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    for p in primes or primes_below(LIFT_PRIME_BITS, 3):
        lu = ModularLU(a, p)
        if lu.singular:
            continue
        r = b.copy()
        acc = [0] * a.shape[0]
        modulus = 1
        next_try = 4
        for step in range(1, max_steps + 1):
            xi = lu.solve(r)
            resid = r - a @ xi
            r = resid // p
            xl = xi.tolist()
            acc = [c + modulus * d for c, d in zip(acc, xl)]
            modulus *= p
            if step >= next_try or not np.any(r):
                rec = _reconstruct_vector(acc, modulus)
                if rec is not None and verify(*rec):
                    return rec
                next_try = step + max(2, step // 4)
        return None
    return None


# -- multimodular characteristic polynomial -------------------------------


def crt_pair(r1, m1, r2, m2):
    t = (r2 - r1) * pow(m1, -1, m2) % m2
    return r1 + m1 * t, m1 * m2


def charpoly_integer(c, bound_bits):
    """Coefficients (ascending) of det(lambda*I - C) for an integer matrix C.

    ``bound_bits`` bounds log2 of the largest coefficient magnitude; enough
    31-bit primes are combined by CRT to cover twice that range.
    """
    c = np.asarray(c, dtype=np.int64)
    n = c.shape[0]
    if n == 0:
        return [1]
    need = bound_bits + 2
    count = need // (CRT_PRIME_BITS - 1) + 1
    res, mod = None, 1
    for p in primes_below(CRT_PRIME_BITS, count):
        coeffs = [int(v) for v in kernels.charpoly_mod(c, p)]
        if res is None:
            res, mod = coeffs, p
        else:
            out = []
            for r1, r2 in zip(res, coeffs):
                r, m = crt_pair(r1, mod, r2, p)
                out.append(r)
            res, mod = out, mod * p
    half = mod // 2
    return [v - mod if v > half else v for v in res]
