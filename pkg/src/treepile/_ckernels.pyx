# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_pykernels``.

Signatures and results are identical; only the speed differs.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def _as64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def source_table(radix, weight, path, Py_ssize_t size):
    cdef int64_t[::1] r = _as64(radix)
    cdef int64_t[::1] w = _as64(weight)
    cdef int64_t[::1] pth = _as64(path)
    out_arr = np.empty(size, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    cdef Py_ssize_t i, k, u, plen = pth.shape[0]
    cdef int64_t d
    with nogil:
        for i in range(size):
            out[i] = i
            for k in range(plen):
                u = pth[k]
                d = (i // w[u]) % r[u]
                if d < r[u] - 1:
                    out[i] = i + w[u]
                    break
    return out_arr


def trickle_table(radix, weight, path, Py_ssize_t size):
    cdef int64_t[::1] r = _as64(radix)
    cdef int64_t[::1] w = _as64(weight)
    cdef int64_t[::1] pth = _as64(path)
    out_arr = np.empty(size, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    cdef Py_ssize_t i, k, u, v = pth[0], plen = pth.shape[0]
    cdef int64_t d, res
    with nogil:
        for i in range(size):
            if (i // w[v]) % r[v] == 0:
                out[i] = i
                continue
            res = i - w[v]
            for k in range(1, plen):
                u = pth[k]
                d = (i // w[u]) % r[u]
                if d < r[u] - 1:
                    res = res + w[u]
                    break
            out[i] = res
    return out_arr


def landslide_table(radix, weight, path, Py_ssize_t size):
    cdef int64_t[::1] r = _as64(radix)
    cdef int64_t[::1] w = _as64(weight)
    cdef int64_t[::1] pth = _as64(path)
    out_arr = np.empty(size, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    cdef Py_ssize_t i, k, u, v = pth[0], plen = pth.shape[0]
    cdef int64_t d, g, take, res
    with nogil:
        for i in range(size):
            g = (i // w[v]) % r[v]
            res = i - g * w[v]
            k = 1
            while g > 0 and k < plen:
                u = pth[k]
                d = (i // w[u]) % r[u]
                take = r[u] - 1 - d
                if take > g:
                    take = g
                res = res + take * w[u]
                g = g - take
                k = k + 1
            out[i] = res
    return out_arr


def trajectory_seeds(seed, Py_ssize_t trials):
    out_arr = np.empty(trials, dtype=np.uint64)
    cdef uint64_t[::1] out = out_arr
    cdef uint64_t s = <uint64_t>seed
    cdef Py_ssize_t i
    for i in range(trials):
        out[i] = _mix(s ^ _mix(<uint64_t>(i + 1) * GOLDEN))
    return out_arr


def simulate(tables, cumulative, denominator, seed, int64_t initial, Py_ssize_t steps,
             Py_ssize_t trials):
    cdef int64_t[:, ::1] tab = np.ascontiguousarray(tables, dtype=np.int64)
    cdef int64_t[::1] cum = _as64(cumulative)
    cdef uint64_t denom = <uint64_t>denominator
    cdef uint64_t s = <uint64_t>seed
    out_arr = np.empty(trials, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    cdef Py_ssize_t i, j, g, ng = cum.shape[0]
    cdef uint64_t stream, rnd
    cdef int64_t state
    with nogil:
        for i in range(trials):
            stream = _mix(s ^ _mix(<uint64_t>(i + 1) * GOLDEN))
            state = initial
            for j in range(steps):
                stream = stream + GOLDEN
                rnd = ((_mix(stream) >> 32) * denom) >> 32
                g = 0
                while g < ng - 1 and <int64_t>rnd >= cum[g]:
                    g = g + 1
                state = tab[g, state]
            out[i] = state
    return out_arr


cdef inline int64_t _powmod(int64_t b, int64_t e, int64_t p) nogil:
    cdef int64_t r = 1
    b = b % p
    while e > 0:
        if e & 1:
            r = r * b % p
        b = b * b % p
        e >>= 1
    return r


def charpoly_mod(a, int64_t p):
    h_arr = np.ascontiguousarray(np.asarray(a, dtype=np.int64) % p)
    cdef int64_t[:, ::1] h = h_arr
    cdef Py_ssize_t n = h.shape[0]
    cdef Py_ssize_t i, j, k, m, piv
    cdef int64_t inv, u, tmp, prod, c
    with nogil:
        for j in range(n - 2):
            piv = -1
            for i in range(j + 1, n):
                if h[i, j] != 0:
                    piv = i
                    break
            if piv < 0:
                continue
            if piv != j + 1:
                for k in range(n):
                    tmp = h[piv, k]; h[piv, k] = h[j + 1, k]; h[j + 1, k] = tmp
                for k in range(n):
                    tmp = h[k, piv]; h[k, piv] = h[k, j + 1]; h[k, j + 1] = tmp
            inv = _powmod(h[j + 1, j], p - 2, p)
            for i in range(j + 2, n):
                if h[i, j] == 0:
                    continue
                u = h[i, j] * inv % p
                for k in range(n):
                    h[i, k] = (h[i, k] - u * h[j + 1, k] % p + p) % p
                for k in range(n):
                    h[k, j + 1] = (h[k, j + 1] + u * h[k, i]) % p
    polys_arr = np.zeros((n + 1, n + 1), dtype=np.int64)
    cdef int64_t[:, ::1] polys = polys_arr
    polys[0, 0] = 1
    with nogil:
        for m in range(1, n + 1):
            for k in range(m):
                polys[m, k + 1] = polys[m - 1, k]
            for k in range(m):
                polys[m, k] = (polys[m, k] - h[m - 1, m - 1] * polys[m - 1, k] % p + p) % p
            prod = 1
            for i in range(m - 1, 0, -1):
                prod = prod * h[i, i - 1] % p
                c = prod * h[i - 1, m - 1] % p
                if c != 0:
                    for k in range(i):
                        polys[m, k] = (polys[m, k] - c * polys[i - 1, k] % p + p) % p
    return polys_arr[n].copy()


def solve_mod(a, b, int64_t p):
    m_arr = np.ascontiguousarray(np.asarray(a, dtype=np.int64) % p)
    r_arr = np.ascontiguousarray(np.asarray(b, dtype=np.int64) % p)
    cdef int64_t[:, ::1] m = m_arr
    cdef int64_t[::1] rhs = r_arr
    cdef Py_ssize_t n = m.shape[0]
    cdef Py_ssize_t i, j, k, piv
    cdef int64_t inv, f, tmp
    cdef bint singular = False
    with nogil:
        for k in range(n):
            piv = -1
            for i in range(k, n):
                if m[i, k] != 0:
                    piv = i
                    break
            if piv < 0:
                singular = True
                break
            if piv != k:
                for j in range(n):
                    tmp = m[piv, j]; m[piv, j] = m[k, j]; m[k, j] = tmp
                tmp = rhs[piv]; rhs[piv] = rhs[k]; rhs[k] = tmp
            inv = _powmod(m[k, k], p - 2, p)
            for j in range(n):
                m[k, j] = m[k, j] * inv % p
            rhs[k] = rhs[k] * inv % p
            for i in range(n):
                if i == k or m[i, k] == 0:
                    continue
                f = m[i, k]
                for j in range(n):
                    m[i, j] = (m[i, j] - f * m[k, j] % p + p) % p
                rhs[i] = (rhs[i] - f * rhs[k] % p + p) % p
    if singular:
        return None
    return r_arr
