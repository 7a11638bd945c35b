"""Pure numpy implementations of the hot kernels.

Every function here has a twin with the same signature in ``_ckernels.pyx``;
``treepile.kernels`` picks one at import.  Arrays are int64 unless noted.
"""

import numpy as np

BACKEND = "python"

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _digits(radix, weight, size):
    idx = np.arange(size, dtype=np.int64)
    return idx, (idx[:, None] // weight[None, :]) % radix[None, :]


def source_table(radix, weight, path, size):
    idx, dig = _digits(radix, weight, size)
    out = idx.copy()
    done = np.zeros(size, dtype=bool)
    for u in path:
        free = (~done) & (dig[:, u] < radix[u] - 1)
        out[free] += weight[u]
        done |= free
    return out


def trickle_table(radix, weight, path, size):
    idx, dig = _digits(radix, weight, size)
    v = path[0]
    active = dig[:, v] > 0
    out = idx.copy()
    out[active] -= weight[v]
    for u in path[1:]:
        free = active & (dig[:, u] < radix[u] - 1)
        out[free] += weight[u]
        active &= ~free
    return out


def landslide_table(radix, weight, path, size):
    idx, dig = _digits(radix, weight, size)
    v = path[0]
    grains = dig[:, v].copy()
    out = idx - grains * weight[v]
    for u in path[1:]:
        take = np.minimum(grains, radix[u] - 1 - dig[:, u])
        out += take * weight[u]
        grains -= take
    return out


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def trajectory_seeds(seed, trials):
    """Per-trajectory stream states: mix(seed XOR mix((i + 1) * GOLDEN))."""
    counter = (np.arange(trials, dtype=np.uint64) + np.uint64(1)) * GOLDEN
    return _mix(np.uint64(seed) ^ _mix(counter))


def simulate(tables, cumulative, denominator, seed, initial, steps, trials):
    """Run ``trials`` independent trajectories for ``steps`` steps.

    At each step a trajectory advances its splitmix64 stream, takes the top
    32 bits r and picks the first generator g with
    (r * denominator) >> 32 < cumulative[g].
    """
    tables = np.asarray(tables, dtype=np.int64)
    cumulative = np.asarray(cumulative, dtype=np.int64)
    state = np.full(trials, initial, dtype=np.int64)
    stream = trajectory_seeds(seed, trials)
    denom = np.uint64(denominator)
    with np.errstate(over="ignore"):
        for _ in range(steps):
            stream = stream + GOLDEN
            r = ((_mix(stream) >> np.uint64(32)) * denom) >> np.uint64(32)
            g = np.searchsorted(cumulative, r.astype(np.int64), side="right")
            state = tables[g, state]
    return state


def charpoly_mod(a, p):
    """Coefficients (ascending) of det(lambda*I - A) mod p via Hessenberg form."""
    h = np.array(a, dtype=np.int64) % p
    n = h.shape[0]
    for j in range(n - 2):
        nz = np.nonzero(h[j + 1 :, j])[0]
        if nz.size == 0:
            continue
        i = j + 1 + int(nz[0])
        if i != j + 1:
            h[[i, j + 1], :] = h[[j + 1, i], :]
            h[:, [i, j + 1]] = h[:, [j + 1, i]]
        inv = pow(int(h[j + 1, j]), p - 2, p)
        for i in range(j + 2, n):
            if h[i, j] == 0:
                continue
            u = int(h[i, j]) * inv % p
            h[i, :] = (h[i, :] - u * h[j + 1, :]) % p
            h[:, j + 1] = (h[:, j + 1] + u * h[:, i]) % p
    # recurrence on leading principal submatrices
    polys = [np.array([1], dtype=np.int64)]
    for m in range(1, n + 1):
        prev = polys[m - 1]
        cur = np.zeros(m + 1, dtype=np.int64)
        cur[1:] = prev
        cur[: m] = (cur[: m] - int(h[m - 1, m - 1]) * prev) % p
        prod = 1
        for i in range(m - 1, 0, -1):
            prod = prod * int(h[i, i - 1]) % p
            c = prod * int(h[i - 1, m - 1]) % p
            if c:
                q = polys[i - 1]
                cur[: q.size] = (cur[: q.size] - c * q) % p
        polys.append(cur % p)
    return polys[n]


def solve_mod(a, b, p):
    """Solve A x = b mod p; returns None when A is singular mod p."""
    m = np.array(a, dtype=np.int64) % p
    rhs = np.array(b, dtype=np.int64) % p
    n = m.shape[0]
    for k in range(n):
        nz = np.nonzero(m[k:, k])[0]
        if nz.size == 0:
            return None
        i = k + int(nz[0])
        if i != k:
            m[[i, k]] = m[[k, i]]
            rhs[[i, k]] = rhs[[k, i]]
        inv = pow(int(m[k, k]), p - 2, p)
        m[k] = m[k] * inv % p
        rhs[k] = rhs[k] * inv % p
        col = m[:, k].copy()
        col[k] = 0
        rows = np.nonzero(col)[0]
        if rows.size:
            m[rows] = (m[rows] - (col[rows, None] * m[k][None, :]) % p) % p
            rhs[rows] = (rhs[rows] - col[rows] * rhs[k] % p) % p
    return rhs
