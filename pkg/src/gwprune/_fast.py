"""numba kernels for the sampler's hot loops.

These replay exactly the draws of the array pipeline in ``sampler``: the
uniform for node m of tree t is the same splitmix64 hash of (seed, t, m) and
the growth/censoring decisions are identical, so the two implementations are
interchangeable and are cross-checked in the tests.  Everything here is an
optional speedup; ``sampler`` falls back to the numpy path when numba is
unavailable.
"""

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap if not (args and callable(args[0])) else args[0]


_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _uniform(seed, tree, node):
    h = _mix64(seed + (tree + np.uint64(1)) * np.uint64(0x9E3779B97F4A7C15))
    h = _mix64(h ^ ((node + np.uint64(1)) * np.uint64(0xC2B2AE3D27D4EB4F)))
    return np.float64(h >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def _bisect_right(table, u):
    lo = 0
    hi = len(table)
    while lo < hi:
        mid = (lo + hi) // 2
        if u < table[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True)
def _grow_one(seed, tree, cap, table, parent, cnt):
    """Grow one planted tree; returns total nodes, or -1 when censored."""
    parent[0] = -1
    parent[1] = 0
    cnt[0] = 1
    lo = 1
    hi = 2
    while hi > lo:
        s = 0
        for i in range(lo, hi):
            u = _uniform(seed, tree, np.uint64(i))
            k = _bisect_right(table, u)
            if k >= len(table):
                return -1
            if hi + s + k > cap:
                return -1
            cnt[i] = k
            for r in range(k):
                parent[hi + s + r] = i
            s += k
        for i in range(hi, hi + s):
            cnt[i] = 0
        lo = hi
        hi = hi + s
    return hi


@njit(cache=True)
def _orders_one(total, parent, cnt, order, mx, tc):
    """Horton-Strahler orders of a grown tree; returns the tree order."""
    for v in range(total):
        mx[v] = 0
        tc[v] = 0
    for v in range(total - 1, 0, -1):
        if cnt[v] == 0:
            ov = 1
        elif tc[v] >= 2:
            ov = mx[v] + 1
        else:
            ov = mx[v]
        order[v] = ov
        p = parent[v]
        if ov > mx[p]:
            mx[p] = ov
            tc[p] = 1
        elif ov == mx[p]:
            tc[p] += 1
    order[0] = mx[0]
    return mx[0]


@njit(cache=True)
def scan_orders(seed, start, stop, cap, table, out):
    """Tree order per attempt index in [start, stop); -1 where censored."""
    parent = np.empty(cap + 1, np.int32)
    cnt = np.empty(cap + 1, np.int32)
    order = np.empty(cap + 1, np.int32)
    mx = np.empty(cap + 1, np.int32)
    tc = np.empty(cap + 1, np.int32)
    s64 = np.uint64(seed)
    for t in range(start, stop):
        total = _grow_one(s64, np.uint64(t), cap, table, parent, cnt)
        if total < 0:
            out[t - start] = -1
        else:
            out[t - start] = _orders_one(total, parent, cnt, order, mx, tc)
    return out


@njit(cache=True)
def moment_sums(seed, indices, cap, table, K,
                sx, sxx, sxy, srx, srxx, srxy, sy, syy, sn1):
    """Accumulate branch-statistic moment sums over the given attempt
    indices (all known to grow uncensored)."""
    parent = np.empty(cap + 1, np.int32)
    cnt = np.empty(cap + 1, np.int32)
    order = np.empty(cap + 1, np.int32)
    mx = np.empty(cap + 1, np.int32)
    tc = np.empty(cap + 1, np.int32)
    dim = K + 1
    N = np.empty(dim, np.float64)
    nij = np.empty((dim, dim), np.float64)
    nreg = np.empty((dim, dim), np.float64)
    same = np.empty(cap + 1, np.bool_)
    s64 = np.uint64(seed)
    for idx in indices:
        total = _grow_one(s64, np.uint64(idx), cap, table, parent, cnt)
        _orders_one(total, parent, cnt, order, mx, tc)
        for v in range(dim):
            N[v] = 0.0
            for w in range(dim):
                nij[v, w] = 0.0
                nreg[v, w] = 0.0
        for v in range(total):
            same[v] = False
        for v in range(1, total):
            if order[parent[v]] == order[v]:
                same[parent[v]] = True
        for v in range(1, total):
            p = parent[v]
            i = order[v]
            j = order[p]
            if p == 0 or j != i:
                N[i] += 1.0
            if i < j:
                nij[i, j] += 1.0
                if same[p]:
                    nreg[i, j] += 1.0
        for a in range(dim):
            sy[a] += N[a]
            syy[a] += N[a] * N[a]
            sn1[a] += N[a] * N[1]
            for b in range(dim):
                sx[a, b] += nij[a, b]
                sxx[a, b] += nij[a, b] * nij[a, b]
                sxy[a, b] += nij[a, b] * N[b]
                srx[a, b] += nreg[a, b]
                srxx[a, b] += nreg[a, b] * nreg[a, b]
                srxy[a, b] += nreg[a, b] * N[b]
