"""Seeded Galton-Watson sampling and Monte Carlo branch statistics.

Randomness is a counter-based splittable generator: the uniform driving the
offspring draw of node ``m`` of tree ``t`` under seed ``s`` is a pure hash of
(s, t, m).  Draws therefore never depend on batching, chunking or thread
count, and any tree can be regrown bit-identically from its index alone.
Trees grow level-synchronously in batches of flat arrays; the tests check
this pipeline node-for-node against the ``trees`` module.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from . import _fast
from .distributions import TokunagaTable, order_distribution
from .errors import ConditioningError
from .trees import Tree

__all__ = [
    "McEstimates",
    "SampleConfig",
    "chi_square_two_sample",
    "mc_tokunaga",
    "order_histogram",
    "sample_conditioned",
    "sample_tree",
]

DEFAULT_MAX_VERTICES = 1_000_000

_U64 = np.uint64
_GOLD1 = _U64(0x9E3779B97F4A7C15)
_GOLD2 = _U64(0xC2B2AE3D27D4EB4F)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
_SCALE = 1.0 / 9007199254740992.0  # 2^-53


def _mix64(z):
    """splitmix64 finalizer; uint64 scalar or array."""
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


def _uniforms(seed, tree, node):
    """U[0,1) keyed by (seed, tree index, node index); vectorized."""
    s = _U64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    t = np.asarray(tree, dtype=np.uint64)
    m = np.asarray(node, dtype=np.uint64)
    h = _mix64(s + (t + _U64(1)) * _GOLD1)
    h = _mix64(h ^ ((m + _U64(1)) * _GOLD2))
    return ((h >> _U64(11)).astype(np.float64)) * _SCALE


_M64 = 0xFFFFFFFFFFFFFFFF


def _mix64_int(z):
    """Pure-int splitmix64 finalizer, bit-identical to :func:`_mix64`."""
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def _uniform_scalar(seed, tree, node):
    h = _mix64_int((seed + (tree + 1) * 0x9E3779B97F4A7C15) & _M64)
    h = _mix64_int(h ^ (((node + 1) * 0xC2B2AE3D27D4EB4F) & _M64))
    return (h >> 11) * _SCALE


@dataclass(frozen=True)
class SampleConfig:
    """Reproducible sampling plan; identical configs give identical streams."""

    seed: int
    n_trees: int
    max_vertices: int = DEFAULT_MAX_VERTICES
    max_order: int | None = None
    rejection_budget: int = 20_000_000
    threads: int = 1

    def __post_init__(self):
        if self.n_trees < 1 or self.max_vertices < 2 or self.rejection_budget < 1:
            raise ValueError("invalid sampling configuration")


class _OffspringSampler:
    """Inverse-CDF offspring draws from a lazily extended cumulative table."""

    def __init__(self, dist, table_cap):
        self.dist = dist
        self.cap = int(table_cap)
        n0 = min(1024, self.cap)
        self._table = np.cumsum(dist.pmf_upto(n0))

    def _extend(self, need):
        n = min(max(need, 2 * len(self._table)), self.cap + 1)
        self._table = np.cumsum(self.dist.pmf_upto(n - 1))

    def draw(self, u):
        """Offspring counts for uniforms ``u``; -1 flags a draw beyond the
        table cap (the tree is censored by the caller)."""
        t = self._table
        ks = np.searchsorted(t, u, side="right")
        while np.any(ks >= len(t)) and len(t) < self.cap + 1:
            self._extend(len(t) + 1)
            t = self._table
            ks = np.searchsorted(t, u, side="right")
        ks = np.asarray(ks, dtype=np.int64)
        ks[ks >= len(t)] = -1
        return ks

    def draw_scalar(self, u):
        t = self._table
        k = int(np.searchsorted(t, u, side="right"))
        while k >= len(t) and len(t) < self.cap + 1:
            self._extend(len(t) + 1)
            t = self._table
            k = int(np.searchsorted(t, u, side="right"))
        return -1 if k >= len(t) else k


class _Forest:
    """A batch of trees grown level-synchronously into flat global arrays.

    Nodes are numbered globally in level order; within a level the frontier
    stays grouped by tree, so each node's children occupy one contiguous
    global range and each level is one contiguous block.
    """

    __slots__ = ("tree_ids", "slot_of_node", "parent", "ccount", "levels",
                 "sizes", "censored", "total", "order")

    def __init__(self, sampler, seed, tree_ids, cap):
        tree_ids = np.asarray(tree_ids, dtype=np.int64)
        B = len(tree_ids)
        self.tree_ids = tree_ids
        slot = np.arange(B, dtype=np.int32)
        slots = [slot, slot.copy()]
        parents = [np.full(B, -1, np.int64),
                   np.arange(B, dtype=np.int64)]
        counts = [np.ones(B, np.int32)]
        self.levels = [(0, B), (B, 2 * B)]
        sizes = np.full(B, 2, dtype=np.int64)
        censored = np.zeros(B, dtype=bool)
        # frontier state: global start, per-tree slots, per-tree node ids
        f_slot = slot.copy()
        f_node = np.ones(B, dtype=np.int64)  # node 0 is the root
        next_node = np.full(B, 2, dtype=np.int64)
        total = 2 * B
        while len(f_slot):
            width = len(f_slot)
            if width > 24:
                u = _uniforms(seed, tree_ids[f_slot], f_node)
                ks = sampler.draw(u)
                bad = ks < 0
                if bad.any():
                    censored[np.unique(f_slot[bad])] = True
                    ks[bad] = 0
                grow = np.bincount(f_slot, weights=ks,
                                   minlength=B).astype(np.int64)
                over = (sizes + grow > cap) & ~censored
                censored |= over
                if censored.any():
                    ks[censored[f_slot]] = 0
                    grow = np.bincount(f_slot, weights=ks,
                                       minlength=B).astype(np.int64)
                s = int(ks.sum())
                if s == 0:
                    counts.append(ks.astype(np.int32))
                    break
                sizes += grow
                child_slot = np.repeat(f_slot, ks)
                parents.append(np.repeat(
                    np.arange(total - width, total, dtype=np.int64), ks))
                # per-tree node ids: consecutive within each tree's block
                prefix = np.concatenate(([0], np.cumsum(ks)[:-1]))
                local = np.arange(s, dtype=np.int64) - np.repeat(prefix, ks)
                first = np.concatenate(([True], f_slot[1:] != f_slot[:-1]))
                run_len = np.diff(np.concatenate(
                    (np.nonzero(first)[0], [width])))
                within = prefix - np.repeat(prefix[first], run_len)
                child_node = (np.repeat(next_node[f_slot] + within, ks)
                              + local)
                next_node += grow
            else:
                # scalar fast path for narrow frontiers: deep stragglers
                # dominate the level count and per-level numpy overhead
                ks_l, cs_l, cn_l, cp_l = [], [], [], []
                gstart = total - width
                for pos in range(width):
                    slot_i = int(f_slot[pos])
                    if censored[slot_i]:
                        ks_l.append(0)
                        continue
                    u = _uniform_scalar(int(seed) & _M64,
                                        int(tree_ids[slot_i]),
                                        int(f_node[pos]))
                    k = sampler.draw_scalar(u)
                    if k < 0 or sizes[slot_i] + k > cap:
                        censored[slot_i] = True
                        ks_l.append(0)
                        continue
                    ks_l.append(k)
                    sizes[slot_i] += k
                    nn = next_node[slot_i]
                    for r in range(k):
                        cs_l.append(slot_i)
                        cn_l.append(nn + r)
                        cp_l.append(gstart + pos)
                    next_node[slot_i] += k
                s = len(cs_l)
                ks = np.array(ks_l, dtype=np.int64)
                if s == 0:
                    counts.append(ks.astype(np.int32))
                    break
                child_slot = np.array(cs_l, dtype=np.int32)
                child_node = np.array(cn_l, dtype=np.int64)
                parents.append(np.array(cp_l, dtype=np.int64))
            counts.append(ks.astype(np.int32))
            slots.append(child_slot)
            self.levels.append((total, total + s))
            total += s
            f_slot = child_slot
            f_node = child_node
        self.slot_of_node = np.concatenate(slots)[:total]
        self.parent = np.concatenate(parents)[:total]
        ccount = np.concatenate(counts)
        self.ccount = np.concatenate(
            (ccount, np.zeros(total - len(ccount), np.int32)))
        self.sizes = sizes
        self.censored = censored
        self.total = total
        self.order = None

    def compute_orders(self):
        """Horton-Strahler order of every node, bottom-up over levels."""
        order = np.ones(self.total, dtype=np.int32)
        cnt = self.ccount
        for lo, hi in reversed(self.levels):
            seg = cnt[lo:hi]
            branching = seg > 0
            if not branching.any():
                continue
            widths = seg[branching]
            child_lo = hi
            offsets = np.concatenate(([0], np.cumsum(widths)[:-1]))
            kids = order[child_lo:child_lo + int(widths.sum())]
            m = np.maximum.reduceat(kids, offsets)
            ties = np.add.reduceat(kids == np.repeat(m, widths), offsets)
            vals = np.ones(hi - lo, dtype=np.int32)
            vals[branching] = m + (ties >= 2)
            order[lo:hi] = vals
        self.order = order
        return order

    def tree_orders(self):
        """Order of each tree in the batch (-1 where censored)."""
        if self.order is None:
            self.compute_orders()
        B = len(self.tree_ids)
        out = self.order[self.levels[1][0]:self.levels[1][1]].astype(np.int16)
        out = out.copy()
        out[self.censored] = -1
        return out

    def extract_tree(self, slot):
        """Materialize one (non-censored) tree as a Tree value."""
        mask = self.slot_of_node == slot
        idx = np.nonzero(mask)[0]
        remap = {int(g): i for i, g in enumerate(idx)}
        parents = tuple(
            None if self.parent[g] < 0 else remap[int(self.parent[g])]
            for g in idx)
        return Tree(parents)

    def branch_moments(self, K, accepted_slots):
        """Per-tree branch statistics of the accepted slots, reduced to the
        moment sums needed by the ratio estimators."""
        if self.order is None:
            self.compute_orders()
        B = len(self.tree_ids)
        dim = K + 2
        nonroot = self.parent >= 0
        vo = self.order[nonroot]
        po = self.order[self.parent[nonroot]]
        slot = self.slot_of_node[nonroot]
        par = self.parent[nonroot]
        keep = np.zeros(B, dtype=bool)
        keep[accepted_slots] = True
        sel = keep[slot]
        root_child = self.parent[self.parent[nonroot]] < 0
        initial = sel & (root_child | (po != vo))
        ncount = np.bincount(slot[initial] * dim + vo[initial],
                             minlength=B * dim).reshape(B, dim)
        side = sel & (vo < po)
        pair = slot[side] * dim * dim + vo[side] * dim + po[side]
        nij = np.bincount(pair, minlength=B * dim * dim).reshape(B, dim, dim)
        same = np.zeros(self.total, dtype=bool)
        same[par[po == vo]] = True
        reg = side & same[par]
        pair_r = slot[reg] * dim * dim + vo[reg] * dim + po[reg]
        nreg = np.bincount(pair_r, minlength=B * dim * dim).reshape(B, dim, dim)
        N = ncount[accepted_slots, : K + 1].astype(float)
        X = nij[accepted_slots, : K + 1, : K + 1].astype(float)
        XR = nreg[accepted_slots, : K + 1, : K + 1].astype(float)
        return {
            "sx": X.sum(0), "sxx": (X * X).sum(0),
            "sxy": (X * N[:, None, :]).sum(0),
            "srx": XR.sum(0), "srxx": (XR * XR).sum(0),
            "srxy": (XR * N[:, None, :]).sum(0),
            "sy": N.sum(0), "syy": (N * N).sum(0),
            "sn1": (N * N[:, 1:2]).sum(0),
        }


# ---------------------------------------------------------------------------
# public sampling operations
# ---------------------------------------------------------------------------

def sample_tree(dist, seed, max_vertices=DEFAULT_MAX_VERTICES, index=0):
    """One planted Galton-Watson tree; None when the draw exceeds the cap."""
    sampler = _OffspringSampler(dist, max_vertices)
    forest = _Forest(sampler, seed, [index], max_vertices)
    if forest.censored[0]:
        return None
    return forest.extract_tree(0)


def sample_conditioned(dist, order, seed, budget=1_000_000,
                       max_vertices=DEFAULT_MAX_VERTICES, batch=1024):
    """Rejection-sample one tree of exactly the given order; an exact draw
    from the order-conditioned law.  Returns (tree, attempts)."""
    pK = float(order_distribution(dist, order).pi[order - 1])
    if not pK > 0.0:
        raise ConditioningError(f"pi_{order} = 0: conditioning impossible")
    sampler = _OffspringSampler(dist, max_vertices)
    start = 0
    while start < budget:
        ids = np.arange(start, min(start + batch, budget))
        forest = _Forest(sampler, seed, ids, max_vertices)
        ords = forest.tree_orders()
        hits = np.nonzero(ords == order)[0]
        if len(hits):
            slot = int(hits[0])
            return forest.extract_tree(slot), start + slot + 1
        start += len(ids)
    raise ConditioningError(
        f"no order-{order} tree within {budget} attempts "
        f"(expected about {1.0 / pK:.1f} per acceptance)")


def _full_table(dist, cap):
    """The cumulative offspring table exactly as the lazy sampler would have
    extended it to the cap (so censoring decisions agree bit for bit)."""
    return np.cumsum(dist.pmf_upto(cap))


def _orders_block(dist, seed, start, stop, max_vertices, batch=2048,
                  use_fast=True):
    if use_fast and _fast.HAVE_NUMBA:
        table = _full_table(dist, max_vertices)
        out = np.empty(stop - start, dtype=np.int16)
        _fast.scan_orders(np.uint64(seed & 0xFFFFFFFFFFFFFFFF), start, stop,
                          max_vertices, table, out)
        return out
    sampler = _OffspringSampler(dist, max_vertices)
    out = np.empty(stop - start, dtype=np.int16)
    for lo in range(start, stop, batch):
        ids = np.arange(lo, min(lo + batch, stop))
        forest = _Forest(sampler, seed, ids, max_vertices)
        out[lo - start:lo - start + len(ids)] = forest.tree_orders()
    return out


def order_histogram(dist, n_trees, seed, max_vertices=DEFAULT_MAX_VERTICES,
                    max_bin=64, start_index=0, threads=1):
    """Histogram of tree orders over ``n_trees`` draws plus censored count."""
    orders = _scan_orders(dist, seed, start_index, start_index + n_trees,
                          max_vertices, threads)
    censored = int(np.count_nonzero(orders == -1))
    kept = np.minimum(orders[orders >= 0], max_bin)
    counts = np.bincount(kept, minlength=max_bin + 1)
    return counts, censored


def _scan_orders(dist, seed, start, stop, max_vertices, threads):
    if threads <= 1 or stop - start < 20000:
        return _orders_block(dist, seed, start, stop, max_vertices)
    spans = np.linspace(start, stop, threads + 1, dtype=np.int64)
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(_orders_block, [dist] * threads, [seed] * threads,
                              spans[:-1], spans[1:], [max_vertices] * threads))
    return np.concatenate(parts)


def _moments_for_indices(dist, K, seed, indices, max_vertices, batch=1024,
                         use_fast=True):
    if use_fast and _fast.HAVE_NUMBA:
        table = _full_table(dist, max_vertices)
        dim = K + 1
        acc = {name: np.zeros((dim, dim)) for name in
               ("sx", "sxx", "sxy", "srx", "srxx", "srxy")}
        for name in ("sy", "syy", "sn1"):
            acc[name] = np.zeros(dim)
        _fast.moment_sums(np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
                          np.asarray(indices, dtype=np.int64), max_vertices,
                          table, K, acc["sx"], acc["sxx"], acc["sxy"],
                          acc["srx"], acc["srxx"], acc["srxy"], acc["sy"],
                          acc["syy"], acc["sn1"])
        return acc
    sampler = _OffspringSampler(dist, max_vertices)
    total = None
    for lo in range(0, len(indices), batch):
        ids = indices[lo:lo + batch]
        forest = _Forest(sampler, seed, ids, max_vertices)
        part = forest.branch_moments(K, np.arange(len(ids)))
        total = part if total is None else _merge(total, part)
    return total


def _merge(a, b):
    for key in b:
        a[key] = a[key] + b[key]
    return a


def _ratio_se(sx, sxx, sxy, sy, syy, n):
    """Delta-method standard error of (sum x)/(sum y) over n trees."""
    xbar, ybar = sx / n, sy / n
    r = np.divide(xbar, ybar, out=np.zeros_like(xbar + 0.0), where=ybar != 0)
    vx = sxx / n - xbar**2
    vy = syy / n - ybar**2
    cxy = sxy / n - xbar * ybar
    var = np.maximum(vx - 2.0 * r * cxy + r * r * vy, 0.0)
    se = np.zeros_like(var)
    np.divide(np.sqrt(var / n), ybar, out=se, where=ybar != 0)
    return r, se


@dataclass
class McEstimates:
    """Monte Carlo branch statistics of the order-K conditioned ensemble."""

    order: int
    n_accepted: int
    n_draws: int
    censored: int
    seed: int
    tokunaga: TokunagaTable
    N_mean: np.ndarray
    N_ratio: np.ndarray
    N_ratio_se: np.ndarray
    pi_hat: np.ndarray
    pi_se: np.ndarray
    config: dict = field(default_factory=dict)

    @property
    def censoring_rate(self):
        return self.censored / self.n_draws

    @property
    def acceptance_rate(self):
        return self.n_accepted / self.n_draws

    def to_csv(self, path):
        K = self.order
        with open(path, "w") as fh:
            fh.write("kind,i,j,estimate,se,n\n")
            for j in range(2, K + 1):
                for i in range(1, j):
                    fh.write(f"T,{i},{j},{float(self.tokunaga.T[i, j])!r},"
                             f"{float(self.tokunaga.stderr_T[i, j])!r},"
                             f"{self.n_accepted}\n")
                    fh.write(f"T_reg,{i},{j},{float(self.tokunaga.T_reg[i, j])!r},"
                             f"{float(self.tokunaga.stderr_T_reg[i, j])!r},"
                             f"{self.n_accepted}\n")
            for k in range(1, K + 1):
                fh.write(f"N_ratio,{k},1,{float(self.N_ratio[k])!r},"
                         f"{float(self.N_ratio_se[k])!r},{self.n_accepted}\n")

    def to_jsonable(self):
        return {
            "order": self.order,
            "n_accepted": self.n_accepted,
            "n_draws": self.n_draws,
            "censored": self.censored,
            "censoring_rate": self.censoring_rate,
            "acceptance_rate": self.acceptance_rate,
            "seed": self.seed,
            "N_ratio": list(map(float, self.N_ratio[1:])),
            "N_ratio_se": list(map(float, self.N_ratio_se[1:])),
            "config": self.config,
        }


def mc_tokunaga(dist, K, n_trees, seed, max_vertices=DEFAULT_MAX_VERTICES,
                rejection_budget=20_000_000, threads=1):
    """Ratio estimators t_hat = E[n_ij]/E[N_j] over order-K conditioned trees.

    A scan pass records every attempt's tree order, pinning down the first
    ``n_trees`` accepted attempt indices together with the exact draw and
    censoring counts up to the last accepted attempt; a second pass regrows
    exactly those trees (randomness is keyed by attempt index) and reduces
    them to moment sums.  Standard errors use the delta method.
    """
    pK = float(order_distribution(dist, K).pi[K - 1])
    if not pK > 0.0:
        raise ConditioningError(f"pi_{K} = 0: conditioning impossible")
    if n_trees / pK * 1.1 > rejection_budget:
        raise ConditioningError(
            f"about {n_trees / pK:.0f} draws needed for {n_trees} accepted "
            f"order-{K} trees, beyond the budget {rejection_budget}")
    horizon = 0
    scanned = np.empty(0, dtype=np.int16)
    goal = int(n_trees / pK * 1.25) + 4096
    while True:
        stop = min(max(goal, horizon * 2), rejection_budget)
        if stop <= horizon:
            raise ConditioningError(
                f"budget exhausted: {int(np.count_nonzero(scanned == K))} "
                f"accepted of {n_trees} requested")
        scanned = np.concatenate([
            scanned,
            _scan_orders(dist, seed, horizon, stop, max_vertices, threads),
        ])
        horizon = stop
        hits = np.nonzero(scanned == K)[0]
        if len(hits) >= n_trees:
            break
    chosen = hits[:n_trees]
    used = int(chosen[-1]) + 1
    censored = int(np.count_nonzero(scanned[:used] == -1))
    if threads > 1:
        chunks = np.array_split(chosen, threads * 4)
        chunks = [c for c in chunks if len(c)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_moments_for_indices, [dist] * len(chunks),
                                  [K] * len(chunks), [seed] * len(chunks),
                                  chunks, [max_vertices] * len(chunks)))
    else:
        parts = [_moments_for_indices(dist, K, seed, chosen, max_vertices)]
    total = parts[0]
    for part in parts[1:]:
        total = _merge(total, part)
    n = n_trees
    t_hat, t_se = _ratio_se(total["sx"], total["sxx"], total["sxy"],
                            total["sy"], total["syy"], n)
    to_hat, to_se = _ratio_se(total["srx"], total["srxx"], total["srxy"],
                              total["sy"], total["syy"], n)
    T = t_hat.copy()
    for j in range(2, K + 1):
        T[j - 1, j] -= 2.0
    table = TokunagaTable(order=K, T=T, T_reg=to_hat, t_total=t_hat,
                          provenance="monte-carlo", stderr_T=t_se,
                          stderr_T_reg=to_se)
    nr, nr_se = _ratio_se(total["sy"], total["syy"], total["sn1"],
                          np.full(K + 1, total["sy"][1]),
                          np.full(K + 1, total["syy"][1]), n)
    kept = scanned[:used]
    oc = np.bincount(kept[kept >= 0].astype(np.int64), minlength=40)[:40]
    eff = max(used - censored, 1)
    pi_hat = oc.astype(float) / eff
    pi_se = np.sqrt(np.maximum(pi_hat * (1 - pi_hat), 0.0) / eff)
    return McEstimates(
        order=K, n_accepted=n, n_draws=used, censored=censored, seed=seed,
        tokunaga=table, N_mean=total["sy"] / n, N_ratio=nr, N_ratio_se=nr_se,
        pi_hat=pi_hat, pi_se=pi_se,
        config={"n_trees": n_trees, "max_vertices": max_vertices,
                "threads": threads},
    )


def chi_square_two_sample(counts_a, counts_b, min_expected=5.0):
    """Two-sample chi-square homogeneity test with tail pooling.

    Bins are pooled left to right until both pooled expected counts reach
    ``min_expected``; returns (statistic, dof, p_value).
    """
    a = np.asarray(counts_a, dtype=float)
    b = np.asarray(counts_b, dtype=float)
    hi = max(len(a), len(b))
    a = np.pad(a, (0, hi - len(a)))
    b = np.pad(b, (0, hi - len(b)))
    na, nb = a.sum(), b.sum()
    pooled_a, pooled_b = [], []
    acc_a = acc_b = 0.0
    for i in range(hi):
        acc_a += a[i]
        acc_b += b[i]
        exp_a = na * (acc_a + acc_b) / (na + nb)
        exp_b = nb * (acc_a + acc_b) / (na + nb)
        if exp_a >= min_expected and exp_b >= min_expected:
            pooled_a.append(acc_a)
            pooled_b.append(acc_b)
            acc_a = acc_b = 0.0
    if (acc_a or acc_b) and pooled_a:
        pooled_a[-1] += acc_a
        pooled_b[-1] += acc_b
    if len(pooled_a) < 2:
        return 0.0, 1, 1.0  # everything pooled into one bin: no test
    a = np.array(pooled_a)
    b = np.array(pooled_b)
    tot = a + b
    ea = na * tot / (na + nb)
    eb = nb * tot / (na + nb)
    stat = float(np.sum((a - ea) ** 2 / ea) + np.sum((b - eb) ** 2 / eb))
    dof = max(len(a) - 1, 1)
    return stat, dof, float(sps.chi2.sf(stat, dof))
