"""Pure-Python Vietoris-Rips kernel.

Same algorithm and same outputs as the compiled ``_vr_kernel`` extension; used
when the extension is not built or when ``FILLRAD_PURE_PYTHON`` is set.  Only
practical for a few hundred simplices per dimension beyond the edges.

Simplices are identified by their index in the combinatorial number system:
ascending vertices ``a_0 < ... < a_k`` map to ``sum_i C(a_i, i + 1)``.
Within a dimension the filtration order is ``(value, index)``.
"""

from __future__ import annotations

import heapq
from math import comb

import numpy as np

IMPLEMENTATION = "python"


class _Geometry:
    def __init__(self, d, threshold, maxdim):
        self.d = np.ascontiguousarray(d, dtype=np.float64)
        self.n = n = self.d.shape[0]
        self.thr = float(threshold)
        self.dl = self.d.tolist()
        adj = (self.d <= self.thr) & ~np.eye(n, dtype=bool)
        self.nbrs = [np.flatnonzero(adj[i]).tolist() for i in range(n)]
        self.upper = [[w for w in self.nbrs[i] if w > i] for i in range(n)]
        self.binom = [[comb(v, j) for j in range(maxdim + 3)] for v in range(n + 1)]

    def index(self, verts) -> int:
        b = self.binom
        return sum(b[v][i + 1] for i, v in enumerate(verts))

    def vertices(self, idx: int, k: int) -> list[int]:
        b = self.binom
        out = [0] * (k + 1)
        hi = self.n - 1
        for i in range(k, -1, -1):
            lo = i
            # largest v in [lo, hi] with C(v, i+1) <= idx
            while lo < hi:
                mid = (lo + hi + 1) // 2
                if b[mid][i + 1] <= idx:
                    lo = mid
                else:
                    hi = mid - 1
            out[i] = lo
            idx -= b[lo][i + 1]
            hi = lo - 1
        return out

    def value(self, verts) -> float:
        dl = self.dl
        best = 0.0
        for x in range(len(verts)):
            row = dl[verts[x]]
            for y in range(x + 1, len(verts)):
                if row[verts[y]] > best:
                    best = row[verts[y]]
        return best

    def cliques(self, k: int):
        """Yield ascending vertex lists of every k-simplex within the threshold."""
        dl, thr, upper = self.dl, self.thr, self.upper

        def extend(verts):
            if len(verts) == k + 1:
                yield verts
                return
            for w in upper[verts[-1]]:
                row = dl[w]
                if all(row[v] <= thr for v in verts[:-1]):
                    yield from extend(verts + [w])

        for v in range(self.n):
            yield from extend([v])

    def cofaces(self, verts, value):
        """Yield ``(value, index)`` of every coface of ``verts`` within the threshold."""
        dl, thr = self.dl, self.thr
        pivot_vertex = min(verts, key=lambda v: len(self.nbrs[v]))
        members = set(verts)
        for w in self.nbrs[pivot_vertex]:
            if w in members:
                continue
            row = dl[w]
            val = value
            ok = True
            for v in verts:
                x = row[v]
                if x > thr:
                    ok = False
                    break
                if x > val:
                    val = x
            if ok:
                yield val, self.index(sorted(verts + [w]))


def count_simplices(d, threshold, maxdim, budget):
    """Per-dimension simplex counts for dims ``0..maxdim``; stops once the total exceeds ``budget``."""
    g = _Geometry(d, threshold, maxdim)
    counts = []
    total = 0
    for k in range(maxdim + 1):
        c = 0
        for _ in g.cliques(k):
            c += 1
            if total + c > budget:
                counts.append(c)
                return counts
        counts.append(c)
        total += c
    return counts


def enumerate_simplices(d, threshold, dim):
    """Vertices (ascending, lexicographic row order) and values of all ``dim``-simplices."""
    g = _Geometry(d, threshold, dim)
    verts = [list(s) for s in g.cliques(dim)]
    values = [g.value(s) for s in verts]
    return np.array(verts, dtype=np.int64).reshape(-1, dim + 1), np.array(values, dtype=np.float64)


def _pop_pivot(heap):
    while heap:
        top = heapq.heappop(heap)
        if heap and heap[0] == top:
            heapq.heappop(heap)
            continue
        heapq.heappush(heap, top)
        return top
    return None


def barcode(d, threshold, maxdim):
    """Z/2 persistence of the Vietoris-Rips filtration, degrees ``0..maxdim-1``.

    Returns a dict of parallel lists: finite pairs ``(dim, birth, death,
    birth_simplex, death_simplex)`` and essential classes ``(dim, birth,
    simplex)``.  Zero-length pairs are omitted.
    """
    g = _Geometry(d, threshold, maxdim)
    n = g.n
    out = {k: [] for k in ("pair_dim", "pair_birth", "pair_death", "pair_birth_simplex",
                           "pair_death_simplex", "ess_dim", "ess_birth", "ess_simplex")}
    if n == 0:
        return out

    # degree 0: union-find over edges in filtration order, elder component = smaller root
    edges = sorted((g.dl[a][b], g.index([a, b])) for a, b in g.cliques(1))
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    cleared = set()
    for val, idx in edges:
        a, b = g.vertices(idx, 1)
        ra, rb = find(a), find(b)
        if ra == rb:
            continue
        young, old = max(ra, rb), min(ra, rb)
        parent[young] = old
        cleared.add(idx)
        if val > 0.0:
            _emit_pair(out, 0, 0.0, val, young, idx)
    for v in range(n):
        if find(v) == v:
            _emit_essential(out, 0, 0.0, v)

    # degrees 1..maxdim-1: coboundary reduction in reverse filtration order with clearing
    for k in range(1, maxdim):
        if k == 1:
            columns = [(val, idx) for val, idx in edges if idx not in cleared]
        else:
            columns = []
            for s in g.cliques(k):
                idx = g.index(s)
                if idx not in cleared:
                    columns.append((g.value(s), idx))
        columns.sort(reverse=True)
        pivot_of = {}
        reduction = []
        for val, idx in columns:
            heap = []
            for entry in g.cofaces(g.vertices(idx, k), val):
                heapq.heappush(heap, entry)
            working = [(val, idx)]
            while True:
                piv = _pop_pivot(heap)
                if piv is None:
                    _emit_essential(out, k, val, idx)
                    break
                slot = pivot_of.get(piv[1])
                if slot is None:
                    pivot_of[piv[1]] = len(reduction)
                    reduction.append(_cancel_pairs(working))
                    if piv[0] > val:
                        _emit_pair(out, k, val, piv[0], idx, piv[1])
                    break
                for sval, sidx in reduction[slot]:
                    for entry in g.cofaces(g.vertices(sidx, k), sval):
                        heapq.heappush(heap, entry)
                    working.append((sval, sidx))
        cleared = set(pivot_of)
    return out


def _cancel_pairs(entries):
    entries = sorted(entries)
    out = []
    for e in entries:
        if out and out[-1] == e:
            out.pop()
        else:
            out.append(e)
    return out


def _emit_pair(out, k, birth, death, bs, ds):
    out["pair_dim"].append(k)
    out["pair_birth"].append(birth)
    out["pair_death"].append(death)
    out["pair_birth_simplex"].append(bs)
    out["pair_death_simplex"].append(ds)


def _emit_essential(out, k, birth, s):
    out["ess_dim"].append(k)
    out["ess_birth"].append(birth)
    out["ess_simplex"].append(s)
