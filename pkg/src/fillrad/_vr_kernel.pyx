# distutils: language = c++
# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Vietoris-Rips kernel: simplex counting/enumeration and Z/2 persistence.

Mirrors ``_vr_fallback`` exactly.  Simplices are never materialized beyond the
columns of the dimension being reduced; cofaces are generated on demand from
the distance matrix and the combinatorial number system.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t
from libcpp cimport bool as cbool
from libcpp.algorithm cimport sort
from libcpp.pair cimport pair
from libcpp.queue cimport priority_queue
from libcpp.unordered_map cimport unordered_map
from libcpp.unordered_set cimport unordered_set
from libcpp.vector cimport vector
from cython.operator cimport dereference as deref, preincrement as inc

cnp.import_array()

IMPLEMENTATION = "cython"

ctypedef pair[double, int64_t] Entry          # (value, index)
ctypedef priority_queue[Entry] MaxHeap        # holds (-value, -index): top is the filtration minimum


cdef struct Geo:
    const double* d
    int n
    double thr
    int width                  # binomial table columns
    const int64_t* binom       # binom[v * width + j] = C(v, j)
    const int* nb_ptr          # CSR neighbor lists (ascending), all neighbors within thr
    const int* nb_idx


cdef inline int64_t C(const Geo* g, int v, int j) noexcept nogil:
    return g.binom[v * g.width + j]


cdef inline double dist(const Geo* g, int a, int b) noexcept nogil:
    return g.d[<int64_t>a * g.n + b]


cdef void decode(const Geo* g, int64_t idx, int k, int* out) noexcept nogil:
    cdef int i, lo, hi, mid
    hi = g.n - 1
    for i in range(k, -1, -1):
        lo = i
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if C(g, mid, i + 1) <= idx:
                lo = mid
            else:
                hi = mid - 1
        out[i] = lo
        idx -= C(g, lo, i + 1)
        hi = lo - 1


cdef inline int64_t encode(const Geo* g, const int* verts, int k) noexcept nogil:
    cdef int64_t s = 0
    cdef int i
    for i in range(k + 1):
        s += C(g, verts[i], i + 1)
    return s


cdef double simplex_value(const Geo* g, const int* verts, int k) noexcept nogil:
    cdef double best = 0.0, x
    cdef int i, j
    for i in range(k + 1):
        for j in range(i + 1, k + 1):
            x = dist(g, verts[i], verts[j])
            if x > best:
                best = x
    return best


cdef void push_cofaces(const Geo* g, int64_t idx, double value, int k, MaxHeap& heap) noexcept nogil:
    cdef int verts[16]
    cdef int merged[17]
    cdef int i, j, p, w, u, best_deg, deg
    cdef double val, x
    cdef cbool ok
    decode(g, idx, k, verts)
    u = verts[0]
    best_deg = g.nb_ptr[u + 1] - g.nb_ptr[u]
    for i in range(1, k + 1):
        deg = g.nb_ptr[verts[i] + 1] - g.nb_ptr[verts[i]]
        if deg < best_deg:
            best_deg = deg
            u = verts[i]
    for p in range(g.nb_ptr[u], g.nb_ptr[u + 1]):
        w = g.nb_idx[p]
        ok = True
        val = value
        for i in range(k + 1):
            if verts[i] == w:
                ok = False
                break
            x = dist(g, w, verts[i])
            if x > g.thr:
                ok = False
                break
            if x > val:
                val = x
        if not ok:
            continue
        j = 0
        for i in range(k + 1):
            if j == i and verts[i] > w:
                merged[j] = w
                j += 1
            merged[j] = verts[i]
            j += 1
        if j == k + 1:
            merged[j] = w
        heap.push(Entry(-val, -encode(g, merged, k + 1)))


cdef cbool pop_pivot(MaxHeap& heap, Entry* out) noexcept nogil:
    cdef Entry top
    while not heap.empty():
        top = heap.top()
        heap.pop()
        if not heap.empty() and heap.top() == top:
            heap.pop()
            continue
        heap.push(top)
        out[0] = top
        return True
    return False


cdef void clique_rec(const Geo* g, int* verts, int depth, int k, vector[Entry]* sink,
                     int64_t* counter, int64_t limit) noexcept nogil:
    # verts[0..depth-1] is a clique with ascending vertices; extend to k + 1 vertices
    cdef int last = verts[depth - 1]
    cdef int p, w, i
    cdef cbool ok
    if depth == k + 1:
        counter[0] += 1
        if sink != NULL:
            sink.push_back(Entry(simplex_value(g, verts, k), encode(g, verts, k)))
        return
    for p in range(g.nb_ptr[last], g.nb_ptr[last + 1]):
        w = g.nb_idx[p]
        if w <= last:
            continue
        ok = True
        for i in range(depth - 1):
            if dist(g, w, verts[i]) > g.thr:
                ok = False
                break
        if ok:
            verts[depth] = w
            clique_rec(g, verts, depth + 1, k, sink, counter, limit)
            if counter[0] > limit:
                return


cdef int64_t cliques(const Geo* g, int k, vector[Entry]* sink, int64_t limit) noexcept nogil:
    cdef int verts[17]
    cdef int64_t counter = 0
    cdef int v
    for v in range(g.n):
        verts[0] = v
        clique_rec(g, verts, 1, k, sink, &counter, limit)
        if counter > limit:
            break
    return counter


cdef class _Context:
    cdef Geo geo
    cdef cnp.ndarray d_arr, binom_arr, ptr_arr, idx_arr

    def __init__(self, d, double threshold, int maxdim):
        d = np.ascontiguousarray(d, dtype=np.float64)
        n = d.shape[0]
        width = maxdim + 3
        binom = np.zeros((n + 1, width), dtype=np.int64)
        for v in range(n + 1):
            binom[v, 0] = 1
            for j in range(1, width):
                binom[v, j] = 0 if v == 0 else binom[v - 1, j - 1] + binom[v - 1, j]
        adj = (d <= threshold) & ~np.eye(n, dtype=bool)
        ptr = np.zeros(n + 1, dtype=np.intc)
        ptr[1:] = np.cumsum(adj.sum(axis=1))
        idx = np.ascontiguousarray(np.nonzero(adj)[1], dtype=np.intc)
        self.d_arr, self.binom_arr, self.ptr_arr, self.idx_arr = d, binom, ptr, idx
        self.geo.d = <const double*> cnp.PyArray_DATA(d)
        self.geo.n = n
        self.geo.thr = threshold
        self.geo.width = width
        self.geo.binom = <const int64_t*> cnp.PyArray_DATA(binom)
        self.geo.nb_ptr = <const int*> cnp.PyArray_DATA(ptr)
        self.geo.nb_idx = <const int*> cnp.PyArray_DATA(idx)


def count_simplices(d, double threshold, int maxdim, long long budget):
    """Per-dimension simplex counts for dims ``0..maxdim``; stops once the total exceeds ``budget``."""
    cdef _Context ctx = _Context(d, threshold, maxdim)
    cdef int64_t total = 0, c
    cdef int k
    counts = []
    for k in range(maxdim + 1):
        with nogil:
            c = cliques(&ctx.geo, k, NULL, budget - total)
        counts.append(int(c))
        total += c
        if total > budget:
            break
    return counts


def enumerate_simplices(d, double threshold, int dim):
    """Vertices (ascending, lexicographic row order) and values of all ``dim``-simplices."""
    cdef _Context ctx = _Context(d, threshold, dim)
    cdef vector[Entry] sink
    cdef int verts[17]
    cdef size_t i
    cdef int j
    with nogil:
        cliques(&ctx.geo, dim, &sink, <int64_t> 0x7FFFFFFFFFFFFFFF)
    m = sink.size()
    out_v = np.empty((m, dim + 1), dtype=np.int64)
    out_x = np.empty(m, dtype=np.float64)
    cdef int64_t[:, ::1] vv = out_v
    cdef double[::1] xx = out_x
    for i in range(m):
        decode(&ctx.geo, sink[i].second, dim, verts)
        for j in range(dim + 1):
            vv[i, j] = verts[j]
        xx[i] = sink[i].first
    return out_v, out_x


cdef int find_root(vector[int]& parent, int x) noexcept nogil:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


cdef struct Out:
    vector[int] pair_dim
    vector[double] pair_birth
    vector[double] pair_death
    vector[int64_t] pair_bs
    vector[int64_t] pair_ds
    vector[int] ess_dim
    vector[double] ess_birth
    vector[int64_t] ess_s


cdef void emit_pair(Out* o, int k, double b, double dth, int64_t bs, int64_t ds) noexcept nogil:
    o.pair_dim.push_back(k)
    o.pair_birth.push_back(b)
    o.pair_death.push_back(dth)
    o.pair_bs.push_back(bs)
    o.pair_ds.push_back(ds)


cdef void emit_ess(Out* o, int k, double b, int64_t s) noexcept nogil:
    o.ess_dim.push_back(k)
    o.ess_birth.push_back(b)
    o.ess_s.push_back(s)


cdef void compute(const Geo* g, int maxdim, Out* o) noexcept nogil:
    cdef vector[Entry] edges, columns, working, canceled
    cdef vector[int] parent
    cdef unordered_set[int64_t] cleared
    cdef unordered_map[int64_t, int64_t] pivot_of
    cdef unordered_map[int64_t, int64_t].iterator it
    cdef vector[int64_t] v_start
    cdef vector[Entry] v_data
    cdef MaxHeap heap
    cdef Entry piv
    cdef int verts[17]
    cdef int a, b, ra, rb, young, old, v, k
    cdef size_t i, j
    cdef int64_t slot, s0, s1, idx, pidx
    cdef double val, pval
    cdef int n = g.n

    if n == 0:
        return
    cliques(g, 1, &edges, <int64_t> 0x7FFFFFFFFFFFFFFF)
    sort(edges.begin(), edges.end())
    parent.resize(n)
    for v in range(n):
        parent[v] = v
    for i in range(edges.size()):
        decode(g, edges[i].second, 1, verts)
        ra = find_root(parent, verts[0])
        rb = find_root(parent, verts[1])
        if ra == rb:
            continue
        young = ra if ra > rb else rb
        old = rb if ra > rb else ra
        parent[young] = old
        cleared.insert(edges[i].second)
        if edges[i].first > 0.0:
            emit_pair(o, 0, 0.0, edges[i].first, young, edges[i].second)
    for v in range(n):
        if find_root(parent, v) == v:
            emit_ess(o, 0, 0.0, v)

    for k in range(1, maxdim):
        columns.clear()
        if k == 1:
            for i in range(edges.size()):
                if cleared.count(edges[i].second) == 0:
                    columns.push_back(edges[i])
        else:
            working.clear()
            cliques(g, k, &working, <int64_t> 0x7FFFFFFFFFFFFFFF)
            for i in range(working.size()):
                if cleared.count(working[i].second) == 0:
                    columns.push_back(working[i])
            working.clear()
            working.shrink_to_fit()
        cleared.clear()
        sort(columns.begin(), columns.end())
        pivot_of.clear()
        v_start.clear()
        v_data.clear()
        v_start.push_back(0)
        for j in range(columns.size()):
            i = columns.size() - 1 - j
            val = columns[i].first
            idx = columns[i].second
            heap = MaxHeap()
            push_cofaces(g, idx, val, k, heap)
            working.clear()
            working.push_back(columns[i])
            while True:
                if not pop_pivot(heap, &piv):
                    emit_ess(o, k, val, idx)
                    break
                pval = -piv.first
                pidx = -piv.second
                it = pivot_of.find(pidx)
                if it == pivot_of.end():
                    slot = v_start.size() - 1
                    pivot_of[pidx] = slot
                    sort(working.begin(), working.end())
                    canceled.clear()
                    for a in range(<int> working.size()):
                        if canceled.size() > 0 and canceled.back() == working[a]:
                            canceled.pop_back()
                        else:
                            canceled.push_back(working[a])
                    for a in range(<int> canceled.size()):
                        v_data.push_back(canceled[a])
                    v_start.push_back(v_data.size())
                    if pval > val:
                        emit_pair(o, k, val, pval, idx, pidx)
                    break
                slot = deref(it).second
                s0 = v_start[slot]
                s1 = v_start[slot + 1]
                while s0 < s1:
                    push_cofaces(g, v_data[s0].second, v_data[s0].first, k, heap)
                    working.push_back(v_data[s0])
                    s0 += 1
        it = pivot_of.begin()
        while it != pivot_of.end():
            cleared.insert(deref(it).first)
            inc(it)


def barcode(d, double threshold, int maxdim):
    """Z/2 persistence of the Vietoris-Rips filtration, degrees ``0..maxdim-1``.

    Same contract as ``_vr_fallback.barcode``.
    """
    cdef _Context ctx = _Context(d, threshold, maxdim)
    cdef Out o
    with nogil:
        compute(&ctx.geo, maxdim, &o)
    return {
        "pair_dim": [x for x in o.pair_dim],
        "pair_birth": [x for x in o.pair_birth],
        "pair_death": [x for x in o.pair_death],
        "pair_birth_simplex": [x for x in o.pair_bs],
        "pair_death_simplex": [x for x in o.pair_ds],
        "ess_dim": [x for x in o.ess_dim],
        "ess_birth": [x for x in o.ess_birth],
        "ess_simplex": [x for x in o.ess_s],
    }
