# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled three-phase sampler.

Mirrors ``sampler._fast_python`` draw for draw: same phase boundaries, same
order of bounded-integer draws, same masking rule. Per-vertex data is packed
into one 32-byte record so an edge update touches few cache lines. Residual
components are int64; the scaled denominator is evaluated in 128-bit
integers.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport log
from libc.stdint cimport int32_t, int64_t, uint64_t
from libc.stdlib cimport free, malloc
from numpy.random cimport bitgen_t

cnp.import_array()

cdef extern from *:
    """
    typedef __int128 sd_i128;

    static inline sd_i128 sd_denominator(int64_t m, int64_t left, int64_t lam1p,
                                         int64_t lam1m, int64_t delta, int64_t lam2,
                                         int64_t lam3) {
        return (sd_i128)4 * m * left * left - (sd_i128)2 * lam1p * lam1m
             - (sd_i128)4 * m * delta + (sd_i128)2 * lam2 + (sd_i128)2 * lam3;
    }

    static inline int sd_positive(sd_i128 x) { return x > 0; }
    static inline double sd_to_double(sd_i128 x) { return (double)x; }
    static inline int64_t sd_hi(sd_i128 x) { return (int64_t)(x >> 64); }
    static inline uint64_t sd_lo(sd_i128 x) { return (uint64_t)x; }

    static inline int sd_bounds_ok(int64_t left, int64_t dmax, int64_t delta,
                                   int64_t lam1p, int64_t lam1m, int64_t lam2,
                                   int64_t lam3) {
        sd_i128 dm2 = (sd_i128)dmax * dmax;
        if ((sd_i128)delta > (sd_i128)left * dm2) return 0;
        if (lam1p > dmax * left || lam1m > dmax * left) return 0;
        if ((sd_i128)lam1p * lam1m - lam2 - lam3 > dm2 * left * left) return 0;
        return 1;
    }

    static inline int sd_bitlen(uint64_t x) { return x ? 64 - __builtin_clzll(x) : 0; }
    """
    ctypedef long long sd_i128
    sd_i128 sd_denominator(int64_t m, int64_t left, int64_t lam1p, int64_t lam1m,
                           int64_t delta, int64_t lam2, int64_t lam3) nogil
    int sd_positive(sd_i128 x) nogil
    double sd_to_double(sd_i128 x) nogil
    int64_t sd_hi(sd_i128 x) nogil
    uint64_t sd_lo(sd_i128 x) nogil
    int sd_bounds_ok(int64_t left, int64_t dmax, int64_t delta, int64_t lam1p,
                     int64_t lam1m, int64_t lam2, int64_t lam3) nogil
    int sd_bitlen(uint64_t x) nogil


cdef struct Vertex:
    int32_t out_deg
    int32_t in_deg
    int32_t res_out
    int32_t res_in
    int32_t out_start
    int32_t in_start
    int32_t out_cnt
    int32_t in_cnt


cdef struct Work:
    Vertex *vs
    int32_t *out_adj
    int32_t *in_adj
    int32_t *out_stubs
    int32_t *in_stubs
    int32_t *out_verts
    int32_t *in_verts
    int32_t *out_pos
    int32_t *in_pos
    int32_t *cand_u
    int32_t *cand_v


cdef void release(Work *w) noexcept nogil:
    free(w.vs)
    free(w.out_adj)
    free(w.in_adj)
    free(w.out_stubs)
    free(w.in_stubs)
    free(w.out_verts)
    free(w.in_verts)
    free(w.out_pos)
    free(w.in_pos)
    free(w.cand_u)
    free(w.cand_v)


cdef inline uint64_t randbelow(bitgen_t *rng, uint64_t n) noexcept nogil:
    cdef int shift
    cdef uint64_t x
    if n <= 1:
        return 0
    shift = 64 - sd_bitlen(n - 1)
    while True:
        x = rng.next_uint64(rng.state) >> shift
        if x < n:
            return x


cdef inline bint has_edge(const int32_t *out_adj, const Vertex *vi, int32_t j) noexcept nogil:
    cdef int32_t k
    for k in range(vi.out_start, vi.out_start + vi.out_cnt):
        if out_adj[k] == j:
            return True
    return False


def sample(const cnp.int64_t[::1] out_deg, const cnp.int64_t[::1] in_deg, bit_generator,
           bint check_bounds=True, bint trace=False):
    """Run one attempt.

    Returns a dict with the edge array, step count, log-probability, failure
    flag, final residuals, the six denominator components and bound-check
    counters. With ``trace`` the scaled denominator at every visited step is
    included as Python ints.
    """
    cdef Py_ssize_t n = out_deg.shape[0]
    cdef int64_t m = 0, dmax = 0, v, k, t
    for v in range(n):
        m += out_deg[v]
        if out_deg[v] > dmax:
            dmax = out_deg[v]
        if in_deg[v] > dmax:
            dmax = in_deg[v]
    if m >= 2**31 - 1:
        raise OverflowError("edge count exceeds the compiled kernel's int32 indices")

    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, b"BitGenerator"):
        raise ValueError("invalid bit generator capsule")
    cdef bitgen_t *rng = <bitgen_t *> PyCapsule_GetPointer(capsule, b"BitGenerator")

    cdef Work w
    cdef Py_ssize_t cells = max(m, 1), slots = max(n, 1)
    w.vs = <Vertex *> malloc(slots * sizeof(Vertex))
    w.out_adj = <int32_t *> malloc(cells * sizeof(int32_t))
    w.in_adj = <int32_t *> malloc(cells * sizeof(int32_t))
    w.out_stubs = <int32_t *> malloc(cells * sizeof(int32_t))
    w.in_stubs = <int32_t *> malloc(cells * sizeof(int32_t))
    w.out_verts = <int32_t *> malloc(slots * sizeof(int32_t))
    w.in_verts = <int32_t *> malloc(slots * sizeof(int32_t))
    w.out_pos = <int32_t *> malloc(slots * sizeof(int32_t))
    w.in_pos = <int32_t *> malloc(slots * sizeof(int32_t))
    w.cand_u = NULL
    w.cand_v = NULL
    if (w.vs == NULL or w.out_adj == NULL or w.in_adj == NULL or w.out_stubs == NULL
            or w.in_stubs == NULL or w.out_verts == NULL or w.in_verts == NULL
            or w.out_pos == NULL or w.in_pos == NULL):
        release(&w)
        raise MemoryError()

    cdef Vertex *vs = w.vs
    cdef Vertex *vi = NULL
    cdef Vertex *vj = NULL
    cdef int32_t os = 0, ins = 0
    for v in range(n):
        vs[v].out_deg = <int32_t> out_deg[v]
        vs[v].in_deg = <int32_t> in_deg[v]
        vs[v].res_out = <int32_t> out_deg[v]
        vs[v].res_in = <int32_t> in_deg[v]
        vs[v].out_start = os
        vs[v].in_start = ins
        vs[v].out_cnt = 0
        vs[v].in_cnt = 0
        for k in range(out_deg[v]):
            w.out_stubs[os + k] = <int32_t> v
        for k in range(in_deg[v]):
            w.in_stubs[ins + k] = <int32_t> v
        os += <int32_t> out_deg[v]
        ins += <int32_t> in_deg[v]
        w.out_pos[v] = -1
        w.in_pos[v] = -1
    cdef int64_t n_out_stubs = m, n_in_stubs = m
    cdef int64_t n_out_verts = 0, n_in_verts = 0, n_cand = 0

    edges_a = np.zeros((cells, 2), dtype=np.int64)
    cdef int64_t[:, ::1] edges = edges_a

    cdef int64_t delta1 = 0, delta2 = 0, lam1p = 0, lam1m = 0, lam2 = 0, lam3 = 0
    for v in range(n):
        delta1 += out_deg[v] * in_deg[v]
        lam1p += out_deg[v] * out_deg[v]
        lam1m += in_deg[v] * in_deg[v]
        lam2 += out_deg[v] * out_deg[v] * in_deg[v] * in_deg[v]

    cdef int64_t r = 0, phase = 1, a, b, wt
    cdef int32_t i = 0, j = 0, u, x
    cdef int64_t two_m = 2 * m
    cdef uint64_t bound3 = 0
    cdef sd_i128 denom
    cdef double log_prob = 0.0
    cdef int64_t states_checked = 0, violations = 0
    cdef bint failed = False
    trace_out = [] if trace else None

    with bit_generator.lock:
        while r < m:
            if check_bounds:
                states_checked += 1
                if not sd_bounds_ok(m - r, dmax, delta1 + delta2, lam1p, lam1m, lam2, lam3):
                    violations += 1
            denom = sd_denominator(m, m - r, lam1p, lam1m, delta1 + delta2, lam2, lam3)
            if trace:
                trace_out.append((int(sd_hi(denom)) << 64) | int(sd_lo(denom)))
            if not sd_positive(denom):
                failed = True
                break

            if phase == 1 and m - r < 2 * dmax * dmax:
                phase = 2
                for v in range(n):
                    if vs[v].res_out:
                        w.out_pos[v] = <int32_t> n_out_verts
                        w.out_verts[n_out_verts] = <int32_t> v
                        n_out_verts += 1
                    if vs[v].res_in:
                        w.in_pos[v] = <int32_t> n_in_verts
                        w.in_verts[n_in_verts] = <int32_t> v
                        n_in_verts += 1
            if phase == 2 and (n_out_verts < 2 * dmax or n_in_verts < 2 * dmax):
                phase = 3
                t = max(n_out_verts * n_in_verts, 1)
                w.cand_u = <int32_t *> malloc(t * sizeof(int32_t))
                w.cand_v = <int32_t *> malloc(t * sizeof(int32_t))
                if w.cand_u == NULL or w.cand_v == NULL:
                    release(&w)
                    raise MemoryError()
                for a in range(n_out_verts):
                    u = w.out_verts[a]
                    for b in range(n_in_verts):
                        x = w.in_verts[b]
                        if u != x and not has_edge(w.out_adj, &vs[u], x):
                            w.cand_u[n_cand] = u
                            w.cand_v[n_cand] = x
                            n_cand += 1
                bound3 = <uint64_t> (dmax * dmax) * <uint64_t> two_m

            if phase == 1:
                while True:
                    a = randbelow(rng, n_out_stubs)
                    b = randbelow(rng, n_in_stubs)
                    i = w.out_stubs[a]
                    j = w.in_stubs[b]
                    vi = &vs[i]
                    vj = &vs[j]
                    if i == j or has_edge(w.out_adj, vi, j):
                        continue
                    if randbelow(rng, two_m) >= <uint64_t> (two_m - <int64_t> vi.out_deg * vj.in_deg):
                        continue
                    break
                n_out_stubs -= 1
                w.out_stubs[a] = w.out_stubs[n_out_stubs]
                n_in_stubs -= 1
                w.in_stubs[b] = w.in_stubs[n_in_stubs]
            elif phase == 2:
                while True:
                    i = w.out_verts[randbelow(rng, n_out_verts)]
                    if randbelow(rng, dmax) >= <uint64_t> vs[i].res_out:
                        continue
                    j = w.in_verts[randbelow(rng, n_in_verts)]
                    if randbelow(rng, dmax) >= <uint64_t> vs[j].res_in:
                        continue
                    vi = &vs[i]
                    vj = &vs[j]
                    if i == j or has_edge(w.out_adj, vi, j):
                        continue
                    if randbelow(rng, two_m) >= <uint64_t> (two_m - <int64_t> vi.out_deg * vj.in_deg):
                        continue
                    break
            else:
                while True:
                    k = randbelow(rng, n_cand)
                    i = w.cand_u[k]
                    j = w.cand_v[k]
                    vi = &vs[i]
                    vj = &vs[j]
                    if vi.res_out == 0 or vj.res_in == 0:
                        n_cand -= 1
                        w.cand_u[k] = w.cand_u[n_cand]
                        w.cand_v[k] = w.cand_v[n_cand]
                        continue
                    if randbelow(rng, bound3) >= <uint64_t> (
                            <int64_t> vi.res_out * vj.res_in
                            * (two_m - <int64_t> vi.out_deg * vj.in_deg)):
                        continue
                    n_cand -= 1
                    w.cand_u[k] = w.cand_u[n_cand]
                    w.cand_v[k] = w.cand_v[n_cand]
                    break

            wt = <int64_t> vi.res_out * vj.res_in * (4 * m - 2 * <int64_t> vi.out_deg * vj.in_deg)
            log_prob += log(<double> wt) - log(sd_to_double(denom))

            # incremental component update for the new edge (i, j)
            delta1 -= vi.res_in + vj.res_out
            lam2 -= (<int64_t> vi.out_deg * vi.in_deg * vi.res_in
                     + <int64_t> vj.out_deg * vj.in_deg * vj.res_out)
            lam1p -= vi.out_deg
            lam1m -= vj.in_deg
            for k in range(vi.out_start, vi.out_start + vi.out_cnt):
                x = w.out_adj[k]
                delta2 -= vs[x].res_in
                lam3 -= <int64_t> vi.out_deg * vs[x].res_in * vs[x].in_deg
            for k in range(vj.in_start, vj.in_start + vj.in_cnt):
                u = w.in_adj[k]
                delta2 -= vs[u].res_out
                lam3 -= <int64_t> vj.in_deg * vs[u].res_out * vs[u].out_deg
            vi.res_out -= 1
            vj.res_in -= 1
            delta2 += <int64_t> vi.res_out * vj.res_in
            lam3 += <int64_t> vi.res_out * vj.res_in * vi.out_deg * vj.in_deg
            w.out_adj[vi.out_start + vi.out_cnt] = j
            vi.out_cnt += 1
            w.in_adj[vj.in_start + vj.in_cnt] = i
            vj.in_cnt += 1
            edges[r, 0] = i
            edges[r, 1] = j
            r += 1

            if phase == 2:
                if vi.res_out == 0:
                    x = w.out_verts[n_out_verts - 1]
                    w.out_verts[w.out_pos[i]] = x
                    w.out_pos[x] = w.out_pos[i]
                    n_out_verts -= 1
                    w.out_pos[i] = -1
                if vj.res_in == 0:
                    x = w.in_verts[n_in_verts - 1]
                    w.in_verts[w.in_pos[j]] = x
                    w.in_pos[x] = w.in_pos[j]
                    n_in_verts -= 1
                    w.in_pos[j] = -1

        if not failed and check_bounds:
            states_checked += 1
            if not sd_bounds_ok(0, dmax, delta1 + delta2, lam1p, lam1m, lam2, lam3):
                violations += 1

    res_out_a = np.empty(n, dtype=np.int64)
    res_in_a = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] res_out_v = res_out_a
    cdef int64_t[::1] res_in_v = res_in_a
    for v in range(n):
        res_out_v[v] = vs[v].res_out
        res_in_v[v] = vs[v].res_in
    release(&w)

    return {
        "edges": edges_a,
        "r": int(r),
        "log_prob": log_prob,
        "failed": bool(failed),
        "res_out": res_out_a,
        "res_in": res_in_a,
        "components": (delta1, delta2, lam1p, lam1m, lam2, lam3),
        "states_checked": int(states_checked),
        "violations": int(violations),
        "trace": trace_out,
    }
