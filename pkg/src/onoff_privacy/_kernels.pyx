# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for the hot kernels.

Step-for-step mirror of onoff_privacy._reference (same branch structure,
same floating-point operation order, same atom/group ordering); see that
module for the commented definitions. The test suite asserts bit-identical
outputs between the two whenever this module builds.
"""

from libc.stdint cimport int8_t, int32_t, int64_t, uint8_t, uint32_t, uint64_t
from libc.math cimport log2
from libcpp.vector cimport vector
from libcpp.unordered_map cimport unordered_map

import numpy as np

NAME = "compiled"

cdef uint64_t PCG_MULT = 6364136223846793005ULL
cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t mix64(uint64_t z) nogil:
    z ^= z >> 30
    z *= 0xBF58476D1CE4E5B9ULL
    z ^= z >> 27
    z *= 0x94D049BB133111EBULL
    z ^= z >> 31
    return z


cdef inline uint64_t stream(uint64_t key, uint64_t index) nogil:
    return mix64(key + (index + 1) * GAMMA)


cdef struct Pcg:
    uint64_t state
    uint64_t inc


cdef inline void pcg_init(Pcg* g, uint64_t key) nogil:
    cdef uint64_t initstate = stream(key, 0)
    cdef uint64_t initseq = stream(key, 1)
    g.inc = (initseq << 1) | 1ULL
    g.state = g.inc
    g.state = g.state + initstate
    g.state = g.state * PCG_MULT + g.inc


cdef inline uint32_t pcg_next(Pcg* g) nogil:
    cdef uint64_t old = g.state
    g.state = old * PCG_MULT + g.inc
    cdef uint32_t xorshifted = <uint32_t>(((old >> 18) ^ old) >> 27)
    cdef uint32_t rot = <uint32_t>(old >> 59)
    return (xorshifted >> rot) | (xorshifted << ((32 - rot) & 31))


cdef inline double pcg_random(Pcg* g) nogil:
    cdef uint32_t a = pcg_next(g) >> 5
    cdef uint32_t b = pcg_next(g) >> 6
    return (a * 67108864.0 + b) * (1.0 / 9007199254740992.0)


cdef struct StateRec:
    int64_t x_code
    int64_t q_code
    double prob
    int8_t last_x
    int8_t ref
    int8_t prev_q
    int32_t offset
    uint8_t ever


def enumerate_atoms(
    double alpha,
    double beta,
    double p_a,
    const uint8_t[::1] flags,
    const double[:, :, :, ::1] tables,
):
    cdef Py_ssize_t T = flags.shape[0]
    cdef vector[StateRec] states, new
    cdef StateRec init
    init.x_code = 0
    init.q_code = 0
    init.prob = 1.0
    init.last_x = -1
    init.ref = -1
    init.prev_q = -1
    init.offset = 0
    init.ever = 0
    states.push_back(init)

    cdef Py_ssize_t t, i
    cdef int64_t bit, pow3
    cdef int flag, x, q
    cdef double px, pq, base
    cdef StateRec s, child
    for t in range(T):
        bit = (<int64_t>1) << t
        pow3 = 1
        for i in range(t):
            pow3 *= 3
        flag = flags[t]
        new.clear()
        for i in range(<Py_ssize_t>states.size()):
            s = states[i]
            for x in range(2):
                if s.last_x < 0:
                    px = p_a if x == 0 else 1.0 - p_a
                elif s.last_x == 0:
                    px = 1.0 - alpha if x == 0 else alpha
                else:
                    px = beta if x == 0 else 1.0 - beta
                if px == 0.0:
                    continue
                base = s.prob * px
                child.x_code = s.x_code | (bit if x else 0)
                child.last_x = <int8_t>x
                if flag:
                    child.q_code = s.q_code + 2 * pow3
                    child.prob = base
                    child.ref = <int8_t>x
                    child.prev_q = 2
                    child.offset = 0
                    child.ever = 1
                    new.push_back(child)
                elif (not s.ever) or s.prev_q != 2:
                    child.q_code = s.q_code + x * pow3
                    child.prob = base
                    child.ref = s.ref
                    child.prev_q = <int8_t>x
                    child.offset = s.offset + 1
                    child.ever = s.ever
                    new.push_back(child)
                else:
                    for q in range(3):
                        pq = tables[s.offset + 1, s.ref, x, q]
                        if pq == 0.0:
                            continue
                        child.q_code = s.q_code + q * pow3
                        child.prob = base * pq
                        child.ref = s.ref
                        child.prev_q = <int8_t>q
                        child.offset = s.offset + 1
                        child.ever = 1
                        new.push_back(child)
        states.swap(new)

    cdef Py_ssize_t n = states.size()
    x_codes = np.empty(n, dtype=np.int64)
    q_codes = np.empty(n, dtype=np.int64)
    probs = np.empty(n, dtype=np.float64)
    cdef int64_t[::1] xv = x_codes
    cdef int64_t[::1] qv = q_codes
    cdef double[::1] pv = probs
    for i in range(n):
        xv[i] = states[i].x_code
        qv[i] = states[i].q_code
        pv[i] = states[i].prob
    return x_codes, q_codes, probs


def cond_mi_bits(
    const double[::1] probs,
    const int64_t[::1] c_keys,
    const int64_t[::1] v_keys,
    const int64_t[::1] g_keys,
):
    cdef Py_ssize_t n = probs.shape[0]
    # Dense first-seen ids keep composite keys small and make the final
    # group iteration match the reference's dict insertion order.
    cdef unordered_map[int64_t, int64_t] cmap, vmap, gmap, cvmap, cgmap, cvgmap
    cdef vector[double] pc, pcv, pcg, pcvg
    cdef vector[int64_t] cvg_c, cvg_cv, cvg_cg
    cdef int64_t span = n + 1
    cdef Py_ssize_t i
    cdef int64_t cid, vid, gid, cvid, cgid, cvgid, key
    cdef double p, val, denom
    for i in range(n):
        p = probs[i]
        key = c_keys[i]
        if cmap.count(key):
            cid = cmap[key]
        else:
            cid = <int64_t>pc.size()
            cmap[key] = cid
            pc.push_back(0.0)
        pc[cid] += p

        key = v_keys[i]
        if vmap.count(key):
            vid = vmap[key]
        else:
            vid = <int64_t>vmap.size()
            vmap[key] = vid

        key = g_keys[i]
        if gmap.count(key):
            gid = gmap[key]
        else:
            gid = <int64_t>gmap.size()
            gmap[key] = gid

        key = cid * span + vid
        if cvmap.count(key):
            cvid = cvmap[key]
        else:
            cvid = <int64_t>pcv.size()
            cvmap[key] = cvid
            pcv.push_back(0.0)
        pcv[cvid] += p

        key = cid * span + gid
        if cgmap.count(key):
            cgid = cgmap[key]
        else:
            cgid = <int64_t>pcg.size()
            cgmap[key] = cgid
            pcg.push_back(0.0)
        pcg[cgid] += p

        key = cvid * span + gid
        if cvgmap.count(key):
            cvgid = cvgmap[key]
        else:
            cvgid = <int64_t>pcvg.size()
            cvgmap[key] = cvgid
            pcvg.push_back(0.0)
            cvg_c.push_back(cid)
            cvg_cv.push_back(cvid)
            cvg_cg.push_back(cgid)
        pcvg[cvgid] += p

    cdef double mi = 0.0
    for i in range(<Py_ssize_t>pcvg.size()):
        p = pcvg[i]
        val = pc[cvg_c[i]]
        if val < 1e-15 or p == 0.0:
            continue
        denom = pcv[cvg_cv[i]] * pcg[cvg_cg[i]]
        mi += p * log2((p * val) / denom)
    return mi


def simulate_batch(
    double alpha,
    double beta,
    double p_a,
    const uint8_t[::1] flags,
    const double[:, :, :, ::1] tables,
    Py_ssize_t runs,
    uint64_t master_key,
):
    cdef Py_ssize_t T = flags.shape[0]
    requests = np.empty((runs, T), dtype=np.int8)
    queries = np.empty((runs, T), dtype=np.int8)
    cdef int8_t[:, ::1] req = requests
    cdef int8_t[:, ::1] que = queries
    cdef Py_ssize_t i, t
    cdef Pcg g
    cdef uint64_t session_key
    cdef int last, ref, prev_q, offset, ever, x, q, j
    cdef double px_a, u, acc
    with nogil:
        for i in range(runs):
            session_key = stream(master_key, 2 + <uint64_t>i)
            pcg_init(&g, stream(session_key, 2))
            last = -1
            ref = -1
            prev_q = -1
            offset = 0
            ever = 0
            for t in range(T):
                if last < 0:
                    px_a = p_a
                elif last == 0:
                    px_a = 1.0 - alpha
                else:
                    px_a = beta
                x = 0 if pcg_random(&g) < px_a else 1
                if flags[t]:
                    q = 2
                    ref = x
                    prev_q = 2
                    offset = 0
                    ever = 1
                elif ever == 0 or prev_q != 2:
                    q = x
                    prev_q = x
                    offset += 1
                else:
                    u = pcg_random(&g)
                    acc = 0.0
                    q = 2
                    for j in range(3):
                        acc += tables[offset + 1, ref, x, j]
                        if u < acc:
                            q = j
                            break
                    prev_q = q
                    offset += 1
                req[i, t] = <int8_t>x
                que[i, t] = <int8_t>q
                last = x
    return requests, queries


def rng_probe(uint64_t key, Py_ssize_t n):
    out = np.empty(n, dtype=np.uint32)
    cdef uint32_t[::1] ov = out
    cdef Pcg g
    pcg_init(&g, key)
    cdef Py_ssize_t i
    for i in range(n):
        ov[i] = pcg_next(&g)
    return out
