# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled decoder core: Philox4x64-10 sampling, union-find decoding, trial loop.

Semantics match :mod:`ftcs.noise` and :mod:`ftcs.decoder.union_find` exactly;
only the bookkeeping differs.  Clusters keep a circular list of *boundary*
vertices (vertices that may still have a non-full incident edge), and a
vertex is unlinked the first time it is visited with every incident edge
full.  Interior vertices contribute nothing to growth, so this gives the
same grown edge set as visiting every member.
"""

import numpy as np

from libc.stdint cimport uint8_t, int32_t, int64_t, uint64_t

cdef extern from *:
    """
    static inline uint64_t ftcs_mulhilo(uint64_t a, uint64_t b, uint64_t *hi) {
        __uint128_t p = (__uint128_t)a * b;
        *hi = (uint64_t)(p >> 64);
        return (uint64_t)p;
    }
    """
    uint64_t ftcs_mulhilo(uint64_t a, uint64_t b, uint64_t *hi) noexcept nogil

cdef uint64_t PHILOX_M0 = 0xD2E7470EE14C6C93ULL
cdef uint64_t PHILOX_M1 = 0xCA5A826395121157ULL
cdef uint64_t PHILOX_W0 = 0x9E3779B97F4A7C15ULL
cdef uint64_t PHILOX_W1 = 0xBB67AE8584CAA73BULL

ctypedef struct Stream:
    uint64_t ctr[4]
    uint64_t key[2]
    uint64_t buf[4]
    int pos


cdef inline void philox_block(Stream *s) noexcept nogil:
    cdef uint64_t c0 = s.ctr[0], c1 = s.ctr[1], c2 = s.ctr[2], c3 = s.ctr[3]
    cdef uint64_t k0 = s.key[0], k1 = s.key[1]
    cdef uint64_t hi0, lo0, hi1, lo1
    cdef int i
    for i in range(10):
        if i:
            k0 += PHILOX_W0
            k1 += PHILOX_W1
        lo0 = ftcs_mulhilo(PHILOX_M0, c0, &hi0)
        lo1 = ftcs_mulhilo(PHILOX_M1, c2, &hi1)
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
    s.buf[0] = c0
    s.buf[1] = c1
    s.buf[2] = c2
    s.buf[3] = c3


cdef inline void stream_init(Stream *s, uint64_t k0, uint64_t k1, uint64_t trial) noexcept nogil:
    s.key[0] = k0
    s.key[1] = k1
    s.ctr[0] = 0
    s.ctr[1] = 0
    s.ctr[2] = 0
    s.ctr[3] = trial
    s.pos = 4


cdef inline uint64_t stream_next(Stream *s) noexcept nogil:
    cdef int i
    if s.pos == 4:
        # 256-bit increment before each block, as numpy's Philox does
        for i in range(4):
            s.ctr[i] += 1
            if s.ctr[i] != 0:
                break
        philox_block(s)
        s.pos = 0
    s.pos += 1
    return s.buf[s.pos - 1]


def philox_words(uint64_t k0, uint64_t k1, uint64_t trial, Py_ssize_t n):
    """First ``n`` words of the trial stream (for cross-checking against numpy)."""
    out = np.empty(n, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    cdef Stream s
    cdef Py_ssize_t i
    stream_init(&s, k0, k1, trial)
    for i in range(n):
        o[i] = stream_next(&s)
    return out


cdef class Decoder:
    """Union-find decoder bound to one syndrome graph, with reusable scratch."""

    cdef readonly Py_ssize_t nv, ne
    cdef int64_t[::1] indptr
    cdef int32_t[::1] nbr, inc, ends
    cdef int32_t[::1] parent, size, bnext, bhead, odd_a, odd_b, stamp, full, queue, tedge, tpar
    cdef uint8_t[::1] parity, support, work
    cdef uint8_t[::1] flip, erased, syn, corr
    cdef int32_t cur_stamp
    cdef readonly long long last_rounds

    def __init__(self, indptr, nbr, inc, edges):
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.nbr = np.ascontiguousarray(nbr, dtype=np.int32)
        self.inc = np.ascontiguousarray(inc, dtype=np.int32)
        self.ends = np.ascontiguousarray(np.asarray(edges).reshape(-1), dtype=np.int32)
        self.nv = len(self.indptr) - 1
        self.ne = len(self.ends) // 2
        nv, ne = self.nv, self.ne
        i32 = np.int32
        self.parent = np.zeros(nv, i32)
        self.size = np.zeros(nv, i32)
        self.bnext = np.zeros(nv, i32)
        self.bhead = np.zeros(nv, i32)
        self.odd_a = np.zeros(nv + 1, i32)
        self.odd_b = np.zeros(nv + 1, i32)
        self.stamp = np.zeros(nv, i32)
        self.full = np.zeros(ne + 1, i32)
        self.queue = np.zeros(nv, i32)
        self.tedge = np.zeros(nv, i32)
        self.tpar = np.zeros(nv, i32)
        self.parity = np.zeros(nv, np.uint8)
        self.support = np.zeros(ne, np.uint8)
        self.work = np.zeros(nv, np.uint8)
        self.flip = np.zeros(ne, np.uint8)
        self.erased = np.zeros(ne, np.uint8)
        self.syn = np.zeros(nv, np.uint8)
        self.corr = np.zeros(ne, np.uint8)
        self.cur_stamp = 0
        self.last_rounds = 0

    # -- union-find -------------------------------------------------------

    cdef inline int32_t find(self, int32_t v) noexcept nogil:
        cdef int32_t root = v, nxt
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[v] != root:
            nxt = self.parent[v]
            self.parent[v] = root
            v = nxt
        return root

    cdef inline void union_edge(self, int32_t e) noexcept nogil:
        cdef int32_t a = self.find(self.ends[2 * e]), b = self.find(self.ends[2 * e + 1]), t
        if a == b:
            return
        if self.size[a] < self.size[b] or (self.size[a] == self.size[b] and b < a):
            t = a
            a = b
            b = t
        self.parent[b] = a
        self.size[a] += self.size[b]
        self.parity[a] ^= self.parity[b]
        if self.bhead[b] >= 0:
            if self.bhead[a] < 0:
                self.bhead[a] = self.bhead[b]
            else:
                t = self.bnext[self.bhead[a]]
                self.bnext[self.bhead[a]] = self.bnext[self.bhead[b]]
                self.bnext[self.bhead[b]] = t

    cdef Py_ssize_t grow_cluster(self, int32_t r, Py_ssize_t nfull, int *changed) noexcept nogil:
        cdef int32_t h = self.bhead[r], prev, cur, nxt, e
        cdef int64_t k
        cdef bint alive
        if h < 0:
            return nfull
        prev = h
        cur = self.bnext[h]
        while True:
            alive = False
            for k in range(self.indptr[cur], self.indptr[cur + 1]):
                e = self.inc[k]
                if self.support[e] < 2:
                    self.support[e] += 1
                    changed[0] = 1
                    if self.support[e] == 2:
                        self.full[nfull] = e
                        nfull += 1
                    else:
                        alive = True
            nxt = self.bnext[cur]
            if not alive:
                if cur == prev:
                    self.bhead[r] = -1
                    break
                self.bnext[prev] = nxt
                if cur == h:
                    self.bhead[r] = prev
                    break
            else:
                prev = cur
            if cur == h:
                break
            cur = nxt
        return nfull

    cdef int run(self) noexcept nogil:
        """Decode ``syn``/``erased`` into ``corr``; -1 if stuck, -2 if peeling fails."""
        cdef Py_ssize_t v, e, nodd = 0, nnew, nfull, i, k, qh, qt
        cdef int32_t r, r2, w, ee, root
        cdef int32_t[::1] odd = self.odd_a, nxt_odd = self.odd_b, tmp
        cdef int changed
        cdef long long rounds = 0
        for v in range(self.nv):
            self.parent[v] = v
            self.size[v] = 1
            self.parity[v] = self.syn[v]
            self.bnext[v] = v
            self.bhead[v] = v
        for e in range(self.ne):
            self.support[e] = 2 if self.erased[e] else 0
            self.corr[e] = 0
        for e in range(self.ne):
            if self.erased[e]:
                self.union_edge(e)
        self.cur_stamp += 1
        for v in range(self.nv):
            if self.syn[v]:
                r = self.find(v)
                if self.parity[r] and self.stamp[r] != self.cur_stamp:
                    self.stamp[r] = self.cur_stamp
                    odd[nodd] = r
                    nodd += 1
        while nodd > 0:
            changed = 0
            nfull = 0
            for i in range(nodd):
                nfull = self.grow_cluster(odd[i], nfull, &changed)
            rounds += 1
            if not changed:
                self.last_rounds = rounds
                return -1
            for i in range(nfull):
                self.union_edge(self.full[i])
            self.cur_stamp += 1
            nnew = 0
            for i in range(nodd):
                r2 = self.find(odd[i])
                if self.parity[r2] and self.stamp[r2] != self.cur_stamp:
                    self.stamp[r2] = self.cur_stamp
                    nxt_odd[nnew] = r2
                    nnew += 1
            tmp = odd
            odd = nxt_odd
            nxt_odd = tmp
            nodd = nnew
        self.last_rounds = rounds
        # peeling over fully grown edges; work[] holds the running parity, bit 1 marks seen
        for v in range(self.nv):
            self.work[v] = self.syn[v]
        for root in range(self.nv):
            if self.work[root] & 2:
                continue
            self.work[root] |= 2
            qh = 0
            qt = 0
            self.queue[qt] = root
            qt += 1
            while qh < qt:
                r = self.queue[qh]
                qh += 1
                for k in range(self.indptr[r], self.indptr[r + 1]):
                    ee = self.inc[k]
                    w = self.nbr[k]
                    if self.support[ee] == 2 and not (self.work[w] & 2):
                        self.work[w] |= 2
                        self.tedge[w] = ee
                        self.tpar[w] = r
                        self.queue[qt] = w
                        qt += 1
            for i in range(qt - 1, 0, -1):
                w = self.queue[i]
                if self.work[w] & 1:
                    self.corr[self.tedge[w]] = 1
                    self.work[w] ^= 1
                    self.work[self.tpar[w]] ^= 1
            if self.work[root] & 1:
                return -2
        return 0

    def decode(self, syndrome, erased=None):
        """Correction (uint8 mask) for a syndrome (vertex mask) and erasure (edge mask)."""
        cdef Py_ssize_t i
        s = np.ascontiguousarray(syndrome, dtype=np.uint8)
        if len(s) != self.nv:
            raise ValueError(f"syndrome has {len(s)} vertices, graph has {self.nv}")
        cdef uint8_t[::1] sv = s
        for i in range(self.nv):
            self.syn[i] = sv[i] != 0
        cdef uint8_t[::1] ev
        if erased is None:
            self.erased[:] = 0
        else:
            ea = np.ascontiguousarray(erased, dtype=np.uint8)
            if len(ea) != self.ne:
                raise ValueError(f"erasure mask has {len(ea)} edges, graph has {self.ne}")
            ev = ea
            for i in range(self.ne):
                self.erased[i] = ev[i] != 0
        cdef int status
        with nogil:
            status = self.run()
        if status == -1:
            raise RuntimeError("an odd cluster cannot grow: its component has odd syndrome parity")
        if status == -2:
            raise RuntimeError("peeling left an odd root: decoder bug")
        return np.asarray(self.corr).astype(bool)

    # -- trials -------------------------------------------------------------

    cdef void sample(self, Stream *s, uint64_t *fthr, bint has_flip, bint has_erase, uint64_t ethr) noexcept nogil:
        cdef Py_ssize_t e
        cdef uint64_t w
        for e in range(self.ne):
            if has_flip:
                self.flip[e] = (stream_next(s) >> 11) < fthr[e]
            else:
                self.flip[e] = 0
        for e in range(self.ne):
            if has_erase:
                w = stream_next(s)
                if (w >> 11) < ethr:
                    self.erased[e] = 1
                    self.flip[e] = w & 1
                else:
                    self.erased[e] = 0
            else:
                self.erased[e] = 0

    def sample_pattern(self, uint64_t k0, uint64_t k1, uint64_t trial, flip_thresholds=None, erase_threshold=None):
        """Flip and erasure masks of one trial (for cross-checking the Python sampler)."""
        cdef Stream s
        cdef uint64_t[::1] ft = np.ascontiguousarray(
            flip_thresholds if flip_thresholds is not None else np.zeros(self.ne, np.uint64), dtype=np.uint64)
        cdef uint64_t et = 0 if erase_threshold is None else erase_threshold
        stream_init(&s, k0, k1, trial)
        self.sample(&s, &ft[0] if self.ne else NULL, flip_thresholds is not None, erase_threshold is not None, et)
        return np.asarray(self.flip).astype(bool), np.asarray(self.erased).astype(bool)

    def run_trials(self, cut_mask, uint64_t k0, uint64_t k1, uint64_t start, uint64_t stop,
                   flip_thresholds=None, erase_threshold=None, out=None):
        """Sample, decode and check trials ``start..stop-1``; returns the failure count.

        ``out`` (optional uint8 array of length ``stop - start``) receives
        per-trial failure flags.
        """
        cdef uint8_t[::1] cut = np.ascontiguousarray(cut_mask, dtype=np.uint8)
        if len(cut) != self.ne:
            raise ValueError("cut mask length differs from the edge count")
        cdef bint has_flip = flip_thresholds is not None
        cdef bint has_erase = erase_threshold is not None
        cdef uint64_t[::1] ft = np.ascontiguousarray(
            flip_thresholds if has_flip else np.zeros(max(self.ne, 1), np.uint64), dtype=np.uint64)
        cdef uint64_t et = erase_threshold if has_erase else 0
        cdef uint8_t[::1] fo
        cdef bint want = out is not None
        if want:
            fo = out
            if <uint64_t>len(fo) != stop - start:
                raise ValueError("out has the wrong length")
        cdef Stream s
        cdef uint64_t t
        cdef Py_ssize_t e, v
        cdef long long failures = 0, weight
        cdef int status = 0, par
        cdef uint64_t bad_trial = 0
        with nogil:
            for t in range(start, stop):
                stream_init(&s, k0, k1, t)
                self.sample(&s, &ft[0], has_flip, has_erase, et)
                for v in range(self.nv):
                    self.syn[v] = 0
                for e in range(self.ne):
                    if self.flip[e]:
                        self.syn[self.ends[2 * e]] ^= 1
                        self.syn[self.ends[2 * e + 1]] ^= 1
                weight = 0
                for v in range(self.nv):
                    weight += self.syn[v]
                if weight & 1:
                    status = -3
                    bad_trial = t
                    break
                status = self.run()
                if status != 0:
                    bad_trial = t
                    break
                # residual = flip ^ corr must have empty syndrome; reuse syn as scratch
                for e in range(self.ne):
                    if self.corr[e]:
                        self.syn[self.ends[2 * e]] ^= 1
                        self.syn[self.ends[2 * e + 1]] ^= 1
                for v in range(self.nv):
                    if self.syn[v]:
                        status = -4
                        break
                if status != 0:
                    bad_trial = t
                    break
                par = 0
                for e in range(self.ne):
                    if cut[e]:
                        par ^= self.flip[e] ^ self.corr[e]
                failures += par
                if want:
                    fo[t - start] = par
        if status != 0:
            msg = {
                -1: "an odd cluster cannot grow",
                -2: "peeling left an odd root",
                -3: "sampled syndrome has odd weight",
                -4: "correction does not annihilate the syndrome",
            }[status]
            raise RuntimeError(f"trial {bad_trial}: {msg}")
        return failures
