# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simulation kernels; see ``_pykernels.py`` for the reference twin."""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport log1p, INFINITY
from libc.stdint cimport int64_t
from numpy.random cimport bitgen_t

import numpy as np

NAME = "cython"

DEF DET = 0
DEF EXP = 1


cdef class _Laws:
    cdef const int[::1] kind
    cdef const int[::1] shape
    cdef const double[::1] param
    cdef const double[::1] cumw
    cdef const int[::1] start
    cdef const int[::1] end

    def __init__(self, table):
        self.kind = table.kind
        self.shape = table.shape
        self.param = table.param
        self.cumw = table.cumw
        self.start = table.start
        self.end = table.end

    cdef inline double draw(self, int law, bitgen_t* rng):
        cdef int k = self.start[law]
        cdef int stop = self.end[law]
        cdef double u, x
        cdef int j
        if stop - k > 1:
            u = rng.next_double(rng.state)
            while k < stop - 1 and u >= self.cumw[k]:
                k += 1
        if self.kind[k] == DET:
            return self.param[k]
        if self.kind[k] == EXP:
            return -log1p(-rng.next_double(rng.state)) / self.param[k]
        x = 0.0
        for j in range(self.shape[k]):
            x += -log1p(-rng.next_double(rng.state))
        return x / self.param[k]


cdef object _philox(object seed, object tag, int64_t index):
    return np.random.Philox(key=np.array([seed, tag], dtype=np.uint64),
                            counter=np.array([0, 0, 0, index], dtype=np.uint64))


cdef inline bitgen_t* _bitgen(object bg) except NULL:
    return <bitgen_t*> PyCapsule_GetPointer(bg.capsule, "BitGenerator")


cdef inline double _expo(bitgen_t* rng):
    return -log1p(-rng.next_double(rng.state))


def claim_samples(laws, int law, seed, tag, int64_t start, int64_t stop):
    cdef _Laws tab = _Laws(laws)
    cdef double[::1] out = np.empty(stop - start)
    cdef int64_t i
    cdef bitgen_t* rng
    for i in range(start, stop):
        bg = _philox(seed, tag, i)
        rng = _bitgen(bg)
        out[i - start] = tab.draw(law, rng)
    return np.asarray(out)


def survival_times(km, double u0, double v0, double u_rate, double v_rate, double t_max,
                   double safe1, double safe2, seed, tag, int64_t start, int64_t stop):
    cdef _Laws tab = _Laws(km.laws)
    cdef const double[::1] atom_cumw = km.atom_cumw
    cdef const int[::1] atom_law1 = km.atom_law1
    cdef const int[::1] atom_law2 = km.atom_law2
    cdef int n_atoms = atom_cumw.shape[0]
    cdef double lam = km.lam, c1 = km.c1, c2 = km.c2, r1 = km.r1, r2 = km.r2
    cdef bint r1_inf = km.r1_inf, r2_inf = km.r2_inf
    cdef double[::1] out = np.empty(stop - start)
    cdef int64_t i
    cdef int a
    cdef double s1, s2, t, dt, u, j1, j2, x1, x2, ruin
    cdef bitgen_t* rng
    for i in range(start, stop):
        bg = _philox(seed, tag, i)
        rng = _bitgen(bg)
        s1 = _expo(rng) / u_rate if u_rate > 0 else u0
        s2 = _expo(rng) / v_rate if v_rate > 0 else v0
        t = 0.0
        ruin = INFINITY
        if lam > 0:
            while True:
                if s1 >= safe1 and s2 >= safe2:
                    break
                dt = _expo(rng) / lam
                t += dt
                if t > t_max:
                    break
                s1 += c1 * dt
                s2 += c2 * dt
                a = 0
                if n_atoms > 1:
                    u = rng.next_double(rng.state)
                    while a < n_atoms - 1 and u >= atom_cumw[a]:
                        a += 1
                j1 = tab.draw(atom_law1[a], rng) if atom_law1[a] >= 0 else 0.0
                j2 = tab.draw(atom_law2[a], rng) if atom_law2[a] >= 0 else 0.0
                x1 = s1 - j1
                x2 = s2 - j2
                if x1 >= 0.0 and x2 >= 0.0:
                    s1 = x1
                    s2 = x2
                elif x1 < 0.0 and x2 < 0.0:
                    ruin = t
                    break
                elif x1 < 0.0:
                    if r1_inf or x2 + r1 * x1 < 0.0:
                        ruin = t
                        break
                    s1 = 0.0
                    s2 = x2 + r1 * x1
                else:
                    if r2_inf or x1 + r2 * x2 < 0.0:
                        ruin = t
                        break
                    s2 = 0.0
                    s1 = x1 + r2 * x2
        out[i - start] = ruin
    return np.asarray(out)


cdef double _ladder_jump(_Laws tab, double lam, double c, double t_rej, double safe,
                         bitgen_t* rng, int64_t* counts, int slot):
    cdef double t, x, dt
    while True:
        counts[slot] += 1
        t = 0.0
        x = 0.0
        while True:
            dt = _expo(rng) / lam
            t += dt
            if t > t_rej:
                break
            x += c * dt
            if x >= safe:
                break
            x -= tab.draw(0, rng)
            if x < 0.0:
                return t


def ladder_levels(line, double horizon, seed, tag, int64_t start, int64_t stop):
    cdef _Laws tab = _Laws(line.laws)
    cdef double lam = line.lam, c = line.c, rate = line.ladder_rate
    cdef double t_rej = line.t_rej, safe = line.safe
    cdef double[::1] out = np.empty(stop - start)
    cdef int64_t counts[1]
    cdef int64_t accepted = 0
    cdef int64_t i
    cdef double y, t
    cdef bitgen_t* rng
    counts[0] = 0
    for i in range(start, stop):
        bg = _philox(seed, tag, i)
        rng = _bitgen(bg)
        y = 0.0
        if rate > 0:
            t = 0.0
            while True:
                t += _expo(rng) / rate
                if t > horizon:
                    break
                y += _ladder_jump(tab, lam, c, t_rej, safe, rng, counts, 0)
                accepted += 1
        out[i - start] = y
    return np.asarray(out), counts[0], accepted


def wh_extremes(l1, l2, double rate_up, double rate_dn, double p, seed, tag,
                int64_t start, int64_t stop):
    cdef _Laws tab1 = _Laws(l1.laws)
    cdef _Laws tab2 = _Laws(l2.laws)
    cdef double lam1 = l1.lam, cc1 = l1.c, t_rej1 = l1.t_rej, safe1 = l1.safe
    cdef double lam2 = l2.lam, cc2 = l2.c, t_rej2 = l2.t_rej, safe2 = l2.safe
    cdef double total = rate_up + rate_dn
    cdef double[::1] sup = np.empty(stop - start)
    cdef double[::1] low = np.empty(stop - start)
    cdef int64_t counts[2]
    cdef int64_t accepted[2]
    cdef int64_t i
    cdef double horizon, x, hi, lo, t
    cdef bitgen_t* rng
    counts[0] = 0
    counts[1] = 0
    accepted[0] = 0
    accepted[1] = 0
    for i in range(start, stop):
        bg = _philox(seed, tag, i)
        rng = _bitgen(bg)
        horizon = _expo(rng) / p
        x = 0.0
        hi = 0.0
        lo = 0.0
        if total > 0:
            t = 0.0
            while True:
                t += _expo(rng) / total
                if t > horizon:
                    break
                if rng.next_double(rng.state) * total < rate_up:
                    x += _ladder_jump(tab1, lam1, cc1, t_rej1, safe1, rng, counts, 0)
                    accepted[0] += 1
                    if x > hi:
                        hi = x
                else:
                    x -= _ladder_jump(tab2, lam2, cc2, t_rej2, safe2, rng, counts, 1)
                    accepted[1] += 1
                    if x < lo:
                        lo = x
        sup[i - start] = hi
        low[i - start] = lo
    return (np.asarray(sup), np.asarray(low),
            np.array([counts[0], counts[1]], dtype=np.int64),
            np.array([accepted[0], accepted[1]], dtype=np.int64))
