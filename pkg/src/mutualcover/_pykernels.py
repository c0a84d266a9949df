"""Pure-Python simulation kernels.

Operation-for-operation twin of ``_ckernels.pyx``: both draw uniforms from a
per-path Philox stream (``key=(seed, tag)``, path index in the top counter
word) and perform the same floating-point operations in the same order, so
the two backends return bit-identical arrays.
"""

from math import inf, log1p

import numpy as np

NAME = "python"

_DET, _EXP, _ERLANG = 0, 1, 2


def path_stream(seed, tag, index):
    bitgen = np.random.Philox(key=np.array([seed, tag], dtype=np.uint64),
                              counter=np.array([0, 0, 0, index], dtype=np.uint64))
    return np.random.Generator(bitgen).random


def _draw_law(laws, law, rand):
    k = laws.start[law]
    end = laws.end[law]
    if end - k > 1:
        u = rand()
        while k < end - 1 and u >= laws.cumw[k]:
            k += 1
    kind = laws.kind[k]
    if kind == _DET:
        return laws.param[k]
    if kind == _EXP:
        return -log1p(-rand()) / laws.param[k]
    x = 0.0
    for _ in range(laws.shape[k]):
        x += -log1p(-rand())
    return x / laws.param[k]


class _Unpacked:
    """Plain-list copy of a law table; list indexing beats numpy scalars here."""

    def __init__(self, table):
        self.kind = table.kind.tolist()
        self.shape = table.shape.tolist()
        self.param = table.param.tolist()
        self.cumw = table.cumw.tolist()
        self.start = table.start.tolist()
        self.end = table.end.tolist()


def claim_samples(laws, law, seed, tag, start, stop):
    tab = _Unpacked(laws)
    out = np.empty(stop - start)
    for i in range(start, stop):
        out[i - start] = _draw_law(tab, law, path_stream(seed, tag, i))
    return out


def survival_times(km, u0, v0, u_rate, v_rate, t_max, safe1, safe2, seed, tag, start, stop):
    tab = _Unpacked(km.laws)
    atom_cumw = km.atom_cumw.tolist()
    atom_law1 = km.atom_law1.tolist()
    atom_law2 = km.atom_law2.tolist()
    n_atoms = len(atom_cumw)
    lam, c1, c2, r1, r2 = km.lam, km.c1, km.c2, km.r1, km.r2
    r1_inf, r2_inf = km.r1_inf, km.r2_inf
    out = np.empty(stop - start)
    for i in range(start, stop):
        rand = path_stream(seed, tag, i)
        s1 = -log1p(-rand()) / u_rate if u_rate > 0 else u0
        s2 = -log1p(-rand()) / v_rate if v_rate > 0 else v0
        t = 0.0
        ruin = inf
        if lam > 0:
            while True:
                if s1 >= safe1 and s2 >= safe2:
                    break
                dt = -log1p(-rand()) / lam
                t += dt
                if t > t_max:
                    break
                s1 += c1 * dt
                s2 += c2 * dt
                a = 0
                if n_atoms > 1:
                    u = rand()
                    while a < n_atoms - 1 and u >= atom_cumw[a]:
                        a += 1
                j1 = _draw_law(tab, atom_law1[a], rand) if atom_law1[a] >= 0 else 0.0
                j2 = _draw_law(tab, atom_law2[a], rand) if atom_law2[a] >= 0 else 0.0
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
    return out


def _ladder_jump(tab, lam, c, t_rej, safe, rand, counts, slot):
    """Time for the parent line to pass below zero, conditioned on it happening."""
    while True:
        counts[slot] += 1
        t = 0.0
        x = 0.0
        while True:
            dt = -log1p(-rand()) / lam
            t += dt
            if t > t_rej:
                break
            x += c * dt
            if x >= safe:
                break
            x -= _draw_law(tab, 0, rand)
            if x < 0.0:
                return t


def ladder_levels(line, horizon, seed, tag, start, stop):
    """Ladder time process evaluated at ``horizon`` (one value per path)."""
    tab = _Unpacked(line.laws)
    lam, c, rate = line.lam, line.c, line.ladder_rate
    t_rej, safe = line.t_rej, line.safe
    out = np.empty(stop - start)
    counts = [0]
    accepted = 0
    for i in range(start, stop):
        rand = path_stream(seed, tag, i)
        y = 0.0
        if rate > 0:
            t = 0.0
            while True:
                t += -log1p(-rand()) / rate
                if t > horizon:
                    break
                y += _ladder_jump(tab, lam, c, t_rej, safe, rand, counts, 0)
                accepted += 1
        out[i - start] = y
    return out, counts[0], accepted


def wh_extremes(l1, l2, rate_up, rate_dn, p, seed, tag, start, stop):
    """Supremum and infimum of ``Y1(a t) - Y2(b t)`` over ``[0, e_p]``.

    ``rate_up``/``rate_dn`` are the already time-scaled jump rates of the two
    ladder streams.
    """
    tab1 = _Unpacked(l1.laws)
    tab2 = _Unpacked(l2.laws)
    total = rate_up + rate_dn
    sup = np.empty(stop - start)
    low = np.empty(stop - start)
    counts = [0, 0]
    accepted = [0, 0]
    for i in range(start, stop):
        rand = path_stream(seed, tag, i)
        horizon = -log1p(-rand()) / p
        x = 0.0
        hi = 0.0
        lo = 0.0
        if total > 0:
            t = 0.0
            while True:
                t += -log1p(-rand()) / total
                if t > horizon:
                    break
                if rand() * total < rate_up:
                    x += _ladder_jump(tab1, l1.lam, l1.c, l1.t_rej, l1.safe, rand, counts, 0)
                    accepted[0] += 1
                    if x > hi:
                        hi = x
                else:
                    x -= _ladder_jump(tab2, l2.lam, l2.c, l2.t_rej, l2.safe, rand, counts, 1)
                    accepted[1] += 1
                    if x < lo:
                        lo = x
        sup[i - start] = hi
        low[i - start] = lo
    return sup, low, np.array(counts, dtype=np.int64), np.array(accepted, dtype=np.int64)
