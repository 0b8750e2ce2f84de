"""Buchberger's algorithm for submodules of free modules over Q[x].

Vectors are dicts mapping ``(component, exponents)`` to nonzero Fractions.
An ideal is the one-component case.  Pair selection is the normal
strategy (lowest degree lcm first, ties broken by the term order and then
by insertion index) with the Gebauer-Moeller criteria, so every run on the
same input performs the same reductions.
"""

from __future__ import annotations

import heapq
from fractions import Fraction
from typing import Callable, Dict, List, Sequence, Tuple

Mon = Tuple[int, Tuple[int, ...]]
Vec = Dict[Mon, Fraction]


def term_over_position(term_key):
    def key(m):
        return (term_key(m[1]), -m[0])
    return key


def position_over_term(term_key):
    def key(m):
        return (-m[0], term_key(m[1]))
    return key


def eliminate_components(term_key, count):
    """Components ``< count`` dominate all others; used for syzygies and lifting."""
    def key(m):
        return (m[0] < count, term_key(m[1]), -m[0])
    return key


def _divides(a, b):
    for x, y in zip(a, b):
        if x > y:
            return False
    return True


def _lcm(a, b):
    return tuple(x if x > y else y for x, y in zip(a, b))


def _disjoint(a, b):
    for x, y in zip(a, b):
        if x and y:
            return False
    return True


def lead(vec: Vec, key) -> Mon:
    return max(vec, key=key)


def monic(vec: Vec, key) -> Vec:
    c = vec[lead(vec, key)]
    if c == 1:
        return vec
    inv = 1 / c
    return {m: v * inv for m, v in vec.items()}


def sub_multiple(f: Vec, c: Fraction, shift, g: Vec):
    """f -= c * x^shift * g, in place."""
    for (comp, e), v in g.items():
        m = (comp, tuple(a + b for a, b in zip(e, shift)))
        nv = f.get(m, 0) - c * v
        if nv:
            f[m] = nv
        else:
            del f[m]


class GroebnerBasis:
    """A reduced, monic Groebner basis together with its module order key."""

    def __init__(self, elements: List[Vec], key):
        self.key = key
        self.elements = elements
        self.leads = [lead(g, key) for g in elements]
        self._by_comp: Dict[int, List[int]] = {}
        for i, (c, _) in enumerate(self.leads):
            self._by_comp.setdefault(c, []).append(i)

    def __len__(self):
        return len(self.elements)

    def is_unit(self, comp=0):
        return any(e == tuple(0 for _ in e) for c, e in self.leads if c == comp)

    def _divisor(self, m):
        comp, e = m
        for i in self._by_comp.get(comp, ()):
            if _divides(self.leads[i][1], e):
                return i
        return None

    def reduce(self, vec: Vec) -> Vec:
        """Full normal form: no term of the result is divisible by a lead term."""
        f = dict(vec)
        r: Vec = {}
        key = self.key
        while f:
            m = max(f, key=key)
            i = self._divisor(m)
            c = f[m]
            if i is None:
                r[m] = c
                del f[m]
                continue
            lm = self.leads[i]
            shift = tuple(a - b for a, b in zip(m[1], lm[1]))
            sub_multiple(f, c, shift, self.elements[i])
        return r

    def contains(self, vec: Vec) -> bool:
        return not self.reduce(vec)


def _top_reduce(f: Vec, basis, leads, by_comp, key):
    while f:
        m = max(f, key=key)
        comp, e = m
        for i in by_comp.get(comp, ()):
            le = leads[i][1]
            if _divides(le, e):
                shift = tuple(a - b for a, b in zip(e, le))
                sub_multiple(f, f[m], shift, basis[i])
                break
        else:
            return f
    return f


def groebner(generators: Sequence[Vec], key: Callable) -> GroebnerBasis:
    """Reduced Groebner basis of the submodule spanned by ``generators``."""
    gens = [dict(g) for g in generators if g]
    if not gens:
        return GroebnerBasis([], key)
    ideal_case = all(c == 0 for g in gens for (c, _) in g)

    polys: List[Vec] = []
    leads: List[Mon] = []
    active: List[int] = []
    by_comp: Dict[int, List[int]] = {}
    pairs: Dict[Tuple[int, int], Mon] = {}
    heap: list = []

    def pair_key(lcm):
        return (sum(lcm[1]), key(lcm))

    def update(h: Vec):
        t = len(polys)
        lh = lead(h, key)
        polys.append(h)
        leads.append(lh)
        comp, eh = lh
        cands = [(g, (comp, _lcm(leads[g][1], eh))) for g in active
                 if leads[g][0] == comp]
        kept = []
        for idx, (g1, l1) in enumerate(cands):
            if ideal_case and _disjoint(leads[g1][1], eh):
                kept.append((g1, l1))
                continue
            dominated = False
            for g2, l2 in cands[idx + 1:]:
                if _divides(l2[1], l1[1]):
                    dominated = True
                    break
            if not dominated:
                for g2, l2 in kept:
                    if _divides(l2[1], l1[1]):
                        dominated = True
                        break
            if not dominated:
                kept.append((g1, l1))
        # chain criterion on existing pairs
        for (i, j), l in list(pairs.items()):
            if l[0] != comp or not _divides(eh, l[1]):
                continue
            li = _lcm(leads[i][1], eh)
            lj = _lcm(leads[j][1], eh)
            if li != l[1] and lj != l[1]:
                del pairs[(i, j)]
        for g1, l1 in kept:
            if ideal_case and _disjoint(leads[g1][1], eh):
                continue
            pairs[(g1, t)] = l1
            heapq.heappush(heap, (pair_key(l1), g1, t))
        still = []
        for g in active:
            if leads[g][0] == comp and _divides(eh, leads[g][1]):
                by_comp[comp].remove(g)
            else:
                still.append(g)
        still.append(t)
        active[:] = still
        by_comp.setdefault(comp, []).append(t)

    gens.sort(key=lambda g: key(lead(g, key)))
    for g in gens:
        g = _top_reduce(g, polys, leads, by_comp, key)
        if g:
            update(monic(g, key))

    while heap:
        _, i, j = heapq.heappop(heap)
        l = pairs.pop((i, j), None)
        if l is None:
            continue
        fi, fj = polys[i], polys[j]
        li, lj = leads[i][1], leads[j][1]
        s: Vec = {}
        sub_multiple(s, Fraction(-1), tuple(a - b for a, b in zip(l[1], li)), fi)
        sub_multiple(s, Fraction(1), tuple(a - b for a, b in zip(l[1], lj)), fj)
        s = _top_reduce(s, polys, leads, by_comp, key)
        if s:
            update(monic(s, key))

    minimal = [polys[g] for g in active]
    return interreduce(minimal, key)


def interreduce(basis: List[Vec], key) -> GroebnerBasis:
    """Tail-reduce a minimal Groebner basis and sort by lead, largest first."""
    full = []
    for i, g in enumerate(basis):
        others = GroebnerBasis(basis[:i] + basis[i + 1:], key)
        lm = lead(g, key)
        tail = {m: c for m, c in g.items() if m != lm}
        red = others.reduce(tail)
        red[lm] = g[lm]
        full.append(red)
    full.sort(key=lambda g: key(lead(g, key)), reverse=True)
    return GroebnerBasis(full, key)
