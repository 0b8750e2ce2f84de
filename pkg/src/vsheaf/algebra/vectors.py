"""Helpers converting between Polynomials and sparse module vectors."""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Sequence

from .groebner import Vec
from .polynomial import Polynomial, PolyRing


def poly_vec(p: Polynomial, comp: int = 0) -> Vec:
    return {(comp, e): c for e, c in p.terms.items()}


def column_vec(entries: Sequence[Polynomial], offset: int = 0) -> Vec:
    v: Vec = {}
    for i, p in enumerate(entries):
        for e, c in p.terms.items():
            v[(i + offset, e)] = c
    return v


def vec_entries(v: Vec, ring: PolyRing, n: int) -> List[Polynomial]:
    terms: List[Dict] = [dict() for _ in range(n)]
    for (i, e), c in v.items():
        terms[i][e] = c
    return [Polynomial(ring, t) for t in terms]


def vec_component(v: Vec, i: int, ring: PolyRing) -> Polynomial:
    return Polynomial(ring, {e: c for (j, e), c in v.items() if j == i})


def add_into(acc: Vec, v: Vec, scale=1):
    for m, c in v.items():
        nv = acc.get(m, 0) + scale * c
        if nv:
            acc[m] = nv
        else:
            acc.pop(m, None)
    return acc


def vadd(a: Vec, b: Vec) -> Vec:
    return add_into(dict(a), b)


def vsub(a: Vec, b: Vec) -> Vec:
    return add_into(dict(a), b, -1)


def vscale(v: Vec, c) -> Vec:
    c = Fraction(c)
    if not c:
        return {}
    return {m: c * x for m, x in v.items()}


def poly_times_vec(p: Polynomial, v: Vec) -> Vec:
    out: Vec = {}
    for e1, c1 in p.terms.items():
        for (i, e2), c2 in v.items():
            m = (i, tuple(a + b for a, b in zip(e1, e2)))
            nv = out.get(m, 0) + c1 * c2
            if nv:
                out[m] = nv
            else:
                del out[m]
    return out


def shift_components(v: Vec, offset: int) -> Vec:
    return {(i + offset, e): c for (i, e), c in v.items()}


def restrict_components(v: Vec, lo: int, hi: int, offset: int = 0) -> Vec:
    return {(i - offset, e): c for (i, e), c in v.items() if lo <= i < hi}


def split_by_component(v: Vec):
    out: Dict[int, Dict] = {}
    for (i, e), c in v.items():
        out.setdefault(i, {})[e] = c
    return out


def combine(coeffs: Vec, columns: Sequence[Vec], ring: PolyRing) -> Vec:
    """sum_j coeffs[j] * columns[j] where coeffs is a vector indexed by column."""
    out: Vec = {}
    for j, terms in split_by_component(coeffs).items():
        add_into(out, poly_times_vec(Polynomial(ring, terms), columns[j]))
    return out


def map_vec(v: Vec, source: PolyRing, images: Sequence[Polynomial], target: PolyRing) -> Vec:
    """Apply a ring map coefficientwise."""
    out: Vec = {}
    for i, terms in split_by_component(v).items():
        p = Polynomial(source, terms).substitute(images, target)
        add_into(out, poly_vec(p, i))
    return out
