"""Quotient rings, localizations, ideals and linear systems over them."""

from __future__ import annotations

from fractions import Fraction
from functools import cached_property
from typing import Iterable, List, Optional, Sequence

from .groebner import (GroebnerBasis, Vec, eliminate_components, groebner,
                       term_over_position)
from .orders import MonomialOrder, elimination_order
from .polynomial import Polynomial, PolyRing
from .vectors import (poly_vec, shift_components,
                      split_by_component, vec_component)


def _as_poly(ring: PolyRing, p) -> Polynomial:
    return ring.parse(p) if not isinstance(p, Polynomial) or p.ring is not ring else p


def buchberger(generators: Sequence[Polynomial], order: MonomialOrder = None) -> List[Polynomial]:
    """Reduced monic Groebner basis, sorted by lead term (largest first)."""
    gens = [g for g in generators if not g.is_zero()]
    if not gens:
        return []
    ring = gens[0].ring
    if order is not None and order != ring.order:
        ring = ring.with_order(order)
        gens = [Polynomial(ring, g.terms) for g in gens]
    gb = groebner([poly_vec(g) for g in gens], term_over_position(ring.key))
    return [Polynomial(ring, {e: c for (_, e), c in el.items()}) for el in gb.elements]


def normal_form(p: Polynomial, basis: Sequence[Polynomial]) -> Polynomial:
    """Remainder of ``p`` on division by a Groebner basis in ``p``'s order."""
    gb = GroebnerBasis([poly_vec(g) for g in basis if g], term_over_position(p.ring.key))
    r = gb.reduce(poly_vec(p))
    return Polynomial(p.ring, {e: c for (_, e), c in r.items()})


class Ideal:
    """An ideal of a polynomial ring with a lazily computed reduced basis."""

    def __init__(self, ring: PolyRing, generators: Iterable = ()):
        self.ring = ring
        self.generators = tuple(_as_poly(ring, g) for g in generators)

    @cached_property
    def groebner(self) -> List[Polynomial]:
        return buchberger(self.generators)

    @cached_property
    def _gb(self) -> GroebnerBasis:
        return GroebnerBasis([poly_vec(g) for g in self.groebner],
                             term_over_position(self.ring.key))

    def reduce(self, p) -> Polynomial:
        p = _as_poly(self.ring, p)
        r = self._gb.reduce(poly_vec(p))
        return Polynomial(self.ring, {e: c for (_, e), c in r.items()})

    def contains(self, p) -> bool:
        return self.reduce(p).is_zero()

    def is_unit(self) -> bool:
        return any(g.is_constant() and not g.is_zero() for g in self.groebner)

    def is_zero(self) -> bool:
        return not self.groebner

    def __eq__(self, other):
        if not isinstance(other, Ideal):
            return NotImplemented
        return self.ring == other.ring and self.groebner == other.groebner

    def __hash__(self):
        return hash(tuple(self.groebner))

    def __add__(self, other: "Ideal") -> "Ideal":
        return Ideal(self.ring, self.generators + other.generators)

    def __repr__(self):
        return f"Ideal({[str(g) for g in self.generators]})"


def eliminate(ideal: Ideal, variables: Sequence) -> Ideal:
    """Intersection of ``ideal`` with the subring free of ``variables``.

    The result lives in the ring of the remaining variables, in their
    original relative order and order kind.
    """
    ring = ideal.ring
    idx = sorted({v if isinstance(v, int) else ring.index(v) for v in variables})
    order = elimination_order(ring.nvars, idx, ring.order.perm)
    gb = buchberger(ideal.generators, order)
    keep = [i for i in range(ring.nvars) if i not in idx]
    sub = PolyRing([ring.names[i] for i in keep], _sub_order(ring.order, keep))
    out = []
    for g in gb:
        if all(e[i] == 0 for e in g.terms for i in idx):
            out.append(Polynomial(sub, {tuple(e[i] for i in keep): c for e, c in g.terms.items()}))
    return Ideal(sub, out)


def _sub_order(order: MonomialOrder, keep: Sequence[int]) -> MonomialOrder:
    pos = {v: k for k, v in enumerate(keep)}
    perm = tuple(pos[i] for i in order.perm if i in pos)
    kind = order.kind if order.kind != "elim" else "grevlex"
    return MonomialOrder(kind, len(keep), perm)


def saturate(ideal: Ideal, f) -> Ideal:
    """(I : f^infinity), via I + (1 - s*f) eliminated in a fresh variable s."""
    ring = ideal.ring
    f = _as_poly(ring, f)
    if f.is_zero():
        raise ValueError("cannot saturate by zero")
    s = _fresh_name(ring.names, "_s")
    big = PolyRing((s,) + ring.names, ring.order.extend(extra_front=1))
    gens = [g.to_ring(big) for g in ideal.generators]
    gens.append(big.gen(0) * f.to_ring(big) - 1)
    res = eliminate(Ideal(big, gens), [0])
    return Ideal(ring, [g.to_ring(ring) for g in res.generators])


def quotient(ideal: Ideal, f) -> Ideal:
    """Ideal quotient (I : f), from the syzygies of (f, I)."""
    ring = ideal.ring
    f = _as_poly(ring, f)
    solver = LinearSystem(ring, 1, [poly_vec(f)], [poly_vec(g) for g in ideal.generators])
    gens = [Polynomial(ring, {e: c for (_, e), c in s.items()}) for s in solver.syzygies()]
    return Ideal(ring, gens)


def _fresh_name(names, stem):
    k = 0
    while f"{stem}{k}" in names:
        k += 1
    return f"{stem}{k}"


class RingPresentation:
    """Q[vars] / relations, with principal localizations presented by
    adjoining a variable ``u`` and the relation ``u*f - 1``."""

    def __init__(self, names: Sequence[str], order="grevlex", relations: Iterable = (),
                 inverted: Sequence = (), label: str = ""):
        names = tuple(names)
        inverted = list(inverted)
        inv_names = []
        inv_polys = []
        for item in inverted:
            if isinstance(item, tuple):
                inv_names.append(item[0])
                inv_polys.append(item[1])
            else:
                inv_names.append(_fresh_name(names + tuple(inv_names), "_u"))
                inv_polys.append(item)
        all_names = names + tuple(inv_names)
        if isinstance(order, MonomialOrder) and order.nvars != len(all_names):
            order = order.extend(extra_back=len(all_names) - order.nvars)
        self.poly = PolyRing(all_names, order)
        self.base_names = names
        self.label = label
        rels = [_as_poly(self.poly, r) for r in relations]
        inv = []
        for name, f in zip(inv_names, inv_polys):
            f = _as_poly(self.poly, f) if not isinstance(f, Polynomial) else f.to_ring(self.poly)
            inv.append((name, f))
            rels.append(self.poly.gen(name) * f - 1)
        self.inverted = tuple(inv)
        self.relations = Ideal(self.poly, rels)

    # -- basic API ---------------------------------------------------------
    @property
    def names(self):
        return self.poly.names

    @property
    def nvars(self):
        return self.poly.nvars

    @property
    def order(self):
        return self.poly.order

    def __repr__(self):
        rel = [str(g) for g in self.relations.generators]
        return f"RingPresentation({list(self.names)}, relations={rel})"

    def signature(self):
        return (self.names, self.order, tuple(self.relations.groebner))

    def __eq__(self, other):
        return isinstance(other, RingPresentation) and self.signature() == other.signature()

    def __hash__(self):
        return hash(self.signature())

    def parse(self, text) -> Polynomial:
        if isinstance(text, Polynomial):
            return text if text.ring is self.poly else text.to_ring(self.poly)
        return self.poly.parse(text)

    def gen(self, name) -> Polynomial:
        return self.poly.gen(name)

    def one(self):
        return self.poly.one()

    def zero(self):
        return self.poly.zero()

    def reduce(self, p) -> Polynomial:
        return self.relations.reduce(self.parse(p))

    def is_zero(self, p) -> bool:
        return self.reduce(p).is_zero()

    def equal(self, a, b) -> bool:
        return self.is_zero(self.parse(a) - self.parse(b))

    @property
    def relation_gb(self) -> GroebnerBasis:
        return self.relations._gb

    def is_zero_ring(self) -> bool:
        return self.relations.is_unit()

    def inverse_of(self, f) -> Optional[Polynomial]:
        """A representative of 1/f if f is a constant or an inverted element."""
        f = self.reduce(f)
        if f.is_constant() and not f.is_zero():
            return self.poly.const(1 / f.constant_value())
        for name, g in self.inverted:
            if self.equal(g, f):
                return self.gen(name)
            if self.equal(self.gen(name), f):
                return self.reduce(g)
        return None

    # -- constructions -----------------------------------------------------
    def extend(self, new_names: Sequence[str], front=False, relations: Iterable = ()) -> "RingPresentation":
        """Polynomial ring over this one in fresh variables, plus extra relations."""
        clash = set(new_names) & set(self.names)
        if clash:
            raise ValueError(f"variable names already in use: {sorted(clash)}")
        if front:
            names = tuple(new_names) + self.names
            order = self.order.extend(extra_front=len(new_names))
        else:
            names = self.names + tuple(new_names)
            order = self.order.extend(extra_back=len(new_names))
        ring = RingPresentation.__new__(RingPresentation)
        ring.poly = PolyRing(names, order)
        ring.base_names = tuple(n for n in names if n not in dict(self.inverted))
        ring.label = self.label
        ring.inverted = tuple((n, f.to_ring(ring.poly)) for n, f in self.inverted)
        rels = [g.to_ring(ring.poly) for g in self.relations.generators]
        rels += [ring.parse(r) for r in relations]
        ring.relations = Ideal(ring.poly, rels)
        return ring

    def quotient(self, relations: Iterable) -> "RingPresentation":
        return self.extend([], relations=relations)

    def localize(self, f, name: str = None) -> "RingPresentation":
        f = self.parse(f)
        name = name or _fresh_name(self.names, "_u")
        ring = self.extend([name])
        ring.inverted = ring.inverted + ((name, f.to_ring(ring.poly)),)
        ring.relations = Ideal(ring.poly, ring.relations.generators
                               + (ring.gen(name) * f.to_ring(ring.poly) - 1,))
        ring.base_names = tuple(n for n in ring.base_names if n != name)
        return ring

    def with_order(self, order) -> "RingPresentation":
        ring = RingPresentation.__new__(RingPresentation)
        ring.poly = self.poly.with_order(order)
        ring.base_names = self.base_names
        ring.label = self.label
        ring.inverted = tuple((n, Polynomial(ring.poly, f.terms)) for n, f in self.inverted)
        ring.relations = Ideal(ring.poly, [Polynomial(ring.poly, g.terms)
                                           for g in self.relations.generators])
        return ring

    def derivation(self, p: Polynomial, var: str) -> Polynomial:
        """d p / d var on the coordinate variables, with d u = -u^2 d f for u = 1/f.

        An inverted f may itself involve earlier inverse variables.
        """
        p = self.parse(p)
        du = {}
        for name, f in self.inverted:
            df = f.derivative(var)
            for prev, d in du.items():
                df = df + f.derivative(prev) * d
            du[name] = -(self.gen(name) ** 2) * df
        out = p.derivative(var)
        for name, d in du.items():
            out = out + p.derivative(name) * d
        return self.reduce(out)

    @property
    def coordinates(self) -> tuple:
        inv = {n for n, _ in self.inverted}
        return tuple(n for n in self.names if n not in inv)


class RingMap:
    """Q-algebra map ``source -> target`` given by images of source variables."""

    def __init__(self, source: RingPresentation, target: RingPresentation, images: Sequence):
        if len(images) != source.nvars:
            raise ValueError(f"ring map needs {source.nvars} images, got {len(images)}")
        self.source = source
        self.target = target
        self.images = tuple(target.reduce(target.parse(p)) for p in images)

    @classmethod
    def identity(cls, ring: RingPresentation) -> "RingMap":
        return cls(ring, ring, ring.poly.gens())

    @classmethod
    def inclusion(cls, source: RingPresentation, target: RingPresentation) -> "RingMap":
        """Map variables to equally named variables of ``target``."""
        missing = [n for n in source.names if n not in target.names]
        if missing:
            raise ValueError(f"target has no variables {missing}")
        return cls(source, target, [target.gen(n) for n in source.names])

    def __call__(self, p) -> Polynomial:
        p = self.source.parse(p)
        return self.target.reduce(p.substitute(self.images, self.target.poly))

    def vec(self, v: Vec) -> Vec:
        out: Vec = {}
        for i, terms in split_by_component(v).items():
            q = self(Polynomial(self.source.poly, terms))
            for e, c in q.terms.items():
                out[(i, e)] = c
        return out

    def compose(self, first: "RingMap") -> "RingMap":
        """self after first."""
        return RingMap(first.source, self.target, [self(p) for p in first.images])

    def check(self) -> List[str]:
        """Relations of the source that fail to map to zero."""
        bad = []
        for g in self.source.relations.generators:
            if not self(g).is_zero():
                bad.append(str(g))
        return bad

    def inverse(self) -> "RingMap":
        """Inverse ring map, or ValueError if this map is not an isomorphism.

        Uses the graph ideal J_T + (s_i - image_i) with the target
        variables eliminated: t_j lies in the image iff its normal form is
        free of target variables, and the kernel is the elimination ideal.
        """
        bad = self.check()
        if bad:
            raise ValueError(f"ring map is not well defined: {bad}")
        src, tgt = self.source, self.target
        snames = tuple(_fresh_name(tgt.names + src.names, f"_s{i}_") for i in range(src.nvars))
        big = PolyRing(tgt.names + snames, elimination_order(
            tgt.nvars + src.nvars, range(tgt.nvars)))
        gens = [Polynomial(big, {e + (0,) * src.nvars: c for e, c in g.terms.items()})
                for g in tgt.relations.generators]
        for i, img in enumerate(self.images):
            lifted = Polynomial(big, {e + (0,) * src.nvars: c for e, c in img.terms.items()})
            gens.append(big.gen(tgt.nvars + i) - lifted)
        ideal = Ideal(big, gens)
        nt = tgt.nvars

        def to_source(p):
            if any(any(e[:nt]) for e in p.terms):
                return None
            return Polynomial(src.poly, {e[nt:]: c for e, c in p.terms.items()})

        for g in ideal.groebner:
            k = to_source(g)
            if k is not None and not src.is_zero(k):
                raise ValueError(f"ring map is not injective: {k} maps to zero")
        images = []
        for j in range(nt):
            q = to_source(ideal.reduce(big.gen(j)))
            if q is None:
                raise ValueError(f"ring map is not surjective: {tgt.names[j]} not in the image")
            images.append(q)
        return RingMap(tgt, src, images)

    def __eq__(self, other):
        return (isinstance(other, RingMap) and self.source == other.source
                and self.target == other.target
                and all(self.target.equal(a, b) for a, b in zip(self.images, other.images)))

    def __repr__(self):
        pairs = ", ".join(f"{n} -> {p}" for n, p in zip(self.source.names, self.images))
        return f"RingMap({pairs})"


class LinearSystem:
    """Solves sum_j a_j c_j = v modulo a denominator submodule over a quotient ring.

    ``columns`` and ``denominators`` are vectors with components ``< nrows``.
    The ring's relations times each basis vector are added to the
    denominators automatically.  One elimination Groebner basis serves both
    syzygy extraction and lifting.
    """

    def __init__(self, ring, nrows: int, columns: Sequence[Vec], denominators: Sequence[Vec] = ()):
        if isinstance(ring, RingPresentation):
            self.poly = ring.poly
            relgens = [g for g in ring.relations.groebner]
        else:
            self.poly = ring
            relgens = []
        self.nrows = nrows
        self.columns = [dict(c) for c in columns]
        self.denominators = [dict(d) for d in denominators if d]
        for g in relgens:
            for i in range(nrows):
                self.denominators.append(poly_vec(g, i))
        self.relgens = relgens

    @cached_property
    def gb(self) -> GroebnerBasis:
        n = self.nrows
        gens = []
        for j, c in enumerate(self.columns):
            v = dict(c)
            v[(n + j, self.poly.zero_exp)] = Fraction(1)
            gens.append(v)
        gens.extend(self.denominators)
        return groebner(gens, eliminate_components(self.poly.key, n))

    def _reduce_entries(self, v: Vec) -> Vec:
        if not self.relgens:
            return v
        rel = GroebnerBasis([poly_vec(g) for g in self.relgens], term_over_position(self.poly.key))
        out: Vec = {}
        for i, terms in split_by_component(v).items():
            r = rel.reduce({(0, e): c for e, c in terms.items()})
            for (_, e), c in r.items():
                out[(i, e)] = c
        return out

    def syzygies(self) -> List[Vec]:
        n = self.nrows
        out = []
        for g in self.gb.elements:
            if all(i >= n for (i, _) in g):
                v = self._reduce_entries(shift_components(g, -n))
                if v:
                    out.append(v)
        return out

    def solve(self, v: Vec) -> Optional[Vec]:
        """Coefficients a (indexed by column) with sum a_j c_j = v, or None."""
        r = self.gb.reduce(v)
        if any(i < self.nrows for (i, _) in r):
            return None
        return self._reduce_entries({(i - self.nrows, e): -c for (i, e), c in r.items()})

    def contains(self, v: Vec) -> bool:
        return self.solve(v) is not None


def syzygies(matrix: Sequence[Sequence], ring) -> List[List[Polynomial]]:
    """Generators of the kernel of the map of free modules given by ``matrix``.

    ``matrix`` is row-major; the kernel is computed over the quotient ring
    when ``ring`` is a RingPresentation.  Returns column vectors.
    """
    poly = ring.poly if isinstance(ring, RingPresentation) else ring
    rows = len(matrix)
    cols = len(matrix[0]) if rows else 0
    columns = []
    for j in range(cols):
        v: Vec = {}
        for i in range(rows):
            p = poly.parse(matrix[i][j]) if not isinstance(matrix[i][j], Polynomial) else matrix[i][j]
            for e, c in p.terms.items():
                v[(i, e)] = c
        columns.append(v)
    solver = LinearSystem(ring, rows, columns)
    out = []
    for s in solver.syzygies():
        out.append([vec_component(s, j, poly) for j in range(cols)])
    return out
