"""Finitely presented modules over quotient rings, and maps between them."""

from __future__ import annotations

from collections import deque
from fractions import Fraction
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

from ..algebra.groebner import GroebnerBasis, Vec, groebner, term_over_position
from ..algebra.polynomial import Polynomial
from ..algebra.rings import LinearSystem, RingMap, RingPresentation
from ..algebra.vectors import (add_into, combine, poly_times_vec, poly_vec,
                               split_by_component, vec_component)

INFINITE = "infinite"


class ModuleError(ValueError):
    pass


def _reduce_entries(ring: RingPresentation, v: Vec) -> Vec:
    gb = ring.relation_gb
    if not len(gb):
        return dict(v)
    out: Vec = {}
    for i, terms in split_by_component(v).items():
        r = gb.reduce({(0, e): c for e, c in terms.items()})
        for (_, e), c in r.items():
            out[(i, e)] = c
    return out


def vec_from_entries(ring: RingPresentation, entries: Sequence) -> Vec:
    v: Vec = {}
    for i, p in enumerate(entries):
        for e, c in ring.parse(p).terms.items():
            v[(i, e)] = c
    return v


def unit_vec(ring: RingPresentation, i: int) -> Vec:
    return {(i, ring.poly.zero_exp): Fraction(1)}


class FpModule:
    """Cokernel of a matrix: ``ngens`` generators modulo the column ``relations``.

    Relations are sparse vectors whose components index the generators.
    Optional grading: ``degrees`` per generator and ``weights`` per ring
    variable.
    """

    def __init__(self, ring: RingPresentation, ngens: int, relations: Sequence[Vec] = (),
                 degrees: Optional[Sequence[int]] = None, weights: Optional[Sequence[int]] = None):
        self.ring = ring
        self.ngens = ngens
        rels = []
        for r in relations:
            if any(i >= ngens or i < 0 for (i, _) in r):
                raise ModuleError("relation has a component outside the generator range")
            r = _reduce_entries(ring, r)
            if r:
                rels.append(r)
        self.relations = rels
        self.degrees = tuple(degrees) if degrees is not None else None
        self.weights = tuple(weights) if weights is not None else None

    # -- constructors ------------------------------------------------------
    @classmethod
    def free(cls, ring, n, degrees=None, weights=None):
        return cls(ring, n, (), degrees, weights)

    @classmethod
    def zero(cls, ring):
        return cls(ring, 0)

    @classmethod
    def from_matrix(cls, ring, ngens, matrix_rows: Sequence[Sequence], **kw):
        """Relations given row-major: ``ngens`` rows, one column per relation."""
        if len(matrix_rows) != ngens:
            raise ModuleError(f"relation matrix needs {ngens} rows, got {len(matrix_rows)}")
        ncols = len(matrix_rows[0]) if ngens else 0
        if any(len(row) != ncols for row in matrix_rows):
            raise ModuleError("ragged relation matrix")
        cols = [vec_from_entries(ring, [matrix_rows[i][j] for i in range(ngens)])
                for j in range(ncols)]
        return cls(ring, ngens, cols, **kw)

    @classmethod
    def cyclic(cls, ring, ideal_gens: Sequence):
        return cls(ring, 1, [vec_from_entries(ring, [g]) for g in ideal_gens])

    # -- Groebner data -----------------------------------------------------
    @cached_property
    def rel_gb(self) -> GroebnerBasis:
        gens = [dict(r) for r in self.relations]
        for g in self.ring.relations.groebner:
            for i in range(self.ngens):
                gens.append(poly_vec(g, i))
        return groebner(gens, term_over_position(self.ring.poly.key))

    def reduce(self, v: Vec) -> Vec:
        return self.rel_gb.reduce(v)

    def is_zero_element(self, v: Vec) -> bool:
        return not self.reduce(v)

    def is_zero(self) -> bool:
        gb = self.rel_gb
        return all(gb.is_unit(i) for i in range(self.ngens))

    def is_free(self) -> bool:
        return not self.relations

    @cached_property
    def canonical_relations(self) -> List[Vec]:
        """Reduced Groebner relations, dropping the ring's own relations."""
        out = []
        for g in self.rel_gb.elements:
            if _reduce_entries(self.ring, g):
                out.append(g)
        return out

    def same_presentation(self, other: "FpModule") -> bool:
        return (self.ring == other.ring and self.ngens == other.ngens
                and self.rel_gb.elements == other.rel_gb.elements)

    # -- views -------------------------------------------------------------
    def entries(self, v: Vec) -> List[Polynomial]:
        return [vec_component(v, i, self.ring.poly) for i in range(self.ngens)]

    def relation_matrix(self, canonical=True) -> List[List[Polynomial]]:
        rels = self.canonical_relations if canonical else self.relations
        cols = [self.entries(r) for r in rels]
        return [[col[i] for col in cols] for i in range(self.ngens)]

    def describe(self) -> str:
        if self.ngens == 0 or self.is_zero():
            return "0"
        rows = self.relation_matrix()
        if not rows or not rows[0]:
            return f"free rank {self.ngens}"
        mat = "; ".join("[" + ", ".join(str(p) for p in row) + "]" for row in rows)
        return f"coker {self.ngens}x{len(rows[0])} [{mat}]"

    def __repr__(self):
        return f"FpModule({self.describe()})"

    def with_grading(self, degrees, weights) -> "FpModule":
        return FpModule(self.ring, self.ngens, self.relations, degrees, weights)

    def direct_sum(self, other: "FpModule") -> "FpModule":
        rels = list(self.relations)
        rels += [{(i + self.ngens, e): c for (i, e), c in r.items()} for r in other.relations]
        degrees = None
        if self.degrees is not None and other.degrees is not None:
            degrees = self.degrees + other.degrees
        return FpModule(self.ring, self.ngens + other.ngens, rels, degrees, self.weights)

    # -- invariants --------------------------------------------------------
    def length(self):
        """Dimension over Q, or ``INFINITE``."""
        gb = self.rel_gb
        leads = gb.leads
        nv = self.ring.nvars
        total = 0
        for comp in range(self.ngens):
            comp_leads = [e for c, e in leads if c == comp]
            if any(not any(e) for e in comp_leads):
                continue
            for v in range(nv):
                if not any(e[v] and all(e[w] == 0 for w in range(nv) if w != v)
                           for e in comp_leads):
                    return INFINITE
            total += _count_standard(comp_leads, nv)
        return total

    def hilbert_series(self, bound: Optional[int] = None) -> List[int]:
        """Coefficients of t^0..t^bound of the Hilbert series."""
        weights = self.weights or (1,) * self.ring.nvars
        degrees = self.degrees or (0,) * self.ngens
        if any(w <= 0 for w in weights):
            raise ModuleError("grading weights must be positive")
        for g in self.ring.relations.generators:
            if not g.is_homogeneous(weights):
                raise ModuleError(f"ring relation {g} is not homogeneous")
        for r in self.relations:
            if len(_vec_degrees(r, weights, degrees)) > 1:
                raise ModuleError("relation matrix is not homogeneous")
        if bound is None:
            bound = self.default_degree_bound()
        gb = self.rel_gb
        coeffs = [0] * (bound + 1)
        nv = self.ring.nvars
        for comp in range(self.ngens):
            comp_leads = [e for c, e in gb.leads if c == comp]
            base = degrees[comp]
            if base > bound:
                continue
            for mdeg in _standard_degrees(comp_leads, nv, weights, bound - base):
                coeffs[base + mdeg] += 1
        return coeffs

    def default_degree_bound(self) -> int:
        weights = self.weights or (1,) * self.ring.nvars
        degrees = self.degrees or (0,) * self.ngens
        gdeg = max(degrees, default=0)
        rdeg = max((max(_vec_degrees(r, weights, degrees), default=0) for r in self.relations),
                   default=0)
        return 2 * (gdeg + rdeg + self.ngens)


def _vec_degrees(v: Vec, weights, degrees):
    return {sum(w * a for w, a in zip(weights, e)) + degrees[i] for (i, e) in v}


def _divisible(e, leads):
    for l in leads:
        if all(a <= b for a, b in zip(l, e)):
            return True
    return False


def _count_standard(leads, nv) -> int:
    start = (0,) * nv
    if _divisible(start, leads):
        return 0
    seen = {start}
    queue = deque([start])
    while queue:
        e = queue.popleft()
        for v in range(nv):
            n = e[:v] + (e[v] + 1,) + e[v + 1:]
            if n not in seen and not _divisible(n, leads):
                seen.add(n)
                queue.append(n)
    return len(seen)


def _standard_degrees(leads, nv, weights, bound):
    start = (0,) * nv
    if _divisible(start, leads):
        return
    seen = {start}
    queue = deque([(start, 0)])
    while queue:
        e, d = queue.popleft()
        yield d
        for v in range(nv):
            nd = d + weights[v]
            if nd > bound:
                continue
            n = e[:v] + (e[v] + 1,) + e[v + 1:]
            if n not in seen and not _divisible(n, leads):
                seen.add(n)
                queue.append((n, nd))


class ModuleMap:
    """Homomorphism given by the images of the source generators."""

    def __init__(self, source: FpModule, target: FpModule, columns: Sequence[Vec], check=True):
        if len(columns) != source.ngens:
            raise ModuleError(f"map needs {source.ngens} columns, got {len(columns)}")
        if source.ring != target.ring:
            raise ModuleError("source and target live over different rings")
        for c in columns:
            if any(i >= target.ngens for (i, _) in c):
                raise ModuleError("column has a component outside the target")
        self.source = source
        self.target = target
        self.columns = [_reduce_entries(target.ring, c) for c in columns]
        if check:
            bad = self.relation_failures()
            if bad:
                raise ModuleError(f"matrix does not respect source relations {bad}")

    @classmethod
    def from_matrix(cls, source, target, rows: Sequence[Sequence], check=True):
        ring = target.ring
        if len(rows) != target.ngens:
            raise ModuleError(f"matrix needs {target.ngens} rows, got {len(rows)}")
        cols = [vec_from_entries(ring, [rows[i][j] for i in range(target.ngens)])
                for j in range(source.ngens)]
        return cls(source, target, cols, check)

    @classmethod
    def identity(cls, module):
        return cls(module, module, [unit_vec(module.ring, i) for i in range(module.ngens)], False)

    @classmethod
    def zero(cls, source, target):
        return cls(source, target, [{} for _ in range(source.ngens)], False)

    @property
    def ring(self):
        return self.target.ring

    def apply(self, v: Vec) -> Vec:
        return combine(v, self.columns, self.ring.poly)

    def relation_failures(self) -> List[int]:
        bad = []
        for k, r in enumerate(self.source.relations):
            if not self.target.is_zero_element(self.apply(r)):
                bad.append(k)
        return bad

    def matrix(self) -> List[List[Polynomial]]:
        cols = [self.target.entries(c) for c in self.columns]
        return [[col[i] for col in cols] for i in range(self.target.ngens)]

    def compose(self, first: "ModuleMap") -> "ModuleMap":
        """self after first."""
        return ModuleMap(first.source, self.target, [self.apply(c) for c in first.columns], False)

    def __matmul__(self, other):
        return self.compose(other)

    def is_zero(self) -> bool:
        return all(self.target.is_zero_element(c) for c in self.columns)

    def equals(self, other: "ModuleMap") -> bool:
        if self.source.ngens != other.source.ngens or self.target.ngens != other.target.ngens:
            return False
        return all(self.target.is_zero_element(add_into(dict(a), b, -1))
                   for a, b in zip(self.columns, other.columns))

    def __add__(self, other):
        cols = [add_into(dict(a), b) for a, b in zip(self.columns, other.columns)]
        return ModuleMap(self.source, self.target, cols, False)

    def scale(self, p) -> "ModuleMap":
        p = self.ring.parse(p)
        return ModuleMap(self.source, self.target, [poly_times_vec(p, c) for c in self.columns], False)

    def restrict_target(self, target: FpModule) -> "ModuleMap":
        return ModuleMap(self.source, target, self.columns, False)

    @cached_property
    def _solver(self) -> LinearSystem:
        return LinearSystem(self.ring, self.target.ngens, self.columns, self.target.relations)

    def preimage(self, v: Vec) -> Optional[Vec]:
        """Some source vector mapping to ``v`` modulo target relations."""
        return self._solver.solve(v)

    def is_surjective(self) -> bool:
        return all(self.preimage(unit_vec(self.ring, i)) is not None
                   for i in range(self.target.ngens)
                   if not self.target.is_zero_element(unit_vec(self.ring, i)))

    def is_injective(self) -> bool:
        k, _ = kernel(self)
        return k.is_zero()

    def is_isomorphism(self) -> bool:
        return self.is_surjective() and self.is_injective()

    def inverse(self) -> "ModuleMap":
        """Inverse of an isomorphism, column by column via lifting."""
        cols = []
        for i in range(self.target.ngens):
            pre = self.preimage(unit_vec(self.ring, i))
            if pre is None:
                raise ModuleError("map is not surjective; no inverse")
            cols.append(pre)
        inv = ModuleMap(self.target, self.source, cols, check=False)
        if inv.relation_failures():
            raise ModuleError("map is not injective; no inverse")
        return inv

    def describe(self) -> str:
        rows = self.matrix()
        return "[" + "; ".join("[" + ", ".join(str(p) for p in row) + "]" for row in rows) + "]"

    def __repr__(self):
        return f"ModuleMap({self.describe()})"


# -- constructions -----------------------------------------------------------

def subquotient(ring: RingPresentation, n: int, gens: Sequence[Vec],
                denominators: Sequence[Vec]) -> FpModule:
    """Module generated by ``gens`` inside R^n / denominators."""
    solver = LinearSystem(ring, n, gens, denominators)
    return FpModule(ring, len(gens), solver.syzygies())


def kernel(f: ModuleMap) -> Tuple[FpModule, ModuleMap]:
    """Kernel with its inclusion into the source."""
    solver = LinearSystem(f.ring, f.target.ngens, f.columns, f.target.relations)
    gens = [g for g in solver.syzygies() if not f.source.is_zero_element(g)]
    gens = _dedupe(gens, f.source)
    k = subquotient(f.ring, f.source.ngens, gens, f.source.relations)
    return k, ModuleMap(k, f.source, gens, check=False)


def _dedupe(gens, module):
    out = []
    seen = []
    for g in gens:
        r = module.reduce(g)
        if r and r not in seen:
            seen.append(r)
            out.append(g)
    return out


def cokernel(f: ModuleMap) -> Tuple[FpModule, ModuleMap]:
    c = FpModule(f.ring, f.target.ngens, list(f.target.relations) + list(f.columns),
                 f.target.degrees, f.target.weights)
    return c, ModuleMap(f.target, c, [unit_vec(f.ring, i) for i in range(c.ngens)], check=False)


def image(f: ModuleMap) -> Tuple[FpModule, ModuleMap]:
    gens = [c for c in f.columns if not f.target.is_zero_element(c)]
    im = subquotient(f.ring, f.target.ngens, gens, f.target.relations)
    return im, ModuleMap(im, f.target, gens, check=False)


def tensor(m: FpModule, n: FpModule) -> FpModule:
    """Kronecker presentation: generator (i, j) has index i * n.ngens + j."""
    if m.ring != n.ring:
        raise ModuleError("tensor factors over different rings")
    rels = []
    for r in m.relations:
        for j in range(n.ngens):
            rels.append({(i * n.ngens + j, e): c for (i, e), c in r.items()})
    for s in n.relations:
        for i in range(m.ngens):
            rels.append({(i * n.ngens + j, e): c for (j, e), c in s.items()})
    degrees = None
    if m.degrees is not None and n.degrees is not None:
        degrees = [a + b for a in m.degrees for b in n.degrees]
    return FpModule(m.ring, m.ngens * n.ngens, rels, degrees, m.weights or n.weights)


def tensor_maps(f: ModuleMap, g: ModuleMap) -> ModuleMap:
    src = tensor(f.source, g.source)
    tgt = tensor(f.target, g.target)
    poly = f.ring.poly
    cols = []
    for i in range(f.source.ngens):
        fi = split_by_component(f.columns[i])
        for j in range(g.source.ngens):
            gj = split_by_component(g.columns[j])
            v: Vec = {}
            for a, ta in fi.items():
                pa = Polynomial(poly, ta)
                for b, tb in gj.items():
                    pb = Polynomial(poly, tb)
                    for e, c in (pa * pb).terms.items():
                        m = (a * g.target.ngens + b, e)
                        nv = v.get(m, 0) + c
                        if nv:
                            v[m] = nv
                        else:
                            v.pop(m, None)
            cols.append(v)
    return ModuleMap(src, tgt, cols, check=False)


def base_change(m: FpModule, phi: RingMap) -> FpModule:
    if phi.source != m.ring:
        raise ModuleError("ring map source does not match the module's ring")
    return FpModule(phi.target, m.ngens, [phi.vec(r) for r in m.relations], m.degrees)


def base_change_map(f: ModuleMap, phi: RingMap, source=None, target=None) -> ModuleMap:
    source = source or base_change(f.source, phi)
    target = target or base_change(f.target, phi)
    return ModuleMap(source, target, [phi.vec(c) for c in f.columns], check=False)


def prune(m: FpModule) -> Tuple[FpModule, ModuleMap, ModuleMap]:
    """Drop generators that some relation expresses through the others.

    Returns (pruned, to_pruned, from_pruned) where the two maps are mutually
    inverse isomorphisms.
    """
    ring = m.ring
    poly = ring.poly
    n = m.ngens
    alive = list(range(n))
    rels = [dict(r) for r in m.relations] + [dict(g) for g in m.canonical_relations]
    images = [unit_vec(ring, i) for i in range(n)]
    changed = True
    while changed:
        changed = False
        for ridx, r in enumerate(rels):
            pivot = None
            for i in sorted({i for (i, _) in r}):
                entry = vec_component(r, i, poly)
                inv = ring.inverse_of(entry)
                if inv is not None:
                    pivot = (i, inv)
                    break
            if pivot is None:
                continue
            k, inv = pivot

            def eliminate(v):
                coeff = vec_component(v, k, poly)
                if coeff.is_zero():
                    return v
                out = add_into(dict(v), poly_times_vec(coeff * inv, r), -1)
                out = {key: c for key, c in out.items() if key[0] != k}
                return _reduce_entries(ring, out)

            rels = [eliminate(s) for j, s in enumerate(rels) if j != ridx]
            rels = [s for s in rels if s]
            images = [eliminate(v) for v in images]
            alive.remove(k)
            changed = True
            break
    index = {old: new for new, old in enumerate(alive)}

    def renumber(v):
        return {(index[i], e): c for (i, e), c in v.items()}

    degrees = tuple(m.degrees[i] for i in alive) if m.degrees is not None else None
    pruned = FpModule(ring, len(alive), [renumber(r) for r in rels], degrees, m.weights)
    pruned = FpModule(ring, pruned.ngens, pruned.canonical_relations, degrees, m.weights)
    to_pruned = ModuleMap(m, pruned, [renumber(v) for v in images], check=False)
    from_pruned = ModuleMap(pruned, m, [unit_vec(ring, i) for i in alive], check=False)
    return pruned, to_pruned, from_pruned
