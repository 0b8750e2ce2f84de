"""Local charts on a sheaf stack, chart morphisms, common roofs, and the
Koszul homology sheaves they carry, glued over a Zariski cover."""

from __future__ import annotations

from functools import cached_property
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

from .algebra.groebner import Vec
from .algebra.polynomial import Polynomial
from .algebra.rings import Ideal, LinearSystem, RingMap, RingPresentation, _fresh_name
from .algebra.vectors import add_into, combine, poly_times_vec, poly_vec, vec_component
from .homological.complexes import (exterior_basis, homology, koszul_complex,
                                    tensor_complex)
from .homological.modules import (FpModule, ModuleError, ModuleMap, base_change,
                                  base_change_map, kernel, prune, unit_vec, vec_from_entries)


class ChartError(ValueError):
    pass


class CocycleError(ChartError):
    def __init__(self, message, triple=None):
        super().__init__(message)
        self.triple = triple


def fiber_names(base: RingPresentation, rank: int) -> Tuple[str, ...]:
    names = tuple(f"y{k + 1}" for k in range(rank))
    if set(names) & set(base.names):
        names = tuple(_fresh_name(base.names, f"_y{k + 1}_") for k in range(rank))
    return names


def det(rows: List[List[Polynomial]], ring: RingPresentation) -> Polynomial:
    n = len(rows)
    if n == 0:
        return ring.one()
    if n == 1:
        return rows[0][0]
    out = ring.zero()
    for j in range(n):
        if rows[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in rows[1:]]
        term = rows[0][j] * det(minor, ring)
        out = out + term if j % 2 == 0 else out - term
    return ring.reduce(out)


def exterior_power(matrix: List[List[Polynomial]], k: int, nrows: int, ncols: int,
                   ring: RingPresentation) -> List[List[Polynomial]]:
    """k-th exterior power of an nrows x ncols matrix, in the lexicographic subset bases."""
    rows_b = exterior_basis(nrows, k)
    cols_b = exterior_basis(ncols, k)
    return [[det([[matrix[t][s] for s in S] for t in T], ring) for S in cols_b]
            for T in rows_b]


# -- spaces and sheaves on them ----------------------------------------------

class SpacePresentation:
    """A Zariski cover of X by principal opens, with all multiple overlaps.

    Overlap rings are localizations at several elements; every restriction
    map is the inclusion of equally named variables.
    """

    def __init__(self, base: RingPresentation, elements: Sequence, labels=None):
        self.base = base
        self.elements = [base.reduce(base.parse(f)) for f in elements]
        n = len(self.elements)
        self.labels = list(labels) if labels else [f"U{a}" for a in range(n)]
        self.inv_names = [_fresh_name(base.names, f"u{a}_") if f"u{a}" in base.names else f"u{a}"
                          for a in range(n)]
        self._rings: Dict[Tuple[int, ...], RingPresentation] = {}
        unit = Ideal(base.poly, list(base.relations.generators) + self.elements)
        if not unit.is_unit():
            raise ChartError("localization elements do not generate the unit ideal: not a cover")

    @classmethod
    def single(cls, base: RingPresentation, label="U0"):
        return cls(base, ["1"], [label])

    def __len__(self):
        return len(self.elements)

    def ring(self, subset: Sequence[int]) -> RingPresentation:
        key = tuple(sorted(set(subset)))
        r = self._rings.get(key)
        if r is None:
            r = self.base
            for a in key:
                r = r.localize(self.elements[a], self.inv_names[a])
            r.label = "&".join(self.labels[a] for a in key)
            self._rings[key] = r
        return r

    def piece(self, a: int) -> RingPresentation:
        return self.ring((a,))

    def restriction(self, src: Sequence[int], dst: Sequence[int]) -> RingMap:
        return RingMap.inclusion(self.ring(src), self.ring(dst))

    def nonempty(self, subset) -> bool:
        return not self.ring(subset).is_zero_ring()

    def overlaps(self, k: int) -> List[Tuple[int, ...]]:
        return [s for s in combinations(range(len(self)), k) if self.nonempty(s)]

    def check_triples(self) -> List[Tuple[int, int, int]]:
        """Triples where restricting through a pair differs from restricting directly."""
        bad = []
        for t in self.overlaps(3):
            direct = {a: self.restriction((a,), t) for a in t}
            for pair in combinations(t, 2):
                via = self.restriction(pair, t)
                for a in pair:
                    if not via.compose(self.restriction((a,), pair)) == direct[a]:
                        bad.append(t)
        return sorted(set(bad))


class CoherentSheafOnX:
    """One module per piece plus gluing isomorphisms g_ab: M_a|ab -> M_b|ab."""

    def __init__(self, space: SpacePresentation, modules: Sequence[FpModule],
                 gluing: Optional[Dict[Tuple[int, int], ModuleMap]] = None):
        self.space = space
        self.modules = list(modules)
        self._restricted: Dict = {}
        self.gluing = {}
        for pair in space.overlaps(2):
            g = (gluing or {}).get(pair)
            if g is None:
                a, b = pair
                src, tgt = self.restricted(a, pair), self.restricted(b, pair)
                if not src.same_presentation(tgt):
                    raise ChartError(f"no gluing map given on overlap {self._name(pair)}")
                g = ModuleMap.identity(src)
                g = ModuleMap(src, tgt, g.columns, check=False)
            self.gluing[pair] = g

    @classmethod
    def from_global(cls, space: SpacePresentation, module: FpModule):
        mods = [base_change(module, RingMap.inclusion(space.base, space.piece(a)))
                for a in range(len(space))]
        return cls(space, mods)

    def _name(self, subset):
        return "(" + ", ".join(self.space.labels[a] for a in subset) + ")"

    def restricted(self, a: int, subset: Sequence[int]) -> FpModule:
        key = (a, tuple(subset))
        m = self._restricted.get(key)
        if m is None:
            m = base_change(self.modules[a], self.space.restriction((a,), subset))
            self._restricted[key] = m
        return m

    def gluing_on(self, a: int, b: int, subset: Sequence[int]) -> ModuleMap:
        """g_ab restricted to a deeper overlap ``subset``."""
        pair = (a, b)
        g = self.gluing[pair]
        phi = self.space.restriction(pair, subset)
        return base_change_map(g, phi, self.restricted(a, subset), self.restricted(b, subset))

    def cocycle_failures(self) -> List[Tuple[int, int, int]]:
        bad = []
        for t in self.space.overlaps(3):
            a, b, c = t
            left = self.gluing_on(b, c, t).compose(self.gluing_on(a, b, t))
            if not left.equals(self.gluing_on(a, c, t)):
                bad.append(t)
        return bad

    def triple_name(self, t) -> str:
        return self._name(t)

    def length(self):
        """Total length by inclusion-exclusion over the cover, or ``infinite``."""
        total = 0
        n = len(self.space)
        for k in range(1, n + 1):
            for s in self.space.overlaps(k):
                m = self.restricted(s[0], s)
                ln = m.length()
                if ln == "infinite":
                    return ln
                total += (-1) ** (k - 1) * ln
        return total


# -- charts --------------------------------------------------------------------

class LocalChart:
    """(U, rho, E, r_E): a free module E of rank ``rank`` on the base ring
    surjecting onto the restriction ``sheaf`` of F."""

    def __init__(self, base: RingPresentation, sheaf: FpModule, columns: Sequence[Vec],
                 name: str = "", check=True):
        if sheaf.ring != base:
            raise ChartError("chart sheaf lives over a different ring")
        self.base = base
        self.sheaf = sheaf
        self.rank = len(columns)
        self.name = name
        self.free = FpModule.free(base, self.rank)
        self.surjection = ModuleMap(self.free, sheaf, columns, check=False)
        if check and not self.surjection.is_surjective():
            raise ChartError(f"chart {name or '?'}: r_E is not surjective")

    @classmethod
    def from_matrix(cls, base, sheaf, rows, name="", check=True):
        cols = [vec_from_entries(base, [rows[i][j] for i in range(sheaf.ngens)])
                for j in range(len(rows[0]) if rows else 0)]
        return cls(base, sheaf, cols, name, check)

    @classmethod
    def tautological(cls, base, sheaf, name=""):
        """(X, id, F, id) for F free."""
        if not sheaf.is_free():
            raise ChartError("the tautological chart needs a free sheaf")
        return cls(base, sheaf, [unit_vec(base, i) for i in range(sheaf.ngens)], name)

    def __repr__(self):
        return f"LocalChart({self.name or 'anonymous'}, rank {self.rank})"

    @cached_property
    def fibers(self) -> Tuple[str, ...]:
        return fiber_names(self.base, self.rank)

    @cached_property
    def total(self) -> RingPresentation:
        ring = self.base.extend(self.fibers)
        ring.label = (self.base.label + "[E]") if self.base.label else ""
        return ring

    @cached_property
    def embed(self) -> RingMap:
        return RingMap.inclusion(self.base, self.total)

    @cached_property
    def zero_section(self) -> RingMap:
        """O_E -> O_U sending every fiber coordinate to zero."""
        images = [self.base.zero() if n in self.fibers else self.base.gen(n)
                  for n in self.total.names]
        return RingMap(self.total, self.base, images)

    @cached_property
    def section(self) -> List[Polynomial]:
        return [self.total.gen(n) for n in self.fibers]

    @cached_property
    def koszul(self):
        return koszul_complex(self.rank, self.section, self.total)

    def surjection_matrix(self) -> List[List[Polynomial]]:
        return self.surjection.matrix()


class ChartMorphism:
    """gamma = (rho_gamma, r_gamma): Q -> Q'.

    ``rho`` maps the ring of U' to the ring of U; ``matrix`` is the
    rank(Q') x rank(Q) matrix of r_gamma over the ring of U.
    """

    def __init__(self, source: LocalChart, target: LocalChart, rho: RingMap,
                 matrix: Sequence[Sequence], check=True):
        if rho.source != target.base or rho.target != source.base:
            raise ChartError("base map does not connect the chart bases")
        self.source = source
        self.target = target
        self.rho = rho
        ring = source.base
        self.matrix = [[ring.reduce(ring.parse(p)) for p in row] for row in matrix]
        if len(self.matrix) != target.rank or any(len(r) != source.rank for r in self.matrix):
            raise ChartError("r_gamma has the wrong shape")
        if check:
            bad = self.triangle_failures()
            if bad:
                raise ChartError(f"bundle triangle fails on generators {bad}")
            if not self.r_gamma.is_surjective():
                raise ChartError("r_gamma is not surjective")

    @classmethod
    def identity(cls, chart: LocalChart):
        n = chart.rank
        ring = chart.base
        mat = [[ring.one() if i == j else ring.zero() for j in range(n)] for i in range(n)]
        return cls(chart, chart, RingMap.identity(ring), mat, check=False)

    @cached_property
    def r_gamma(self) -> ModuleMap:
        ring = self.source.base
        cols = [vec_from_entries(ring, [self.matrix[i][j] for i in range(self.target.rank)])
                for j in range(self.source.rank)]
        return ModuleMap(self.source.free, FpModule.free(ring, self.target.rank), cols, False)

    @cached_property
    def pulled_surjection(self) -> ModuleMap:
        """rho^* r_{E'} with values in F_U."""
        sheaf = self.source.sheaf
        pulled = base_change(self.target.sheaf, self.rho)
        if not pulled.same_presentation(sheaf):
            raise ChartError("rho^* F_U' and F_U have different presentations")
        cols = [self.rho.vec(c) for c in self.target.surjection.columns]
        return ModuleMap(FpModule.free(sheaf.ring, self.target.rank), sheaf, cols, False)

    def triangle_failures(self) -> List[int]:
        via = self.pulled_surjection.compose(self.r_gamma)
        bad = []
        for k, (a, b) in enumerate(zip(via.columns, self.source.surjection.columns)):
            if not self.source.sheaf.is_zero_element(add_into(dict(a), b, -1)):
                bad.append(k)
        return bad

    @cached_property
    def total_map(self) -> RingMap:
        """O_{E'} -> O_E: base through rho, y'_j to sum_k R_jk y_k."""
        src, tgt = self.target, self.source
        images = []
        fib = dict(zip(src.fibers, range(src.rank)))
        for n in src.total.names:
            if n in fib:
                j = fib[n]
                p = tgt.total.zero()
                for k in range(tgt.rank):
                    p = p + tgt.embed(self.matrix[j][k]) * tgt.section[k]
                images.append(p)
            else:
                images.append(tgt.embed(self.rho(src.base.gen(n))))
        return RingMap(src.total, tgt.total, images)

    def compose(self, first: "ChartMorphism") -> "ChartMorphism":
        """self after first: Q0 -> Q -> Q'."""
        rho = first.rho.compose(self.rho)
        ring = first.source.base
        mat = []
        for i in range(self.target.rank):
            row = []
            for k in range(first.source.rank):
                p = ring.zero()
                for j in range(self.source.rank):
                    p = p + first.rho(self.matrix[i][j]) * first.matrix[j][k]
                row.append(ring.reduce(p))
            mat.append(row)
        return ChartMorphism(first.source, self.target, rho, mat, check=False)


def restrict_along(chart: LocalChart, rho: RingMap, name="") -> Tuple[LocalChart, ChartMorphism]:
    """Q|_V for a localization V of the base, with the restriction morphism."""
    if rho.source != chart.base:
        raise ChartError("restriction map does not start at the chart base")
    if rho.target.is_zero_ring():
        raise ChartError("restriction is empty: 1 lies in the localized ideal")
    sheaf = base_change(chart.sheaf, rho)
    cols = [rho.vec(c) for c in chart.surjection.columns]
    new = LocalChart(rho.target, sheaf, cols, name or (chart.name + "|"), check=False)
    n = chart.rank
    ring = rho.target
    ident = [[ring.one() if i == j else ring.zero() for j in range(n)] for i in range(n)]
    return new, ChartMorphism(new, chart, rho, ident, check=False)


def restrict_chart(chart: LocalChart, f, name: str = "") -> Tuple[LocalChart, ChartMorphism]:
    base = chart.base
    f = base.reduce(base.parse(f))
    if f.is_zero():
        raise ChartError("cannot restrict to the locus where zero is invertible")
    ring = base.localize(f)
    if ring.is_zero_ring():
        raise ChartError(f"{f} is nilpotent on the chart base: restriction is empty")
    return restrict_along(chart, RingMap.inclusion(base, ring), name)


# -- roofs ---------------------------------------------------------------------

class CommonRoof:
    def __init__(self, chart: LocalChart, gamma: ChartMorphism, gamma_prime: ChartMorphism):
        self.chart = chart
        self.gamma = gamma
        self.gamma_prime = gamma_prime

    @property
    def left(self):
        return self.gamma.target

    @property
    def right(self):
        return self.gamma_prime.target


def fiber_product_generators(q: LocalChart, qp: LocalChart) -> List[Vec]:
    """Generators of E x_F E' inside E + E' as vectors of length r + r'."""
    ring = q.base
    cols = list(q.surjection.columns) + [
        {m: -c for m, c in v.items()} for v in qp.surjection.columns]
    diff = ModuleMap(FpModule.free(ring, q.rank + qp.rank), q.sheaf, cols, check=False)
    _, inc = kernel(diff)
    return list(inc.columns)


def build_roof(q: LocalChart, qp: LocalChart, generators: Optional[Sequence[Vec]] = None,
               name: str = "") -> CommonRoof:
    """Roof W -> E x_F E' with W free on ``generators`` (default: kernel generators).

    Supplied generators are checked to lie in, and span, the fiber product.
    """
    if q.base != qp.base:
        raise ChartError("roofs need charts with the same base")
    if not q.sheaf.same_presentation(qp.sheaf):
        raise ChartError("charts present F|_U differently")
    ring = q.base
    r, rp = q.rank, qp.rank
    kern = fiber_product_generators(q, qp)
    if generators is None:
        gens = kern
    else:
        gens = [dict(g) for g in generators]
        fp = LinearSystem(ring, r + rp, kern)
        for g in gens:
            if not fp.contains(g):
                raise ChartError("roof generator does not lie in E x_F E'")
        span = LinearSystem(ring, r + rp, gens)
        for k in kern:
            if not span.contains(k):
                raise ChartError("roof generators do not span E x_F E'")
    top = [[vec_component(g, i, ring.poly) for g in gens] for i in range(r)]
    bot = [[vec_component(g, r + i, ring.poly) for g in gens] for i in range(rp)]
    cols = [q.surjection.apply({(i, e): c for (i, e), c in g.items() if i < r}) for g in gens]
    w = LocalChart(ring, q.sheaf, cols, name or f"roof({q.name},{qp.name})", check=False)
    ident = RingMap.identity(ring)
    g1 = ChartMorphism(w, q, ident, top, check=False)
    g2 = ChartMorphism(w, qp, ident, bot, check=False)
    return CommonRoof(w, g1, g2)


def roof_variants(q: LocalChart, qp: LocalChart) -> List[CommonRoof]:
    """Three distinct roofs over the same pair: minimal, padded, and reshuffled."""
    ring = q.base
    kern = fiber_product_generators(q, qp)
    roofs = [build_roof(q, qp, name=f"R1({q.name},{qp.name})")]
    padded = list(kern) + [add_into(dict(kern[0]), kern[-1])] if kern else []
    roofs.append(build_roof(q, qp, padded, name=f"R2({q.name},{qp.name})"))
    shuffled = [poly_times_vec(ring.parse("2"), g) if k == 0 else g
                for k, g in enumerate(reversed(kern))]
    if len(kern) >= 2:
        shuffled = shuffled[:1] + [add_into(dict(shuffled[1]), shuffled[0])] + shuffled[2:]
    roofs.append(build_roof(q, qp, shuffled, name=f"R3({q.name},{qp.name})"))
    return roofs


# -- sheaves on the stack F ----------------------------------------------------

class SheafOnF:
    """Assigns a module over O_E to each chart, with the isomorphisms (y2)."""

    def __init__(self):
        self._modules: Dict[int, Tuple[LocalChart, FpModule]] = {}
        self._homology: Dict = {}

    def on_chart(self, chart: LocalChart) -> FpModule:
        hit = self._modules.get(id(chart))
        if hit is None:
            hit = (chart, self._build(chart))
            self._modules[id(chart)] = hit
        return hit[1]

    def _build(self, chart: LocalChart) -> FpModule:
        raise NotImplementedError

    def compat(self, gamma: ChartMorphism) -> ModuleMap:
        raise NotImplementedError


class ClosedSubstack(SheafOnF):
    """O_Z for a closed substack Z, given by its ideal on reference charts.

    On another chart E over a reference base the ideal is pulled back along a
    lift s: E -> E0 of r_E through r_{E0}; translation invariance of the
    reference ideal under ker r_{E0} makes this independent of the lift.
    """

    def __init__(self, references: Sequence[Tuple[LocalChart, Sequence]] = (), name="Z"):
        super().__init__()
        self.name = name
        self.references = []
        for chart, gens in references:
            ideal = [chart.total.reduce(chart.total.parse(g)) for g in gens]
            bad = translation_failures(chart, ideal)
            if bad:
                raise ChartError(f"{name}: ideal is not invariant under ker r_E on chart "
                                 f"{chart.name}: {bad}")
            self.references.append((chart, ideal))

    def ideal(self, chart: LocalChart) -> List[Polynomial]:
        for ref, gens in self.references:
            if ref is chart:
                return gens
        for ref, gens in self.references:
            if set(ref.base.names) <= set(chart.base.names):
                inc = RingMap.inclusion(ref.base, chart.base)
                try:
                    if not base_change(ref.sheaf, inc).same_presentation(chart.sheaf):
                        continue
                except ModuleError:
                    continue
                lift = lift_surjection(chart, ref, inc)
                images = []
                fib = {n: j for j, n in enumerate(ref.fibers)}
                for n in ref.total.names:
                    if n in fib:
                        p = chart.total.zero()
                        for k in range(chart.rank):
                            p = p + chart.embed(lift[fib[n]][k]) * chart.section[k]
                        images.append(p)
                    else:
                        images.append(chart.total.gen(n))
                phi = RingMap(ref.total, chart.total, images)
                return [phi(g) for g in gens]
        raise ChartError(f"{self.name}: no reference chart over the base of {chart.name}")

    def _build(self, chart):
        return FpModule.cyclic(chart.total, self.ideal(chart))

    def compat(self, gamma: ChartMorphism) -> ModuleMap:
        a = self.on_chart(gamma.source)
        pulled = base_change(self.on_chart(gamma.target), gamma.total_map)
        try:
            m = ModuleMap(pulled, a, [unit_vec(a.ring, 0)], check=True)
        except ModuleError:
            raise ChartError(f"{self.name}: compatibility isomorphism fails along "
                             f"{gamma.source.name} -> {gamma.target.name}")
        if not pulled.same_presentation(a):
            raise ChartError(f"{self.name}: pulled-back ideal is strictly smaller along "
                             f"{gamma.source.name} -> {gamma.target.name}")
        return m


class StructureSheaf(ClosedSubstack):
    """O_F itself: the zero ideal on every chart."""

    def __init__(self):
        super().__init__((), name="O_F")

    def ideal(self, chart):
        return []


class ChartModules(SheafOnF):
    """Assignment form: explicit modules on registered charts and explicit
    isomorphisms for registered morphisms."""

    def __init__(self, modules: Sequence[Tuple[LocalChart, FpModule]],
                 maps: Sequence[Tuple[ChartMorphism, ModuleMap]] = (), name="A"):
        super().__init__()
        self.name = name
        for chart, m in modules:
            if m.ring != chart.total:
                raise ChartError(f"{name}: module on {chart.name} is not over O_E")
            self._modules[id(chart)] = (chart, m)
        self._maps = {id(g): (g, f) for g, f in maps}
        for g, f in maps:
            if not f.is_isomorphism():
                raise ChartError(f"{name}: compatibility map on {g.source.name} -> "
                                 f"{g.target.name} is not an isomorphism")

    def _build(self, chart):
        raise ChartError(f"{self.name}: no module registered on chart {chart.name}")

    def compat(self, gamma):
        hit = self._maps.get(id(gamma))
        if hit is None:
            if gamma.source is gamma.target:
                return ModuleMap.identity(self.on_chart(gamma.source))
            raise ChartError(f"{self.name}: morphism {gamma.source.name} -> "
                             f"{gamma.target.name} is not registered")
        return hit[1]


class DirectSum(SheafOnF):
    def __init__(self, parts: Sequence[SheafOnF], name="sum"):
        super().__init__()
        self.parts = list(parts)
        self.name = name

    def _build(self, chart):
        mods = [p.on_chart(chart) for p in self.parts]
        out = mods[0]
        for m in mods[1:]:
            out = out.direct_sum(m)
        return out

    def compat(self, gamma):
        maps = [p.compat(gamma) for p in self.parts]
        cols = []
        off = 0
        for f in maps:
            for c in f.columns:
                cols.append({(i + off, e): v for (i, e), v in c.items()})
            off += f.target.ngens
        src = base_change(self.on_chart(gamma.target), gamma.total_map)
        return ModuleMap(src, self.on_chart(gamma.source), cols, check=False)


def lift_surjection(chart: LocalChart, ref: LocalChart, inc: RingMap) -> List[List[Polynomial]]:
    """Matrix s (rank ref x rank chart) with r_ref o s = r_chart."""
    ring = chart.base
    cols = [inc.vec(c) for c in ref.surjection.columns]
    solver = LinearSystem(ring, chart.sheaf.ngens, cols, chart.sheaf.relations)
    out = [[ring.zero() for _ in range(chart.rank)] for _ in range(ref.rank)]
    for k, target in enumerate(chart.surjection.columns):
        a = solver.solve(target)
        if a is None:
            raise ChartError("reference chart does not surject onto F")
        for j in range(ref.rank):
            out[j][k] = vec_component(a, j, ring.poly)
    return out


def translation_failures(chart: LocalChart, ideal: Sequence[Polynomial]) -> List[str]:
    """Generators g with g(y + t k) not in J[t] for some k in ker r_E."""
    ring = chart.base
    _, inc = kernel(chart.surjection)
    total = chart.total
    lam = _fresh_name(total.names, "_t")
    big = total.extend([lam])
    t = big.gen(lam)
    jbig = Ideal(big.poly, [g.to_ring(big.poly) for g in ideal] + list(big.relations.generators))
    fib = {n: j for j, n in enumerate(chart.fibers)}
    bad = []
    for k in inc.columns:
        shift = [vec_component(k, j, ring.poly) for j in range(chart.rank)]
        images = []
        for n in total.names:
            p = big.gen(n)
            if n in fib:
                p = p + t * shift[fib[n]].to_ring(big.poly)
            images.append(p)
        for g in ideal:
            moved = g.substitute(images, big.poly)
            if not jbig.contains(moved):
                bad.append(str(g))
    return sorted(set(bad))


# -- Koszul homology on a chart ------------------------------------------------

class KoszulHomology:
    """H^i_Q(A) presented over O_U, with cycle representatives over O_E."""

    def __init__(self, chart: LocalChart, sheaf: SheafOnF, index: int):
        self.chart = chart
        self.sheaf = sheaf
        self.index = index
        self.vanishes_structurally = index < 0 or index > chart.rank
        if self.vanishes_structurally:
            self.module = FpModule.zero(chart.base)
            self.cycles: List[Vec] = []
            self._h = None
            return
        a = sheaf.on_chart(chart)
        self.complex = tensor_complex(chart.koszul, a)
        h = homology(self.complex, index)
        self._h = h
        total = chart.total
        for g in range(h.module.ngens):
            for y in chart.section:
                if not h.module.is_zero_element(poly_vec(y, g)):
                    raise ChartError("Koszul homology is not annihilated by the fiber coordinates")
        z = chart.zero_section
        over_u = FpModule(chart.base, h.module.ngens, [z.vec(r) for r in h.module.relations])
        pruned, to_p, from_p = prune(over_u)
        self.module = pruned
        self._to_pruned = to_p
        emb = chart.embed
        self.cycles = [combine(emb.vec(from_p.columns[j]), h.cycles, total.poly)
                       for j in range(pruned.ngens)]

    def coordinates(self, cycle: Vec) -> Vec:
        if self._h is None:
            return {}
        a = self._h.coordinates(cycle)
        return self._to_pruned.apply(self.chart.zero_section.vec(a))

    def length(self):
        return self.module.length()


def koszul_homology_chart(chart: LocalChart, sheaf: SheafOnF, i: int) -> KoszulHomology:
    key = (id(chart), i)
    hit = sheaf._homology.get(key)
    if hit is None:
        hit = (chart, KoszulHomology(chart, sheaf, i))
        sheaf._homology[key] = hit
    return hit[1]


def _koszul_term_map(gamma: ChartMorphism, compat: ModuleMap, k: int) -> ModuleMap:
    """Lambda^k(r_gamma^T) tensor compat over O_E, from the pulled-back source term."""
    q, qp = gamma.source, gamma.target
    total = q.total
    mt = [[q.embed(gamma.matrix[j][i]) for j in range(qp.rank)] for i in range(q.rank)]
    lam = exterior_power(mt, k, q.rank, qp.rank, total)
    na_src = compat.source.ngens
    na_tgt = compat.target.ngens
    cols = []
    for s in range(len(exterior_basis(qp.rank, k))):
        for j in range(na_src):
            v: Vec = {}
            for t in range(len(exterior_basis(q.rank, k))):
                coeff = lam[t][s]
                if coeff.is_zero():
                    continue
                shifted = {(t * na_tgt + i, e): c for (i, e), c in compat.columns[j].items()}
                add_into(v, poly_times_vec(coeff, shifted))
            cols.append(v)
    src = FpModule.free(total, len(cols))
    tgt = FpModule.free(total, len(exterior_basis(q.rank, k)) * na_tgt)
    return ModuleMap(src, tgt, cols, check=False)


def comparison_map(gamma: ChartMorphism, sheaf: SheafOnF, i: int, certify=True) -> ModuleMap:
    """h^i(gamma): rho^* H^i_{Q'}(A) -> H^i_Q(A), certified to be an isomorphism."""
    hs = koszul_homology_chart(gamma.target, sheaf, i)
    ht = koszul_homology_chart(gamma.source, sheaf, i)
    source = base_change(hs.module, gamma.rho)
    if hs.vanishes_structurally or ht.vanishes_structurally:
        return ModuleMap(source, ht.module, [{} for _ in range(source.ngens)], check=False)
    compat = sheaf.compat(gamma)
    term = _koszul_term_map(gamma, compat, i)
    phi = gamma.total_map
    cols = []
    for z in hs.cycles:
        image = term.apply(phi.vec(z))
        cols.append(ht.coordinates(image))
    h = ModuleMap(source, ht.module, cols, check=True)
    if certify and not h.is_isomorphism():
        raise ChartError(f"h^{i} along {gamma.source.name} -> {gamma.target.name} "
                         "is not an isomorphism")
    return h


def roof_comparison(roof: CommonRoof, sheaf: SheafOnF, i: int) -> ModuleMap:
    """h_R^i = h^i(gamma')^{-1} o h^i(gamma): H^i_Q(A) -> H^i_{Q'}(A)."""
    hq = koszul_homology_chart(roof.left, sheaf, i).module
    hqp = koszul_homology_chart(roof.right, sheaf, i).module
    a = comparison_map(roof.gamma, sheaf, i)
    b = comparison_map(roof.gamma_prime, sheaf, i)
    a = ModuleMap(hq, a.target, a.columns, check=False)
    b = ModuleMap(hqp, b.target, b.columns, check=False)
    return b.inverse().compose(a)


def glue_koszul(space: SpacePresentation, charts: Sequence[LocalChart], sheaf: SheafOnF,
                i: int) -> CoherentSheafOnX:
    """Glue H^i over a cover, one chart per piece, verifying the cocycle condition."""
    if len(charts) != len(space):
        raise ChartError("need exactly one chart per piece of the cover")
    for a, q in enumerate(charts):
        if q.base != space.piece(a):
            raise ChartError(f"chart {q.name} does not sit over piece {space.labels[a]}")
    mods = [koszul_homology_chart(q, sheaf, i).module for q in charts]
    gluing = {}
    for pair in space.overlaps(2):
        a, b = pair
        qa, ra = restrict_along(charts[a], space.restriction((a,), pair))
        qb, rb = restrict_along(charts[b], space.restriction((b,), pair))
        roof = build_roof(qa, qb)
        h = roof_comparison(roof, sheaf, i)
        ha = comparison_map(ra, sheaf, i)
        hb = comparison_map(rb, sheaf, i)
        g = hb.inverse().compose(h.compose(ha))
        gluing[pair] = g
    glued = CoherentSheafOnX(space, mods, gluing)
    bad = glued.cocycle_failures()
    if bad:
        t = bad[0]
        raise CocycleError(f"cocycle condition fails on {glued.triple_name(t)}", t)
    return glued
