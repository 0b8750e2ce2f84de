"""Chain complexes, homology with cycle representatives, Koszul complexes."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

from ..algebra.groebner import Vec
from ..algebra.rings import LinearSystem, RingMap, RingPresentation
from ..algebra.vectors import add_into, combine, poly_vec
from .modules import (FpModule, ModuleMap, base_change, base_change_map, kernel, prune,
                      tensor, tensor_maps, unit_vec)


class ComplexError(ValueError):
    pass


class ChainComplex:
    """Homologically indexed: ``differentials[i]`` maps term i to term i-1.

    Terms outside ``modules`` are zero.
    """

    def __init__(self, modules: Dict[int, FpModule], differentials: Dict[int, ModuleMap],
                 check=True):
        self.modules = dict(modules)
        self.differentials = dict(differentials)
        for i, d in self.differentials.items():
            if d.source is not self.modules.get(i) or d.target is not self.modules.get(i - 1):
                raise ComplexError(f"differential {i} does not connect terms {i} and {i - 1}")
        if check:
            bad = self.square_failures()
            if bad:
                raise ComplexError(f"d o d != 0 at positions {bad}")

    @property
    def ring(self) -> RingPresentation:
        return next(iter(self.modules.values())).ring

    @property
    def degrees(self) -> List[int]:
        return sorted(self.modules)

    def term(self, i) -> Optional[FpModule]:
        return self.modules.get(i)

    def square_failures(self) -> List[int]:
        bad = []
        for i, d in self.differentials.items():
            e = self.differentials.get(i - 1)
            if e is not None and not e.compose(d).is_zero():
                bad.append(i)
        return bad

    def homology(self, i: int, minimize=True) -> "Homology":
        return homology(self, i, minimize)

    def blocks(self):
        """Ordered (degree, module, outgoing differential) triples for serialization."""
        return [(i, self.modules[i], self.differentials.get(i)) for i in self.degrees]


@dataclass
class Homology:
    """H_i presented as a module whose generators are the given cycles."""

    complex: ChainComplex
    index: int
    module: FpModule
    cycles: List[Vec]
    _raw_cycles: List[Vec] = field(repr=False)
    _to_pruned: Optional[ModuleMap] = field(repr=False, default=None)

    @cached_property
    def _solver(self) -> LinearSystem:
        c = self.complex
        term = c.modules[self.index]
        bounds = []
        d = c.differentials.get(self.index + 1)
        if d is not None:
            bounds = list(d.columns)
        return LinearSystem(term.ring, term.ngens, self._raw_cycles,
                            list(term.relations) + bounds)

    def coordinates(self, cycle: Vec) -> Vec:
        """Coefficients of a cycle's class on the homology generators."""
        a = self._solver.solve(cycle)
        if a is None:
            raise ComplexError("vector is not a cycle of this complex")
        if self._to_pruned is not None:
            a = self._to_pruned.apply(a)
        return a


def homology(c: ChainComplex, i: int, minimize=True) -> Homology:
    term = c.modules.get(i)
    if term is None:
        ring = c.ring
        zero = FpModule.zero(ring)
        return Homology(c, i, zero, [], [])
    d_out = c.differentials.get(i)
    d_in = c.differentials.get(i + 1)
    if d_out is not None:
        if d_in is not None and not d_out.compose(d_in).is_zero():
            raise ComplexError(f"ill-formed complex: d o d != 0 entering position {i}")
        _, inc = kernel(d_out)
        cycles = list(inc.columns)
    else:
        cycles = [unit_vec(term.ring, j) for j in range(term.ngens)]
    denominators = list(term.relations)
    if d_in is not None:
        denominators += list(d_in.columns)
    solver = LinearSystem(term.ring, term.ngens, cycles, denominators)
    h = FpModule(term.ring, len(cycles), solver.syzygies())
    if not minimize:
        return Homology(c, i, h, cycles, cycles)
    pruned, to_p, from_p = prune(h)
    reps = [combine(from_p.columns[j], cycles, term.ring.poly) for j in range(pruned.ngens)]
    return Homology(c, i, pruned, reps, cycles, to_p)


class ChainMap:
    """Degreewise module maps commuting with the differentials."""

    def __init__(self, source: ChainComplex, target: ChainComplex,
                 components: Dict[int, ModuleMap], check=True):
        self.source = source
        self.target = target
        self.components = dict(components)
        if check:
            bad = self.commutation_failures()
            if bad:
                raise ComplexError(f"not a chain map: squares fail at {bad}")

    def component(self, i) -> Optional[ModuleMap]:
        f = self.components.get(i)
        if f is None and i in self.source.modules and i in self.target.modules:
            f = ModuleMap.zero(self.source.modules[i], self.target.modules[i])
        return f

    def commutation_failures(self) -> List[int]:
        bad = []
        for i in sorted(set(self.source.modules) | set(self.target.modules)):
            ds = self.source.differentials.get(i)
            dt = self.target.differentials.get(i)
            fi = self.component(i)
            fj = self.component(i - 1)
            left = fj.compose(ds) if (fj is not None and ds is not None) else None
            right = dt.compose(fi) if (dt is not None and fi is not None) else None
            if left is None and right is None:
                continue
            if left is None:
                ok = right.is_zero()
            elif right is None:
                ok = left.is_zero()
            else:
                ok = left.equals(right)
            if not ok:
                bad.append(i)
        return bad

    def on_homology(self, i, hs: Homology = None, ht: Homology = None) -> ModuleMap:
        hs = hs or homology(self.source, i)
        ht = ht or homology(self.target, i)
        f = self.component(i)
        cols = []
        for z in hs.cycles:
            if f is None:
                cols.append({})
            else:
                cols.append(ht.coordinates(f.apply(z)))
        return ModuleMap(hs.module, ht.module, cols, check=False)


@dataclass
class QuasiIsoCertificate:
    is_quasi_iso: bool
    failures: List[Tuple[int, str]]
    maps: Dict[int, ModuleMap]

    def __bool__(self):
        return self.is_quasi_iso


def is_quasi_iso(f: ChainMap) -> QuasiIsoCertificate:
    bad_squares = f.commutation_failures()
    if bad_squares:
        raise ComplexError(f"not a chain map: squares fail at {bad_squares}")
    degrees = sorted(set(f.source.modules) | set(f.target.modules))
    failures = []
    maps = {}
    for i in degrees:
        hs = homology(f.source, i)
        ht = homology(f.target, i)
        m = f.on_homology(i, hs, ht)
        maps[i] = m
        if not m.is_injective():
            failures.append((i, "kernel"))
        if not m.is_surjective():
            failures.append((i, "cokernel"))
    return QuasiIsoCertificate(not failures, failures, maps)


# -- Koszul complexes ----------------------------------------------------------

def exterior_basis(rank: int, k: int) -> List[Tuple[int, ...]]:
    return list(combinations(range(rank), k))


def koszul_complex(rank: int, section: Sequence, ring: RingPresentation) -> ChainComplex:
    """Exterior algebra on ``rank`` generators with contraction by ``section``.

    Term k has basis the k-subsets S in lexicographic order and
    d(e_S) = sum_j (-1)^j s_{S_j} e_{S minus S_j}.
    """
    if len(section) != rank:
        raise ComplexError(f"section has {len(section)} entries, rank is {rank}")
    sec = [ring.reduce(ring.parse(s)) for s in section]
    modules = {k: FpModule.free(ring, len(exterior_basis(rank, k))) for k in range(rank + 1)}
    diffs = {}
    for k in range(1, rank + 1):
        src = exterior_basis(rank, k)
        tgt_index = {s: i for i, s in enumerate(exterior_basis(rank, k - 1))}
        cols = []
        for subset in src:
            v: Vec = {}
            for j, idx in enumerate(subset):
                rest = subset[:j] + subset[j + 1:]
                sign = -1 if j % 2 else 1
                add_into(v, poly_vec(sec[idx], tgt_index[rest]), sign)
            cols.append(v)
        diffs[k] = ModuleMap(modules[k], modules[k - 1], cols, check=False)
    return ChainComplex(modules, diffs)


def tensor_complex(c: ChainComplex, m: FpModule) -> ChainComplex:
    """C tensor M with differential d tensor id."""
    modules = {i: tensor(t, m) for i, t in c.modules.items()}
    ident = ModuleMap.identity(m)
    diffs = {}
    for i, d in c.differentials.items():
        t = tensor_maps(d, ident)
        diffs[i] = ModuleMap(modules[i], modules[i - 1], t.columns, check=False)
    return ChainComplex(modules, diffs, check=False)


def tensor_chain_map(f: ChainMap, g: ModuleMap, source: ChainComplex, target: ChainComplex) -> ChainMap:
    comps = {}
    for i, fi in f.components.items():
        t = tensor_maps(fi, g)
        comps[i] = ModuleMap(source.modules[i], target.modules[i], t.columns, check=False)
    return ChainMap(source, target, comps, check=False)


def base_change_complex(c: ChainComplex, phi: RingMap) -> ChainComplex:
    modules = {i: base_change(t, phi) for i, t in c.modules.items()}
    diffs = {i: base_change_map(d, phi, modules[i], modules[i - 1])
             for i, d in c.differentials.items()}
    return ChainComplex(modules, diffs, check=False)


def two_term(ring: RingPresentation, matrix_rows: Sequence[Sequence], upper=1) -> ChainComplex:
    """[R^n --matrix--> R^m] placed in homological degrees upper, upper-1."""
    m = len(matrix_rows)
    n = len(matrix_rows[0]) if m else 0
    src = FpModule.free(ring, n)
    tgt = FpModule.free(ring, m)
    d = ModuleMap.from_matrix(src, tgt, matrix_rows, check=False)
    return ChainComplex({upper: src, upper - 1: tgt}, {upper: d})
