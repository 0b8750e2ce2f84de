"""K-classes, the K-theoretic Gysin map of a sheaf stack, regular-embedding
Gysin maps, and the check that the two commute."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

from .algebra.rings import Ideal, RingMap, RingPresentation
from .charts import (ChartModules, CoherentSheafOnX, LocalChart, SheafOnF,
                     SpacePresentation, det, glue_koszul, koszul_homology_chart)
from .homological.complexes import (ChainComplex, base_change_complex, homology,
                                    koszul_complex, tensor_complex)
from .homological.modules import INFINITE, FpModule, ModuleMap, kernel


class GysinError(ValueError):
    pass


@dataclass
class KTerm:
    coeff: int
    sheaf: object          # FpModule or CoherentSheafOnX
    label: str = ""

    def length(self):
        return self.sheaf.length()

    def describe(self) -> str:
        s = self.sheaf
        if isinstance(s, FpModule):
            return s.describe()
        return " | ".join(m.describe() for m in s.modules)


@dataclass
class KClass:
    """Formal integer combination of coherent sheaves.

    Equality is available at three strengths: ``syntactic`` (terms cancel
    up to identical reduced presentations), ``witnessed`` (syntactic after
    the recorded short exact sequence rewrites) and ``invariant`` (equal
    Euler characteristic / length vector).
    """

    terms: List[KTerm] = field(default_factory=list)
    witnesses: List[Tuple[object, object, object]] = field(default_factory=list)

    def __add__(self, other: "KClass") -> "KClass":
        return KClass(self.terms + other.terms, self.witnesses + other.witnesses)

    def __neg__(self):
        return KClass([KTerm(-t.coeff, t.sheaf, t.label) for t in self.terms], self.witnesses)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, k: int) -> "KClass":
        return KClass([KTerm(k * t.coeff, t.sheaf, t.label) for t in self.terms if k],
                      self.witnesses)

    def lengths(self) -> List[Tuple[str, int, object]]:
        return [(t.label, t.coeff, t.length()) for t in self.terms]

    def euler(self) -> Optional[int]:
        """Sum of coeff * length, or None if some term has infinite length."""
        total = 0
        for t in self.terms:
            ln = t.length()
            if ln == INFINITE:
                return None
            total += t.coeff * ln
        return total

    def simplified(self) -> "KClass":
        """Drop zero sheaves and cancel terms with identical presentations."""
        kept: List[KTerm] = []
        for t in self.terms:
            if _is_zero_sheaf(t.sheaf) or t.coeff == 0:
                continue
            for k in kept:
                if _same(k.sheaf, t.sheaf):
                    k.coeff += t.coeff
                    break
            else:
                kept.append(KTerm(t.coeff, t.sheaf, t.label))
        return KClass([k for k in kept if k.coeff], self.witnesses)

    def is_syntactically_zero(self) -> bool:
        return not self.simplified().terms

    def equals(self, other: "KClass", strength: str = "invariant") -> bool:
        diff = self - other
        if strength == "syntactic":
            return diff.is_syntactically_zero()
        if strength == "witnessed":
            return diff.rewrite_by_witnesses().is_syntactically_zero()
        if strength == "invariant":
            if diff.is_syntactically_zero():
                return True
            e = diff.euler()
            return e == 0 if e is not None else False
        raise ValueError(f"unknown equality strength {strength!r}")

    def rewrite_by_witnesses(self) -> "KClass":
        """Replace each [B] of a recorded sequence 0 -> A -> B -> C -> 0 by [A] + [C]."""
        terms = list(self.terms)
        for a, b, c in self.witnesses:
            new = []
            for t in terms:
                if _same(t.sheaf, b):
                    new.append(KTerm(t.coeff, a, t.label + "'"))
                    new.append(KTerm(t.coeff, c, t.label + "''"))
                else:
                    new.append(t)
            terms = new
        return KClass(terms, [])


def _is_zero_sheaf(s) -> bool:
    if isinstance(s, FpModule):
        return s.ngens == 0 or s.is_zero()
    if isinstance(s, CoherentSheafOnX):
        return all(m.ngens == 0 or m.is_zero() for m in s.modules)
    return False


def _same(a, b) -> bool:
    if isinstance(a, FpModule) and isinstance(b, FpModule):
        return a.same_presentation(b)
    if isinstance(a, CoherentSheafOnX) and isinstance(b, CoherentSheafOnX):
        return (a.space is b.space and len(a.modules) == len(b.modules)
                and all(x.same_presentation(y) for x, y in zip(a.modules, b.modules)))
    return False


# -- Gysin map of a sheaf stack ---------------------------------------------------

def gysin_chart(chart: LocalChart, sheaf: SheafOnF, label="") -> KClass:
    """0_F^![A] on a single chart covering X."""
    terms = []
    for i in range(chart.rank + 1):
        h = koszul_homology_chart(chart, sheaf, i)
        terms.append(KTerm((-1) ** i, h.module, f"{label}H{i}"))
    return KClass(terms)


def gysin(space: SpacePresentation, charts: Sequence[LocalChart], sheaf: SheafOnF) -> KClass:
    """Alternating sum of the glued Koszul homology sheaves; degrees beyond
    the largest chart rank are never visited."""
    top = max((q.rank for q in charts), default=0)
    terms = []
    for i in range(top + 1):
        glued = glue_koszul(space, charts, sheaf, i)
        terms.append(KTerm((-1) ** i, glued, f"H{i}"))
    return KClass(terms)


# -- short exact sequences ----------------------------------------------------------

@dataclass
class SESReport:
    exact: bool
    problems: List[str]
    chi: Tuple[Optional[int], Optional[int], Optional[int]]
    additive: Optional[bool]
    classes: Tuple[KClass, KClass, KClass]
    witness: Tuple[FpModule, FpModule, FpModule]

    @property
    def ok(self):
        return self.exact and bool(self.additive)


def exactness_problems(f: ModuleMap, g: ModuleMap) -> List[str]:
    problems = []
    if not f.is_injective():
        problems.append("A -> B is not injective")
    if not g.is_surjective():
        problems.append("B -> C is not surjective")
    if not g.compose(f).is_zero():
        problems.append("composite A -> C is nonzero")
    else:
        _, inc = kernel(g)
        for col in inc.columns:
            if f.preimage(col) is None:
                problems.append("kernel of B -> C is larger than the image of A")
                break
    return problems


def ses_additivity_check(chart: LocalChart, f: ModuleMap, g: ModuleMap,
                         names=("A", "B", "C")) -> SESReport:
    """0 -> A -f-> B -g-> C -> 0 of modules over O_E on one chart.

    Exactness is checked first; then 0^![B] = 0^![A] + 0^![C] is compared
    on Euler characteristics (the long exact sequence of Koszul homology
    makes this exact whenever the lengths are finite).
    """
    if f.target is not g.source and not f.target.same_presentation(g.source):
        raise GysinError("the two maps do not share the middle module")
    problems = exactness_problems(f, g)
    sheaves = [ChartModules([(chart, m)], name=n) for m, n in
               zip((f.source, f.target, g.target), names)]
    classes = tuple(gysin_chart(chart, s, n) for s, n in zip(sheaves, names))
    chi = tuple(k.euler() for k in classes)
    if any(c is None for c in chi):
        additive = None
    else:
        additive = chi[1] == chi[0] + chi[2]
    return SESReport(not problems, problems, chi, additive, classes,
                     (f.source, f.target, g.target))


# -- regular embeddings --------------------------------------------------------------

class RegularEmbeddingData:
    """Z = V(generators) inside a smooth ambient W with a finite free resolution
    of O_Z over O_W (the Koszul complex of the generators by default)."""

    def __init__(self, ambient: RingPresentation, generators: Sequence,
                 resolution: Optional[ChainComplex] = None, name="Z"):
        self.ambient = ambient
        self.name = name
        self.generators = [ambient.reduce(ambient.parse(g)) for g in generators]
        if resolution is None:
            resolution = koszul_complex(len(self.generators), self.generators, ambient)
        self.resolution = resolution
        bad = self.resolution_failures()
        if bad:
            raise GysinError(f"{name}: resolution is not exact: {bad}")

    def resolution_failures(self) -> List[str]:
        bad = []
        res = self.resolution
        for i in res.degrees:
            if i > 0 and not homology(res, i).module.is_zero():
                bad.append(f"H_{i} != 0")
        h0 = homology(res, 0).module
        target = FpModule.cyclic(self.ambient, self.generators)
        if h0.ngens != 1 or not h0.same_presentation(target):
            bad.append("H_0 != O_Z")
        return bad

    def is_smooth(self) -> bool:
        """Jacobian criterion: I + maximal minors of the Jacobian is the unit ideal."""
        gens = self.generators
        c = len(gens)
        ring = self.ambient
        if c == 0:
            return True
        coords = ring.coordinates
        jac = [[ring.derivation(g, v) for v in coords] for g in gens]
        minors = []
        for cols in combinations(range(len(coords)), c):
            minors.append(det([[row[j] for j in cols] for row in jac], ring))
        ideal = Ideal(ring.poly, list(ring.relations.generators) + gens + minors)
        return ideal.is_unit()

    def pulled_resolution(self, to: RingMap) -> ChainComplex:
        if to.source != self.ambient:
            raise GysinError("map does not start at the ambient ring")
        return base_change_complex(self.resolution, to)


def regular_gysin(v: RegularEmbeddingData, module: FpModule, to: RingMap = None) -> KClass:
    """v^![A] = sum_j (-1)^j [H_j(resolution tensor A)]."""
    to = to or RingMap.inclusion(v.ambient, module.ring)
    res = tensor_complex(v.pulled_resolution(to), module)
    terms = [KTerm((-1) ** j, homology(res, j).module, f"Tor{j}") for j in res.degrees]
    return KClass(terms)


@dataclass
class CommuteReport:
    left: List[Tuple[int, int, object]]     # (i, j, length) computing 0^! v^!
    right: List[Tuple[int, int, object]]    # (i, j, length) computing v^! 0^!
    chi_left: Optional[int]
    chi_right: Optional[int]

    @property
    def agree(self) -> Optional[bool]:
        if self.chi_left is None or self.chi_right is None:
            return None
        return self.chi_left == self.chi_right


def gysin_commute_check(chart: LocalChart, v: RegularEmbeddingData, sheaf: SheafOnF,
                        to: RingMap = None) -> CommuteReport:
    """Evaluate both orders of the double complex K(E) (x) A (x) resolution."""
    to = to or RingMap.inclusion(v.ambient, chart.base)
    a = sheaf.on_chart(chart)
    # v^! first, on the total space, then the Koszul homology of each piece
    res_e = v.pulled_resolution(chart.embed.compose(to))
    first = tensor_complex(res_e, a)
    left = []
    for j in first.degrees:
        hj = homology(first, j).module
        kz = tensor_complex(chart.koszul, hj)
        for i in range(chart.rank + 1):
            left.append((i, j, homology(kz, i).module.length()))
    # Koszul homology first, then v^! over the base
    right = []
    for i in range(chart.rank + 1):
        hi = koszul_homology_chart(chart, sheaf, i).module
        cls = regular_gysin(v, hi, to)
        for j, t in enumerate(cls.terms):
            right.append((i, j, t.length()))

    def chi(rows):
        if any(ln == INFINITE for _, _, ln in rows):
            return None
        return sum((-1) ** (i + j) * ln for i, j, ln in rows)

    return CommuteReport(left, right, chi(left), chi(right))


def twist(cls: KClass, rank: int) -> KClass:
    """Tensor by a free module of the given rank."""
    return cls.scale(rank)

