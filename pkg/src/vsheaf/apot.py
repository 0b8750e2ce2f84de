"""Almost perfect obstruction theories assembled from Kuranishi models on a
Zariski cover: validation, the glued cone, the virtual class and its Euler
characteristic."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .algebra.polynomial import Polynomial, PolyRing
from .algebra.rings import Ideal, RingMap
from .charts import CoherentSheafOnX, SpacePresentation
from .gysin import KClass
from .homological.modules import FpModule, ModuleError, ModuleMap, base_change
from .obstruction import (KuranishiModel, ModelError, NormalConeData, OmegaCompat, PsiError,
                          build_psi, induced_pot, normal_cone, virtual_sheaf_chart)


class APOTError(ValueError):
    pass


@dataclass
class Piece:
    model: KuranishiModel
    to_piece: RingMap          # model.base -> space.piece(a), an isomorphism
    from_piece: RingMap


class APOTData:
    """Models on the pieces of a cover, overlap isomorphisms psi_ab of the
    obstruction sheaves (matrices over the overlap ring, Ob_a -> Ob_b), and
    optional compatibility data per overlap.  Overlaps without compatibility
    data must carry the same model on both sides, with eta the identity."""

    def __init__(self, space: SpacePresentation, models: Sequence[KuranishiModel],
                 psi: Dict[Tuple[int, int], Sequence[Sequence]] = None,
                 compat: Dict[Tuple[int, int], OmegaCompat] = None,
                 piece_maps: Dict[int, Sequence] = None, name="X"):
        if len(models) != len(space):
            raise APOTError("need exactly one Kuranishi model per piece")
        self.space = space
        self.name = name
        self.models = list(models)
        self.psi_rows = {}
        for pair, rows in (psi or {}).items():
            ring = space.ring(pair)
            self.psi_rows[tuple(pair)] = [[ring.reduce(ring.parse(x)) for x in row]
                                          for row in rows]
        self.compat = dict(compat or {})
        self.pieces: List[Piece] = []
        for a, k in enumerate(self.models):
            target = space.piece(a)
            images = (piece_maps or {}).get(a)
            if images is None:
                to = RingMap.inclusion(k.base, target)
            else:
                to = RingMap(k.base, target, list(images))
            bad = to.check()
            if bad:
                raise APOTError(f"piece {space.labels[a]}: model base does not map to the "
                                f"piece: {bad}")
            try:
                back = to.inverse()
            except ValueError as exc:
                raise APOTError(f"piece {space.labels[a]}: model base is not isomorphic to "
                                f"the piece ({exc})")
            self.pieces.append(Piece(k, to, back))

    def overlap_map(self, a: int, subset) -> RingMap:
        """model_a.base -> ring(subset)."""
        return self.space.restriction((a,), subset).compose(self.pieces[a].to_piece)

    def obstruction_modules(self) -> List[FpModule]:
        return [base_change(p.model.obstruction_sheaf, p.to_piece) for p in self.pieces]

    def sub(self, indices: Sequence[int]) -> "APOTData":
        """Restriction to the sub-cover by the given pieces (must still cover X)."""
        idx = list(indices)
        space = SpacePresentation(self.space.base, [self.space.elements[a] for a in idx],
                                  [self.space.labels[a] for a in idx])
        pos = {a: i for i, a in enumerate(idx)}
        # the sub-cover renames inverse variables; recompute piece maps by name
        rename = {self.space.inv_names[a]: space.inv_names[pos[a]] for a in idx}
        psi = {}
        for (a, b), rows in self.psi_rows.items():
            if a in pos and b in pos:
                ring = space.ring((pos[a], pos[b]))
                psi[(pos[a], pos[b])] = [[_rename(p, rename, ring) for p in row] for row in rows]
        compat = {(pos[a], pos[b]): c for (a, b), c in self.compat.items()
                  if a in pos and b in pos}
        maps = {}
        for a in idx:
            target = space.piece(pos[a])
            maps[pos[a]] = [_rename(p, rename, target) for p in self.pieces[a].to_piece.images]
        return APOTData(space, [self.models[a] for a in idx], psi, compat, maps, self.name)


def _rename(p: Polynomial, rename, ring):
    names = [rename.get(n, n) for n in p.ring.names]
    poly = PolyRing(names)
    q = Polynomial(poly, p.terms)
    return ring.reduce(q.to_ring(ring.poly))


@dataclass
class APOTReport:
    name: str
    failures: List[Tuple[str, str]] = field(default_factory=list)
    checks: List[Tuple[str, str]] = field(default_factory=list)
    sheaf: Optional[CoherentSheafOnX] = None

    @property
    def ok(self):
        return not self.failures

    def fail(self, where, msg):
        self.failures.append((where, msg))

    def passed(self, where, msg):
        self.checks.append((where, msg))


def _pair_name(space, pair):
    return "(" + ", ".join(space.labels[a] for a in pair) + ")"


def _identity_rows(ring, n):
    return [[ring.one() if i == j else ring.zero() for j in range(n)] for i in range(n)]


def _same_model(k1: KuranishiModel, k2: KuranishiModel) -> bool:
    """Equal sections in equal coordinates, ignoring which opens were inverted."""
    if k1.ambient.coordinates != k2.ambient.coordinates or k1.rank != k2.rank:
        return False
    names = sorted(set(k1.ambient.names) | set(k2.ambient.names))
    joint = PolyRing(names)
    return all(a.to_ring(joint) == b.to_ring(joint) for a, b in zip(k1.section, k2.section))


def _transport(rows, phi: RingMap):
    return [[phi(p) for p in row] for row in rows]


def validate_apot(data: APOTData) -> APOTReport:
    space = data.space
    rep = APOTReport(data.name)
    for a, p in enumerate(data.pieces):
        where = space.labels[a]
        pot = induced_pot(p.model)
        if pot.ok:
            rep.passed(where, "induced obstruction theory")
        for msg in pot.problems:
            rep.fail(where, msg)
    obs = data.obstruction_modules()
    gluing = {}
    for pair in space.overlaps(2):
        a, b = pair
        where = _pair_name(space, pair)
        src = base_change(obs[a], space.restriction((a,), pair))
        tgt = base_change(obs[b], space.restriction((b,), pair))
        rows = data.psi_rows.get(pair)
        ring = space.ring(pair)
        if rows is None:
            if not src.same_presentation(tgt):
                rep.fail(where, "no psi given and the obstruction sheaves differ")
                continue
            rows = _identity_rows(ring, src.ngens)
        try:
            g = ModuleMap.from_matrix(src, tgt, rows)
        except ModuleError:
            rep.fail(where, "psi is not a well-defined map of obstruction sheaves")
            continue
        if not g.is_isomorphism():
            rep.fail(where, "psi is not an isomorphism")
            continue
        gluing[pair] = g
        _check_eta(data, pair, g, rep)
    if len(gluing) < len(space.overlaps(2)):
        return rep
    sheaf = CoherentSheafOnX(space, obs, gluing)
    bad = sheaf.cocycle_failures()
    for t in bad:
        rep.fail(sheaf.triple_name(t), "cocycle condition fails on triple")
    if not bad and space.overlaps(3):
        rep.passed("triples", "cocycle condition")
    rep.sheaf = sheaf
    return rep


def _check_eta(data: APOTData, pair, g: ModuleMap, rep: APOTReport):
    """h^1(eta^vee) = psi^{-1} on the overlap."""
    space = data.space
    a, b = pair
    where = _pair_name(space, pair)
    c = data.compat.get(pair)
    if c is None:
        if not _same_model(data.models[a], data.models[b]):
            rep.fail(where, "different models with no compatibility datum")
            return
        if not g.equals(ModuleMap.identity(g.source)):
            rep.fail(where, "h^1(eta^vee) = psi^-1 fails (eta is the identity)")
            return
        rep.passed(where, "eta = identity")
        return
    if {id(c.small), id(c.big)} != {id(data.models[a]), id(data.models[b])}:
        rep.fail(where, "compatibility datum does not connect the two models")
        return
    small = a if c.small is data.models[a] else b
    big = b if small == a else a
    # Phi must agree with the cover identifications on the overlap
    via_phi = data.overlap_map(small, pair).compose(c.base_map)
    direct = data.overlap_map(big, pair)
    if via_phi != direct:
        rep.fail(where, "Phi is not compatible with the identifications of the pieces")
        return
    try:
        res = build_psi(c)
    except (PsiError, ModelError) as exc:
        rep.fail(where, f"eta: {exc}")
        return
    if not res.ok:
        for f in res.failures:
            rep.fail(where, f"eta: {f}")
        return
    tmap = data.overlap_map(small, pair)
    if small == a:
        # psi_ab : Ob_small -> Ob_big should be h^1(eta^vee) = Psi^T
        t = c.small.base
        expected = _transport([[t.reduce(x.to_ring(t.poly)) for x in row]
                               for row in map(list, zip(*res.psi))], tmap)
    else:
        # psi_ab : Ob_big -> Ob_small should be its inverse, induced by eta
        expected = _transport(_eta_on_t(c), tmap)
    exp = ModuleMap.from_matrix(g.source, g.target, expected, check=False)
    if not exp.equals(g):
        rep.fail(where, "h^1(eta^vee) = psi^-1 fails")
        return
    rep.passed(where, "eta certified by the comparison quasi-isomorphism")


def _eta_on_t(c: OmegaCompat):
    t = c.small.base
    return [[t.reduce(x.to_ring(t.poly)) for x in row] for row in c.eta]


# -- cones ----------------------------------------------------------------------

@dataclass
class GlobalCone:
    cones: List[NormalConeData]
    agreements: List[Tuple[str, str]]
    mismatches: List[Tuple[str, str]]

    @property
    def ok(self):
        return not self.mismatches


def global_cone(data: APOTData) -> GlobalCone:
    rep = validate_apot(data)
    if not rep.ok:
        raise APOTError(f"{data.name}: obstruction theory does not validate: {rep.failures}")
    space = data.space
    cones = [normal_cone(k) for k in data.models]
    agree, bad = [], []
    for pair in space.overlaps(2):
        a, b = pair
        where = _pair_name(space, pair)
        c = data.compat.get(pair)
        if c is None:
            ok = _cones_equal_on(data, pair, cones[a], cones[b])
            how = "identical cone ideals"
        else:
            small = a if c.small is data.models[a] else b
            big = b if small == a else a
            ok = _cone_pullback_agrees(c, cones[small], cones[big])
            how = "cone of the larger model is eta^*(cone of the smaller)"
        (agree if ok else bad).append((where, how))
    return GlobalCone(cones, agree, bad)


def _cone_in(data: APOTData, a: int, subset, cone: NormalConeData):
    target = data.space.ring(subset)
    ring = target.extend(cone.fibers)
    base = data.overlap_map(a, subset)
    images = []
    for n in cone.ring.names:
        if n in cone.fibers:
            images.append(ring.gen(n))
        else:
            images.append(base.images[base.source.names.index(n)].to_ring(ring.poly))
    phi = RingMap(cone.ring, ring, images)
    return ring, [phi(g) for g in cone.ideal]


def _cones_equal_on(data, pair, ca, cb) -> bool:
    if ca.fibers != cb.fibers:
        return False
    ra, ga = _cone_in(data, pair[0], pair, ca)
    _, gb = _cone_in(data, pair[1], pair, cb)
    rel = list(ra.relations.generators)
    return Ideal(ra.poly, rel + ga) == Ideal(ra.poly, rel + gb)


def _cone_pullback_agrees(c: OmegaCompat, small: NormalConeData, big: NormalConeData) -> bool:
    t = c.small.base
    ring = t.extend(big.fibers)
    ys = [ring.gen(y) for y in big.fibers]
    eta = _eta_on_t(c)
    # y_small_i -> sum_j eta_ij y_big_j
    images = []
    for n in small.ring.names:
        if n in small.fibers:
            row = eta[small.fibers.index(n)]
            p = ring.zero()
            for e, y in zip(row, ys):
                p = p + e.to_ring(ring.poly) * y
            images.append(p)
        else:
            images.append(ring.gen(n))
    pulled = [RingMap(small.ring, ring, images)(g) for g in small.ideal]
    bm = c.base_map
    images = []
    for n in big.ring.names:
        if n in big.fibers:
            images.append(ring.gen(n))
        else:
            images.append(bm.images[bm.source.names.index(n)].to_ring(ring.poly))
    moved = [RingMap(big.ring, ring, images)(g) for g in big.ideal]
    rel = list(ring.relations.generators)
    return Ideal(ring.poly, rel + pulled) == Ideal(ring.poly, rel + moved)


# -- virtual class -----------------------------------------------------------------

@dataclass
class VirtualSheafReport:
    classes: List[KClass]
    contributions: List[Tuple[Tuple[int, ...], Optional[int]]]
    chi: Optional[int]
    invariants: List[List[Tuple[str, int, object]]]


def restrict_model(data: APOTData, a: int, subset) -> KuranishiModel:
    """Model of piece a localized to the overlap ``subset``."""
    k = data.models[a]
    back = data.pieces[a].from_piece
    piece = data.space.piece(a)
    amb = k.ambient
    for b in subset:
        if b == a:
            continue
        f = data.space.elements[b].to_ring(piece.poly)
        g = back(piece.reduce(f)).to_ring(amb.poly)
        amb = amb.localize(g)
    if amb is k.ambient:
        return k
    label = "&".join(data.space.labels[b] for b in subset)
    return KuranishiModel(amb, [s.to_ring(amb.poly) for s in k.section], label,
                          allow_empty=True)


def global_virtual_sheaf(data: APOTData) -> VirtualSheafReport:
    cone = global_cone(data)
    if not cone.ok:
        raise APOTError(f"{data.name}: cones disagree on {cone.mismatches}")
    classes = [virtual_sheaf_chart(k) for k in data.models]
    contributions = []
    chi: Optional[int] = 0
    for size in range(1, len(data.space) + 1):
        for s in data.space.overlaps(size):
            k = restrict_model(data, s[0], s)
            e = classes[s[0]].euler() if size == 1 else (
                0 if k.base.is_zero_ring() else virtual_sheaf_chart(k).euler())
            contributions.append((s, e))
            if e is None:
                chi = None
            elif chi is not None:
                chi += (-1) ** (size - 1) * e
    return VirtualSheafReport(classes, contributions, chi, [c.lengths() for c in classes])


def dt_number(data: APOTData, twist: Sequence[int] = None) -> Optional[Fraction]:
    """chi of the virtual class tensored by a free sheaf of the given rank on
    each piece; the ranks must agree wherever pieces overlap."""
    twist = list(twist) if twist is not None else [1] * len(data.space)
    if len(twist) != len(data.space):
        raise APOTError("need one twist rank per piece")
    for a, b in data.space.overlaps(2):
        if twist[a] != twist[b]:
            raise APOTError(f"twist is not trivial on {_pair_name(data.space, (a, b))}")
    rep = global_virtual_sheaf(data)
    if rep.chi is None:
        return None
    total = Fraction(0)
    for s, e in rep.contributions:
        total += (-1) ** (len(s) - 1) * twist[s[0]] * e
    return total
