"""Kuranishi models, their obstruction theories and cones, and the comparison
quasi-isomorphism between two compatible models."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import List, Optional, Sequence

from .algebra.polynomial import Polynomial, PolyRing
from .algebra.rings import (Ideal, LinearSystem, RingMap, RingPresentation, _fresh_name,
                            eliminate, quotient)
from .algebra.vectors import poly_vec, vec_component
from .charts import ClosedSubstack, LocalChart, fiber_names
from .gysin import KClass, gysin_chart
from .homological.complexes import ChainComplex, ChainMap, QuasiIsoCertificate, is_quasi_iso
from .homological.modules import FpModule, ModuleError, ModuleMap, vec_from_entries


class ModelError(ValueError):
    pass


def _matrix(ring: RingPresentation, rows) -> List[List[Polynomial]]:
    return [[ring.reduce(ring.parse(p)) for p in row] for row in rows]


def _transpose(rows):
    return [list(c) for c in zip(*rows)] if rows else []


def _matmul(a, b, ring):
    n = len(b[0]) if b else 0
    out = []
    for row in a:
        new = []
        for j in range(n):
            acc = ring.zero()
            for k, x in enumerate(row):
                acc = acc + x * b[k][j]
            new.append(ring.reduce(acc))
        out.append(new)
    return out


def _on(ring: RingPresentation, rows):
    """Re-read a matrix in another presentation with the same variable names."""
    return [[ring.reduce(p.to_ring(ring.poly)) for p in row] for row in rows]


class KuranishiModel:
    """(V, F_V, omega): V a principal open of affine space, F_V free of rank m,
    omega a section whose zero locus is U."""

    potential: Optional[Polynomial] = None

    def __init__(self, ambient: RingPresentation, section: Sequence, name="K",
                 allow_empty=False):
        self.ambient = ambient
        self.name = name
        self.section = [ambient.reduce(ambient.parse(s)) for s in section]
        self.rank = len(self.section)
        inv = Ideal(ambient.poly, [ambient.gen(n) * f - 1 for n, f in ambient.inverted])
        if inv != ambient.relations:
            raise ModelError(f"{name}: ambient must be a principal open of affine space")
        self.base = ambient.quotient(self.section)
        self.base.label = name
        if not allow_empty and self.base.is_zero_ring():
            raise ModelError(f"{name}: the zero locus of the section is empty")

    @classmethod
    def dcrit(cls, ambient: RingPresentation, potential, name="K"):
        """(V, Omega_V, df)."""
        f = ambient.parse(potential)
        model = cls(ambient, [ambient.derivation(f, v) for v in ambient.coordinates], name)
        model.potential = ambient.reduce(f)
        return model

    def __repr__(self):
        return f"KuranishiModel({self.name}, rank {self.rank})"

    @property
    def coordinates(self):
        return self.ambient.coordinates

    @cached_property
    def jacobian(self) -> List[List[Polynomial]]:
        """m x n matrix d omega_i / d x_j over V."""
        v = self.ambient
        return [[v.derivation(s, x) for x in self.coordinates] for s in self.section]

    @cached_property
    def jacobian_on_u(self) -> List[List[Polynomial]]:
        return _on(self.base, self.jacobian)

    @cached_property
    def obstruction_sheaf(self) -> FpModule:
        """coker(T_V|_U -> F|_U)."""
        return FpModule.from_matrix(self.base, self.rank, self.jacobian_on_u)

    def hessian(self) -> Optional[List[List[Polynomial]]]:
        if self.potential is None:
            return None
        v = self.ambient
        return [[v.derivation(v.derivation(self.potential, a), b) for b in self.coordinates]
                for a in self.coordinates]


# -- induced obstruction theory ------------------------------------------------

@dataclass
class InducedPOT:
    model: KuranishiModel
    complex: object                   # ChainComplex F^vee|_U (deg 1) -> Omega_V|_U (deg 0)
    obstruction: FpModule
    h0_ok: bool
    hm1_ok: bool
    problems: List[str] = field(default_factory=list)

    @property
    def ok(self):
        return self.h0_ok and self.hm1_ok


def induced_pot(model: KuranishiModel) -> InducedPOT:
    """[F^vee|_U --d omega^vee--> Omega_V|_U] mapping to [I/I^2 -> Omega_V|_U]."""
    u = model.base
    n = len(model.coordinates)
    jt = _transpose(model.jacobian_on_u) if model.rank else [[] for _ in range(n)]
    cx = _two_term(u, jt, model.rank, n)
    problems = []
    # h^{-1}: F^vee -> I/I^2 sends e_i to omega_i; onto because the omega_i
    # generate I.  Verify against the defining ideal of U in V.
    ideal_u = Ideal(model.ambient.poly, list(model.ambient.relations.generators)
                    + list(model.section))
    hm1_ok = ideal_u == u.relations
    if not hm1_ok:
        problems.append("F^vee -> I/I^2 is not surjective")
    # h^0: coker(d omega^vee) against Omega_U = Omega_V|_U / (d f : f in I).
    # I is generated by omega and the localization relations, whose
    # differentials vanish on V, so the two submodules must coincide.
    omega_u = FpModule(u, n, [vec_from_entries(u, [u.derivation(g, x) for x in model.coordinates])
                              for g in ideal_u.groebner])
    coker = FpModule.from_matrix(u, n, jt)
    h0_ok = coker.same_presentation(omega_u)
    if not h0_ok:
        problems.append("h^0 of the complex differs from Omega_U")
    return InducedPOT(model, cx, model.obstruction_sheaf, h0_ok, hm1_ok, problems)


def _two_term(ring, rows, m, n) -> ChainComplex:
    """[O^m --rows--> O^n] in homological degrees 1, 0."""
    src = FpModule.free(ring, m)
    tgt = FpModule.free(ring, n)
    return ChainComplex({1: src, 0: tgt},
                        {1: ModuleMap.from_matrix(src, tgt, rows, check=False)})


# -- normal cone ----------------------------------------------------------------

@dataclass
class NormalConeData:
    model: KuranishiModel
    fibers: tuple
    ring: RingPresentation            # O_U[y]
    ideal: List[Polynomial]
    trace: List[str]

    def is_homogeneous(self) -> bool:
        w = [1 if n in self.fibers else 0 for n in self.ring.names]
        return all(g.is_homogeneous(w) for g in self.ideal)


def normal_cone(model: KuranishiModel, fibers: Sequence[str] = None) -> NormalConeData:
    """C_{U/V} inside F|_U: the Rees algebra of I = (omega) modulo I.

    The graph ideal (y_i - t omega_i) is saturated by t until it stops
    growing, t is eliminated, and the result is read in O_U[y].
    """
    v = model.ambient
    fibers = tuple(fibers) if fibers else fiber_names(model.base, model.rank)
    t = _fresh_name(v.names + fibers, "_t")
    big = PolyRing(v.names + fibers + (t,))
    tv = big.gen(t)
    gens = [g.to_ring(big) for g in v.relations.generators]
    gens += [big.gen(y) - tv * s.to_ring(big) for y, s in zip(fibers, model.section)]
    current = Ideal(big, gens)
    trace = [f"graph ideal: {len(gens)} generators"]
    rounds = 0
    while True:
        nxt = quotient(current, tv)
        rounds += 1
        if nxt == current:
            break
        current = Ideal(big, nxt.groebner)
    trace.append(f"saturation by {t} stable after {rounds} quotient(s)")
    rees = eliminate(current, [t])
    trace.append(f"eliminated {t}: {len(rees.groebner)} generators")
    ring = model.base.extend(fibers)
    out = []
    for g in rees.groebner:
        r = ring.reduce(g.to_ring(ring.poly))
        if not r.is_zero():
            out.append(r)
    ideal = [g for g in Ideal(ring.poly, list(ring.relations.generators) + out).groebner
             if not ring.is_zero(g)]
    ideal = _minimal_mod(ring, ideal)
    trace.append(f"cone ideal mod I: {len(ideal)} generators")
    return NormalConeData(model, fibers, ring, ideal, trace)


def _minimal_mod(ring: RingPresentation, gens: List[Polynomial]) -> List[Polynomial]:
    """Drop generators already in the ideal of the others (mod the relations)."""
    gens = [ring.reduce(g) for g in gens]
    gens = [g for g in gens if not g.is_zero()]
    kept = list(gens)
    for g in sorted(gens, key=lambda p: (-p.degree(), str(p))):
        rest = [h for h in kept if h is not g]
        if Ideal(ring.poly, list(ring.relations.generators) + rest).contains(g):
            kept = rest
    return sorted(kept, key=str)


def obstruction_chart(model: KuranishiModel) -> LocalChart:
    """(U, id, F|_U, quotient onto Ob)."""
    ob = model.obstruction_sheaf
    return LocalChart(model.base, ob, [{(i, model.base.poly.zero_exp): Fraction(1)}
                                       for i in range(model.rank)], name=model.name)


def cone_substack(model: KuranishiModel, chart: LocalChart = None):
    chart = chart or obstruction_chart(model)
    cone = normal_cone(model, chart.fibers)
    return chart, cone, ClosedSubstack([(chart, cone.ideal)], name=f"C({model.name})")


def virtual_sheaf_chart(model: KuranishiModel) -> KClass:
    """0^![O_C] on the tautological obstruction chart."""
    chart, _, sub = cone_substack(model)
    return gysin_chart(chart, sub)


# -- compatibility of two models ------------------------------------------------

class OmegaCompat:
    """K = (V, F_V, omega_V) over T and L = (W, F_W, omega_W) over U with
    Phi: V -> W (images of W's variables in O_V) and eta: F_W|_V -> F_V
    (an m_K x m_L matrix over O_V)."""

    def __init__(self, small: KuranishiModel, big: KuranishiModel, phi: Sequence,
                 eta: Sequence[Sequence], right_inverse: Sequence[Sequence] = None, name=""):
        self.small = small
        self.big = big
        self.name = name or f"{small.name}->{big.name}"
        v = small.ambient
        self.phi = RingMap(big.ambient, v, list(phi))
        self.eta = _matrix(v, eta)
        if len(self.eta) != small.rank or any(len(r) != big.rank for r in self.eta):
            raise ModelError(f"{self.name}: eta must be {small.rank} x {big.rank}")
        self.sigma = _matrix(v, right_inverse) if right_inverse is not None else None

    @classmethod
    def identity(cls, model: KuranishiModel):
        v = model.ambient
        eye = [[v.one() if i == j else v.zero() for j in range(model.rank)]
               for i in range(model.rank)]
        return cls(model, model, v.poly.gens(), eye, name=f"id({model.name})")

    @cached_property
    def pulled_section(self) -> List[Polynomial]:
        return [self.phi(s) for s in self.big.section]

    @cached_property
    def d_phi(self) -> List[List[Polynomial]]:
        """n_W x n_V matrix d Phi^*(w_l) / d x_k."""
        v = self.small.ambient
        w = self.big.ambient
        rows = []
        for name in w.coordinates:
            img = self.phi.images[w.names.index(name)]
            rows.append([v.derivation(img, x) for x in v.coordinates])
        return rows

    @cached_property
    def base_map(self) -> RingMap:
        """O_U -> O_T induced by Phi."""
        return RingMap(self.big.base, self.small.base,
                       [p.to_ring(self.small.base.poly) for p in self.phi.images])

    def pulled_jacobian(self) -> List[List[Polynomial]]:
        """Phi^* of the Jacobian of omega_W, on T."""
        t = self.small.base
        return [[t.reduce(self.phi(p).to_ring(t.poly)) for p in row] for row in self.big.jacobian]

    @cached_property
    def pulled_obstruction(self) -> FpModule:
        return FpModule.from_matrix(self.small.base, self.big.rank, self.pulled_jacobian())

    def find_right_inverse(self) -> Optional[List[List[Polynomial]]]:
        """sigma with eta sigma = 1, solved column by column over O_V."""
        if self.sigma is not None:
            return self.sigma
        v = self.small.ambient
        cols = [vec_from_entries(v, [row[j] for row in self.eta]) for j in range(self.big.rank)]
        solver = LinearSystem(v, self.small.rank, cols)
        sigma_cols = []
        for i in range(self.small.rank):
            a = solver.solve(poly_vec(v.one(), i))
            if a is None:
                return None
            sigma_cols.append([vec_component(a, j, v.poly) for j in range(self.big.rank)])
        return _transpose(sigma_cols) if sigma_cols else [[] for _ in range(self.big.rank)]


@dataclass
class CompatReport:
    name: str
    failures: List[str]
    notes: List[str]
    eta_on_ob: Optional[ModuleMap] = None

    @property
    def ok(self):
        return not self.failures


def check_omega_compat(data: OmegaCompat) -> CompatReport:
    failures, notes = [], []
    k, lam = data.small, data.big
    v, t = k.ambient, k.base
    # (1) Phi carries T into U, and is unramified along T
    try:
        bad = data.base_map.check()
    except ValueError as exc:
        bad = [str(exc)]
    if bad:
        failures.append("(1) Phi does not map T into U")
    else:
        try:
            data.base_map.inverse()
            notes.append("(1) T -> U is an isomorphism")
        except ValueError:
            notes.append("(1) T -> U is not an isomorphism; etaleness is not certified")
    if v.coordinates and lam.ambient.coordinates:
        dphi_t = _on(t, _transpose(data.d_phi))       # n_V x n_W : Omega_W|_T -> Omega_V|_T
        om_w = FpModule.free(t, len(lam.ambient.coordinates))
        om_v = FpModule.free(t, len(v.coordinates))
        if not ModuleMap.from_matrix(om_w, om_v, dphi_t, check=False).is_surjective():
            failures.append("(1) Phi is ramified along T")
    # (2) eta surjective with eta(omega_W|_V) = omega_V
    fw = FpModule.free(v, lam.rank)
    fv = FpModule.free(v, k.rank)
    if k.rank and not ModuleMap.from_matrix(fw, fv, data.eta, check=False).is_surjective():
        failures.append("(2) eta is not surjective")
    pushed = [sum((e * s for e, s in zip(row, data.pulled_section)), v.zero())
              for row in data.eta]
    if any(not v.equal(a, b) for a, b in zip(pushed, k.section)):
        failures.append("(2) eta(omega_W|_V) != omega_V")
    # (3) eta induces an isomorphism Ob_W|_T -> Ob_V
    eta_t = _on(t, data.eta)
    eta_on_ob = None
    try:
        eta_on_ob = ModuleMap.from_matrix(data.pulled_obstruction, k.obstruction_sheaf, eta_t)
    except ModuleError:
        failures.append("(3) eta does not descend to the obstruction sheaves")
    if eta_on_ob is not None and not eta_on_ob.is_isomorphism():
        failures.append("(3) eta is not an isomorphism of obstruction sheaves")
    return CompatReport(data.name, failures, notes, eta_on_ob)


@dataclass
class PsiResult:
    """psi: E_W|_T -> E_V with components (Psi on F^vee, dPhi^T on Omega)."""

    data: OmegaCompat
    psi: List[List[Polynomial]]          # m_K x m_L over O_T
    alpha: List[List[Polynomial]]        # correction added to the split inclusion
    chain_map: ChainMap
    quasi_iso: QuasiIsoCertificate
    triangle_ok: bool
    h1_matches_eta: bool
    failures: List[str]

    @property
    def ok(self):
        return not self.failures


class PsiError(ModelError):
    pass


def build_psi(data: OmegaCompat) -> PsiResult:
    """Split eta by a right inverse sigma, lift the R-part of omega_W through
    omega_V, and assemble Psi^T = sigma + P A with P = 1 - sigma eta."""
    report = check_omega_compat(data)
    if not report.ok:
        raise PsiError(f"{data.name}: models are not compatible: {report.failures}")
    k, lam = data.small, data.big
    v, t = k.ambient, k.base
    mk, ml = k.rank, lam.rank
    sigma = data.find_right_inverse()
    if sigma is None:
        raise PsiError(f"{data.name}: eta has no right inverse over the ambient ring; "
                       "localize V further")
    eye = [[v.one() if i == j else v.zero() for j in range(ml)] for i in range(ml)]
    se = _matmul(sigma, data.eta, v) if mk else [[v.zero()] * ml for _ in range(ml)]
    proj = [[v.reduce(eye[i][j] - se[i][j]) for j in range(ml)] for i in range(ml)]
    # rho = P Phi^*omega_W lies in I_T = (omega_V); write it as A omega_V
    rho = [sum((p * s for p, s in zip(row, data.pulled_section)), v.zero()) for row in proj]
    cols = [poly_vec(s) for s in k.section]
    solver = LinearSystem(v, 1, cols)
    lift = []
    for r in rho:
        a = solver.solve(poly_vec(r)) if not v.is_zero(r) else {}
        if a is None:
            raise PsiError(f"{data.name}: lift infeasible, {r} is not in the ideal of T")
        lift.append([vec_component(a, j, v.poly) for j in range(mk)])
    alpha = _matmul(proj, lift, v) if mk else [[] for _ in range(ml)]
    psi_t = [[v.reduce(sigma[i][j] + alpha[i][j]) for j in range(mk)] for i in range(ml)]
    psi = _on(t, _transpose(psi_t)) if mk else []
    failures = []

    nv, nw = len(k.coordinates), len(lam.ambient.coordinates)
    jt_v = _transpose(k.jacobian_on_u) if mk else [[] for _ in range(nv)]
    jt_w = _transpose(data.pulled_jacobian()) if ml else [[] for _ in range(nw)]
    dphi_t = _on(t, _transpose(data.d_phi)) if nw else [[] for _ in range(nv)]
    src = _two_term(t, jt_w, ml, nw)
    tgt = _two_term(t, jt_v, mk, nv)
    comps = {1: ModuleMap.from_matrix(src.modules[1], tgt.modules[1],
                                      psi if mk else [], check=False),
             0: ModuleMap.from_matrix(src.modules[0], tgt.modules[0], dphi_t, check=False)}
    cm = ChainMap(src, tgt, comps, check=False)
    bad = cm.commutation_failures()
    if bad:
        raise PsiError(f"{data.name}: psi is not a chain map (degrees {bad})")
    cert = is_quasi_iso(cm)
    if not cert:
        failures.append(f"psi is not a quasi-isomorphism: {cert.failures}")
    # triangle over L^{>=-1}: Psi^T omega_V == Phi^* omega_W modulo I_T^2
    sq = Ideal(v.poly, list(v.relations.generators)
               + [a * b for a in k.section for b in k.section])
    triangle_ok = all(
        sq.contains(sum((psi_t[j][i] * k.section[i] for i in range(mk)), v.zero())
                    - data.pulled_section[j])
        for j in range(ml))
    if not triangle_ok:
        failures.append("psi does not commute with the maps to the truncated cotangent complex")
    # h^1(psi^vee): Ob_V -> Ob_W|_T is Psi^T; it must invert the map induced by eta
    h1_ok = False
    try:
        dual = ModuleMap.from_matrix(k.obstruction_sheaf, data.pulled_obstruction,
                                     _on(t, psi_t))
        h1_ok = report.eta_on_ob.compose(dual).equals(ModuleMap.identity(k.obstruction_sheaf)) \
            and dual.compose(report.eta_on_ob).equals(ModuleMap.identity(data.pulled_obstruction))
    except ModuleError:
        pass
    if not h1_ok:
        failures.append("h^1(psi^vee) does not invert eta on obstruction sheaves")
    return PsiResult(data, psi, _on(t, alpha), cm, cert, triangle_ok, h1_ok, failures)
