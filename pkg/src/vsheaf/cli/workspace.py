"""Turning parsed blocks into algebraic objects."""

from __future__ import annotations

import re
from typing import Dict, List

from ..algebra.polynomial import PolynomialSyntaxError
from ..algebra.rings import Ideal, RingPresentation
from ..apot import APOTData, APOTError
from ..charts import ChartError, ClosedSubstack, LocalChart, SpacePresentation, StructureSheaf
from ..gysin import GysinError, RegularEmbeddingData
from ..homological.complexes import koszul_complex
from ..homological.modules import FpModule, ModuleError, ModuleMap
from ..obstruction import KuranishiModel, ModelError, OmegaCompat
from .syntax import Atom, Block, InputError, ListValue, dump_blocks, parse_text

ORDERS = ("lex", "grlex", "grevlex")

# key -> (required, type); types: names, polys, poly, matrix, int, ints, name,
# order, ref:<kind>, refs:<kind>
SCHEMA = {
    "ring": {"vars": (True, "names"), "relations": (False, "polys"),
             "invert": (False, "polys"), "inverse": (False, "names"),
             "order": (False, "order")},
    "ideal": {"ring": (True, "ref:ring"), "generators": (True, "polys")},
    "module": {"ring": (True, "ref:ring"), "gens": (True, "int"),
               "relations": (False, "matrix")},
    "koszul": {"ring": (True, "ref:ring"), "section": (True, "polys")},
    "chart": {"base": (True, "ref:ring"), "sheaf": (True, "ref:module"),
              "surjection": (False, "matrix"), "substack": (False, "polys")},
    "ses": {"chart": (True, "ref:chart"), "a": (True, "ref:module"), "b": (True, "ref:module"),
            "c": (True, "ref:module"), "f": (True, "matrix"), "g": (True, "matrix")},
    "embedding": {"ambient": (True, "ref:ring"), "generators": (True, "polys")},
    "pullback": {"embedding": (True, "ref:embedding"), "module": (True, "ref:module")},
    "commute": {"chart": (True, "ref:chart"), "embedding": (True, "ref:embedding")},
    "kuranishi": {"vars": (True, "names"), "order": (False, "order"),
                  "invert": (False, "poly"), "inverse": (False, "name"),
                  "section": (False, "polys"), "potential": (False, "poly")},
    "compat": {"small": (True, "ref:kuranishi"), "big": (True, "ref:kuranishi"),
               "phi": (True, "polys"), "eta": (True, "matrix"), "sigma": (False, "matrix")},
    "space": {"ring": (True, "ref:ring"), "cover": (True, "polys"), "labels": (False, "names")},
    "apot": {"space": (True, "ref:space"), "models": (True, "refs:kuranishi"),
             "twist": (False, "ints")},
}
_APOT_EXTRA = {re.compile(r"psi_(\d+)_(\d+)$"): "matrix",
               re.compile(r"compat_(\d+)_(\d+)$"): "ref:compat",
               re.compile(r"map_(\d+)$"): "polys"}


def _key_type(kind, key):
    entry = SCHEMA[kind].get(key)
    if entry:
        return entry[1]
    if kind == "apot":
        for pat, typ in _APOT_EXTRA.items():
            if pat.match(key):
                return typ
    return None


def _atoms(v, what, entry):
    if not isinstance(v, ListValue):
        raise InputError(f"{entry.key}: expected a list of {what}", v.line, v.col)
    for x in v.items:
        if not isinstance(x, Atom):
            raise InputError(f"{entry.key}: expected a list of {what}", x.line, x.col)
    return v.items


def _atom(v, entry):
    if not isinstance(v, Atom):
        raise InputError(f"{entry.key}: expected a single value", v.line, v.col)
    return v


def _int(a: Atom, key):
    try:
        return int(a.text)
    except ValueError:
        raise InputError(f"{key}: expected an integer, found {a.text!r}", a.line, a.col)


def _ident(a: Atom, key):
    if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", a.text):
        raise InputError(f"{key}: expected a name, found {a.text!r}", a.line, a.col)
    return a.text


class Workspace:
    def __init__(self, blocks: List[Block]):
        self.blocks = list(blocks)
        self.by_name: Dict[str, Block] = {b.name: b for b in self.blocks}
        self._objects: Dict[str, object] = {}
        for b in self.blocks:
            self._validate(b)
        self._check_cycles()

    @classmethod
    def parse(cls, text: str) -> "Workspace":
        return cls(parse_text(text))

    def dump(self) -> str:
        return dump_blocks(self.blocks)

    def __eq__(self, other):
        return isinstance(other, Workspace) and self.dump() == other.dump()

    def of_kind(self, *kinds) -> List[Block]:
        return [b for b in self.blocks if b.kind in kinds]

    # -- static checks -----------------------------------------------------
    def _validate(self, b: Block):
        if b.kind not in SCHEMA:
            raise InputError(f"unknown block kind {b.kind!r}", b.line, b.col)
        for e in b.entries:
            typ = _key_type(b.kind, e.key)
            if typ is None:
                raise InputError(f"unknown key {e.key!r} for a {b.kind} block", e.line, e.col)
            self._check_value(b, e, typ)
        for key, (req, _) in SCHEMA[b.kind].items():
            if req and b.get(key) is None:
                raise InputError(f"{b.kind} block {b.name!r} needs a {key!r} entry", b.line, b.col)
        if b.kind == "kuranishi" and (b.get("section") is None) == (b.get("potential") is None):
            raise InputError(f"kuranishi block {b.name!r} needs exactly one of 'section' or "
                             "'potential'", b.line, b.col)

    def _check_value(self, b, e, typ):
        v = e.value
        if typ == "names":
            for a in _atoms(v, "names", e):
                _ident(a, e.key)
        elif typ == "name":
            _ident(_atom(v, e), e.key)
        elif typ == "order":
            a = _atom(v, e)
            if a.text not in ORDERS:
                raise InputError(f"unknown monomial order {a.text!r}", a.line, a.col)
        elif typ == "int":
            _int(_atom(v, e), e.key)
        elif typ == "ints":
            for a in _atoms(v, "integers", e):
                _int(a, e.key)
        elif typ == "polys":
            _atoms(v, "polynomials", e)
        elif typ == "poly":
            _atom(v, e)
        elif typ == "matrix":
            rows = _atoms_rows(v, e)
            if rows and len({len(r) for r in rows}) > 1:
                raise InputError(f"{e.key}: rows have different lengths", v.line, v.col)
        elif typ.startswith("ref:"):
            self._resolve(_atom(v, e), typ[4:])
        elif typ.startswith("refs:"):
            for a in _atoms(v, "names", e):
                self._resolve(a, typ[5:])

    def _resolve(self, a: Atom, kind) -> Block:
        name = a.text
        if kind == "ring" and name.endswith(".total"):
            target = self.by_name.get(name[:-6])
            if target is None or target.kind != "chart":
                raise InputError(f"unknown identifier {name!r}", a.line, a.col)
            return target
        target = self.by_name.get(name)
        if target is None:
            raise InputError(f"unknown identifier {name!r}", a.line, a.col)
        if target.kind != kind:
            raise InputError(f"{name!r} is a {target.kind}, expected a {kind}", a.line, a.col)
        return target

    def _refs(self, b: Block) -> List[str]:
        out = []
        for e in b.entries:
            typ = _key_type(b.kind, e.key)
            if typ.startswith("ref:"):
                out.append(self._resolve(e.value, typ[4:]).name)
            elif typ.startswith("refs:"):
                out.extend(self._resolve(a, typ[5:]).name for a in e.value.items)
        return out

    def _check_cycles(self):
        state = {}

        def visit(name, trail):
            if state.get(name) == 1:
                return
            if state.get(name) == 0:
                b = self.by_name[name]
                cyc = " -> ".join(trail[trail.index(name):] + [name])
                raise InputError(f"cyclic definition: {cyc}", b.line, b.col)
            state[name] = 0
            for r in self._refs(self.by_name[name]):
                visit(r, trail + [name])
            state[name] = 1

        for b in self.blocks:
            visit(b.name, [])

    # -- building ----------------------------------------------------------
    def get(self, name: str):
        if name in self._objects:
            return self._objects[name]
        b = self.by_name[name]
        try:
            obj = getattr(self, "_build_" + b.kind)(b)
        except InputError:
            raise
        except (ModelError, ChartError, GysinError, ModuleError, APOTError, ValueError) as exc:
            raise InputError(f"{b.kind} {b.name!r}: {exc}", b.line, b.col)
        self._objects[name] = obj
        return obj

    def ref(self, b: Block, key):
        e = b.get(key)
        a = e.value
        if a.text.endswith(".total"):
            return self.get(a.text[:-6]).chart.total
        return self.get(a.text)

    def polys(self, ring: RingPresentation, b: Block, key, default=()):
        e = b.get(key)
        if e is None:
            return list(default)
        return [self.poly(ring, a) for a in e.value.items]

    def poly(self, ring: RingPresentation, a: Atom):
        try:
            return ring.reduce(ring.parse(a.text))
        except PolynomialSyntaxError as exc:
            raise InputError(f"malformed polynomial: {exc}", a.line, a.col + exc.position)

    def matrix(self, ring, b: Block, key):
        e = b.get(key)
        if e is None:
            return None
        return [[self.poly(ring, a) for a in row] for row in _atoms_rows(e.value, e)]

    @staticmethod
    def text(b: Block, key, default=None):
        e = b.get(key)
        return e.value.text if e is not None else default

    @staticmethod
    def names(b: Block, key):
        e = b.get(key)
        return [a.text for a in e.value.items] if e is not None else []

    def _build_ring(self, b):
        names = self.names(b, "vars")
        inverse = self.names(b, "inverse")
        inv_e = b.get("invert")
        inv_atoms = inv_e.value.items if inv_e is not None else []
        if inverse and len(inverse) != len(inv_atoms):
            raise InputError("'inverse' needs one name per inverted element", b.line, b.col)
        if not inverse:
            inverse = [f"u{k}" for k in range(len(inv_atoms))]
        scratch = RingPresentation(names + inverse)
        inverted = [(n, self.poly(scratch, a)) for n, a in zip(inverse, inv_atoms)]
        rel_e = b.get("relations")
        rels = [self.poly(scratch, a) for a in rel_e.value.items] if rel_e is not None else []
        order = self.text(b, "order", "grevlex")
        ring = RingPresentation(names, order, [str(r) for r in rels],
                                [(n, str(f)) for n, f in inverted], label=b.name)
        return ring

    def _build_ideal(self, b):
        ring = self.ref(b, "ring")
        return ring, Ideal(ring.poly, self.polys(ring, b, "generators"))

    def _build_module(self, b):
        ring = self.ref(b, "ring")
        n = int(self.text(b, "gens"))
        rows = self.matrix(ring, b, "relations")
        if rows is None:
            return FpModule.free(ring, n)
        if len(rows) != n:
            raise InputError(f"relations need {n} rows, got {len(rows)}", b.line, b.col)
        return FpModule.from_matrix(ring, n, rows)

    def _build_koszul(self, b):
        ring = self.ref(b, "ring")
        sec = self.polys(ring, b, "section")
        return koszul_complex(len(sec), sec, ring)

    def _build_chart(self, b):
        base = self.ref(b, "base")
        sheaf = self.ref(b, "sheaf")
        if sheaf.ring != base:
            raise InputError(f"chart {b.name!r}: sheaf lives over a different ring", b.line, b.col)
        rows = self.matrix(base, b, "surjection")
        if rows is None:
            chart = LocalChart.tautological(base, sheaf, b.name)
        else:
            if len(rows) != sheaf.ngens:
                raise InputError(f"surjection needs {sheaf.ngens} rows", b.line, b.col)
            chart = LocalChart.from_matrix(base, sheaf, rows, b.name)
        e = b.get("substack")
        if e is None:
            sub = StructureSheaf()
        else:
            gens = [self.poly(chart.total, a) for a in e.value.items]
            sub = ClosedSubstack([(chart, gens)], name=f"{b.name}.substack")
        return ChartEntry(chart, sub)

    def _build_ses(self, b):
        entry = self.ref(b, "chart")
        mods = [self.ref(b, k) for k in "abc"]
        total = entry.chart.total
        for k, m in zip("abc", mods):
            if m.ring != total:
                raise InputError(f"module {k!r} must live over {b.get('chart').value.text}.total",
                                 b.line, b.col)
        f = ModuleMap.from_matrix(mods[0], mods[1], self.matrix(total, b, "f"))
        g = ModuleMap.from_matrix(mods[1], mods[2], self.matrix(total, b, "g"))
        return entry, f, g

    def _build_embedding(self, b):
        ring = self.ref(b, "ambient")
        return RegularEmbeddingData(ring, self.polys(ring, b, "generators"), name=b.name)

    def _build_pullback(self, b):
        return self.ref(b, "embedding"), self.ref(b, "module")

    def _build_commute(self, b):
        return self.ref(b, "chart"), self.ref(b, "embedding")

    def _build_kuranishi(self, b):
        names = self.names(b, "vars")
        order = self.text(b, "order", "grevlex")
        inv = b.get("invert")
        inverted = []
        if inv is not None:
            uname = self.text(b, "inverse", "u0")
            scratch = RingPresentation(names + [uname])
            inverted = [(uname, str(self.poly(scratch, inv.value)))]
        ambient = RingPresentation(names, order, (), inverted, label=b.name)
        if b.get("potential") is not None:
            f = self.poly(ambient, b.get("potential").value)
            return KuranishiModel.dcrit(ambient, f, b.name)
        return KuranishiModel(ambient, self.polys(ambient, b, "section"), b.name)

    def _build_compat(self, b):
        small = self.ref(b, "small")
        big = self.ref(b, "big")
        v = small.ambient
        phi = self.polys(v, b, "phi")
        if len(phi) != big.ambient.nvars:
            raise InputError(f"phi needs one image per variable of {big.name} "
                             f"({', '.join(big.ambient.names)})", b.line, b.col)
        return OmegaCompat(small, big, phi, self.matrix(v, b, "eta"),
                           self.matrix(v, b, "sigma"), name=b.name)

    def _build_space(self, b):
        ring = self.ref(b, "ring")
        labels = self.names(b, "labels") or None
        cover = self.polys(ring, b, "cover")
        if labels and len(labels) != len(cover):
            raise InputError("need one label per cover element", b.line, b.col)
        return SpacePresentation(ring, cover, labels)

    def _build_apot(self, b):
        space = self.ref(b, "space")
        models = [self.get(a.text) for a in b.get("models").value.items]
        n = len(space)
        psi, compat, maps = {}, {}, {}
        for e in b.entries:
            for pat, typ in _APOT_EXTRA.items():
                m = pat.match(e.key)
                if not m:
                    continue
                idx = tuple(int(g) for g in m.groups())
                if any(i >= n for i in idx) or (len(idx) == 2 and idx[0] >= idx[1]):
                    raise InputError(f"{e.key}: bad piece indices for a cover of {n}",
                                     e.line, e.col)
                if typ == "matrix":
                    psi[idx] = self.matrix(space.ring(idx), b, e.key)
                elif typ == "ref:compat":
                    compat[idx] = self.get(e.value.text)
                else:
                    maps[idx[0]] = self.polys(space.piece(idx[0]), b, e.key)
        twist = [int(a.text) for a in b.get("twist").value.items] if b.get("twist") else None
        if twist is not None and len(twist) != n:
            raise InputError("need one twist rank per piece", b.line, b.col)
        return ApotEntry(APOTData(space, models, psi, compat, maps, name=b.name), twist)


class ApotEntry:
    def __init__(self, data: APOTData, twist):
        self.data = data
        self.twist = twist


class ChartEntry:
    def __init__(self, chart: LocalChart, substack):
        self.chart = chart
        self.substack = substack


def _atoms_rows(v, e):
    if not isinstance(v, ListValue):
        raise InputError(f"{e.key}: expected a matrix [[..], ..]", v.line, v.col)
    rows = []
    for r in v.items:
        if not isinstance(r, ListValue) or any(not isinstance(x, Atom) for x in r.items):
            raise InputError(f"{e.key}: expected a matrix [[..], ..]", r.line, r.col)
        rows.append(r.items)
    return rows
