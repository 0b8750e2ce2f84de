"""The six report commands.  Each returns a Report whose text and JSON
renderings carry the same fields in the same order."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from ..algebra.orders import MonomialOrder
from ..algebra.rings import buchberger
from ..apot import APOTError, dt_number, global_cone, global_virtual_sheaf, validate_apot
from ..charts import ChartError, koszul_homology_chart
from ..gysin import gysin_chart, gysin_commute_check, regular_gysin, ses_additivity_check
from ..homological.complexes import homology
from ..homological.modules import INFINITE, FpModule, ModuleError
from ..obstruction import (PsiError, build_psi, check_omega_compat, induced_pot, normal_cone,
                           virtual_sheaf_chart)
from .workspace import Workspace

COMMANDS = ("groebner", "homology", "gysin", "vsheaf", "apot-check", "dt")


@dataclass
class Section:
    name: str
    kind: str
    fields: List[Tuple[str, object]] = field(default_factory=list)
    passed: Optional[bool] = None

    def add(self, key, value):
        self.fields.append((key, value))


@dataclass
class Report:
    command: str
    sections: List[Section] = field(default_factory=list)

    @property
    def ok(self):
        return all(s.passed is not False for s in self.sections)

    def text(self) -> str:
        lines = []
        for s in self.sections:
            lines.append(f"{s.name} {s.kind}")
            for k, v in s.fields:
                lines.append(f"  {k} = {_text(v)}")
            if s.passed is not None:
                lines.append(f"  result = {'PASS' if s.passed else 'FAIL'}")
        if not self.sections:
            lines.append(f"no blocks for {self.command}")
        lines.append(f"status = {'PASS' if self.ok else 'FAIL'}")
        return "\n".join(lines) + "\n"

    def json(self) -> str:
        out = {"command": self.command, "sections": []}
        for s in self.sections:
            d = {"name": s.name, "kind": s.kind}
            for k, v in s.fields:
                d[k] = v
            if s.passed is not None:
                d["result"] = "PASS" if s.passed else "FAIL"
            out["sections"].append(d)
        out["status"] = "PASS" if self.ok else "FAIL"
        return json.dumps(out, indent=2) + "\n"


def _text(v) -> str:
    if isinstance(v, list):
        return "[" + ", ".join(_text(x) for x in v) + "]"
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "undefined"
    return str(v)


def _finite(ln):
    return ln if ln != INFINITE else "infinite"


def _length(m: FpModule):
    return _finite(m.length())


def _module_fields(sec: Section, key: str, m: FpModule, bound: Optional[int]):
    sec.add(key, m.describe())
    ln = _length(m)
    sec.add(key + ".length", ln)
    if ln == "infinite" and bound is not None:
        try:
            sec.add(key + ".hilbert", m.hilbert_series(bound))
        except ModuleError:
            sec.add(key + ".hilbert", "not graded")


def _class_fields(sec: Section, cls, prefix=""):
    for t in cls.terms:
        sec.add(f"{prefix}{t.label or 'term'}", f"{t.coeff:+d} * [{t.describe()}]")
    sec.add(prefix + "lengths", [_finite(t.length()) for t in cls.terms])
    sec.add(prefix + "chi", cls.euler())
    sec.add(prefix + "zero", cls.is_syntactically_zero())


# -- commands ---------------------------------------------------------------------

def cmd_groebner(ws: Workspace, order: Optional[str], bound) -> Report:
    rep = Report("groebner")
    for b in ws.of_kind("ideal"):
        ring, ideal = ws.get(b.name)
        gens = list(ideal.generators) + list(ring.relations.generators)
        kind = order or ring.order.kind
        if kind not in ("lex", "grlex", "grevlex"):
            kind = "grevlex"
        gb = buchberger(gens, MonomialOrder(kind, ring.nvars))
        sec = Section(b.name, "ideal")
        sec.add("ring", ring.label or "?")
        sec.add("order", kind)
        sec.add("basis", "{" + ", ".join(str(g) for g in gb) + "}")
        sec.add("size", len(gb))
        sec.add("unit", any(g.is_constant() for g in gb))
        rep.sections.append(sec)
    return rep


def cmd_homology(ws: Workspace, order, bound) -> Report:
    rep = Report("homology")
    for b in ws.of_kind("koszul", "chart"):
        obj = ws.get(b.name)
        sec = Section(b.name, b.kind)
        if b.kind == "koszul":
            for i in obj.degrees:
                _module_fields(sec, f"H{i}", homology(obj, i).module, bound)
        else:
            q = obj.chart
            sec.add("rank", q.rank)
            for i in range(q.rank + 1):
                _module_fields(sec, f"H{i}", koszul_homology_chart(q, obj.substack, i).module,
                               bound)
            top = koszul_homology_chart(q, obj.substack, q.rank + 1)
            sec.add(f"H{q.rank + 1}", "0 (structural)" if top.vanishes_structurally else
                    top.module.describe())
        rep.sections.append(sec)
    return rep


def cmd_gysin(ws: Workspace, order, bound) -> Report:
    rep = Report("gysin")
    for b in ws.of_kind("chart", "ses", "pullback", "commute"):
        obj = ws.get(b.name)
        sec = Section(b.name, b.kind)
        if b.kind == "chart":
            q = obj.chart
            sec.add("rank", q.rank)
            _class_fields(sec, gysin_chart(q, obj.substack))
            sec.add("vanishing_above_rank", "structural")
        elif b.kind == "ses":
            entry, f, g = obj
            r = ses_additivity_check(entry.chart, f, g)
            sec.add("exact", r.exact)
            for p in r.problems:
                sec.add("problem", p)
            sec.add("chi", list(r.chi))
            sec.add("additive", r.additive)
            sec.passed = r.ok
        elif b.kind == "pullback":
            v, m = obj
            _class_fields(sec, regular_gysin(v, m))
        else:
            entry, v = obj
            r = gysin_commute_check(entry.chart, v, entry.substack)
            sec.add("left", [f"({i},{j}):{_text(n)}" for i, j, n in r.left])
            sec.add("right", [f"({i},{j}):{_text(n)}" for i, j, n in r.right])
            sec.add("chi_left", r.chi_left)
            sec.add("chi_right", r.chi_right)
            sec.passed = bool(r.agree)
        rep.sections.append(sec)
    return rep


def cmd_vsheaf(ws: Workspace, order, bound) -> Report:
    rep = Report("vsheaf")
    for b in ws.of_kind("kuranishi", "compat"):
        obj = ws.get(b.name)
        sec = Section(b.name, b.kind)
        if b.kind == "kuranishi":
            k = obj
            sec.add("locus", "(" + ", ".join(str(g) for g in k.base.relations.groebner) + ")")
            pot = induced_pot(k)
            sec.add("obstruction_theory", "ok" if pot.ok else "; ".join(pot.problems))
            _module_fields(sec, "ob", k.obstruction_sheaf, bound)
            cone = normal_cone(k)
            sec.add("cone", "(" + ", ".join(str(g) for g in cone.ideal) + ")")
            _class_fields(sec, virtual_sheaf_chart(k))
            sec.passed = pot.ok
        else:
            r = check_omega_compat(obj)
            sec.add("conditions", "ok" if r.ok else "; ".join(r.failures))
            for n in r.notes:
                sec.add("note", n)
            ok = r.ok
            if ok:
                try:
                    p = build_psi(obj)
                    sec.add("psi", _matrix_text(p.psi))
                    sec.add("alpha", _matrix_text(p.alpha))
                    sec.add("quasi_iso", bool(p.quasi_iso))
                    sec.add("triangle", p.triangle_ok)
                    sec.add("h1_matches_eta", p.h1_matches_eta)
                    ok = p.ok
                except PsiError as exc:
                    sec.add("psi", str(exc))
                    ok = False
                sec.add("chi_small", virtual_sheaf_chart(obj.small).euler())
                sec.add("chi_big", virtual_sheaf_chart(obj.big).euler())
            sec.passed = ok
        rep.sections.append(sec)
    return rep


def _matrix_text(rows):
    return "[" + ", ".join("[" + ", ".join(str(x) for x in r) + "]" for r in rows) + "]"


def cmd_apot_check(ws: Workspace, order, bound) -> Report:
    rep = Report("apot-check")
    for b in ws.of_kind("apot"):
        data = ws.get(b.name).data
        sec = Section(b.name, "apot")
        r = validate_apot(data)
        for where, msg in r.checks:
            sec.add("ok", f"{where}: {msg}")
        for where, msg in r.failures:
            sec.add("failure", f"{where}: {msg}")
        ok = r.ok
        if ok:
            try:
                cone = global_cone(data)
                for where, how in cone.agreements:
                    sec.add("cone", f"{where}: {how}")
                for where, how in cone.mismatches:
                    sec.add("failure", f"{where}: cones disagree")
                ok = cone.ok
            except (APOTError, ChartError) as exc:
                sec.add("failure", str(exc))
                ok = False
        sec.passed = ok
        rep.sections.append(sec)
    return rep


def cmd_dt(ws: Workspace, order, bound) -> Report:
    rep = Report("dt")
    for b in ws.of_kind("apot"):
        entry = ws.get(b.name)
        sec = Section(b.name, "apot")
        try:
            v = global_virtual_sheaf(entry.data)
        except (APOTError, ChartError) as exc:
            sec.add("failure", str(exc))
            sec.passed = False
            rep.sections.append(sec)
            continue
        for s, e in v.contributions:
            name = "&".join(entry.data.space.labels[a] for a in s)
            sec.add(f"chi[{name}]", e)
        sec.add("chi", v.chi)
        if v.chi is None:
            sec.add("invariants", [[f"{lab}:{c:+d}*{_text(n)}" for lab, c, n in row]
                                   for row in v.invariants])
        twist = entry.twist or [1] * len(entry.data.space)
        sec.add("twist", twist)
        dt = dt_number(entry.data, twist)
        sec.add("dt", None if dt is None else str(dt))
        sec.passed = v.chi is not None
        rep.sections.append(sec)
    return rep


RUNNERS = {"groebner": cmd_groebner, "homology": cmd_homology, "gysin": cmd_gysin,
           "vsheaf": cmd_vsheaf, "apot-check": cmd_apot_check, "dt": cmd_dt}


def run(ws: Workspace, command: str, order: Optional[str] = None,
        degree_bound: Optional[int] = None) -> Report:
    if command not in RUNNERS:
        raise ValueError(f"unknown command {command!r}")
    return RUNNERS[command](ws, order, degree_bound)
