import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from vsheaf.algebra import RingMap, RingPresentation
from vsheaf.charts import (ClosedSubstack, CoherentSheafOnX, LocalChart, SpacePresentation,
                           StructureSheaf)
from vsheaf.gysin import (GysinError, KClass, KTerm, RegularEmbeddingData, gysin, gysin_chart,
                          gysin_commute_check, regular_gysin, ses_additivity_check, twist)
from vsheaf.homological import FpModule, ModuleMap

QX = RingPresentation(["x"])
FAT = RingPresentation(["x"], relations=["x^2"])


def fat_chart():
    return LocalChart.tautological(FAT, FpModule.free(FAT, 1), "E")


def mp(s, t, rows):
    return ModuleMap.from_matrix(s, t, rows)


# -- 0_F^! ---------------------------------------------------------------------------

def test_zero_sheaf_leaves_class_unchanged():
    z = FpModule.zero(QX)
    q = LocalChart(QX, z, [], "Q")
    cls = gysin_chart(q, ClosedSubstack([(q, ["x^2"])]))
    assert len(cls.terms) == 1
    assert cls.terms[0].sheaf.same_presentation(FpModule.cyclic(QX, ["x^2"]))


def test_zero_section_of_trivial_line_bundle_cancels():
    q = LocalChart.tautological(QX, FpModule.free(QX, 1), "Q")
    cls = gysin_chart(q, ClosedSubstack([(q, ["y1"])]))
    assert cls.is_syntactically_zero()
    assert cls.equals(KClass(), "syntactic")


def test_fat_point_obstruction_cone():
    ob = FpModule.cyclic(FAT, ["x"])
    q = LocalChart.from_matrix(FAT, ob, [["1"]], "Q")
    cls = gysin_chart(q, StructureSheaf())
    assert cls.euler() == 2


def test_gysin_over_cover_visits_only_ranks():
    two = RingPresentation(["x"], relations=["x^2 - x"])
    s = SpacePresentation(two, ["x", "1-x"])
    f = CoherentSheafOnX.from_global(s, FpModule.free(two, 1))
    charts = [LocalChart.tautological(s.piece(a), f.modules[a], f"Q{a}") for a in range(2)]
    cls = gysin(s, charts, StructureSheaf())
    assert [t.label for t in cls.terms] == ["H0", "H1"]
    assert cls.euler() == 2


# -- SES additivity -------------------------------------------------------------------

def ses_cases():
    q = fat_chart()
    e = q.total
    o = FpModule.free(e, 1)

    def cyc(*g):
        return FpModule.cyclic(e, list(g))

    a, c = cyc("y1"), cyc("x")
    b = a.direct_sum(c)
    return q, {
        "ideal": (mp(o, o, [["y1"]]), mp(o, cyc("y1"), [["1"]])),
        "nonsplit": (mp(cyc("y1"), cyc("y1^2"), [["y1"]]), mp(cyc("y1^2"), cyc("y1"), [["1"]])),
        "x": (mp(cyc("x"), o, [["x"]]), mp(o, cyc("x"), [["1"]])),
        "split": (mp(a, b, [["1"], ["0"]]), mp(b, c, [["0", "1"]])),
        "degenerate": (ModuleMap.zero(FpModule.zero(e), cyc("y1")),
                       mp(cyc("y1"), cyc("y1"), [["1"]])),
    }


@pytest.mark.parametrize("name", ["ideal", "nonsplit", "x", "split", "degenerate"])
def test_ses_additivity(name):
    q, cases = ses_cases()
    f, g = cases[name]
    r = ses_additivity_check(q, f, g)
    assert r.exact, r.problems
    assert r.additive
    assert r.chi[1] == r.chi[0] + r.chi[2]


def test_non_exact_sequence_reported():
    q = fat_chart()
    e = q.total
    a, b = FpModule.cyclic(e, ["y1"]), FpModule.cyclic(e, ["y1^2"])
    r = ses_additivity_check(q, ModuleMap.zero(a, b), mp(b, a, [["1"]]))
    assert not r.exact and not r.ok


def test_ses_maps_must_share_middle():
    q = fat_chart()
    e = q.total
    a, b = FpModule.cyclic(e, ["y1"]), FpModule.cyclic(e, ["y1^2"])
    with pytest.raises(GysinError):
        ses_additivity_check(q, ModuleMap.zero(a, b), ModuleMap.identity(a))


# -- regular embeddings -----------------------------------------------------------------

def test_regular_gysin_examples():
    v_all = RegularEmbeddingData(QX, [])
    m = FpModule.cyclic(QX, ["x^3"])
    cls = regular_gysin(v_all, m)
    assert len(cls.terms) == 1 and cls.terms[0].sheaf.same_presentation(m)
    v = RegularEmbeddingData(QX, ["x"])
    assert regular_gysin(v, FpModule.free(QX, 1)).euler() == 1
    cls = regular_gysin(v, FpModule.cyclic(QX, ["x^2"]))
    assert [t.length() for t in cls.terms] == [1, 1]
    assert cls.euler() == 0


def test_bad_resolution_rejected():
    from vsheaf.homological import ChainComplex
    o = FpModule.free(QX, 1)
    res = ChainComplex({1: o, 0: o}, {1: mp(o, o, [["x^2"]])})
    with pytest.raises(GysinError):
        RegularEmbeddingData(QX, ["x"], res)


def test_regular_embedding_smoothness():
    assert RegularEmbeddingData(QX, ["x"]).is_smooth()
    assert not RegularEmbeddingData(QX, ["x^2"]).is_smooth()


# -- commutation ---------------------------------------------------------------------------

def test_commute_identity_embedding():
    q = fat_chart()
    a = ClosedSubstack([(q, ["y1^2 - x*y1"])])
    r = gysin_commute_check(q, RegularEmbeddingData(FAT, []), a)
    assert r.agree and r.chi_left == gysin_chart(q, a).euler()


def test_commute_on_fat_chart():
    ob = FpModule.cyclic(FAT, ["x"])
    q = LocalChart.from_matrix(FAT, ob, [["1"]], "Q")
    v = RegularEmbeddingData(QX, ["x"])
    r = gysin_commute_check(q, v, ClosedSubstack([(q, ["x*y1"])]), RingMap.inclusion(QX, FAT))
    assert r.agree and r.chi_left == r.chi_right


def test_commute_rank_zero():
    z = FpModule.zero(QX)
    q = LocalChart(QX, z, [], "Q")
    a = ClosedSubstack([(q, ["x^2"])])
    v = RegularEmbeddingData(QX, ["x"])
    r = gysin_commute_check(q, v, a)
    assert r.agree and r.chi_left == regular_gysin(v, FpModule.cyclic(QX, ["x^2"])).euler()


# -- K-classes --------------------------------------------------------------------------------

def test_kclass_strengths():
    pt = FpModule.cyclic(QX, ["x"])
    fat = FpModule.cyclic(QX, ["x^2"])
    seq = KClass([KTerm(1, fat)], [(pt, fat, pt)])
    parts = KClass([KTerm(2, pt)])
    assert not seq.equals(parts, "syntactic")
    assert seq.equals(parts, "witnessed")
    a = KClass([KTerm(1, FpModule.cyclic(QX, ["x^2"]))])
    b = KClass([KTerm(2, pt)])
    assert a.equals(b, "invariant") and not a.equals(b, "syntactic")
    assert twist(b, 3).euler() == 6


@settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(1, 3), st.integers(1, 3))
def test_split_sequences_additive(a, b):
    q = fat_chart()
    e = q.total
    m1, m2 = FpModule.cyclic(e, [f"y1^{a}"]), FpModule.cyclic(e, [f"y1^{b}", "x"])
    s = m1.direct_sum(m2)
    r = ses_additivity_check(q, mp(m1, s, [["1"], ["0"]]), mp(s, m2, [["0", "1"]]))
    assert r.ok
