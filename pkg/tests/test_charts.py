import pytest

from vsheaf.algebra import RingMap, RingPresentation
from vsheaf.charts import (ChartError, ChartMorphism, ClosedSubstack, CoherentSheafOnX,
                           LocalChart, SpacePresentation, StructureSheaf, build_roof,
                           comparison_map, glue_koszul, koszul_homology_chart,
                           restrict_chart, roof_comparison, roof_variants)
from vsheaf.homological import FpModule, ModuleMap
from vsheaf.homological.modules import base_change_map

QX = RingPresentation(["x"])
FAT = RingPresentation(["x"], relations=["x^2"])
TWO = RingPresentation(["x"], relations=["x^2 - x"])


def ob_fat():
    return FpModule.cyclic(FAT, ["x"])


# -- restriction ---------------------------------------------------------------------

def test_restrict_by_one_is_isomorphic():
    q = LocalChart.tautological(QX, FpModule.free(QX, 1), "Q")
    r, gamma = restrict_chart(q, "1")
    assert r.rank == 1 and not r.base.is_zero_ring()
    assert comparison_map(gamma, StructureSheaf(), 0).is_isomorphism()


def test_restrict_collapses_idempotent():
    q = LocalChart.tautological(TWO, FpModule.free(TWO, 1), "Q")
    r, _ = restrict_chart(q, "x")
    assert r.base.equal("x", "1")
    assert FpModule.free(r.base, 1).length() == 1


def test_double_restriction_empty():
    q = LocalChart.tautological(TWO, FpModule.free(TWO, 2), "Q")
    r, _ = restrict_chart(q, "x - 1")
    with pytest.raises(ChartError):
        restrict_chart(r, "x")


def test_restrict_by_nilpotent_rejected():
    q = LocalChart.tautological(FAT, FpModule.free(FAT, 1), "Q")
    with pytest.raises(ChartError):
        restrict_chart(q, "x")


def test_restriction_composes():
    q = LocalChart.tautological(QX, FpModule.free(QX, 1), "Q")
    r1, g1 = restrict_chart(q, "x")
    r2, g2 = restrict_chart(r1, "x + 1")
    comp = g1.compose(g2)
    assert comp.target is q and comp.source is r2
    a = ClosedSubstack([(q, ["y1^2 - x*y1"])])
    lhs = comparison_map(comp, a, 0)
    rhs = comparison_map(g2, a, 0).compose(base_change_map(comparison_map(g1, a, 0), g2.rho))
    assert lhs.equals(ModuleMap(lhs.source, lhs.target, rhs.columns, check=False))


# -- roofs ------------------------------------------------------------------------------

def test_symmetric_roof_gives_identity():
    q = LocalChart.from_matrix(QX, FpModule.free(QX, 1), [["1", "x"]], "Q")
    roof = build_roof(q, q)
    assert roof.gamma.r_gamma.source.ngens == roof.chart.rank
    a = ClosedSubstack([(q, ["(y1 + x*y2)^2 - x*(y1 + x*y2)"])])
    for i in range(3):
        h = roof_comparison(roof, a, i)
        assert h.equals(ModuleMap.identity(h.source))


def test_roof_rank_is_fiber_product_generator_count():
    o = FpModule.free(QX, 1)
    q = LocalChart.tautological(QX, o, "Q")
    qp = LocalChart.from_matrix(QX, o, [["1", "x"]], "Q'")
    roof = build_roof(q, qp)
    # E x_F E' has rank 2 and is free here
    assert roof.chart.rank == 2
    assert roof.gamma.triangle_failures() == [] and roof.gamma_prime.triangle_failures() == []


def test_roof_over_zero_sheaf_is_direct_sum():
    z = FpModule.zero(QX)
    q = LocalChart(QX, z, [{}], "Q")
    qp = LocalChart(QX, z, [{}, {}], "Q'")
    assert build_roof(q, qp).chart.rank == 3


def test_roofs_agree_and_survive_restriction():
    o = FpModule.free(QX, 1)
    q = LocalChart.tautological(QX, o, "Q")
    qp = LocalChart.from_matrix(QX, o, [["1", "x"]], "Q'")
    a = ClosedSubstack([(q, ["y1^2 - x*y1"])])
    roofs = roof_variants(q, qp)
    assert len({r.chart.rank for r in roofs}) >= 2
    for i in range(3):
        maps = [roof_comparison(r, a, i) for r in roofs]
        assert all(m.equals(maps[0]) for m in maps)
    # restricting the roof to x != 0 and comparing there commutes with restriction
    rq, gq = restrict_chart(q, "x")
    rqp, gqp = restrict_chart(qp, "x")
    rroof = build_roof(rq, rqp)
    for i in range(2):
        down = roof_comparison(rroof, a, i).compose(comparison_map(gq, a, i))
        across = comparison_map(gqp, a, i).compose(
            base_change_map(roof_comparison(roofs[0], a, i), gq.rho))
        assert down.equals(ModuleMap(down.source, down.target, across.columns, check=False))


# -- Koszul homology on charts ------------------------------------------------------

def test_structure_sheaf_and_zero_section():
    q = LocalChart.tautological(QX, FpModule.free(QX, 2), "Q")
    o = StructureSheaf()
    assert koszul_homology_chart(q, o, 0).module.same_presentation(FpModule.free(QX, 1))
    assert koszul_homology_chart(q, o, 1).module.is_zero()
    zero = ClosedSubstack([(q, ["y1", "y2"])])
    for i, rk in enumerate([1, 2, 1]):
        assert koszul_homology_chart(q, zero, i).module.same_presentation(FpModule.free(QX, rk))


def test_full_cone_over_fat_point():
    q = LocalChart.tautological(FAT, FpModule.free(FAT, 1), "Q")
    a = StructureSheaf()
    assert koszul_homology_chart(q, a, 0).length() == 2
    assert koszul_homology_chart(q, a, 1).module.is_zero()


def test_vanishing_above_rank_is_structural():
    q = LocalChart.from_matrix(FAT, ob_fat(), [["1", "1", "x"]], "Q")
    a = ClosedSubstack([(q, ["x*y1 + x*y2"])])
    h = koszul_homology_chart(q, a, 4)
    assert h.vanishes_structurally and h.module.is_zero()


def test_comparison_along_surjection_is_iso():
    q2 = LocalChart.from_matrix(FAT, ob_fat(), [["1", "x"]], "Q2")
    q1 = LocalChart.from_matrix(FAT, ob_fat(), [["1"]], "Q1")
    gamma = ChartMorphism(q2, q1, RingMap.identity(FAT), [["1", "x"]])
    a = ClosedSubstack([(q1, ["x*y1"])])
    for i in range(2):
        assert comparison_map(gamma, a, i).is_isomorphism()


def test_identity_morphism_gives_identity():
    q = LocalChart.from_matrix(FAT, ob_fat(), [["1"]], "Q")
    a = ClosedSubstack([(q, ["x*y1"])])
    h = comparison_map(ChartMorphism.identity(q), a, 1)
    assert h.equals(ModuleMap.identity(h.source))


def test_functoriality():
    o = FpModule.free(QX, 1)
    q0 = LocalChart.from_matrix(QX, o, [["1", "x", "x^2"]], "Q0")
    q1 = LocalChart.from_matrix(QX, o, [["1", "x"]], "Q1")
    q2 = LocalChart.from_matrix(QX, o, [["1"]], "Q2")
    ident = RingMap.identity(QX)
    g01 = ChartMorphism(q0, q1, ident, [["1", "0", "0"], ["0", "1", "x"]])
    g12 = ChartMorphism(q1, q2, ident, [["1", "x"]])
    a = ClosedSubstack([(q2, ["y1^2 - x*y1"])])
    for i in range(2):
        lhs = comparison_map(g12.compose(g01), a, i)
        rhs = comparison_map(g01, a, i).compose(comparison_map(g12, a, i))
        assert lhs.equals(ModuleMap(lhs.source, lhs.target, rhs.columns, check=False))


# -- gluing ---------------------------------------------------------------------------

def test_glue_single_chart():
    s = SpacePresentation.single(FAT)
    q = LocalChart.from_matrix(s.piece(0), FpModule.cyclic(s.piece(0), ["x"]), [["1"]], "Q")
    g = glue_koszul(s, [q], ClosedSubstack([(q, ["x*y1"])]), 0)
    assert g.length() == 2 and not g.gluing


def test_glue_two_points():
    s = SpacePresentation(TWO, ["x", "1-x"])
    f = CoherentSheafOnX.from_global(s, FpModule.free(TWO, 1))
    charts = [LocalChart.tautological(s.piece(a), f.modules[a], f"Q{a}") for a in range(2)]
    a = ClosedSubstack([(q, ["y1"]) for q in charts])
    assert glue_koszul(s, charts, a, 0).length() == 2
    assert s.overlaps(2) == []


def test_glue_redundant_three_piece_cover():
    s = SpacePresentation(FAT, ["1", "1+x", "1-x"])
    f = CoherentSheafOnX.from_global(s, ob_fat())
    charts = [LocalChart.from_matrix(s.piece(a), f.modules[a], [["1"]], f"Q{a}")
              for a in range(3)]
    a = ClosedSubstack([(q, ["x*y1"]) for q in charts])
    for i in range(2):
        g = glue_koszul(s, charts, a, i)
        assert g.cocycle_failures() == []
        assert all(m.is_isomorphism() for m in g.gluing.values())
        if i == 0:
            # H^0 is generated by 1 on every piece, so the gluing is the identity
            assert all(m.equals(ModuleMap.identity(m.source)) for m in g.gluing.values())


def test_cover_must_generate_unit_ideal():
    with pytest.raises(ChartError):
        SpacePresentation(QX, ["x"])
