import math

import pytest

from ohdnet import families
from ohdnet.families import (FAMILIES, FamilyError, LadderSpec, Series, UndecidableError, build, counterexample_N2,
                             from_spec, ladder, ladder_ohd_closed_form)


def test_series_sums():
    assert Series.constant(1.0).sum_converges() is False
    assert Series.geometric(1, 0.5).sum_converges() is True
    assert Series.geometric(1, 0.5).total() == pytest.approx(2.0)
    assert Series.geometric(1, 2).sum_converges() is False
    assert Series.power(1, 2).sum_converges() is True
    assert Series.power(1, 1).sum_converges() is False
    assert Series.geometric(1, 2).reciprocal().sum_converges() is True
    s = Series.prefix([5.0, 7.0], Series.constant(1.0))
    assert [s(i) for i in range(4)] == [5.0, 7.0, 1.0, 1.0]


def test_series_dict_round_trip():
    for s in (Series.constant(2.0), Series.geometric(0.25, 0.5), Series.power(3, 1.5),
              Series.prefix([1.0], Series.geometric(1, 2))):
        t = Series.from_dict(s.to_dict())
        assert [t(i) for i in range(6)] == pytest.approx([s(i) for i in range(6)])


def test_custom_tail_undecidable():
    s = Series.prefix([1.0, 0.5, 0.25])
    with pytest.raises(UndecidableError):
        s.sum_converges()


def test_closed_form_trichotomy():
    cf = ladder_ohd_closed_form(families.UNIT_LADDER)
    assert cf.in_ohd and "rung" in cf.reason
    cf = ladder_ohd_closed_form(families.GEOMETRIC_LADDER)
    assert cf.in_ohd is False
    cf = ladder_ohd_closed_form(families.GEOMETRIC_UNIT_SIDE)
    assert cf.in_ohd and "side" in cf.reason


def test_ladder_structure():
    ex = build("ladder:unit")
    net = ex.truncate_free(2)
    assert set(net.vertices) == {"a1", "b1", "a2", "b2"}
    assert set(net.edge_ids) == {"a1-b1", "a2-b2", "a1-a2", "b1-b2"}
    ex = ladder(LadderSpec(Series.geometric(1, 2), Series.constant(3.0), Series.constant(5.0)))
    net = ex.truncate_free(3)
    assert net.resistance_of("a3-b3") == 4.0
    assert net.resistance_of("a1-a2") == 3.0
    assert net.resistance_of("b2-b3") == 5.0


def test_grid_and_tree_shapes():
    assert build("grid:2").truncate_free(2).n_vertices == 5
    assert build("grid:3").truncate_free(2).n_vertices == 7
    assert build("btree:unit").truncate_free(1).n_vertices == 1
    assert build("btree:unit").truncate_free(4).n_vertices == 15


@pytest.mark.parametrize("name", FAMILIES)
def test_registry_truncations_nested_and_connected(name):
    ex = build(name)
    limit = min(12, ex.info.get("max_n", 12))
    prev = set()
    for n in range(1, limit + 1):
        net = ex.truncate_free(n)
        assert net.is_connected()
        assert prev <= set(net.vertices)
        prev = set(net.vertices)


def test_large_ladder_nested():
    ex = build("ladder:geometric")
    assert ex.truncate_free(1000).n_vertices == 2000
    assert ex.truncate_free(1000).is_connected()


def test_counterexamples_label_S():
    n1 = build("n1")
    S = n1.info["S"]
    assert S("a2-b2") and not S("a1-b1") and not S("a1-a2")
    assert n1.info["S_conductance_converges"] is False
    n2 = build("n2")
    assert n2.info["S_conductance_converges"] is False
    hs = [e for e in n2.truncate_free(4).edge_ids if n2.info["S"](e)]
    assert hs
    with pytest.raises(FamilyError):
        counterexample_N2(Series.geometric(1, 0.5))


def test_n2_effective_rung_conductance():
    ex = build("n2")
    net = ex.truncate_free(8)
    for m in range(5):
        for off, side in enumerate("ab"):
            i = 2 * m + off
            ends = {f"{side}{m + 1}", f"{side}{m + 2}"}
            hs = [1 / r for e, u, v, r in net.edges() if {u, v} == ends and ex.info["S"](e)]
            assert sum(hs) >= 2.0 ** i


def test_from_spec():
    ex = from_spec('{"family": "ladder", "rungs": {"kind": "geometric", "a": 1, "q": 2}, "side1": 1, "side2": 1}')
    assert ex.info["ohd"].in_ohd
    assert from_spec({"family": "grid", "d": 2}).truncate_free(2).n_vertices == 5
    with pytest.raises(FamilyError):
        from_spec({"family": "nope"})
    with pytest.raises(FamilyError):
        build("nope")


def test_summable_ladder_total_resistance():
    ex = build("ladder:summable")
    net = ex.truncate_free(60)
    assert math.fsum(net.resistance) <= ex.info["total_resistance"] + 1e-12


def test_double_ray_truncation_is_path():
    ex = build("dray:unit")
    for n in (1, 2, 5):
        net = ex.truncate_free(n)
        assert net.n_edges == 2 * (n - 1)
    assert build("ladder:unit").truncate_free(1).edge_ids == ("a1-b1",)
