import pytest

from ohdnet import families
from ohdnet.barricades import (Barricade, BarricadeComponent, BarricadeError, barricade_diameter, barricade_voltage,
                               barricade_wrd, diameter, find_barricades, is_barricade, restricted_energy,
                               reuse_barricades, satz_check, wrd)
from ohdnet.currents import free_truncation_current
from ohdnet.network import Network, Potential


def column(k):
    return {f"a{k}", f"b{k}"}, {f"a{k}-b{k}"}


@pytest.fixture(scope="module")
def unit_ladder():
    ex = families.build("ladder:unit")
    return ex, ex.truncate_free(12), ex.frontier(12)


def test_column_is_barricade(unit_ladder):
    ex, net, fr = unit_ladder
    S, E = column(4)
    chk = is_barricade(net, S, E, "a1-b1", fr)
    assert chk.ok, chk.violations
    assert chk.area == {f"{s}{k}" for s in "ab" for k in (1, 2, 3)}
    assert chk.boundary == {"a4", "b4"}


def test_column_fails_for_outer_edge(unit_ladder):
    ex, net, fr = unit_ladder
    S, E = column(4)
    chk = is_barricade(net, S, E, "a8-b8", fr)
    assert not chk.ok
    assert any("requirement 1" in v for v in chk.violations)


def test_column_is_minimal(unit_ladder):
    ex, net, fr = unit_ladder
    chk = is_barricade(net, {"b4"}, set(), "a1-b1", fr)
    assert any("requirement 1" in v for v in chk.violations)
    chk = is_barricade(net, {"a4", "b4"}, set(), "a1-b1", fr)
    assert any("requirement 2" in v for v in chk.violations)


def test_anchor_in_S_rejected(unit_ladder):
    ex, net, fr = unit_ladder
    with pytest.raises(BarricadeError):
        is_barricade(net, {"a1", "b1"}, {"a1-b1"}, "a1-b1", fr)


def test_square_ring_in_grid():
    ex = families.build("grid:2")
    net, fr = ex.truncate_free(10), ex.frontier(10)
    k = 2
    ring = {(x, y) for x in range(-k - 1, k + 2) for y in range(-k - 1, k + 2) if max(abs(x), abs(y)) == k + 1}
    edges = {e for e, u, v, _ in net.edges() if u in ring and v in ring}
    chk = is_barricade(net, ring, edges, ((0, 0), 0), fr)
    assert chk.ok, chk.violations
    assert len(chk.area) == (2 * k + 1) ** 2
    assert len(chk.boundary) == len(ring) - 4


def test_find_zero():
    s = find_barricades(families.build("ladder:unit"), "a1-b1", 0)
    assert s.barricades == [] and s.complete


def test_ladder_barricades_are_columns():
    s = find_barricades(families.build("ladder:unit"), "a1-b1", 5)
    assert [set(b.vertices) for b in s.barricades] == [column(k)[0] for k in range(2, 7)]


def test_double_ray_barricades():
    s = find_barricades(families.build("dray:unit"), "e0", 3)
    for k, b in enumerate(s.barricades, start=1):
        assert b.vertices == {-k, k + 1}
        assert len(b.components) == 2
        assert all(len(c.vertices) == 1 for c in b.components)


@pytest.mark.parametrize("name", ["ladder:unit", "grid:2", "n1", "ladder:geometric"])
def test_found_barricades_certified_and_disjoint(name):
    ex = families.build(name)
    e = ex.info.get("default_edge", ((0, 0), 0))
    s = find_barricades(ex, e, 6)
    assert s.complete
    net, fr = ex.truncate_free(s.n), ex.frontier(s.n)
    seen = set()
    for b in s.barricades:
        assert is_barricade(net, b.vertices, b.edges, e, fr).ok
        assert not (b.edges & seen)
        seen |= b.edges


def test_wrd_examples():
    net = Network.from_edge_list([("x", "y", 2.5)])
    assert wrd(net, BarricadeComponent(frozenset("xy"), frozenset({0}), frozenset("xy"))) == pytest.approx(2.5)
    path = Network.from_edge_list([(i, i + 1, 1.0) for i in range(4)])
    comp = BarricadeComponent(frozenset(range(5)), frozenset(range(4)), frozenset({0, 4}))
    assert wrd(path, comp) == pytest.approx(4.0)
    assert diameter(path, comp) == 4
    cyc = Network.from_edge_list([(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)])
    comp = BarricadeComponent(frozenset(range(4)), frozenset(range(4)), frozenset({0, 2}))
    assert wrd(cyc, comp) == pytest.approx(1.0)
    lone = BarricadeComponent(frozenset({0}), frozenset(), frozenset({0}))
    assert wrd(path, lone) == 0.0


def test_voltage_examples():
    net = Network.from_edge_list([(0, 1, 1.0), (2, 3, 1.0)])
    comps = (BarricadeComponent(frozenset({0, 1}), frozenset({0}), frozenset({0, 1})),
             BarricadeComponent(frozenset({2, 3}), frozenset({1}), frozenset({2, 3})))
    b = Barricade(frozenset(range(4)), frozenset({0, 1}), None, frozenset(), frozenset(range(4)), comps, True)
    h = Potential(net, [0.0, 0.3, 1.0, 0.8])
    assert barricade_voltage(h, b) == pytest.approx(0.5)
    assert barricade_voltage(Potential.constant(net, 4.0), b) == 0.0
    assert restricted_energy(net, h, b) == pytest.approx(0.09 + 0.04)


def test_unit_wrd_bounded_by_diameter():
    for name in ("ladder:unit", "grid:2"):
        ex = families.build(name)
        e = ex.info.get("default_edge", ((0, 0), 0))
        s = find_barricades(ex, e, 5)
        net = ex.truncate_free(s.n)
        for b in s.barricades:
            w, _ = barricade_wrd(net, b)
            assert w <= barricade_diameter(net, b) + 1e-12


def test_voltage_decays_on_unit_ladder():
    ex = families.build("ladder:unit")
    s = find_barricades(ex, "a1-b1", 15, n=40)
    h = free_truncation_current(ex, s.n, "a1", "b1").potential
    volts = [barricade_voltage(h, b) for b in s.barricades]
    assert volts[0] > 0
    assert min(volts[:15]) < 1e-6 * volts[0]


def test_satz_variants():
    ex = families.build("n1")
    s = find_barricades(ex, "a1-b1", 10)
    v = satz_check(ex, "a1-b1", s.barricades, s.n)
    assert v.certified
    assert v.rows[-1]["partial_sum"] == pytest.approx(10.0)
    ex = families.build("ladder:summable")
    s = find_barricades(ex, "a1-b1", 10)
    v = satz_check(ex, "a1-b1", s.barricades, s.n, closed_form=False)
    assert v.certified
    assert all(r["wRD"] <= ex.info["total_resistance"] for r in v.rows)
    ex = families.build("ladder:geometric")
    s = find_barricades(ex, "a1-b1", 10)
    v = satz_check(ex, "a1-b1", s.barricades, s.n)
    assert not v.certified
    assert v.rows[-1]["partial_sum"] < 1.0


def test_satz_flags_single_vertex_components():
    ex = families.build("dray:unit")
    s = find_barricades(ex, "e0", 4)
    v = satz_check(ex, "e0", s.barricades, s.n, closed_form=False)
    assert v.flagged == [0, 1, 2, 3]
    assert v.rows[-1]["partial_sum"] == 0.0


def test_satz_rejects_uncertified():
    ex = families.build("ladder:unit")
    s = find_barricades(ex, "a1-b1", 2)
    b = s.barricades[0]
    bad = Barricade(b.vertices, b.edges, b.anchor, b.area, b.boundary, b.components, False)
    with pytest.raises(BarricadeError):
        satz_check(ex, "a1-b1", [bad], s.n)


def test_reuse_for_other_edge():
    ex = families.build("ladder:unit")
    s = find_barricades(ex, "a1-b1", 8)
    other = reuse_barricades(ex, s.barricades, "a3-b3", s.n)
    assert [set(b.vertices) for b in other] == [column(k)[0] for k in range(4, 10)]
    assert all(b.anchor == "a3-b3" for b in other)
