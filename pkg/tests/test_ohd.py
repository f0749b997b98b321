import math

import numpy as np
import pytest

from ohdnet import families
from ohdnet.exhaustion import Exhaustion
from ohdnet.network import EdgeFunction, Network, Potential
from ohdnet.kirchhoff import KirchhoffError
from ohdnet.ohd import (IN, NOT_IN, UNDECIDED, PreconditionError, characterization_check, clip_potential,
                        contracted_resistance, cut_criterion, default_pairs, deletion_transfer_check,
                        extract_transient_parts, finite_modification_check, gap_test, small_flow_check)


@pytest.fixture(scope="module")
def geometric():
    ex = families.build("ladder:geometric")
    return ex, gap_test(ex, "a1", "b1", n_max=200)


def test_unit_ladder_gap():
    v = gap_test(families.build("ladder:unit"), "a1", "b1", n_max=200)
    assert v.verdict == IN
    assert v.free.last == pytest.approx(math.sqrt(3) - 1, abs=1e-9)
    assert v.witness.spread < 1e-8


def test_geometric_ladder_gap_frozen(geometric):
    _, v = geometric
    assert v.verdict == NOT_IN
    # frozen from this implementation at n = 200, cross-checked by the elimination backend
    assert v.free.last == pytest.approx(0.763074523863898, rel=1e-9)
    assert v.wired.last == pytest.approx(0.7462825245079873, rel=1e-9)
    assert v.witness.k1_residual < 1e-9
    assert v.witness.energy > 0


def test_gap_undecided_with_short_sweep():
    v = gap_test(families.build("ladder:geometric"), "a1", "b1", n_max=5)
    assert v.verdict == UNDECIDED


def test_gap_rejects_equal_terminals():
    with pytest.raises(PreconditionError):
        gap_test(families.build("ladder:unit"), "a1", "a1")


def test_finite_network_has_no_gap():
    net = Network.from_edge_list([(0, 1, 1.0), (1, 2, 2.0), (2, 0, 1.0), (2, 3, 1.0)])
    ex = Exhaustion.from_network(net, root=0)
    v = gap_test(ex, 0, 3, n_max=3)
    assert v.gap.last == pytest.approx(0.0, abs=1e-12)
    assert v.verdict == IN


def test_default_pairs():
    pairs = default_pairs(families.build("ladder:unit"), [("a1", "a3")])
    assert pairs == [("a1", "b1"), ("a1", "a3")]


def test_extract_sides(geometric):
    ex, v = geometric
    net = ex.truncate_free(50)
    sub = gap_test(ex, "a1", "b1", n_max=50)
    A, B, d = extract_transient_parts(net, sub.witness.potential, d="a1-b1")
    a_side = {x for x in net.vertices if x.startswith("a")}
    b_side = set(net.vertices) - a_side
    assert (A ^ a_side, B ^ b_side) == (set(), set()) or (A ^ b_side, B ^ a_side) == (set(), set())
    assert d.edge == "a1-b1"


def test_extract_errors():
    net = Network.from_edge_list([(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)])
    with pytest.raises(PreconditionError):
        extract_transient_parts(net, Potential.constant(net, 2.0))
    circ = EdgeFunction(net, [1.0, 1.0, 1.0])
    with pytest.raises(KirchhoffError):
        extract_transient_parts(net, circ)


def test_clip_potential_lowers_energy():
    rng = np.random.default_rng(0)
    net = Network.from_edge_list([(i, i + 1, 1.0) for i in range(6)])
    h = Potential(net, rng.normal(size=7))
    a = int(np.argmax(h.values))
    b = int(np.argmin(h.values))
    out = clip_potential(h, a, b, net)
    assert out.values.max() == h[a] and out.values.min() == h[b]
    with pytest.raises(PreconditionError):
        clip_potential(h, b, a)


def test_characterization_geometric():
    ex = families.build("ladder:geometric")
    side1, side2 = ex.info["names"]["side1"], ex.info["names"]["side2"]
    cert = characterization_check(ex, side1, side2, n_max=60)
    assert cert.positive, cert.reasons
    assert cert.transience_A.verdict == cert.transience_B.verdict == "transient"
    assert cert.contracted.extrapolated == pytest.approx(0.5, rel=1e-6)
    assert cert.rho_energy == pytest.approx(2.0, rel=1e-6)
    assert cert.cross_check.verdict == NOT_IN


def test_characterization_unit_fails():
    ex = families.build("ladder:unit")
    cert = characterization_check(ex, ex.info["names"]["side1"], ex.info["names"]["side2"], n_max=40,
                                  cross_validate=False)
    assert not cert.positive
    assert cert.transience_A.verdict != "transient"


def test_characterization_overlap():
    ex = families.build("ladder:unit")
    with pytest.raises(PreconditionError):
        characterization_check(ex, {"a1", "b1"}, {"b1"}, n_max=5)


def test_contracted_resistance_geometric_sides():
    ex = families.build("ladder:geometric")
    vals = contracted_resistance(ex, lambda v: v.startswith("a"), lambda v: v.startswith("b"), [1, 2, 3])
    # rung conductances 1, 1/2, 1/4 in parallel
    assert vals == pytest.approx([1.0, 1 / 1.5, 1 / 1.75])


def test_cut_criterion():
    trees = families.build("trees-joined")
    cut = cut_criterion(trees, {"join"}, lambda v: v[0] == 0, lambda v: v[0] == 1, n_max=16)
    assert cut.verdict == "not-in-O_HD"
    assert cut.conductance == 1.0
    ray = families.build("dray:unit")
    cut = cut_criterion(ray, {"e0"}, lambda v: v <= 0, lambda v: v >= 1, n_max=30)
    assert cut.verdict == "inapplicable"
    geo = families.build("ladder:geometric")
    rung = lambda e: e.startswith("a") and "-b" in e
    with pytest.raises(PreconditionError):
        cut_criterion(geo, rung, "side1", "side2")
    cut = cut_criterion(geo, rung, lambda v: v.startswith("a"), lambda v: v.startswith("b"), n_max=60,
                        f_conductance=2.0)
    assert cut.verdict == "not-in-O_HD"


def test_transfer_checks():
    ex = families.build("ladder:unit")
    rep = finite_modification_check(ex, {"a2-b2": 3.0}, n_max=100)
    assert rep.agree and rep.original[0].verdict == IN
    rep = deletion_transfer_check(ex, {"a3-b3", "a5-b5"}, n_max=100)
    assert rep.agree
    with pytest.raises(PreconditionError):
        deletion_transfer_check(ex, lambda e: e.startswith("a") and "-b" in e)
    with pytest.raises(PreconditionError):
        finite_modification_check(ex, {"a1-b1": 0.0})


def test_small_flow():
    ex = families.build("btree:unit")
    res = small_flow_check(ex, "root", 8, {"e:11"})
    assert res.leak == pytest.approx(0.25, rel=1e-9)
    assert res.ok and res.intensity >= 0.5 - 1e-7
    with pytest.raises(PreconditionError):
        small_flow_check(ex, "root", 8, {"e:1"})
