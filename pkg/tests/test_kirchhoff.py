import numpy as np
import pytest

from ohdnet.currents import free_current
from ohdnet.kirchhoff import (KirchhoffError, accumulation, cut_accumulation, cycle_voltage, energy,
                              find_positive_cycle, flow_report, fundamental_cycles, is_non_elusive, k2_residuals)
from ohdnet.network import DirectedEdge, EdgeFunction, Network
from oracles import positive_cycles_through, random_network


def random_cycle(rng, net):
    """Simple cycle from a non-backtracking random walk, as DirectedEdges."""
    while True:
        v = net.vertices[int(rng.integers(net.n_vertices))]
        path, where, last = [], {v: 0}, None
        for _ in range(4 * net.n_vertices):
            options = [(e, w) for e, w in net.neighbors(v) if e != last]
            if not options:
                break
            e, w = options[int(rng.integers(len(options)))]
            path.append(DirectedEdge(e, v, w))
            if w in where:
                return path[where[w]:]
            where[w] = len(path)
            v, last = w, e


def random_circulation(rng, net, k):
    f = EdgeFunction.zero(net)
    for _ in range(k):
        amount = float(rng.uniform(0.1, 2.0))
        f = f + EdgeFunction.from_mapping(net, {de: amount for de in random_cycle(rng, net)})
    return f


def check_cycle(net, f, e, cycle):
    assert cycle[0] == e
    for a, b in zip(cycle, cycle[1:] + cycle[:1]):
        assert a.head == b.tail
    tails = [de.tail for de in cycle]
    assert len(set(tails)) == len(tails)
    assert all(f(de) > 0 for de in cycle)


def test_accumulation_sign_convention():
    net = Network.from_edge_list([("p", "x", 1.0), ("x", "q", 1.0)])
    f = EdgeFunction.from_mapping(net, {0: 1.0, 1: 1.0})
    assert accumulation(net, f, "p") == -1.0
    assert accumulation(net, f, "q") == 1.0
    assert accumulation(net, f, "x") == 0.0
    rep = flow_report(net, f, "p", "q")
    assert rep.is_flow and rep.intensity == 1.0
    assert cut_accumulation(net, f, {"p"}) == 1.0


def test_cut_accumulation_trivial_cut():
    net = Network.from_edge_list([("p", "q", 1.0)])
    with pytest.raises(KirchhoffError):
        cut_accumulation(net, EdgeFunction.zero(net), ["p", "q"])


def test_cycle_voltage_requires_closed_walk():
    net = Network.from_edge_list([(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)])
    f = EdgeFunction(net, [1.0, 1.0, 1.0])
    cyc = [DirectedEdge(0, 0, 1), DirectedEdge(1, 1, 2), DirectedEdge(2, 2, 0)]
    assert cycle_voltage(net, f, cyc) == pytest.approx(3.0)
    with pytest.raises(KirchhoffError):
        cycle_voltage(net, f, cyc[:2])


@pytest.mark.parametrize("seed", range(5))
def test_fundamental_cycles_count_and_k2(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, 20, 15)
    cycles = fundamental_cycles(net)
    assert len(cycles) == net.n_edges - net.n_vertices + 1
    sol = free_current(net, 0, 19)
    res = k2_residuals(net, sol.flow)
    assert np.abs(res).max() < 1e-10
    for cyc in cycles:
        assert abs(cycle_voltage(net, sol.flow, cyc)) < 1e-10
    # a non-potential flow violates K2 somewhere
    f = random_circulation(rng, net, 1)
    assert np.abs(k2_residuals(net, f)).max() > 1e-3


def test_energy_of_unit_path():
    net = Network.from_edge_list([(0, 1, 2.0), (1, 2, 3.0)])
    f = EdgeFunction(net, [1.0, 1.0])
    assert energy(net, f) == pytest.approx(5.0)


@pytest.mark.parametrize("seed", range(20))
def test_positive_cycle_against_brute_force(seed):
    rng = np.random.default_rng(100 + seed)
    net = random_network(rng, int(rng.integers(4, 13)), int(rng.integers(3, 10)))
    f = random_circulation(rng, net, int(rng.integers(1, 6)))
    nz = np.flatnonzero(np.abs(f.values) > 1e-6)
    if nz.size == 0:
        pytest.skip("cycles cancelled")
    k = int(rng.choice(nz))
    u, v = net.endpoints(net.edge_ids[k])
    e = DirectedEdge(net.edge_ids[k], u, v) if f.values[k] > 0 else DirectedEdge(net.edge_ids[k], v, u)
    cyc = find_positive_cycle(net, f, e)
    check_cycle(net, f, e, cyc)
    brute = positive_cycles_through(net, f, e, tol=1e-8)
    assert brute
    assert any({x.edge for x in cyc} == {x[0] for x in b} for b in brute)


def test_positive_cycle_preconditions():
    net = Network.from_edge_list([(0, 1, 1.0), (1, 2, 1.0)])
    f = EdgeFunction(net, [1.0, 1.0])
    with pytest.raises(KirchhoffError):
        find_positive_cycle(net, f, DirectedEdge(0, 0, 1))
    g = EdgeFunction.zero(net)
    with pytest.raises(KirchhoffError):
        find_positive_cycle(net, g, DirectedEdge(0, 0, 1))


def test_non_elusive():
    rng = np.random.default_rng(5)
    net = random_network(rng, 15, 10)
    sol = free_current(net, 0, 14)
    assert is_non_elusive(net, sol.flow, 0, 14).ok
    bad = sol.flow + EdgeFunction.from_mapping(net, {net.edge_ids[0]: 0.3})
    rep = is_non_elusive(net, bad, 0, 14)
    assert not rep.ok and rep.violations
