"""Kirchhoff laws, energy and flow structure on finite networks."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .network import DirectedEdge, EdgeFunction, Network, NetworkError, Potential
from .solvers import accumulations as _acc_array

DEFAULT_TOL = 1e-8


class KirchhoffError(NetworkError):
    pass


def _check(net: Network, f: EdgeFunction):
    if f.network is not net and f.network.edge_ids != net.edge_ids:
        raise KirchhoffError("edge function belongs to a different network")


def accumulation(net: Network, f: EdgeFunction, v) -> float:
    """Sum of ``f`` over the directed edges ending at ``v``."""
    _check(net, f)
    i = net.vertex_index(v)
    inc = net.incidence()[i]
    vals = f.values[inc]
    sign = np.where(net.head[inc] == i, 1.0, -1.0)
    return float(np.sum(vals * sign))


def accumulations(net: Network, f: EdgeFunction) -> Potential:
    _check(net, f)
    return Potential(net, _acc_array(net, f.values))


def cut_accumulation(net: Network, f: EdgeFunction, X: Iterable) -> float:
    """Net flow from ``X`` to its complement."""
    _check(net, f)
    mask = np.zeros(net.n_vertices, dtype=bool)
    for v in X:
        mask[net.vertex_index(v)] = True
    if not mask.any() or mask.all():
        raise KirchhoffError("cut must be a nonempty proper subset")
    t_in, h_in = mask[net.tail], mask[net.head]
    return float(f.values[t_in & ~h_in].sum() - f.values[h_in & ~t_in].sum())


def cycle_voltage(net: Network, f: EdgeFunction, cycle: Sequence[DirectedEdge]) -> float:
    """``sum r(e) f(e)`` along a closed directed walk."""
    _check(net, f)
    if not cycle:
        raise KirchhoffError("empty walk")
    for a, b in zip(cycle, list(cycle[1:]) + [cycle[0]]):
        if a.head != b.tail:
            raise KirchhoffError(f"walk is not closed between {a!r} and {b!r}")
    total = 0.0
    for de in cycle:
        if de.edge not in net.edge_index:
            raise KirchhoffError(f"edge {de.edge!r} not in network")
        total += net.resistance_of(de.edge) * f(de)
    return total


def energy(net: Network, f: EdgeFunction) -> float:
    _check(net, f)
    return float(np.dot(net.resistance, f.values ** 2))


def inner_product(net: Network, f: EdgeFunction, g: EdgeFunction) -> float:
    _check(net, f)
    _check(net, g)
    return float(np.dot(net.resistance, f.values * g.values))


def potential_energy(net: Network, rho: Potential) -> float:
    """``sum (rho(v) - rho(w))^2 / r(vw)``."""
    if rho.vertices != net.vertices:
        rho = rho.on(net)
    d = rho.values[net.tail] - rho.values[net.head]
    return float(np.dot(net.conductance, d * d))


def _spanning_tree(net: Network, root: int = 0):
    """Parent edge of every vertex in a BFS forest (-1 at roots) and the visiting order."""
    n = net.n_vertices
    parent_edge = np.full(n, -1, dtype=np.int64)
    inc = net.incidence()
    seen = np.zeros(n, dtype=bool)
    order = []
    for start in [root] + list(range(n)):
        if seen[start]:
            continue
        seen[start] = True
        queue = deque([start])
        while queue:
            v = queue.popleft()
            order.append(v)
            for k in inc[v]:
                w = net.head[k] if net.tail[k] == v else net.tail[k]
                if not seen[w]:
                    seen[w] = True
                    parent_edge[w] = k
                    queue.append(w)
    return parent_edge, order


def fundamental_cycles(net: Network) -> list[list[DirectedEdge]]:
    """One directed cycle per non-tree edge of a BFS spanning forest."""
    parent_edge, order = _spanning_tree(net)
    tree = set(parent_edge[parent_edge >= 0].tolist())
    depth = np.zeros(net.n_vertices, dtype=np.int64)
    for v in order:
        k = parent_edge[v]
        if k >= 0:
            u = net.tail[k] if net.head[k] == v else net.head[k]
            depth[v] = depth[u] + 1
    V, ids = net.vertices, net.edge_ids

    def up(v):
        k = parent_edge[v]
        u = int(net.tail[k] if net.head[k] == v else net.head[k])
        return DirectedEdge(ids[k], V[v], V[u]), u

    cycles = []
    for k in range(net.n_edges):
        if k in tree:
            continue
        t, h = int(net.tail[k]), int(net.head[k])
        # walk t -> h along the tree, then close with h -> t over edge k
        left, right = [], []
        a, b = h, t
        while depth[a] > depth[b]:
            de, a = up(a)
            left.append(de)
        while depth[b] > depth[a]:
            de, b = up(b)
            right.append(de)
        while a != b:
            de, a = up(a)
            left.append(de)
            de, b = up(b)
            right.append(de)
        path_t_to_h = right + [de.reversed() for de in reversed(left)]
        # path_t_to_h starts at t and ends at h
        cycles.append(path_t_to_h + [DirectedEdge(ids[k], V[h], V[t])])
    return cycles


def k2_residuals(net: Network, f: EdgeFunction) -> np.ndarray:
    """Voltage around the fundamental cycle of every non-tree edge."""
    _check(net, f)
    volt = net.resistance * f.values  # voltage drop tail -> head
    parent_edge, order = _spanning_tree(net)
    phi = np.zeros(net.n_vertices)
    for v in order:
        k = parent_edge[v]
        if k < 0:
            continue
        if net.head[k] == v:
            phi[v] = phi[net.tail[k]] - volt[k]
        else:
            phi[v] = phi[net.head[k]] + volt[k]
    tree = np.zeros(net.n_edges, dtype=bool)
    tree[parent_edge[parent_edge >= 0]] = True
    res = volt - (phi[net.tail] - phi[net.head])
    return res[~tree]


@dataclass(frozen=True)
class FlowReport:
    worst_k1: float
    """Largest absolute accumulation away from the terminals."""
    accumulations: dict
    intensity: float | None
    """Accumulation at the sink, or None without terminals."""
    is_flow: bool
    terminals: tuple = ()
    handshake: float = 0.0
    """Sum of all accumulations (zero on finite networks up to rounding)."""


def flow_report(net: Network, f: EdgeFunction, p=None, q=None, tol: float = DEFAULT_TOL) -> FlowReport:
    acc = _acc_array(net, f.values)
    mask = np.ones(net.n_vertices, dtype=bool)
    terminals = tuple(x for x in (p, q) if x is not None)
    for x in terminals:
        mask[net.vertex_index(x)] = False
    worst = float(np.abs(acc[mask]).max()) if mask.any() else 0.0
    intensity = None
    ok = worst < tol
    if p is not None and q is not None:
        ap, aq = acc[net.vertex_index(p)], acc[net.vertex_index(q)]
        intensity = float(aq)
        ok = ok and abs(ap + aq) < tol * max(1.0, abs(aq))
    return FlowReport(worst, dict(zip(net.vertices, acc.tolist())), intensity, bool(ok), terminals,
                      float(acc.sum()))


def find_positive_cycle(net: Network, f: EdgeFunction, e: DirectedEdge, tol: float = DEFAULT_TOL) -> list[DirectedEdge]:
    """A directed cycle through ``e`` on which ``f`` is strictly positive.

    ``f`` must be a flow of intensity zero and positive on ``e``. Starting at
    the head of ``e`` the search marks every vertex reachable along edges
    with positive value; the tail of ``e`` is always among them, since
    otherwise the marked set would lose flow across its boundary.
    """
    _check(net, f)
    acc = _acc_array(net, f.values)
    bad = np.flatnonzero(np.abs(acc) >= tol)
    if bad.size:
        v = net.vertices[bad[0]]
        raise KirchhoffError(f"not a circulation: accumulation {acc[bad[0]]:.3g} at {v!r}")
    fe = f(e)
    if not fe > 0:
        raise KirchhoffError(f"f({e!r}) = {fe:.3g} is not positive")
    V = net.vertices
    start, goal = net.vertex_index(e.head), net.vertex_index(e.tail)
    inc = net.incidence()
    parent: dict[int, tuple[int, int]] = {start: (-1, -1)}
    queue = deque([start])
    vals = f.values
    while queue and goal not in parent:
        v = queue.popleft()
        for k in inc[v]:
            if net.tail[k] == v:
                w, val = int(net.head[k]), vals[k]
            else:
                w, val = int(net.tail[k]), -vals[k]
            if val > 0 and w not in parent:
                parent[w] = (v, int(k))
                queue.append(w)
    if goal not in parent:
        raise RuntimeError("positive-cycle search failed although preconditions hold")
    path = []
    v = goal
    while v != start:
        u, k = parent[v]
        path.append(DirectedEdge(net.edge_ids[k], V[u], V[v]))
        v = u
    path.reverse()
    return [e] + path


@dataclass
class NonElusiveReport:
    ok: bool
    checked: int
    violations: list = field(default_factory=list)
    """``(description, accumulation)`` for each failing cut."""


def is_non_elusive(net: Network, f: EdgeFunction, p, q, tol: float = DEFAULT_TOL,
                   cuts: Iterable[Iterable] | None = None, n_random: int = 64, seed: int = 0,
                   exempt: Iterable = ()) -> NonElusiveReport:
    """Check that no finite cut with ``p`` and ``q`` on one side carries flow.

    Single vertices, the supplied ``cuts`` (for instance exhaustion layers) and
    ``n_random`` seeded random vertex sets are tested. Vertices in ``exempt``
    (such as a wired boundary vertex standing for infinity) are never put
    inside a tested set.
    """
    _check(net, f)
    exempt = {net.vertex_index(x) for x in exempt}
    ip, iq = net.vertex_index(p), net.vertex_index(q)
    acc = _acc_array(net, f.values)
    report = NonElusiveReport(True, 0)
    for i in range(net.n_vertices):
        if i in (ip, iq) or i in exempt:
            continue
        report.checked += 1
        if abs(acc[i]) >= tol:
            report.violations.append((f"vertex {net.vertices[i]!r}", float(acc[i])))

    def test(mask, label):
        if not mask.any() or mask.all():
            return
        if mask[ip] != mask[iq]:
            return
        inside = mask if not mask[ip] else ~mask
        if any(inside[x] for x in exempt):
            inside = ~inside if not any((~inside)[x] for x in exempt) else None
            if inside is None:
                return
        report.checked += 1
        val = float(acc[inside].sum())
        if abs(val) >= tol * max(1, inside.sum()):
            report.violations.append((label, val))

    for j, cut in enumerate(cuts or ()):
        mask = np.zeros(net.n_vertices, dtype=bool)
        for v in cut:
            if v in net.index:
                mask[net.index[v]] = True
        test(mask, f"cut {j}")
    rng = np.random.default_rng(seed)
    for j in range(n_random):
        test(rng.random(net.n_vertices) < rng.uniform(0.1, 0.9), f"random cut {j}")
    report.ok = not report.violations
    return report
