"""Finite separating subgraphs around an edge and the bounds they give."""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .exhaustion import Exhaustion
from .network import Network, NetworkError, Potential
from .solvers import CONTRAST_LIMIT, contrast, effective_resistance_elimination, effective_resistances

log = logging.getLogger(__name__)


class BarricadeError(NetworkError):
    pass


@dataclass(frozen=True)
class BarricadeComponent:
    vertices: frozenset
    edges: frozenset
    boundary: frozenset
    """Vertices of this component adjacent to the barricaded area."""


@dataclass(frozen=True)
class Barricade:
    vertices: frozenset
    edges: frozenset
    anchor: object
    """Edge id the barricade surrounds."""
    area: frozenset
    """Vertex set of the component of ``G - S`` containing the anchor."""
    boundary: frozenset
    components: tuple
    certified: bool = False


@dataclass
class BarricadeCheck:
    ok: bool
    area: frozenset = frozenset()
    boundary: frozenset = frozenset()
    components: tuple = ()
    violations: list = field(default_factory=list)


def _adjacency(net: Network):
    adj: dict = {v: [] for v in net.vertices}
    for eid, u, v, _ in net.edges():
        adj[u].append((eid, v))
        adj[v].append((eid, u))
    return adj


def _components(vertices: set, adj_fn) -> list[set]:
    left = set(vertices)
    comps = []
    while left:
        start = left.pop()
        comp = {start}
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for w in adj_fn(x):
                if w in left:
                    left.discard(w)
                    comp.add(w)
                    queue.append(w)
        comps.append(comp)
    return comps


def is_barricade(net: Network, S_vertices: Iterable, S_edges: Iterable, e, frontier: Iterable = ()) -> BarricadeCheck:
    """Check both barricade requirements inside a finite truncation.

    Components of the truncation that contain a ``frontier`` vertex stand in
    for infinite components.
    """
    Sv = frozenset(S_vertices)
    Se = frozenset(S_edges)
    frontier = frozenset(frontier)
    if e in Se:
        raise BarricadeError(f"the anchor edge {e!r} belongs to S")
    for x in Se:
        u, v = net.endpoints(x)
        if u not in Sv or v not in Sv:
            raise BarricadeError(f"edge {x!r} of S has an endpoint outside S")
    eu, ev = net.endpoints(e)
    if eu in Sv or ev in Sv:
        raise BarricadeError(f"the anchor edge {e!r} touches S")
    adj = _adjacency(net)
    # requirement 1: the component of G - S containing e is finite
    area = {eu}
    queue = deque([eu])
    while queue:
        x = queue.popleft()
        for _, w in adj[x]:
            if w not in Sv and w not in area:
                area.add(w)
                queue.append(w)
    area = frozenset(area)
    violations = []
    if area & frontier:
        violations.append("requirement 1: the component containing the anchor reaches the truncation frontier")
    boundary = frozenset(w for x in area for _, w in adj[x] if w not in area)
    # requirement 2: S meets every component of G - A in a connected set
    s_adj: dict = {v: [] for v in Sv}
    for x in Se:
        u, v = net.endpoints(x)
        s_adj[u].append(v)
        s_adj[v].append(u)
    rest = set(net.vertices) - area
    comps_out = []
    for K in _components(rest, lambda x: (w for _, w in adj[x])):
        SK = Sv & K
        if not SK:
            continue
        pieces = _components(SK, lambda x: (w for w in s_adj[x] if w in K))
        if len(pieces) > 1:
            violations.append(f"requirement 2: S splits into {len(pieces)} pieces inside one component of G - A")
        for piece in pieces:
            edges = frozenset(x for x in Se if net.endpoints(x)[0] in piece)
            comps_out.append(BarricadeComponent(frozenset(piece), edges, frozenset(piece) & boundary))
    stray = Sv - rest
    if stray:
        violations.append("S meets the barricaded area")
    return BarricadeCheck(not violations, area, boundary, tuple(comps_out), violations)


def _connect_inside(K: set, pieces: list[set], adj) -> set | None:
    """Vertices of ``K`` joining all ``pieces`` by shortest paths, or None."""
    joined = set(pieces[0])
    extra: set = set()
    remaining = [set(p) for p in pieces[1:]]
    while remaining:
        targets = set().union(*remaining)
        parent = {x: None for x in joined}
        queue = deque(joined)
        hit = None
        while queue and hit is None:
            x = queue.popleft()
            for _, w in adj[x]:
                if w in K and w not in parent:
                    parent[w] = x
                    if w in targets:
                        hit = w
                        break
                    queue.append(w)
        if hit is None:
            return None
        x = parent[hit]
        while x is not None and x not in joined:
            extra.add(x)
            x = parent[x]
        for p in remaining:
            if hit in p:
                joined |= p
                remaining.remove(p)
                break
        joined |= extra
    return extra


@dataclass
class BarricadeSearch:
    barricades: list
    n: int
    """Truncation index used."""
    complete: bool
    """False when fewer than the requested number were found."""


def find_barricades(ex: Exhaustion, e, count: int, n: int | None = None, n_limit: int = 4096) -> BarricadeSearch:
    """Pairwise edge-disjoint barricades around ``e``, grown outward from it.

    Each step takes the vertex neighbourhood of the current area, joins its
    pieces inside every outer component by shortest paths, and then absorbs the
    barricade and any finite pockets into the area.
    """
    if count <= 0:
        return BarricadeSearch([], n or 1, True)
    if n is None:
        n = max(4, 2 * count + 2)
    best: list = []
    while True:
        found = _grow(ex, e, count, n)
        if len(found) >= count:
            return BarricadeSearch(found[:count], n, True)
        best = found
        if 2 * n > n_limit or ex.info.get("max_n", n_limit) < 2 * n:
            log.warning("found only %d of %d barricades around %r", len(best), count, e)
            return BarricadeSearch(best, n, False)
        n *= 2


def _grow(ex: Exhaustion, e, count: int, n: int) -> list[Barricade]:
    net = ex.truncate_free(n)
    if e not in net.edge_index:
        raise BarricadeError(f"edge {e!r} is not in V_{n}")
    frontier = ex.frontier(n)
    adj = _adjacency(net)
    area = set(net.endpoints(e))
    if area & frontier:
        return []
    out = []
    while len(out) < count:
        ring = {w for x in area for _, w in adj[x] if w not in area}
        if not ring or ring & frontier:
            break
        rest = set(net.vertices) - area
        S = set(ring)
        failed = False
        for K in _components(rest, lambda x: (w for _, w in adj[x])):
            SK = ring & K
            if not SK:
                continue
            pieces = _components(SK, lambda x: (w for _, w in adj[x] if w in SK))
            if len(pieces) > 1:
                extra = _connect_inside(K, pieces, adj)
                if extra is None or extra & frontier:
                    failed = True
                    break
                S |= extra
        if failed:
            break
        S_edges = frozenset(eid for eid, u, v, _ in net.edges() if u in S and v in S)
        check = is_barricade(net, S, S_edges, e, frontier)
        if not check.ok:
            log.debug("candidate barricade rejected: %s", check.violations)
            break
        out.append(Barricade(frozenset(S), S_edges, e, check.area, check.boundary, check.components, True))
        grown = area | S
        for P in _components(set(net.vertices) - grown, lambda x: (w for _, w in adj[x])):
            if not P & frontier:
                grown |= P
        area = grown
    return out


# -- measurements ---------------------------------------------------------------------


def _component_network(net: Network, comp: BarricadeComponent) -> Network:
    return net.edge_subnetwork(comp.edges, comp.vertices)


def wrd(net: Network, comp: BarricadeComponent) -> float:
    """Largest effective resistance inside the component between two of its boundary vertices.

    Zero when fewer than two boundary vertices exist.
    """
    bnd = sorted(comp.boundary, key=repr)
    if len(bnd) < 2:
        return 0.0
    sub = _component_network(net, comp)
    if not sub.is_connected():
        raise BarricadeError("barricade component is not connected")
    idx = [sub.index[v] for v in bnd]
    if contrast(sub) > CONTRAST_LIMIT:
        return max(effective_resistance_elimination(sub, a, b) for i, a in enumerate(idx) for b in idx[i + 1:])
    return float(effective_resistances(sub, idx).max())


def diameter(net: Network, comp: BarricadeComponent) -> int:
    """Graph diameter (hop count) of the component."""
    sub = _component_network(net, comp)
    adj = _adjacency(sub)
    best = 0
    for s in sub.vertices:
        dist = {s: 0}
        queue = deque([s])
        while queue:
            x = queue.popleft()
            for _, w in adj[x]:
                if w not in dist:
                    dist[w] = dist[x] + 1
                    queue.append(w)
        best = max(best, max(dist.values()))
    return best


def barricade_wrd(net: Network, b: Barricade) -> tuple[float, int]:
    """Sum of component weak diameters and the number of components with none."""
    vals = [wrd(net, c) for c in b.components]
    return math.fsum(vals), sum(1 for v in vals if v == 0)


def barricade_diameter(net: Network, b: Barricade) -> int:
    return sum(diameter(net, c) for c in b.components)


def barricade_voltage(h: Potential, b: Barricade) -> float:
    """Sum over components of the spread of ``h`` on the component boundary."""
    total = 0.0
    for c in b.components:
        vals = [h[v] for v in c.boundary]
        if vals:
            total += max(vals) - min(vals)
    return total


def restricted_energy(net: Network, h: Potential, b: Barricade) -> float:
    """Energy of ``h`` on the edges of the barricade."""
    idx = [net.edge_index[x] for x in b.edges]
    if not idx:
        return 0.0
    hv = np.array([h[v] for v in net.vertices]) if h.vertices != net.vertices else h.values
    k = np.asarray(idx)
    d = hv[net.tail[k]] - hv[net.head[k]]
    return float(np.dot(net.conductance[k], d * d))


@dataclass
class BarricadeVerdict:
    certified: bool
    conclusion: str
    rows: list
    """Dicts with ``index, wRD, diam, voltage, partial_sum``."""
    flagged: list
    """Indices of barricades with a component lacking two boundary vertices."""


def satz_check(ex: Exhaustion, e, barricades: Sequence[Barricade], n: int,
               closed_form: bool | None = None, wrd_bound: float | None = None,
               h: Potential | None = None) -> BarricadeVerdict:
    """Partial sums of ``1 / wRD`` over the barricades, certified by a closed form when available.

    ``closed_form`` states that the full series diverges (``ex.info`` can
    supply it). ``wrd_bound`` is a uniform bound on ``wRD`` such as the total
    resistance of a network with summable resistances; with infinitely many
    barricades it forces divergence.
    """
    if closed_form is None:
        closed_form = ex.info.get("wrd_sum_diverges")
    if wrd_bound is None:
        wrd_bound = ex.info.get("total_resistance")
    net = ex.truncate_free(n)
    rows = []
    flagged = []
    partial = 0.0
    seen_edges: set = set()
    for i, b in enumerate(barricades):
        if not b.certified:
            raise BarricadeError(f"barricade {i} is not certified")
        if b.anchor != e:
            raise BarricadeError(f"barricade {i} surrounds {b.anchor!r}, not {e!r}")
        if b.edges & seen_edges:
            raise BarricadeError(f"barricade {i} shares edges with an earlier one")
        seen_edges |= b.edges
        w, zeros = barricade_wrd(net, b)
        if zeros:
            flagged.append(i)
        if w > 0:
            partial += 1.0 / w
        rows.append({"index": i, "wRD": w, "diam": barricade_diameter(net, b),
                     "voltage": barricade_voltage(h, b) if h is not None else float("nan"),
                     "partial_sum": partial})
    certified = False
    if closed_form:
        certified = True
    elif wrd_bound is not None and rows and all(r["wRD"] <= wrd_bound * (1 + 1e-12) for r in rows):
        certified = True
    conclusion = ("every non-elusive harmonic function of finite energy is constant" if certified
                  else "partial sums only; divergence not certified")
    return BarricadeVerdict(certified, conclusion, rows, flagged)


def reuse_barricades(ex: Exhaustion, barricades: Sequence[Barricade], f, n: int) -> list[Barricade]:
    """Barricades around ``e`` that also surround another edge ``f``.

    Drops those meeting a shortest path from ``e`` to ``f`` and re-checks the
    rest with ``f`` as anchor.
    """
    if not barricades:
        return []
    net = ex.truncate_free(n)
    frontier = ex.frontier(n)
    adj = _adjacency(net)
    start = net.endpoints(barricades[0].anchor)[0]
    goal = net.endpoints(f)
    parent = {start: None}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        if x in goal:
            break
        for _, w in adj[x]:
            if w not in parent:
                parent[w] = x
                queue.append(w)
    else:
        raise BarricadeError(f"edge {f!r} is not connected to the anchor in V_{n}")
    path = set(goal)
    while x is not None:
        path.add(x)
        x = parent[x]
    out = []
    for b in barricades:
        if b.vertices & path:
            continue
        check = is_barricade(net, b.vertices, b.edges, f, frontier)
        if check.ok:
            out.append(Barricade(b.vertices, b.edges, f, check.area, check.boundary, check.components, True))
    return out
