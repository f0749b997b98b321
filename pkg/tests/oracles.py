"""Independent reference computations used only by the tests."""
import itertools
import math

import networkx as nx
import numpy as np

from ohdnet.network import Network


def random_network(rng, n_vertices, extra_edges, r_lo=0.1, r_hi=10.0, parallel=True):
    """Connected random multigraph: a random spanning tree plus extra edges."""
    records = []
    for v in range(1, n_vertices):
        records.append((int(rng.integers(0, v)), v, float(rng.uniform(r_lo, r_hi))))
    for _ in range(extra_edges):
        u, v = (int(x) for x in rng.choice(n_vertices, size=2, replace=False))
        if not parallel and any({u, v} == {a, b} for a, b, _ in records):
            continue
        records.append((u, v, float(rng.uniform(r_lo, r_hi))))
    return Network.from_edge_list(records)


def pinv_resistance(net, p, q):
    """Effective resistance from the Laplacian pseudo-inverse."""
    L = net.laplacian().toarray()
    Lp = np.linalg.pinv(L)
    i, j = net.index[p], net.index[q]
    return float(Lp[i, i] + Lp[j, j] - 2 * Lp[i, j])


def networkx_resistance(net, p, q):
    g = nx.Graph()
    for _, u, v, r in net.edges():
        c = g[u][v]["c"] if g.has_edge(u, v) else 0.0
        g.add_edge(u, v, c=c + 1.0 / r)
    return float(nx.resistance_distance(g, p, q, weight="c", invert_weight=False))


def positive_cycles_through(net, f, de, tol=0.0):
    """All simple directed cycles along which f is strictly positive and that use ``de``."""
    out = []
    pos = {}
    for i, (eid, u, v, _) in enumerate(net.edges()):
        x = f.values[i]
        if x > tol:
            pos.setdefault(u, []).append((eid, v))
        elif x < -tol:
            pos.setdefault(v, []).append((eid, u))
    start, goal = de.head, de.tail

    def dfs(x, seen, path):
        if x == goal:
            out.append([de] + list(path))
            return
        for eid, w in pos.get(x, []):
            if w in seen or eid == de.edge:
                continue
            path.append((eid, x, w))
            seen.add(w)
            dfs(w, seen, path)
            seen.discard(w)
            path.pop()

    dfs(start, {start}, [])
    return out


def series(*rs):
    return math.fsum(rs)


def parallel(*rs):
    return 1.0 / math.fsum(1.0 / r for r in rs)


def grid_projection(net, upper, a, I, unconstrained=(), coarse=0.05, fine=1e-3):
    """Brute-force least energy over a box grid, refined coarse to fine around the best point."""
    m = net.n_edges
    ub = np.abs(upper.values)
    sgn = np.where(upper.values >= 0, 1.0, -1.0)
    cons = [v for v in net.vertices if v not in set(unconstrained)]
    rows = []
    for v in cons:
        row = np.zeros(m)
        for i, (_, t, h, _) in enumerate(net.edges()):
            if h == v:
                row[i] += sgn[i]
            if t == v:
                row[i] -= sgn[i]
        rows.append(row)
    A = np.array(rows)
    b = np.array([I if v == a else 0.0 for v in cons])
    lo, hi = np.zeros(m), ub.copy()
    step = coarse
    best = None
    while True:
        axes = [np.unique(np.clip(np.round(np.arange(l, h + step / 2, step) / fine) * fine, 0, u))
                for l, h, u in zip(lo, hi, ub)]
        pts = np.array(list(itertools.product(*axes)))
        ok = np.all(pts @ A.T >= b - 1e-12, axis=1)
        if not ok.any():
            raise ValueError("grid found no feasible point")
        energy = (pts[ok] ** 2) @ net.resistance
        k = int(np.argmin(energy))
        best = (float(energy[k]), pts[ok][k])
        if step <= fine:
            return best
        centre = best[1]
        lo = np.clip(centre - 2 * step, 0, ub)
        hi = np.clip(centre + 2 * step, 0, ub)
        step = max(step / 10, fine)
