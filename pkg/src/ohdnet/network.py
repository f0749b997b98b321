"""Finite resistive multigraphs and the functions living on them.

A :class:`Network` is immutable. Vertices are arbitrary hashable labels; every
edge carries a stable, hashable id, a reference orientation ``tail -> head`` and
a strictly positive resistance. Parallel edges are allowed, self-loops are
dropped on construction.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from typing import Hashable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components

log = logging.getLogger(__name__)

Vertex = Hashable
EdgeId = Hashable


class NetworkError(ValueError):
    pass


class _WiredBoundary:
    """The vertex that collapses everything outside a truncation."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "∞"

    __str__ = __repr__

    def __reduce__(self):
        return (_WiredBoundary, ())


INFINITY = _WiredBoundary()


class DirectedEdge(NamedTuple):
    edge: EdgeId
    tail: Vertex
    head: Vertex

    def reversed(self) -> "DirectedEdge":
        return DirectedEdge(self.edge, self.head, self.tail)


def _readonly(a):
    a.setflags(write=False)
    return a


class Network:
    """Locally finite network restricted to finitely many vertices.

    Args:
        edges: iterable of ``(edge_id, u, v, resistance)``.
        vertices: optional explicit vertex order; isolated vertices are only
            kept when listed here.
    """

    def __init__(self, edges: Iterable[tuple] = (), vertices: Iterable[Vertex] | None = None):
        verts: dict = {}
        if vertices is not None:
            for v in vertices:
                verts.setdefault(v, len(verts))
        ids, tails, heads, res = [], [], [], []
        for eid, u, v, r in edges:
            if u == v:
                log.warning("dropping self-loop %r at %r", eid, u)
                continue
            for w in (u, v):
                if w not in verts:
                    if vertices is not None:
                        raise NetworkError(f"edge {eid!r} references unknown vertex {w!r}")
                    verts[w] = len(verts)
            ids.append(eid)
            tails.append(verts[u])
            heads.append(verts[v])
            res.append(float(r))
        self._init(
            tuple(verts),
            tuple(ids),
            np.asarray(tails, dtype=np.int64),
            np.asarray(heads, dtype=np.int64),
            np.asarray(res, dtype=float),
            index=verts,
        )

    @classmethod
    def from_edge_list(cls, records: Iterable[tuple], vertices=None) -> "Network":
        """Build from ``(tail, head, resistance)`` records; edge ids are 0, 1, ..."""
        return cls(((i, u, v, r) for i, (u, v, r) in enumerate(records)), vertices)

    @classmethod
    def _from_arrays(cls, vertices, edge_ids, tail, head, resistance) -> "Network":
        net = cls.__new__(cls)
        net._init(tuple(vertices), tuple(edge_ids), np.asarray(tail, dtype=np.int64),
                  np.asarray(head, dtype=np.int64), np.asarray(resistance, dtype=float))
        return net

    def _init(self, vertices, edge_ids, tail, head, resistance, index=None):
        if len(edge_ids) != len(tail) or len(tail) != len(head) or len(head) != len(resistance):
            raise NetworkError("edge arrays have inconsistent lengths")
        if np.any(tail == head):
            keep = tail != head
            log.warning("dropping %d self-loop(s)", int((~keep).sum()))
            edge_ids = tuple(e for e, k in zip(edge_ids, keep) if k)
            tail, head, resistance = tail[keep], head[keep], resistance[keep]
        if resistance.size and not (np.all(resistance > 0) and np.all(np.isfinite(resistance))):
            bad = [e for e, r in zip(edge_ids, resistance) if not (r > 0 and math.isfinite(r))]
            raise NetworkError(f"resistances must be positive and finite: {bad[:5]!r}")
        self.vertices = vertices
        self.index = index if index is not None else {v: i for i, v in enumerate(vertices)}
        if len(self.index) != len(vertices):
            raise NetworkError("duplicate vertex labels")
        self.edge_ids = edge_ids
        self.edge_index = {e: i for i, e in enumerate(edge_ids)}
        if len(self.edge_index) != len(edge_ids):
            raise NetworkError("duplicate edge ids")
        self.tail = _readonly(tail)
        self.head = _readonly(head)
        self.resistance = _readonly(resistance)
        self.conductance = _readonly(1.0 / resistance)
        self._incidence = None

    # -- basic queries -------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edge_ids)

    def __contains__(self, v) -> bool:
        return v in self.index

    def __repr__(self):
        return f"Network({self.n_vertices} vertices, {self.n_edges} edges)"

    def edges(self):
        """Iterate ``(edge_id, tail, head, resistance)`` in storage order."""
        V = self.vertices
        for eid, t, h, r in zip(self.edge_ids, self.tail.tolist(), self.head.tolist(), self.resistance.tolist()):
            yield eid, V[t], V[h], r

    def endpoints(self, edge: EdgeId) -> tuple[Vertex, Vertex]:
        i = self.edge_index[edge]
        return self.vertices[self.tail[i]], self.vertices[self.head[i]]

    def resistance_of(self, edge: EdgeId) -> float:
        return float(self.resistance[self.edge_index[edge]])

    def reference(self, edge: EdgeId) -> DirectedEdge:
        t, h = self.endpoints(edge)
        return DirectedEdge(edge, t, h)

    def vertex_index(self, v: Vertex) -> int:
        try:
            return self.index[v]
        except KeyError:
            raise NetworkError(f"unknown vertex {v!r}") from None

    def incidence(self) -> list[np.ndarray]:
        """Edge indices incident to each vertex index."""
        if self._incidence is None:
            n = self.n_vertices
            ends = np.concatenate([self.tail, self.head])
            order = np.argsort(ends, kind="stable")
            edge_of = np.concatenate([np.arange(self.n_edges)] * 2)[order]
            bounds = np.searchsorted(ends[order], np.arange(n + 1))
            self._incidence = [edge_of[bounds[i]:bounds[i + 1]] for i in range(n)]
        return self._incidence

    def neighbors(self, v: Vertex) -> list[tuple[EdgeId, Vertex]]:
        i = self.vertex_index(v)
        out = []
        for k in self.incidence()[i]:
            other = self.head[k] if self.tail[k] == i else self.tail[k]
            out.append((self.edge_ids[k], self.vertices[other]))
        return out

    def degree(self, v: Vertex) -> int:
        return len(self.incidence()[self.vertex_index(v)])

    def adjacency(self) -> csr_matrix:
        n = self.n_vertices
        ones = np.ones(self.n_edges)
        A = coo_matrix((np.r_[ones, ones], (np.r_[self.tail, self.head], np.r_[self.head, self.tail])), shape=(n, n))
        return A.tocsr()

    def laplacian(self) -> csr_matrix:
        n, c = self.n_vertices, self.conductance
        t, h = self.tail, self.head
        L = coo_matrix((np.r_[c, c, -c, -c], (np.r_[t, h, t, h], np.r_[t, h, h, t])), shape=(n, n))
        return L.tocsr()

    def component_labels(self) -> tuple[int, np.ndarray]:
        if self.n_vertices == 0:
            return 0, np.zeros(0, dtype=np.int64)
        return connected_components(self.adjacency(), directed=False)

    def is_connected(self) -> bool:
        return self.n_vertices > 0 and self.component_labels()[0] == 1

    def components(self) -> list[frozenset]:
        k, labels = self.component_labels()
        groups = [[] for _ in range(k)]
        for v, c in zip(self.vertices, labels.tolist()):
            groups[c].append(v)
        return [frozenset(g) for g in groups]

    # -- derived networks ---------------------------------------------

    def induced(self, vertices: Iterable[Vertex]) -> "Network":
        """Subnetwork induced on ``vertices`` (order follows this network)."""
        keep = np.zeros(self.n_vertices, dtype=bool)
        for v in vertices:
            if v in self.index:
                keep[self.index[v]] = True
        return self._restrict(keep, keep[self.tail] & keep[self.head])

    def edge_subnetwork(self, edges: Iterable[EdgeId], vertices: Iterable[Vertex] = ()) -> "Network":
        """Subgraph made of ``edges``, their endpoints and the extra ``vertices``."""
        emask = np.zeros(self.n_edges, dtype=bool)
        for e in edges:
            emask[self.edge_index[e]] = True
        vmask = np.zeros(self.n_vertices, dtype=bool)
        vmask[self.tail[emask]] = True
        vmask[self.head[emask]] = True
        for v in vertices:
            vmask[self.vertex_index(v)] = True
        return self._restrict(vmask, emask)

    def _restrict(self, vmask: np.ndarray, emask: np.ndarray) -> "Network":
        new_index = np.cumsum(vmask) - 1
        verts = [v for v, k in zip(self.vertices, vmask) if k]
        ids = [e for e, k in zip(self.edge_ids, emask) if k]
        return Network._from_arrays(verts, ids, new_index[self.tail[emask]], new_index[self.head[emask]],
                                    self.resistance[emask])

    def with_resistances(self, patch: Mapping[EdgeId, float]) -> "Network":
        res = self.resistance.copy()
        for e, r in patch.items():
            if not (r > 0 and math.isfinite(r)):
                raise NetworkError(f"resistance for {e!r} must be positive and finite, got {r!r}")
            res[self.edge_index[e]] = r
        return Network._from_arrays(self.vertices, self.edge_ids, self.tail, self.head, res)


class Potential:
    """Real values on the vertices of a network."""

    __slots__ = ("vertices", "index", "values")

    def __init__(self, net_or_vertices, values):
        if isinstance(net_or_vertices, Network):
            self.vertices, self.index = net_or_vertices.vertices, net_or_vertices.index
        else:
            self.vertices = tuple(net_or_vertices)
            self.index = {v: i for i, v in enumerate(self.vertices)}
        vals = np.array(values, dtype=float)
        if vals.shape != (len(self.vertices),):
            raise NetworkError(f"potential needs {len(self.vertices)} values, got shape {vals.shape}")
        self.values = _readonly(vals)

    @classmethod
    def from_mapping(cls, net: Network, mapping: Mapping[Vertex, float]) -> "Potential":
        missing = [v for v in net.vertices if v not in mapping]
        if missing:
            raise NetworkError(f"potential undefined on {missing[:5]!r}")
        return cls(net, [mapping[v] for v in net.vertices])

    @classmethod
    def constant(cls, net: Network, value: float = 0.0) -> "Potential":
        return cls(net, np.full(net.n_vertices, float(value)))

    def __getitem__(self, v: Vertex) -> float:
        return float(self.values[self.index[v]])

    def __len__(self):
        return len(self.vertices)

    def as_dict(self) -> dict:
        return dict(zip(self.vertices, self.values.tolist()))

    def on(self, vertices: Sequence[Vertex] | Network) -> "Potential":
        """Re-index onto another vertex set (every vertex must be known here)."""
        verts = vertices.vertices if isinstance(vertices, Network) else tuple(vertices)
        return Potential(verts, [self.values[self.index[v]] for v in verts])

    def _combine(self, other, op):
        if isinstance(other, Potential):
            if other.vertices != self.vertices:
                other = other.on(self.vertices)
            return Potential(self.vertices, op(self.values, other.values))
        return Potential(self.vertices, op(self.values, other))

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, k):
        return Potential(self.vertices, self.values * float(k))

    __rmul__ = __mul__

    def __neg__(self):
        return Potential(self.vertices, -self.values)

    def spread(self) -> float:
        return float(self.values.max() - self.values.min()) if len(self.values) else 0.0

    def __repr__(self):
        return f"Potential({len(self.vertices)} vertices)"


class EdgeFunction:
    """Antisymmetric function on directed edges, stored in reference orientation."""

    __slots__ = ("network", "values")

    def __init__(self, network: Network, values):
        vals = np.array(values, dtype=float)
        if vals.shape != (network.n_edges,):
            raise NetworkError(f"edge function needs {network.n_edges} values, got shape {vals.shape}")
        self.network = network
        self.values = _readonly(vals)

    @classmethod
    def zero(cls, network: Network) -> "EdgeFunction":
        return cls(network, np.zeros(network.n_edges))

    @classmethod
    def from_mapping(cls, network: Network, mapping: Mapping) -> "EdgeFunction":
        """Keys are edge ids (reference orientation) or :class:`DirectedEdge` triples."""
        vals = np.zeros(network.n_edges)
        for key, x in mapping.items():
            if isinstance(key, tuple) and len(key) == 3 and key[0] in network.edge_index:
                de = DirectedEdge(*key)
                i = network.edge_index[de.edge]
                vals[i] = x * _orientation(network, i, de)
            else:
                vals[network.edge_index[key]] = x
        return cls(network, vals)

    def __call__(self, de: DirectedEdge) -> float:
        i = self.network.edge_index[de.edge]
        return float(self.values[i]) * _orientation(self.network, i, de)

    def __getitem__(self, edge: EdgeId) -> float:
        return float(self.values[self.network.edge_index[edge]])

    def as_dict(self) -> dict:
        return dict(zip(self.network.edge_ids, self.values.tolist()))

    def aligned(self, other: Network) -> "EdgeFunction":
        """Carry values over to ``other`` by edge id (edges missing here count as 0).

        Orientation is matched per edge, so the same ambient edge compares
        correctly between truncations even if ``other`` relabels endpoints.
        """
        vals = np.zeros(other.n_edges)
        mine = self.network
        for j, e in enumerate(other.edge_ids):
            i = mine.edge_index.get(e)
            if i is None:
                continue
            same = mine.vertices[mine.tail[i]] == other.vertices[other.tail[j]]
            vals[j] = self.values[i] if same else -self.values[i]
        return EdgeFunction(other, vals)

    def _combine(self, other, op):
        if isinstance(other, EdgeFunction):
            if other.network is not self.network and other.network.edge_ids != self.network.edge_ids:
                other = other.aligned(self.network)
            return EdgeFunction(self.network, op(self.values, other.values))
        return EdgeFunction(self.network, op(self.values, other))

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, k):
        return EdgeFunction(self.network, self.values * float(k))

    __rmul__ = __mul__

    def __neg__(self):
        return EdgeFunction(self.network, -self.values)

    def __repr__(self):
        return f"EdgeFunction({self.network.n_edges} edges)"


def _orientation(net: Network, i: int, de: DirectedEdge) -> int:
    t, h = net.vertices[net.tail[i]], net.vertices[net.head[i]]
    if (de.tail, de.head) == (t, h):
        return 1
    if (de.tail, de.head) == (h, t):
        return -1
    raise NetworkError(f"{de!r} does not match the endpoints of edge {de.edge!r}")


def induced_edge_function(net: Network, h: Potential) -> EdgeFunction:
    """``h_E(e, v, w) = (h(v) - h(w)) / r(e)``."""
    if h.vertices is not net.vertices and h.vertices != net.vertices:
        h = h.on(net)
    vals = h.values
    return EdgeFunction(net, (vals[net.tail] - vals[net.head]) * net.conductance)


# -- surgery -------------------------------------------------------------


def contract(net: Network, A: Iterable[Vertex], B: Iterable[Vertex] | None = None,
             labels: tuple[Vertex, Vertex] | None = None) -> tuple[Network, dict]:
    """Contract ``A`` (and ``B``) to single vertices, keeping every edge.

    Edges inside a contracted set become self-loops and disappear. Returns the
    contracted network and the map from old to new vertex labels. New labels
    default to ``frozenset(A)`` and ``frozenset(B)``.
    """
    sets = [frozenset(A)] + ([frozenset(B)] if B is not None else [])
    for s in sets:
        if not s:
            raise NetworkError("cannot contract an empty vertex set")
        unknown = [v for v in s if v not in net.index]
        if unknown:
            raise NetworkError(f"unknown vertices {unknown[:5]!r}")
    if len(sets) == 2 and sets[0] & sets[1]:
        raise NetworkError("contraction sets overlap")
    if labels is None:
        labels = tuple(sets)
    mapping = {v: v for v in net.vertices}
    for s, lab in zip(sets, labels):
        if lab in net.index and lab not in s:
            raise NetworkError(f"contraction label {lab!r} clashes with an existing vertex")
        for v in s:
            mapping[v] = lab
    new_vertices = list(dict.fromkeys(mapping[v] for v in net.vertices))
    idx = {v: i for i, v in enumerate(new_vertices)}
    old_to_new = np.array([idx[mapping[v]] for v in net.vertices], dtype=np.int64)
    t, h = old_to_new[net.tail], old_to_new[net.head]
    keep = t != h
    ids = [e for e, k in zip(net.edge_ids, keep) if k]
    return Network._from_arrays(new_vertices, ids, t[keep], h[keep], net.resistance[keep]), mapping


class Deletion(NamedTuple):
    network: Network
    connected: bool
    empty: bool


def delete_edges(net: Network, S: Iterable[EdgeId]) -> Deletion:
    """Delete the edges ``S`` and then every vertex left isolated."""
    S = set(S)
    unknown = S - net.edge_index.keys()
    if unknown:
        raise NetworkError(f"unknown edges {sorted(map(repr, unknown))[:5]}")
    if not S:
        return Deletion(net, net.is_connected(), net.n_vertices == 0)
    emask = np.array([e not in S for e in net.edge_ids], dtype=bool)
    vmask = np.zeros(net.n_vertices, dtype=bool)
    vmask[net.tail[emask]] = True
    vmask[net.head[emask]] = True
    # vertices that were isolated before the deletion stay
    had_edges = np.zeros(net.n_vertices, dtype=bool)
    had_edges[net.tail] = True
    had_edges[net.head] = True
    vmask |= ~had_edges
    out = net._restrict(vmask, emask)
    return Deletion(out, out.is_connected(), out.n_vertices == 0)


def bfs_order(net: Network, root: Vertex) -> list[Vertex]:
    seen = {root}
    order = [root]
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for _, w in net.neighbors(v):
            if w not in seen:
                seen.add(w)
                order.append(w)
                queue.append(w)
    return order


# -- files ----------------------------------------------------------------


def parse_network(text: str) -> Network:
    """Parse ``u v r`` lines (``#`` starts a comment). Edge ids are line order."""
    records = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise NetworkError(f"line {lineno}: expected 'u v r', got {raw!r}")
        try:
            r = float(parts[2])
        except ValueError:
            raise NetworkError(f"line {lineno}: bad resistance {parts[2]!r}") from None
        records.append((parts[0], parts[1], r))
    return Network.from_edge_list(records)


def read_network(path) -> Network:
    with open(path, encoding="utf-8") as fh:
        return parse_network(fh.read())


def format_network(net: Network) -> str:
    lines = [f"{u} {v} {r!r}" for _, u, v, r in net.edges()]
    return "\n".join(lines) + "\n"
