"""Exhaustions of locally finite networks by nested finite vertex sets.

An :class:`Exhaustion` is driven by two callbacks: ``layers(n)`` yields the
vertices new in ``V_n`` and ``neighbors(v)`` yields ``(edge_id, w, r)`` for
every edge at ``v`` in the ambient (possibly infinite) network. Truncations are
built lazily and cached, and edge ids stay stable across ``n``.
"""
from __future__ import annotations

import logging
import threading
from collections import deque
from typing import Callable, Hashable, Iterable, Mapping

import numpy as np

from .network import INFINITY, Network, NetworkError, bfs_order

log = logging.getLogger(__name__)

Neighbors = Callable[[Hashable], Iterable[tuple]]

REPAIR_LIMIT = 10_000
MAX_VERTICES = 600_000


class ExhaustionError(NetworkError):
    pass


def _as_predicate(sel) -> Callable[[Hashable], bool]:
    if callable(sel):
        return sel
    members = frozenset(sel)
    return members.__contains__


class Exhaustion:
    def __init__(self, layers: Callable[[int], Iterable], neighbors: Neighbors,
                 name: str = "exhaustion", info: dict | None = None):
        self._layers = layers
        self.neighbors = neighbors
        self.name = name
        self.info = dict(info or {})
        self._lock = threading.RLock()
        self._order: list = []            # included vertices, inclusion order
        self._pos: dict = {}              # vertex -> inclusion index
        self._layer_end: list[int] = [0]  # _layer_end[n] = |V_n|
        self._edge_pos: dict = {}
        self._eid: list = []
        self._et: list[int] = []          # inclusion index or -1
        self._eh: list[int] = []
        self._er: list[float] = []
        self._pending: dict = {}          # vertex -> [(edge pos, side)]
        self._parent: list[int] = []      # union-find over inclusion indices
        self._n_components = 0
        self._arrays = None

    def __repr__(self):
        return f"Exhaustion({self.name!r}, built to n={self.built})"

    @property
    def built(self) -> int:
        return len(self._layer_end) - 1

    # -- growth ---------------------------------------------------------

    def _find(self, i: int) -> int:
        parent = self._parent
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def _union(self, i: int, j: int):
        a, b = self._find(i), self._find(j)
        if a != b:
            self._parent[max(a, b)] = min(a, b)
            self._n_components -= 1

    def _include(self, v):
        i = len(self._order)
        self._order.append(v)
        self._pos[v] = i
        self._parent.append(i)
        self._n_components += 1
        for pos, side in self._pending.pop(v, ()):
            (self._et if side == 0 else self._eh)[pos] = i
            other = self._eh[pos] if side == 0 else self._et[pos]
            self._union(i, other)
        for eid, w, r in self.neighbors(v):
            if eid in self._edge_pos or w == v:
                continue
            pos = len(self._eid)
            self._edge_pos[eid] = pos
            self._eid.append(eid)
            self._et.append(i)
            self._er.append(float(r))
            j = self._pos.get(w, -1)
            self._eh.append(j)
            if j < 0:
                self._pending.setdefault(w, []).append((pos, 1))
            else:
                self._union(i, j)

    def _repair(self, n: int):
        root = self._find(0)
        start = self._layer_end[-1]
        added = 0
        for i in range(start, len(self._order)):
            if self._find(i) == root:
                continue
            path = self._path_to(self._order[i], root)
            for w in path:
                if w not in self._pos:
                    self._include(w)
                    added += 1
            root = self._find(0)
        if added:
            log.warning("%s: V_%d was disconnected; added %d vertices to connect it", self.name, n, added)

    def _path_to(self, v, root: int) -> list:
        parent = {v: None}
        queue = deque([v])
        while queue:
            u = queue.popleft()
            j = self._pos.get(u)
            if j is not None and self._find(j) == root:
                path = []
                while u is not None:
                    path.append(u)
                    u = parent[u]
                return path
            for _, w, _ in self.neighbors(u):
                if w not in parent:
                    parent[w] = u
                    queue.append(w)
            if len(parent) > REPAIR_LIMIT:
                break
        raise ExhaustionError(f"{self.name}: cannot connect {v!r} to V_1 within {REPAIR_LIMIT} vertices")

    def ensure(self, n: int):
        """Grow the cached data up to ``V_n``."""
        if n < 1:
            raise ExhaustionError(f"truncation index must be >= 1, got {n}")
        with self._lock:
            while self.built < n:
                k = self.built + 1
                try:
                    new = list(self._layers(k))
                except Exception as exc:
                    raise ExhaustionError(f"{self.name}: layer generator failed at n={k}: {exc}") from exc
                for v in new:
                    if v not in self._pos:
                        self._include(v)
                if self._n_components > 1:
                    self._repair(k)
                self._layer_end.append(len(self._order))
                self._arrays = None
                if len(self._order) > MAX_VERTICES:
                    raise ExhaustionError(f"{self.name}: V_{k} has {len(self._order)} vertices, above the limit {MAX_VERTICES}")

    def _edge_arrays(self):
        if self._arrays is None or len(self._arrays[0]) != len(self._eid):
            self._arrays = (np.asarray(self._et, dtype=np.int64), np.asarray(self._eh, dtype=np.int64),
                            np.asarray(self._er, dtype=float), tuple(self._eid))
        return self._arrays

    # -- queries ------------------------------------------------------

    def size(self, n: int) -> int:
        self.ensure(n)
        return self._layer_end[n]

    def vertices(self, n: int) -> tuple:
        self.ensure(n)
        return tuple(self._order[:self._layer_end[n]])

    def layer(self, n: int) -> tuple:
        self.ensure(n)
        return tuple(self._order[self._layer_end[n - 1]:self._layer_end[n]])

    def contains(self, v, n: int) -> bool:
        self.ensure(n)
        i = self._pos.get(v)
        return i is not None and i < self._layer_end[n]

    def first_index(self, v, n_limit: int = 10_000) -> int:
        """Smallest ``n`` with ``v`` in ``V_n``."""
        n = 1
        while n <= n_limit:
            self.ensure(n)
            i = self._pos.get(v)
            if i is not None:
                return int(np.searchsorted(self._layer_end, i, side="right"))
            if self._layer_end[n] > 0 and not self._pending:
                break
            n += 1
        raise ExhaustionError(f"{self.name}: vertex {v!r} not reached by n={n_limit}")

    def truncate_free(self, n: int) -> Network:
        """The induced subnetwork ``G[V_n]``."""
        self.ensure(n)
        with self._lock:
            t, h, r, ids = self._edge_arrays()
            k = self._layer_end[n]
            order = self._order[:k]
        emask = (t >= 0) & (t < k) & (h >= 0) & (h < k)
        sel = np.flatnonzero(emask)
        return Network._from_arrays(order, [ids[i] for i in sel], t[sel], h[sel], r[sel])

    def truncate_wired(self, n: int) -> tuple[Network, object]:
        """``G[V_n]`` with every edge leaving ``V_n`` re-attached to :data:`INFINITY`.

        When no edge leaves ``V_n`` the boundary vertex is omitted.
        """
        self.ensure(n)
        with self._lock:
            t, h, r, ids = self._edge_arrays()
            k = self._layer_end[n]
            order = self._order[:k]
        t_in = (t >= 0) & (t < k)
        h_in = (h >= 0) & (h < k)
        sel = np.flatnonzero(t_in | h_in)
        tt = np.where(t_in[sel], t[sel], k)
        hh = np.where(h_in[sel], h[sel], k)
        verts = list(order)
        if np.any(tt == k) or np.any(hh == k):
            verts.append(INFINITY)
        return Network._from_arrays(verts, [ids[i] for i in sel], tt, hh, r[sel]), INFINITY

    def frontier(self, n: int) -> frozenset:
        """Vertices of ``V_n`` with an edge leaving ``V_n``."""
        self.ensure(n)
        t, h, _, _ = self._edge_arrays()
        k = self._layer_end[n]
        t_in = (t >= 0) & (t < k)
        h_in = (h >= 0) & (h < k)
        out = set(t[t_in & ~h_in].tolist()) | set(h[h_in & ~t_in].tolist())
        return frozenset(self._order[i] for i in out)

    def cross_edges(self, n: int) -> list[tuple]:
        """``(edge_id, inside, outside, r)`` for edges leaving ``V_n``."""
        inside = set(self.vertices(n))
        out = []
        for v in self.vertices(n):
            for eid, w, r in self.neighbors(v):
                if w not in inside:
                    out.append((eid, v, w, r))
        return out

    def stabilizes_at(self, n_limit: int = 10_000) -> int | None:
        """First ``n`` with no edge leaving ``V_n`` (finite networks), else None."""
        for n in range(1, n_limit + 1):
            self.ensure(n)
            if self._layer_end[n] > 0 and not self._pending:
                return n
        return None

    # -- derived exhaustions -----------------------------------------

    def restrict(self, vertices, name: str | None = None) -> "Exhaustion":
        """Sub-exhaustion of the subnetwork induced by ``vertices`` (set or predicate)."""
        keep = _as_predicate(vertices)
        base_layers, base_nb = self._layers, self.neighbors

        def layers(n):
            return [v for v in base_layers(n) if keep(v)]

        def neighbors(v):
            return [(e, w, r) for e, w, r in base_nb(v) if keep(w)]

        return Exhaustion(layers, neighbors, name or f"{self.name}|restricted", {})

    def without_edges(self, edges, name: str | None = None) -> "Exhaustion":
        """Delete an edge set (set or predicate on ids), then isolated vertices."""
        drop = _as_predicate(edges)
        base_layers, base_nb = self._layers, self.neighbors

        def neighbors(v):
            return [(e, w, r) for e, w, r in base_nb(v) if not drop(e)]

        def layers(n):
            return [v for v in base_layers(n) if neighbors(v)]

        info = {k: v for k, v in self.info.items() if k in ("names", "default_pair", "default_edge")}
        return Exhaustion(layers, neighbors, name or f"{self.name}-S", info)

    def with_resistances(self, patch: Mapping, name: str | None = None) -> "Exhaustion":
        """Replace the resistance of finitely many edges."""
        for e, r in patch.items():
            if not (r > 0 and np.isfinite(r)):
                raise NetworkError(f"resistance for {e!r} must be positive and finite, got {r!r}")
        base_nb = self.neighbors
        patch = dict(patch)

        def neighbors(v):
            return [(e, w, patch.get(e, r)) for e, w, r in base_nb(v)]

        info = {k: v for k, v in self.info.items() if k in ("names", "default_pair", "default_edge")}
        return Exhaustion(self._layers, neighbors, name or f"{self.name}+patch", info)

    # -- constructors ---------------------------------------------------

    @classmethod
    def from_network(cls, net: Network, layers: Iterable[Iterable] | None = None,
                     name: str = "network", root=None) -> "Exhaustion":
        """Exhaust a finite network by explicit layers, or by BFS balls from ``root``.

        Vertices not covered by explicit layers are appended as one final layer.
        """
        adj: dict = {v: [] for v in net.vertices}
        for eid, u, v, r in net.edges():
            adj[u].append((eid, v, r))
            adj[v].append((eid, u, r))
        if layers is None:
            if net.n_vertices == 0:
                raise ExhaustionError("empty network")
            layer_list = _bfs_layers(net, net.vertices[0] if root is None else root)
        else:
            layer_list = [list(layer) for layer in layers]
            seen = set()
            for layer in layer_list:
                for v in layer:
                    if v not in adj:
                        raise ExhaustionError(f"layer vertex {v!r} is not in the network")
                    seen.add(v)
            rest = [v for v in net.vertices if v not in seen]
            if rest:
                log.warning("%s: %d vertices not covered by the layers; appended as a final layer", name, len(rest))
                layer_list.append(rest)

        def layer_fn(n):
            return layer_list[n - 1] if n <= len(layer_list) else ()

        return cls(layer_fn, adj.__getitem__, name, {"finite": True, "depth": len(layer_list)})


def _bfs_layers(net: Network, root) -> list[list]:
    order = bfs_order(net, root)
    dist = {root: 0}
    for v in order:
        for _, w in net.neighbors(v):
            if w not in dist:
                dist[w] = dist[v] + 1
    depth = max(dist.values())
    layers = [[] for _ in range(depth + 1)]
    for v in order:
        layers[dist[v]].append(v)
    missing = [v for v in net.vertices if v not in dist]
    if missing:
        layers.append(missing)
    return layers


def parse_exhaustion(text: str, net: Network) -> Exhaustion:
    """Parse ``n: v1 v2 ...`` lines giving ``V_n \\ V_{n-1}``."""
    by_index: dict[int, list] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, rest = line.partition(":")
        if not sep:
            raise ExhaustionError(f"line {lineno}: expected 'n: v1 v2 ...'")
        try:
            n = int(head)
        except ValueError:
            raise ExhaustionError(f"line {lineno}: bad layer index {head!r}") from None
        if n < 1:
            raise ExhaustionError(f"line {lineno}: layer index must be >= 1")
        by_index.setdefault(n, []).extend(rest.split())
    if not by_index:
        raise ExhaustionError("exhaustion file has no layers")
    layers = [by_index.get(n, []) for n in range(1, max(by_index) + 1)]
    return Exhaustion.from_network(net, layers, name="file")


def read_exhaustion(path, net: Network) -> Exhaustion:
    with open(path, encoding="utf-8") as fh:
        return parse_exhaustion(fh.read(), net)
