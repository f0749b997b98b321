"""Dirichlet problems on finite networks.

Two backends are available. ``sparse`` factorises the interior block of the
weighted Laplacian with SuperLU. ``elimination`` removes interior vertices one
at a time by star-mesh transforms; it only ever adds and multiplies positive
numbers, so it stays accurate when conductances span hundreds of orders of
magnitude, where any factorisation of the Laplacian loses every digit.
"""
from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .network import Network, NetworkError

log = logging.getLogger(__name__)

CONTRAST_LIMIT = 1e6
ELIMINATION_MAX_VERTICES = 50_000


class SolverError(NetworkError):
    pass


@dataclass(frozen=True)
class DirichletResult:
    values: np.ndarray
    """Potential per vertex index."""
    flows: np.ndarray
    """Edge values in reference orientation, ``c * (phi(tail) - phi(head))``."""
    residual: float
    """Largest absolute accumulation over interior vertices."""
    method: str
    conductance: float | None = None
    """Effective conductance between the two boundary vertices (two-terminal solves only)."""


def contrast(net: Network) -> float:
    c = net.conductance
    return float(c.max() / c.min()) if c.size else 1.0


def choose_method(net: Network) -> str:
    if contrast(net) > CONTRAST_LIMIT and net.n_vertices <= ELIMINATION_MAX_VERTICES:
        return "elimination"
    return "sparse"


def accumulations(net: Network, flows: np.ndarray) -> np.ndarray:
    acc = np.zeros(net.n_vertices)
    np.add.at(acc, net.head, flows)
    np.subtract.at(acc, net.tail, flows)
    return acc


def solve_dirichlet(net: Network, boundary_idx, boundary_vals, method: str = "auto") -> DirichletResult:
    """Harmonic extension of the boundary values to the rest of ``net``."""
    boundary_idx = np.asarray(boundary_idx, dtype=np.int64)
    boundary_vals = np.asarray(boundary_vals, dtype=float)
    if boundary_idx.size == 0:
        raise SolverError("boundary must be nonempty")
    if len(set(boundary_idx.tolist())) != boundary_idx.size:
        raise SolverError("boundary vertices repeated")
    if not net.is_connected():
        raise SolverError("network is not connected")
    if method == "auto":
        method = choose_method(net)
    if method == "sparse":
        values, flows, gc = _solve_sparse(net, boundary_idx, boundary_vals)
    elif method == "elimination":
        values, flows, gc = _solve_elimination(net, boundary_idx, boundary_vals)
    else:
        raise SolverError(f"unknown method {method!r}")
    interior = np.ones(net.n_vertices, dtype=bool)
    interior[boundary_idx] = False
    acc = accumulations(net, flows)
    residual = float(np.abs(acc[interior]).max()) if interior.any() else 0.0
    return DirichletResult(values, flows, residual, method, gc)


def _solve_sparse(net, bidx, bvals):
    n = net.n_vertices
    phi = np.zeros(n)
    phi[bidx] = bvals
    interior = np.ones(n, dtype=bool)
    interior[bidx] = False
    I = np.flatnonzero(interior)
    if I.size:
        L = net.laplacian().tocsc()
        B = bidx
        rhs = -(L[I][:, B] @ bvals)
        A = L[I][:, I].tocsc()
        x = spla.spsolve(A, rhs) if I.size > 1 else rhs / A.toarray()[0, 0]
        phi[I] = x
    flows = (phi[net.tail] - phi[net.head]) * net.conductance
    gc = None
    if bidx.size == 2:
        du = bvals[0] - bvals[1]
        if du != 0:
            acc = accumulations(net, flows)
            gc = float(acc[bidx[1]] / du)
    return phi, flows, gc


def _solve_elimination(net, bidx, bvals):
    n = net.n_vertices
    adj: list[dict] = [dict() for _ in range(n)]
    for t, h, c in zip(net.tail.tolist(), net.head.tolist(), net.conductance.tolist()):
        adj[t][h] = adj[t].get(h, 0.0) + c
        adj[h][t] = adj[h].get(t, 0.0) + c
    is_boundary = np.zeros(n, dtype=bool)
    is_boundary[bidx] = True
    alive = [not b for b in is_boundary.tolist()]
    heap = [(len(adj[i]), i) for i in range(n) if alive[i]]
    heapq.heapify(heap)
    elim_order: list[int] = []
    stars: dict[int, tuple[list[int], list[float], float]] = {}
    while heap:
        d, i = heapq.heappop(heap)
        if not alive[i] or d != len(adj[i]):
            continue
        alive[i] = False
        nb = adj[i]
        items = list(nb.items())
        C = math.fsum(c for _, c in items)
        stars[i] = ([j for j, _ in items], [c for _, c in items], C)
        elim_order.append(i)
        for j, _ in items:
            del adj[j][i]
        for a in range(len(items)):
            j, cj = items[a]
            aj = adj[j]
            for b in range(a + 1, len(items)):
                k, ck = items[b]
                w = cj * ck / C
                aj[k] = aj.get(k, 0.0) + w
                adj[k][j] = adj[k].get(j, 0.0) + w
        for j, _ in items:
            if alive[j]:
                heapq.heappush(heap, (len(adj[j]), j))
        adj[i] = {}
    phi = np.zeros(n)
    phi[bidx] = bvals
    for i in reversed(elim_order):
        js, cs, C = stars[i]
        phi[i] = math.fsum(c * phi[j] for j, c in zip(js, cs)) / C
    if not np.all(np.isfinite(phi)):
        raise SolverError("elimination overflowed; the truncation is too large for this conductance range")
    rank = np.full(n, len(elim_order), dtype=np.int64)
    rank[elim_order] = np.arange(len(elim_order))
    diff = _Differences(phi, stars, rank, is_boundary)
    c = net.conductance
    flows = np.array([ci * diff(t, h) for t, h, ci in zip(net.tail.tolist(), net.head.tolist(), c.tolist())])
    if not np.all(np.isfinite(flows)):
        raise SolverError("elimination overflowed; the truncation is too large for this conductance range")
    gc = None
    if bidx.size == 2:
        du = bvals[0] - bvals[1]
        p, q = int(bidx[0]), int(bidx[1])
        cpq = adj[p].get(q, 0.0)
        if du != 0:
            gc = cpq
    return phi, flows, gc


class _Differences:
    """Accurate ``phi[a] - phi[b]`` by unrolling the back-substitution.

    If ``a`` was eliminated before ``b`` then ``phi[a]`` is a convex combination
    of later potentials, so the difference is the same convex combination of
    differences that never reach a catastrophic cancellation.
    """

    def __init__(self, phi, stars, rank, is_boundary):
        self.phi = phi
        self.stars = stars
        self.rank = rank
        self.is_boundary = is_boundary
        self.memo: dict[tuple[int, int], float] = {}

    def __call__(self, a: int, b: int) -> float:
        if a == b:
            return 0.0
        if self.rank[a] > self.rank[b]:
            return -self._get(b, a)
        return self._get(a, b)

    def _get(self, a: int, b: int) -> float:
        # invariant: rank[a] < rank[b] or both on the boundary
        memo, stars, rank = self.memo, self.stars, self.rank
        key = (a, b)
        if key in memo:
            return memo[key]
        stack = [key]
        while stack:
            x, y = stack[-1]
            if (x, y) in memo:
                stack.pop()
                continue
            if self.is_boundary[x]:
                memo[(x, y)] = float(self.phi[x] - self.phi[y])
                stack.pop()
                continue
            js, cs, C = stars[x]
            pending = []
            for j in js:
                if j == y:
                    continue
                k = (j, y) if rank[j] < rank[y] or self.is_boundary[j] and self.is_boundary[y] else (y, j)
                if k not in memo:
                    pending.append(k)
            if pending:
                stack.extend(pending)
                continue
            total = 0.0
            for j, c in zip(js, cs):
                if j == y:
                    continue
                if rank[j] < rank[y] or self.is_boundary[j] and self.is_boundary[y]:
                    total += c * memo[(j, y)]
                else:
                    total -= c * memo[(y, j)]
            memo[(x, y)] = total / C
            stack.pop()
        return memo[key]


def effective_resistances(net: Network, terminals) -> np.ndarray:
    """Pairwise effective resistance matrix between ``terminals`` (vertex indices)."""
    terminals = list(terminals)
    k = len(terminals)
    R = np.zeros((k, k))
    if k < 2:
        return R
    if not net.is_connected():
        raise SolverError("network is not connected")
    ground = terminals[0]
    keep = np.ones(net.n_vertices, dtype=bool)
    keep[ground] = False
    idx = np.cumsum(keep) - 1
    L = net.laplacian().tocsc()
    K = np.flatnonzero(keep)
    A = L[K][:, K].tocsc()
    rhs = np.zeros((K.size, k - 1))
    for col, t in enumerate(terminals[1:]):
        rhs[idx[t], col] = 1.0
    X = spla.splu(A).solve(rhs) if K.size > 1 else rhs / A.toarray()[0, 0]
    G = np.zeros((k, k))
    rows = [idx[t] for t in terminals[1:]]
    G[1:, 1:] = X[rows, :]
    d = np.diag(G)
    R = d[:, None] + d[None, :] - 2 * G
    np.fill_diagonal(R, 0.0)
    return np.maximum(R, 0.0)


def effective_resistance_elimination(net: Network, p: int, q: int) -> float:
    """Two-terminal effective resistance by star-mesh elimination."""
    res = _solve_elimination(net, np.array([p, q]), np.array([1.0, 0.0]))
    return 1.0 / res[2]
