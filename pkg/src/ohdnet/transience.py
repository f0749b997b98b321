"""Transience through flows of finite energy to infinity."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .currents import DEFAULT_CAP, LimitEstimate, _map, current_with_intensity, default_schedule, estimate_limit
from .exhaustion import Exhaustion
from .network import EdgeFunction, NetworkError


class TransienceError(NetworkError):
    pass


@dataclass(frozen=True)
class TransienceVerdict:
    vertex: object
    sequence: LimitEstimate
    verdict: str
    """``transient``, ``recurrent-up-to-cap``, ``recurrent`` (certified by a closed form) or ``undecided``."""
    witness: EdgeFunction | None
    witness_n: int | None
    witness_energy: float | None
    energy_bound: float | None
    """Extrapolated resistance times the squared intensity (1) of the witness."""

    @property
    def resistance(self) -> float:
        return self.sequence.extrapolated


def _resistance_at(ex: Exhaustion, v, n: int):
    net, inf = ex.truncate_wired(n)
    if inf not in net.index:
        return math.inf, None
    sol = current_with_intensity(net, v, inf, 1.0)
    return sol.resistance, sol


def escape_flow(ex: Exhaustion, v, n: int) -> tuple[EdgeFunction, float]:
    """Unit current from ``v`` to the wired boundary of ``V_n`` and its energy.

    Edges to the boundary keep their ids, so the flow lives on the real edges.
    """
    if not ex.contains(v, n):
        raise TransienceError(f"{v!r} is not in V_{n}")
    r, sol = _resistance_at(ex, v, n)
    if sol is None:
        raise TransienceError(f"no edge leaves V_{n}: the network is finite")
    return sol.flow, sol.energy


def resistance_to_infinity(ex: Exhaustion, v, n_max: int = 200, cap: float = DEFAULT_CAP, tol: float = 1e-4,
                           ns: Sequence[int] | None = None, nw_recurrent: bool | None = None,
                           jobs: int = 1) -> TransienceVerdict:
    """Wired resistance between ``v`` and the collapsed outside of ``V_n``.

    A finite limit means transience. Recurrence is reported only as
    ``recurrent-up-to-cap`` unless ``nw_recurrent`` (a closed-form divergence
    of a Nash-Williams sum, for example from ``ex.info``) certifies it.
    """
    if nw_recurrent is None:
        nw_recurrent = ex.info.get("nw_recurrent") if v == ex.info.get("default_vertex") else None
    n0 = ex.first_index(v)
    if ns is None:
        ns = default_schedule(n_max, n0)
    ns = sorted(n for n in ns if n >= n0)
    ex.ensure(ns[-1])
    results = _map(lambda n: _resistance_at(ex, v, n), ns, jobs)
    values = [r for r, _ in results]
    seq = estimate_limit(ns, values, "non-decreasing", tol, cap)
    witness = energy = None
    wn = None
    for n, (r, sol) in zip(reversed(ns), reversed(results)):
        if sol is not None:
            witness, energy, wn = sol.flow, sol.energy, n
            break
    if seq.verdict == "converged":
        verdict = "transient"
    elif nw_recurrent:
        verdict = "recurrent"
    elif seq.verdict == "diverged":
        verdict = "recurrent-up-to-cap"
    else:
        verdict = "undecided"
    bound = seq.extrapolated if verdict == "transient" else None
    return TransienceVerdict(v, seq, verdict, witness, wn, energy, bound)


def layer_conductance(ex: Exhaustion, layer: Iterable) -> tuple[float, frozenset]:
    """Total conductance of the edges leaving ``layer`` and their ids."""
    inside = set(layer)
    total = 0.0
    edges = set()
    for x in inside:
        for e, w, r in ex.neighbors(x):
            if w not in inside:
                total += 1.0 / r
                edges.add(e)
    return total, frozenset(edges)


def nash_williams_partial_sums(ex: Exhaustion, v, cutsets: Sequence[Iterable]) -> list[float]:
    """Running sums of ``1 / RN(C_i)`` over nested layers ``C_1 <= C_2 <= ...``.

    Each layer must contain ``v`` and the previous layer, and the boundary edge
    sets of different layers must be disjoint.
    """
    sums = []
    prev: frozenset = frozenset()
    seen_edges: set = set()
    total = 0.0
    for i, layer in enumerate(cutsets):
        layer = frozenset(layer)
        if v not in layer:
            raise TransienceError(f"layer {i} does not contain {v!r}")
        if not prev <= layer:
            raise TransienceError(f"layer {i} does not contain layer {i - 1}")
        rn, edges = layer_conductance(ex, layer)
        if edges & seen_edges:
            raise TransienceError(f"layer {i} shares boundary edges with an earlier layer")
        seen_edges |= edges
        if rn == 0:
            raise TransienceError(f"no edge leaves layer {i}")
        total += 1.0 / rn
        sums.append(total)
        prev = layer
    return sums


def nash_williams_bound(ex: Exhaustion, v, cutsets: Sequence[Iterable]) -> float:
    sums = nash_williams_partial_sums(ex, v, cutsets)
    return sums[-1] if sums else 0.0


def ball_layers(ex: Exhaustion, v, k: int) -> list[frozenset]:
    """Graph balls of radius ``0 .. k-1`` around ``v`` in the ambient network."""
    dist = {v: 0}
    queue = deque([v])
    balls = []
    while queue:
        x = queue.popleft()
        if dist[x] >= k - 1:
            continue
        for _, w, _ in ex.neighbors(x):
            if w not in dist:
                dist[w] = dist[x] + 1
                queue.append(w)
    by_radius: list[list] = [[] for _ in range(k)]
    for x, d in dist.items():
        if d < k:
            by_radius[d].append(x)
    acc: set = set()
    for d in range(k):
        acc.update(by_radius[d])
        balls.append(frozenset(acc))
    return balls


def transience_rows(verdict: TransienceVerdict, nw_sums: Sequence[float] | None = None) -> list[dict]:
    """CSV rows ``n, R, NW`` (NW aligned with the truncation index when given)."""
    rows = []
    for n, r in zip(verdict.sequence.ns, verdict.sequence.values):
        nw = nw_sums[n - 1] if nw_sums is not None and n - 1 < len(nw_sums) else float("nan")
        rows.append({"n": n, "R": r, "NW": nw})
    return rows
