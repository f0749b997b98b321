"""Deciding whether every harmonic function of finite energy is constant.

The gap between free and wired effective resistance is the basic test; the
remaining functions build and check certificates from transient pieces,
finite cuts, edge deletions and finite resistance changes.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .currents import (DEFAULT_CAP, LimitEstimate, MonotonicityError, Projection, _map, default_schedule,
                       estimate_limit, free_current, min_energy_projection, sweep)
from .exhaustion import Exhaustion, ExhaustionError, _as_predicate
from .kirchhoff import KirchhoffError, potential_energy
from .network import INFINITY, DirectedEdge, EdgeFunction, Network, NetworkError, Potential, contract, induced_edge_function
from .solvers import accumulations
from .transience import TransienceVerdict, escape_flow, resistance_to_infinity

log = logging.getLogger(__name__)

IN = "in-O_HD-evidence"
NOT_IN = "not-in-O_HD-evidence"
UNDECIDED = "undecided"


class PreconditionError(NetworkError):
    pass


# -- the gap test -------------------------------------------------------------


@dataclass(frozen=True)
class Witness:
    """Difference of the unit free and unit wired currents on the last truncation."""

    n: int
    potential: Potential
    """Free minus wired potential on ``V_n`` (zero at ``q``)."""
    edge_function: EdgeFunction
    """The induced edge function, computed as a difference of flows."""
    energy: float
    k1_residual: float
    """Largest accumulation over vertices with no edge leaving ``V_n``."""
    spread: float
    """``max h - min h``; zero for a constant function."""


@dataclass(frozen=True)
class OhdVerdict:
    p: object
    q: object
    free: LimitEstimate
    wired: LimitEstimate
    gap: LimitEstimate
    verdict: str
    tol: float
    witness: Witness | None
    rows: list = field(default_factory=list)


def gap_test(ex: Exhaustion, p, q, n_max: int = 200, tol: float = 1e-4, limit_tol: float = 1e-6,
             ns: Sequence[int] | None = None, jobs: int = 1, cap: float = DEFAULT_CAP,
             witness: bool = True) -> OhdVerdict:
    """Compare ``R_F`` and ``R_W`` between ``p`` and ``q`` along the exhaustion.

    ``not-in-O_HD-evidence`` needs both limits converged and the gap
    extrapolated above ``10 * tol``; ``in-O_HD-evidence`` needs both limits
    converged and the last gap below ``tol``.
    """
    if p == q:
        raise PreconditionError("terminals must differ")
    sw = sweep(ex, p, q, n_max, ns, jobs)
    ns = sw.ns
    rf = estimate_limit(ns, [s.resistance for s in sw.free], "non-increasing", limit_tol, cap)
    rw = estimate_limit(ns, [s.resistance for s in sw.wired], "non-decreasing", limit_tol, cap)
    gaps = [a - b for a, b in zip(rf.values, rw.values)]
    for n, g in zip(ns, gaps):
        if g < -1e-10 * max(1.0, abs(rf.values[0])):
            raise MonotonicityError(f"free resistance below wired resistance at n={n}: gap {g!r}")
    gap = estimate_limit(ns, gaps, "non-increasing", limit_tol, cap, check=False)
    both = rf.verdict == "converged" and rw.verdict == "converged"
    if not ex.cross_edges(ns[-1]):
        # nothing leaves the last truncation: the values are exact
        both = True
        gap = replace(gap, verdict="converged", extrapolated=gaps[-1])
    if both and gap.extrapolated > 10 * tol:
        verdict = NOT_IN
    elif both and gaps[-1] < tol:
        verdict = IN
    else:
        verdict = UNDECIDED
    w = _witness(ex, ns[-1], sw.free[-1], sw.wired[-1]) if witness else None
    return OhdVerdict(p, q, rf, rw, gap, verdict, tol, w, sw.rows())


def _witness(ex: Exhaustion, n: int, free, wired) -> Witness:
    net = free.network
    f_unit = free.flow * (1.0 / free.intensity)
    w_flow = wired.flow.aligned(net)
    hE = f_unit - w_flow
    phi = free.potential.values / free.intensity - wired.potential.on(net).values
    h = Potential(net, phi)
    acc = accumulations(net, hE.values)
    inner = np.ones(net.n_vertices, dtype=bool)
    for v in ex.frontier(n):
        inner[net.index[v]] = False
    k1 = float(np.abs(acc[inner]).max()) if inner.any() else 0.0
    energy = float(np.dot(net.resistance, hE.values ** 2))
    return Witness(n, h, hE, energy, k1, h.spread())


def default_pairs(ex: Exhaustion, extra: Iterable[tuple] = ()) -> list[tuple]:
    """Every pair of vertices in ``V_1`` plus the given pairs."""
    first = ex.vertices(1)
    pairs = [(first[i], first[j]) for i in range(len(first)) for j in range(i + 1, len(first))]
    for pq in extra:
        if pq not in pairs:
            pairs.append(tuple(pq))
    return pairs


# -- from a witness to transient pieces ----------------------------------------


def extract_transient_parts(net: Network, h: Potential | EdgeFunction, d=None, rel_tol: float = 1e-12):
    """Split off the pieces feeding into and fed by an edge ``d`` with positive ``h_E``.

    Returns ``(A, B, d)``: ``A`` holds the vertices with a path to the tail of
    ``d`` along which ``h_E`` is positive and ``B`` the vertices reachable
    from the head of ``d`` in the same way. ``d`` defaults to the edge of
    largest ``|h_E|``, oriented so that ``h_E(d) > 0``; an edge id may be given
    instead. Values below ``rel_tol`` times the largest one count as zero.
    """
    hE = h if isinstance(h, EdgeFunction) else induced_edge_function(net, h)
    if hE.network is not net and hE.network.edge_ids != net.edge_ids:
        hE = hE.aligned(net)
    vals = hE.values
    peak = float(np.abs(vals).max()) if vals.size else 0.0
    if peak == 0:
        raise PreconditionError("h is constant")
    if d is None:
        k = int(np.argmax(np.abs(vals)))
    else:
        k = net.edge_index[d.edge if isinstance(d, DirectedEdge) else d]
        if abs(vals[k]) <= rel_tol * peak:
            raise PreconditionError(f"h_E vanishes on {net.edge_ids[k]!r}")
    t, hd = int(net.tail[k]), int(net.head[k])
    if vals[k] < 0:
        t, hd = hd, t
    d = DirectedEdge(net.edge_ids[k], net.vertices[t], net.vertices[hd])
    thresh = rel_tol * peak
    pos = vals > thresh
    neg = vals < -thresh
    n = net.n_vertices
    fwd: list[list[int]] = [[] for _ in range(n)]
    bwd: list[list[int]] = [[] for _ in range(n)]
    for a, b, up, down in zip(net.tail.tolist(), net.head.tolist(), pos.tolist(), neg.tolist()):
        if up:
            fwd[a].append(b)
            bwd[b].append(a)
        elif down:
            fwd[b].append(a)
            bwd[a].append(b)
    A = _reach(bwd, t)
    B = _reach(fwd, hd)
    common = A & B
    if common:
        v = net.vertices[min(common)]
        raise KirchhoffError(f"positive paths meet at {v!r}: the edge function violates the cycle law")
    V = net.vertices
    return frozenset(V[i] for i in A), frozenset(V[i] for i in B), d


def _reach(adj, start: int) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def clip_potential(h: Potential, a, b, net: Network | None = None) -> Potential:
    """Clamp ``h`` into ``[h(b), h(a)]``; with ``net`` the energy decrease is checked."""
    hi, lo = h[a], h[b]
    if hi < lo:
        raise PreconditionError(f"h({a!r}) < h({b!r})")
    out = Potential(h.vertices, np.clip(h.values, lo, hi))
    if net is not None:
        before, after = potential_energy(net, h), potential_energy(net, out)
        if after > before * (1 + 1e-12) + 1e-300:
            raise AssertionError(f"clipping raised the energy from {before!r} to {after!r}")
    return out


# -- the characterization certificate -----------------------------------------------


@dataclass(frozen=True)
class CharacterizationCertificate:
    A: frozenset
    """Vertices of ``A`` inside the last truncation examined."""
    B: frozenset
    transience_A: TransienceVerdict | None
    transience_B: TransienceVerdict | None
    contracted: LimitEstimate | None
    """Free resistance between the contracted ``A`` and ``B``."""
    rho_exists: bool
    rho_energy: float | None
    """Least energy of a potential with ``rho(A) - rho(B) = 1``."""
    verdict: str
    """``not-in-O_HD-certified`` or ``not-certified``."""
    reasons: tuple
    cross_check: OhdVerdict | None

    @property
    def positive(self) -> bool:
        return self.verdict == "not-in-O_HD-certified"


def _pick(ex: Exhaustion, keep, n_max: int):
    for v in ex.vertices(n_max):
        if keep(v):
            return v
    raise PreconditionError(f"no vertex of the set lies in V_{n_max}")


def contracted_resistance(ex: Exhaustion, A, B, ns: Sequence[int], jobs: int = 1) -> list[float]:
    """``R_F`` between the contraction vertices of ``G[V_n] / A_n / B_n``."""
    inA, inB = _as_predicate(A), _as_predicate(B)

    def one(n):
        net = ex.truncate_free(n)
        An = [v for v in net.vertices if inA(v)]
        Bn = [v for v in net.vertices if inB(v)]
        if not An or not Bn:
            return math.inf
        cnet, _ = contract(net, An, Bn, labels=("<A>", "<B>"))
        if not cnet.is_connected():
            raise PreconditionError(f"G[V_{n}]/A/B is disconnected")
        return free_current(cnet, "<A>", "<B>").resistance

    return _map(one, list(ns), jobs)


def characterization_check(ex: Exhaustion, A, B, n_max: int = 40, ns: Sequence[int] | None = None,
                           threshold: float = 1e-3, flat: float = 1e-4, transience_tol: float = 1e-4,
                           cross_validate: bool = True, jobs: int = 1) -> CharacterizationCertificate:
    """Check two disjoint pieces for transience and a finite-energy potential separating them.

    ``A`` and ``B`` are vertex sets or predicates. The potential exists when
    the contracted free resistance stays above ``threshold`` with the last
    three relative changes below ``flat``.
    """
    inA, inB = _as_predicate(A), _as_predicate(B)
    verts = ex.vertices(n_max)
    An = frozenset(v for v in verts if inA(v))
    Bn = frozenset(v for v in verts if inB(v))
    if An & Bn:
        raise PreconditionError(f"A and B overlap in {sorted(map(repr, An & Bn))[:5]}")
    if not An or not Bn:
        raise PreconditionError(f"A or B has no vertex in V_{n_max}")
    a, b = _pick(ex, inA, n_max), _pick(ex, inB, n_max)
    reasons = []
    trans = []
    for label, keep, root in (("A", inA, a), ("B", inB, b)):
        sub = ex.restrict(keep, name=f"{ex.name}[{label}]")
        try:
            tv = resistance_to_infinity(sub, root, n_max=n_max, tol=transience_tol, nw_recurrent=False)
        except ExhaustionError as exc:
            raise PreconditionError(f"{label} does not induce a connected sub-exhaustion: {exc}") from exc
        trans.append(tv)
        if tv.verdict != "transient":
            reasons.append(f"{label} is not shown transient ({tv.verdict})")
    if ns is None:
        n0 = max(ex.first_index(a), ex.first_index(b))
        ns = default_schedule(n_max, n0)
    vals = contracted_resistance(ex, inA, inB, ns, jobs)
    finite = [(n, v) for n, v in zip(ns, vals) if math.isfinite(v)]
    seq = estimate_limit([n for n, _ in finite], [v for _, v in finite], "non-increasing", math.inf)
    rel = [abs(y - x) / max(abs(y), 1e-300) for x, y in zip(seq.values[-4:], seq.values[-3:])]
    rho = len(seq.values) >= 4 and seq.extrapolated > threshold and all(r < flat for r in rel)
    if not rho:
        reasons.append(f"contracted free resistance {seq.extrapolated:.4g} does not settle above {threshold:g}")
    verdict = "not-in-O_HD-certified" if not reasons else "not-certified"
    cross = None
    if cross_validate:
        cross = gap_test(ex, a, b, n_max=n_max, witness=False, jobs=jobs)
        if verdict == "not-in-O_HD-certified" and cross.verdict == IN:
            log.warning("certificate contradicts the gap test between %r and %r", a, b)
    energy = 1.0 / seq.extrapolated if rho else None
    return CharacterizationCertificate(An, Bn, trans[0], trans[1], seq, rho, energy, verdict, tuple(reasons), cross)


# -- corollaries ------------------------------------------------------------------


@dataclass(frozen=True)
class CutVerdict:
    verdict: str
    """``not-in-O_HD`` or ``inapplicable``."""
    reason: str
    conductance: float
    """Sum of ``1/r`` over the cut."""
    rho: Potential | None
    """The 0/1 potential separating the two sides on the last truncation."""
    rho_energy: float | None
    transience: tuple


def cut_criterion(ex: Exhaustion, F, comp1, comp2, n_max: int = 40,
                  f_conductance: float | None = None) -> CutVerdict:
    """A cut of finite total conductance between two transient pieces excludes the network.

    ``F`` is a finite collection of edge ids or a predicate; for a predicate
    the total conductance must be supplied as ``f_conductance``.
    """
    in1, in2 = _as_predicate(comp1), _as_predicate(comp2)
    if callable(F) and not isinstance(F, (set, frozenset, list, tuple)):
        dropF = F
        if f_conductance is None:
            raise PreconditionError("an implicit cut needs its total conductance")
        total = float(f_conductance)
    else:
        Fset = frozenset(F)
        dropF = Fset.__contains__
        total = None
    net = ex.truncate_free(n_max)
    cut_idx = [i for i, e in enumerate(net.edge_ids) if dropF(e)]
    if total is None:
        total = math.fsum(net.conductance[cut_idx])
    if not math.isfinite(total):
        return CutVerdict("inapplicable", "the cut has infinite conductance", total, None, None, ())
    keep = np.ones(net.n_edges, dtype=bool)
    keep[cut_idx] = False
    rest = Network._from_arrays(net.vertices, [e for e, k in zip(net.edge_ids, keep) if k],
                                net.tail[keep], net.head[keep], net.resistance[keep])
    ncomp, labels = rest.component_labels()
    c1 = _pick(ex, in1, n_max)
    c2 = _pick(ex, in2, n_max)
    l1, l2 = labels[net.index[c1]], labels[net.index[c2]]
    if l1 == l2:
        raise PreconditionError("the two sides are not separated by F")
    rho = Potential(net, (labels == l1).astype(float))
    energy = potential_energy(net, rho)
    cut_ex = ex.without_edges(dropF)
    trans = []
    for keep_fn, root in ((in1, c1), (in2, c2)):
        sub = cut_ex.restrict(keep_fn)
        trans.append(resistance_to_infinity(sub, root, n_max=n_max, nw_recurrent=None))
    if all(t.verdict == "transient" for t in trans):
        return CutVerdict("not-in-O_HD", "both sides transient and the cut has finite conductance",
                          total, rho, energy, tuple(trans))
    bad = [f"side {i + 1}: {t.verdict}" for i, t in enumerate(trans) if t.verdict != "transient"]
    return CutVerdict("inapplicable", "; ".join(bad), total, rho, energy, tuple(trans))


@dataclass(frozen=True)
class TransferReport:
    pairs: tuple
    original: tuple
    """Gap-test verdicts on the original network, one per pair."""
    modified: tuple
    agree: bool
    inconsistent: tuple
    """Pairs where one verdict says in and the other says not in."""


def _compare(ex1: Exhaustion, ex2: Exhaustion, pairs, n_max: int, jobs: int, tol: float) -> TransferReport:
    pairs = tuple(tuple(p) for p in pairs)
    v1 = tuple(gap_test(ex1, p, q, n_max=n_max, tol=tol, jobs=jobs, witness=False) for p, q in pairs)
    v2 = tuple(gap_test(ex2, p, q, n_max=n_max, tol=tol, jobs=jobs, witness=False) for p, q in pairs)
    bad = tuple(pq for pq, a, b in zip(pairs, v1, v2) if {a.verdict, b.verdict} == {IN, NOT_IN})
    if bad:
        log.warning("verdicts disagree for %s: numerical inconsistency", bad)
    agree = all(a.verdict == b.verdict for a, b in zip(v1, v2))
    return TransferReport(pairs, v1, v2, agree, bad)


def deletion_transfer_check(ex: Exhaustion, S, pairs=None, n_max: int = 200, s_conductance: float | None = None,
                            tol: float = 1e-4, jobs: int = 1) -> TransferReport:
    """Compare gap verdicts with and without an edge set ``S`` of finite total conductance.

    A finite ``S`` always qualifies. For a predicate, ``s_conductance`` (or
    ``ex.info["S_conductance_converges"]``) must establish a finite sum;
    otherwise the check refuses with :class:`PreconditionError`.
    """
    if callable(S) and not isinstance(S, (set, frozenset, list, tuple)):
        finite = None
        if s_conductance is not None:
            finite = math.isfinite(s_conductance)
        elif "S_conductance_converges" in ex.info:
            finite = bool(ex.info["S_conductance_converges"])
        if not finite:
            raise PreconditionError("the conductances of S must have a finite sum")
        drop = S
    else:
        drop = frozenset(S).__contains__
    reduced = ex.without_edges(drop)
    if not reduced.truncate_free(n_max).is_connected():
        raise PreconditionError(f"G - S is disconnected in V_{n_max}")
    if pairs is None:
        pairs = [ex.info.get("default_pair") or default_pairs(ex)[0]]
    return _compare(ex, reduced, pairs, n_max, jobs, tol)


def finite_modification_check(ex: Exhaustion, patch: Mapping, pairs=None, n_max: int = 200,
                              tol: float = 1e-4, jobs: int = 1) -> TransferReport:
    """Compare gap verdicts before and after changing finitely many resistances."""
    for e, r in patch.items():
        if not (r > 0 and math.isfinite(r)):
            raise PreconditionError(f"patched resistance for {e!r} must be positive and finite")
    if pairs is None:
        pairs = [ex.info.get("default_pair") or default_pairs(ex)[0]]
    return _compare(ex, ex.with_resistances(patch), pairs, n_max, jobs, tol)


@dataclass(frozen=True)
class SmallFlowResult:
    leak: float
    """Sum of ``|f(s)|`` over the deleted edges carrying the escape flow."""
    intensity: float
    projection: Projection | None
    ok: bool


def small_flow_check(ex: Exhaustion, v, n: int, S) -> SmallFlowResult:
    """Reroute a unit escape flow around deleted edges of small flow.

    When the deleted edges carry at most 1/4 of the flow, a flow towards
    ``v`` of intensity 1/2 bounded edgewise by the original one still exists
    in the truncation without them; it is computed by minimum-energy projection.
    """
    drop = _as_predicate(S)
    f, _ = escape_flow(ex, v, n)
    net = f.network
    idx = [i for i, e in enumerate(net.edge_ids) if drop(e)]
    leak = float(np.abs(f.values[idx]).sum())
    if leak > 0.25 + 1e-12:
        raise PreconditionError(f"the deleted edges carry {leak:.4g} > 1/4 of the flow")
    keep = np.ones(net.n_edges, dtype=bool)
    keep[idx] = False
    sub = Network._from_arrays(net.vertices, [e for e, k in zip(net.edge_ids, keep) if k],
                               net.tail[keep], net.head[keep], net.resistance[keep])
    upper = EdgeFunction(sub, -f.values[keep])
    boundary = [INFINITY] if INFINITY in sub.index else []
    try:
        proj = min_energy_projection(sub, upper, v, 0.5, unconstrained=boundary, tol=1e-9)
    except NetworkError as exc:
        log.info("small-flow projection infeasible: %s", exc)
        return SmallFlowResult(leak, 0.0, None, False)
    acc = accumulations(sub, proj.flow.values)[sub.index[v]]
    return SmallFlowResult(leak, float(acc), proj, bool(acc >= 0.5 - 1e-7))
