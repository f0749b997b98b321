"""Free and wired currents, their limits along an exhaustion, and energy tools."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linprog

from .exhaustion import Exhaustion, ExhaustionError
from .network import EdgeFunction, Network, NetworkError, Potential
from .solvers import solve_dirichlet

log = logging.getLogger(__name__)

DEFAULT_CAP = 1e6
MONOTONE_SLACK = 1e-10


class CurrentError(NetworkError):
    pass


class MonotonicityError(RuntimeError):
    """A resistance sequence moved against Rayleigh monotonicity: a solver bug."""


class InfeasibleError(CurrentError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class DirichletSolution:
    potential: Potential
    flow: EdgeFunction
    residual: float
    method: str


def dirichlet_solve(net: Network, boundary: Mapping, method: str = "auto") -> DirichletSolution:
    """Harmonic extension of ``boundary`` (vertex -> value) to all of ``net``."""
    idx = [net.vertex_index(v) for v in boundary]
    res = solve_dirichlet(net, idx, list(boundary.values()), method)
    return DirichletSolution(Potential(net, res.values), EdgeFunction(net, res.flows), res.residual, res.method)


@dataclass(frozen=True)
class CurrentSolution:
    network: Network
    p: object
    q: object
    potential: Potential
    flow: EdgeFunction
    intensity: float
    voltage: float
    resistance: float
    energy: float
    residual: float
    method: str = "sparse"

    def scaled(self, k: float) -> "CurrentSolution":
        return CurrentSolution(self.network, self.p, self.q, self.potential * k, self.flow * k,
                               self.intensity * k, self.voltage * k, self.resistance,
                               self.energy * k * k, self.residual * abs(k), self.method)


def _unit_current(net: Network, p, q, method: str) -> CurrentSolution:
    if p == q:
        raise CurrentError("terminals must differ")
    ip, iq = net.vertex_index(p), net.vertex_index(q)
    res = solve_dirichlet(net, [ip, iq], [1.0, 0.0], method)
    g = res.conductance
    if g is None or not g > 0:
        raise CurrentError(f"no current flows between {p!r} and {q!r}")
    flows = res.flows
    e = float(np.dot(net.resistance, flows * flows))
    return CurrentSolution(net, p, q, Potential(net, res.values), EdgeFunction(net, flows),
                           g, 1.0, 1.0 / g, e, res.residual, res.method)


def free_current(net: Network, p, q, U: float = 1.0, method: str = "auto") -> CurrentSolution:
    """Potential difference ``U`` between ``p`` and ``q`` on a finite network."""
    return _unit_current(net, p, q, method).scaled(U)


def current_with_intensity(net: Network, p, q, I: float = 1.0, method: str = "auto") -> CurrentSolution:
    unit = _unit_current(net, p, q, method)
    return unit.scaled(I / unit.intensity)


def wired_current(ex: Exhaustion, n: int, p, q, I: float = 1.0, method: str = "auto") -> CurrentSolution:
    """Unit-wired current of intensity ``I`` on ``V_n`` with the outside collapsed."""
    for x in (p, q):
        if not ex.contains(x, n):
            raise CurrentError(f"terminal {x!r} is not in V_{n}")
    net, _ = ex.truncate_wired(n)
    return current_with_intensity(net, p, q, I, method)


def free_truncation_current(ex: Exhaustion, n: int, p, q, U: float = 1.0, method: str = "auto") -> CurrentSolution:
    for x in (p, q):
        if not ex.contains(x, n):
            raise CurrentError(f"terminal {x!r} is not in V_{n}")
    return free_current(ex.truncate_free(n), p, q, U, method)


# -- limits ---------------------------------------------------------------


@dataclass(frozen=True)
class LimitEstimate:
    ns: tuple
    values: tuple
    direction: str
    """``non-increasing``, ``non-decreasing`` or ``none``."""
    verdict: str
    """``converged``, ``diverged`` or ``undecided``."""
    extrapolated: float
    tol: float
    cap: float

    @property
    def last(self) -> float:
        return self.values[-1]

    def as_rows(self):
        return list(zip(self.ns, self.values))


def default_schedule(n_max: int, n_min: int = 1, dense: int = 20, points: int = 40) -> list[int]:
    """Every ``n`` up to ``dense``, then about ``points`` evenly spaced ``n``, ending in three consecutive ones."""
    if n_max < n_min:
        raise ValueError("n_max below n_min")
    ns = list(range(n_min, min(n_max, n_min + dense - 1) + 1))
    if ns[-1] < n_max:
        step = max(1, (n_max - ns[-1]) // points)
        ns.extend(range(ns[-1] + step, n_max + 1, step))
    tail = [n for n in (n_max - 2, n_max - 1, n_max) if n >= n_min]
    return sorted(set(ns) | set(tail))


def _geometric_tail(values: Sequence[float]) -> float:
    if len(values) < 4:
        return 0.0
    d = np.diff(np.asarray(values[-4:], dtype=float))
    if d[-1] == 0:
        return 0.0
    ratios = [d[i + 1] / d[i] for i in range(2) if d[i] != 0]
    if not ratios:
        return 0.0
    r = max(ratios)
    if 0 <= r < 1:
        return float(d[-1] * r / (1 - r))
    return 0.0


def estimate_limit(ns: Sequence[int], values: Sequence[float], direction: str = "none",
                   tol: float = 1e-6, cap: float = DEFAULT_CAP, check: bool = True) -> LimitEstimate:
    """Classify a monotone sequence as converged, diverged or undecided.

    Converged means the last three successive differences are below ``tol``.
    Diverged means some value exceeds ``cap``. A move against ``direction``
    larger than a tiny relative slack raises :class:`MonotonicityError`.
    """
    vals = [float(v) for v in values]
    if check and direction != "none":
        sgn = 1 if direction == "non-decreasing" else -1
        for (n0, a), (n1, b) in zip(zip(ns, vals), zip(ns[1:], vals[1:])):
            if math.isinf(a) or math.isinf(b):
                continue
            if sgn * (b - a) < -MONOTONE_SLACK * max(1.0, abs(a)):
                raise MonotonicityError(f"sequence not {direction}: {a!r} at n={n0} then {b!r} at n={n1}")
    if any(math.isinf(v) or abs(v) > cap for v in vals):
        return LimitEstimate(tuple(ns), tuple(vals), direction, "diverged", math.inf, tol, cap)
    verdict = "undecided"
    if len(vals) >= 4 and all(abs(d) < tol for d in np.diff(vals[-4:])):
        verdict = "converged"
    extra = vals[-1] + _geometric_tail(vals) if vals else math.nan
    return LimitEstimate(tuple(ns), tuple(vals), direction, verdict, extra, tol, cap)


def _map(fn, items, jobs: int):
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _schedule(ex: Exhaustion, p, q, n_max: int, ns):
    n0 = max(ex.first_index(p), ex.first_index(q))
    if ns is None:
        ns = default_schedule(n_max, n0)
    ns = sorted(n for n in ns if n >= n0)
    if not ns:
        raise ExhaustionError(f"no truncation index >= {n0} requested")
    ex.ensure(ns[-1])
    return ns


def free_resistances(ex: Exhaustion, p, q, ns: Iterable[int], jobs: int = 1) -> list[CurrentSolution]:
    ns = list(ns)
    ex.ensure(max(ns))
    return _map(lambda n: free_truncation_current(ex, n, p, q), ns, jobs)


def wired_resistances(ex: Exhaustion, p, q, ns: Iterable[int], jobs: int = 1) -> list[CurrentSolution]:
    ns = list(ns)
    ex.ensure(max(ns))
    return _map(lambda n: wired_current(ex, n, p, q), ns, jobs)


def free_limit(ex: Exhaustion, p, q, U: float = 1.0, n_max: int = 200, tol: float = 1e-6,
               cap: float = DEFAULT_CAP, ns=None, jobs: int = 1) -> LimitEstimate:
    """``R_F`` along the exhaustion (independent of ``U``)."""
    ns = _schedule(ex, p, q, n_max, ns)
    sols = free_resistances(ex, p, q, ns, jobs)
    return estimate_limit(ns, [s.resistance for s in sols], "non-increasing", tol, cap)


def wired_limit(ex: Exhaustion, p, q, I: float = 1.0, n_max: int = 200, tol: float = 1e-6,
                cap: float = DEFAULT_CAP, ns=None, jobs: int = 1) -> LimitEstimate:
    """``R_W`` along the exhaustion (independent of ``I``)."""
    ns = _schedule(ex, p, q, n_max, ns)
    sols = wired_resistances(ex, p, q, ns, jobs)
    return estimate_limit(ns, [s.resistance for s in sols], "non-decreasing", tol, cap)


@dataclass
class Sweep:
    ns: list
    free: list
    wired: list

    def rows(self) -> list[dict]:
        out = []
        for n, f, w in zip(self.ns, self.free, self.wired):
            out.append({"n": n, "R_F": f.resistance, "R_W": w.resistance, "gap": f.resistance - w.resistance,
                        "energy": f.energy, "residual": max(f.residual, w.residual)})
        return out


def sweep(ex: Exhaustion, p, q, n_max: int = 200, ns=None, jobs: int = 1) -> Sweep:
    ns = _schedule(ex, p, q, n_max, ns)
    return Sweep(ns, free_resistances(ex, p, q, ns, jobs), wired_resistances(ex, p, q, ns, jobs))


# -- minimum-energy projection --------------------------------------------


@dataclass(frozen=True)
class Projection:
    flow: EdgeFunction
    energy: float
    iterations: int
    violation: float
    """Largest shortfall of a lower accumulation bound."""


def _oriented(net: Network, upper: EdgeFunction):
    """Edge orientation along ``upper`` and the box widths."""
    u = upper.values
    s = np.where(u >= 0, 1.0, -1.0)
    src = np.where(s > 0, net.tail, net.head)
    dst = np.where(s > 0, net.head, net.tail)
    return s, np.abs(u), src, dst


def min_energy_projection(net: Network, upper: EdgeFunction, a, I: float, unconstrained: Iterable = (),
                          tol: float = 1e-9, max_iter: int = 500_000) -> Projection:
    """Least-energy ``g`` with ``0 <= g <= upper`` edgewise (along the sign of ``upper``).

    Constraints: accumulation at ``a`` at least ``I`` and non-negative at every
    other vertex except those in ``unconstrained``. Solved by accelerated
    projected gradient ascent on the dual, with step ``1/L`` where ``L`` is the
    largest weighted degree.
    """
    if upper.network is not net and upper.network.edge_ids != net.edge_ids:
        upper = upper.aligned(net)
    s, ub, src, dst = _oriented(net, upper)
    n = net.n_vertices
    ia = net.vertex_index(a)
    free_mask = np.zeros(n, dtype=bool)
    for v in unconstrained:
        free_mask[net.vertex_index(v)] = True
    if free_mask[ia]:
        raise CurrentError("the target vertex cannot be unconstrained")
    cons = np.flatnonzero(~free_mask)
    b = np.zeros(n)
    b[ia] = I
    _check_feasible(n, ub, src, dst, cons, b)
    r = net.resistance
    c = net.conductance

    def primal(lam):
        return np.clip((lam[dst] - lam[src]) * c / 2.0, 0.0, ub)

    def acc_of(x):
        acc = np.zeros(n)
        np.add.at(acc, dst, x)
        np.subtract.at(acc, src, x)
        return acc

    wdeg = np.zeros(n)
    np.add.at(wdeg, net.tail, c)
    np.add.at(wdeg, net.head, c)
    L = max(float(wdeg.max()), 1e-300)
    lam = np.zeros(n)
    y = lam.copy()
    t = 1.0
    history = []
    it = 0
    viol = math.inf
    x = primal(lam)
    for it in range(1, max_iter + 1):
        x = primal(y)
        grad = b - acc_of(x)
        grad[free_mask] = 0.0
        lam_new = np.maximum(y + grad / L, 0.0)
        lam_new[free_mask] = 0.0
        t_new = (1 + math.sqrt(1 + 4 * t * t)) / 2
        y = lam_new + ((t - 1) / t_new) * (lam_new - lam)
        lam, t = lam_new, t_new
        if it % 10 == 0:
            x = primal(lam)
            acc = acc_of(x)
            short = b[cons] - acc[cons]
            viol = float(max(short.max(initial=0.0), 0.0))
            e = float(np.dot(r, x * x))
            history.append(e)
            if viol < tol * max(1.0, abs(I)) and len(history) > 5:
                ref = history[-6]
                if abs(e - ref) <= 1e-10 * max(abs(e), 1e-300):
                    break
    else:
        raise ConvergenceError(f"projection did not converge in {max_iter} iterations (violation {viol:.3g})")
    x = primal(lam)
    acc = acc_of(x)
    viol = float(max((b[cons] - acc[cons]).max(initial=0.0), 0.0))
    return Projection(EdgeFunction(net, s * x), float(np.dot(r, x * x)), it, viol)


def _check_feasible(n, ub, src, dst, cons, b):
    m = ub.size
    if m == 0:
        if np.any(b[cons] > 0):
            raise InfeasibleError("no edges to carry the required accumulation")
        return
    A = np.zeros((cons.size, m))
    row = {int(v): i for i, v in enumerate(cons)}
    for e in range(m):
        if int(dst[e]) in row:
            A[row[int(dst[e])], e] += 1.0
        if int(src[e]) in row:
            A[row[int(src[e])], e] -= 1.0
    res = linprog(np.zeros(m), A_ub=-A, b_ub=-b[cons], bounds=list(zip(np.zeros(m), ub)), method="highs")
    if res.status == 2:
        raise InfeasibleError("the feasible set is empty")
    if res.status != 0:
        log.warning("feasibility check inconclusive: %s", res.message)


# -- raising the free energy by finitely many resistances --------------------


@dataclass(frozen=True)
class EnergyRaise:
    edges: tuple
    """Edge ids whose resistance changes."""
    resistances: dict
    """New resistance per edge in ``edges``."""
    energy: float
    """Free-current energy at intensity ``I`` after the change (re-solved)."""
    epsilon: float
    factor: float


def raise_free_energy(net: Network, rho: Potential, p, q, I: float, n_target: float,
                      method: str = "auto") -> EnergyRaise:
    """Inflate resistances on a finite edge set so the free current of intensity ``I`` has energy at least ``n_target``.

    Edges on which ``rho`` is level are never touched.
    """
    if rho.vertices != net.vertices:
        rho = rho.on(net)
    U = rho[p] - rho[q]
    if U == 0:
        raise CurrentError("rho must separate the terminals")
    base = current_with_intensity(net, p, q, I, method)
    if base.energy >= n_target:
        return EnergyRaise((), {}, base.energy, math.nan, 1.0)
    eps = U * U * I * I / n_target
    d = rho.values[net.tail] - rho.values[net.head]
    per_edge = net.conductance * d * d
    order = np.argsort(-per_edge, kind="stable")
    total = math.fsum(per_edge)
    chosen = []
    rest = total
    for k in order:
        if rest < eps / 2 or per_edge[k] == 0:
            break
        chosen.append(int(k))
        rest -= per_edge[k]
    on_d = math.fsum(per_edge[chosen])
    factor = max(1.0, 4.0 * on_d / eps)
    patch = {net.edge_ids[k]: float(net.resistance[k] * factor) for k in chosen}
    for attempt in range(60):
        sol = current_with_intensity(net.with_resistances(patch), p, q, I, method)
        if sol.energy >= n_target:
            return EnergyRaise(tuple(patch), patch, sol.energy, eps, factor)
        factor *= 2
        patch = {net.edge_ids[k]: float(net.resistance[k] * factor) for k in chosen}
    raise CurrentError("could not raise the free energy to the target")
