"""Parametric infinite networks with known closed-form behaviour."""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .exhaustion import Exhaustion

MAX_PARALLEL = 4096


class UndecidableError(ValueError):
    """Convergence of a series cannot be decided from its description."""


class FamilyError(ValueError):
    pass


@dataclass(frozen=True)
class Series:
    """A positive sequence indexed from 0 with a symbolic tail.

    ``constant``: ``a``; ``geometric``: ``a * q**i``; ``power``: ``a * (i + 1) ** -s``;
    ``prefix``: explicit ``values`` followed by ``tail`` (shifted to start at 0).
    """

    kind: str
    a: float = 1.0
    q: float = 1.0
    s: float = 1.0
    values: tuple = ()
    tail: "Series | None" = None

    def __post_init__(self):
        if self.kind not in ("constant", "geometric", "power", "prefix"):
            raise FamilyError(f"unknown series kind {self.kind!r}")
        if self.kind != "prefix" and not (self.a > 0 and math.isfinite(self.a)):
            raise FamilyError("series scale must be positive and finite")
        if self.kind == "geometric" and not self.q > 0:
            raise FamilyError("geometric ratio must be positive")
        if any(not (v > 0 and math.isfinite(v)) for v in self.values):
            raise FamilyError("series values must be positive and finite")

    @classmethod
    def constant(cls, c: float = 1.0) -> "Series":
        return cls("constant", a=c)

    @classmethod
    def geometric(cls, a: float, q: float) -> "Series":
        return cls("geometric", a=a, q=q)

    @classmethod
    def power(cls, a: float, s: float) -> "Series":
        return cls("power", a=a, s=s)

    @classmethod
    def prefix(cls, values: Sequence[float], tail: "Series | None" = None) -> "Series":
        return cls("prefix", values=tuple(float(v) for v in values), tail=tail)

    def __call__(self, i: int) -> float:
        if i < 0:
            raise IndexError(i)
        if self.kind == "constant":
            return self.a
        if self.kind == "geometric":
            return self.a * self.q ** i
        if self.kind == "power":
            return self.a * (i + 1) ** (-self.s)
        if i < len(self.values):
            return self.values[i]
        if self.tail is None:
            raise IndexError(f"series has only {len(self.values)} terms")
        return self.tail(i - len(self.values))

    def sum_converges(self) -> bool:
        if self.kind == "constant":
            return False
        if self.kind == "geometric":
            return self.q < 1
        if self.kind == "power":
            return self.s > 1
        if self.tail is None:
            raise UndecidableError("explicit prefix without a tail rule")
        return self.tail.sum_converges()

    def total(self) -> float:
        """The sum when a closed form is available, ``inf`` when it diverges."""
        if not self.sum_converges():
            return math.inf
        if self.kind == "geometric":
            return self.a / (1 - self.q)
        if self.kind == "prefix" and self.tail.kind in ("geometric", "prefix"):
            return math.fsum(self.values) + self.tail.total()
        raise UndecidableError("no closed form for this sum")

    def reciprocal(self) -> "Series":
        if self.kind == "constant":
            return Series.constant(1 / self.a)
        if self.kind == "geometric":
            return Series.geometric(1 / self.a, 1 / self.q)
        if self.kind == "power":
            return Series.power(1 / self.a, -self.s)
        return Series.prefix([1 / v for v in self.values], self.tail.reciprocal() if self.tail else None)

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "c": self.a}
        if self.kind == "geometric":
            return {"kind": "geometric", "a": self.a, "q": self.q}
        if self.kind == "power":
            return {"kind": "power", "a": self.a, "s": self.s}
        return {"kind": "prefix", "values": list(self.values), "tail": self.tail.to_dict() if self.tail else None}

    @classmethod
    def from_dict(cls, d) -> "Series":
        if isinstance(d, (int, float)):
            return cls.constant(float(d))
        kind = d.get("kind")
        if kind == "constant":
            return cls.constant(float(d.get("c", d.get("a", 1.0))))
        if kind == "geometric":
            return cls.geometric(float(d["a"]), float(d["q"]))
        if kind == "power":
            return cls.power(float(d["a"]), float(d["s"]))
        if kind == "prefix":
            tail = d.get("tail")
            return cls.prefix(d["values"], cls.from_dict(tail) if tail is not None else None)
        raise FamilyError(f"unknown series kind {kind!r}")


@dataclass(frozen=True)
class ClosedForm:
    in_ohd: bool
    reason: str

    @property
    def verdict(self) -> str:
        return "in-O_HD" if self.in_ohd else "not-in-O_HD"


# -- ladders ------------------------------------------------------------------


@dataclass(frozen=True)
class LadderSpec:
    """Rung ``k`` (1-based) joins ``a{k}`` and ``b{k}``; side edges join consecutive columns."""

    rungs: Series
    side1: Series
    side2: Series


def _col(v: str) -> int:
    return int(v[1:])


def side1(v) -> bool:
    return isinstance(v, str) and v.startswith("a") and v[1:].isdigit()


def side2(v) -> bool:
    return isinstance(v, str) and v.startswith("b") and v[1:].isdigit()


def _ladder_neighbors(spec: LadderSpec, extra: Callable[[str], list] | None = None):
    def neighbors(v):
        side, k = v[0], _col(v)
        other = "b" if side == "a" else "a"
        seq = spec.side1 if side == "a" else spec.side2
        out = [(f"a{k}-b{k}", f"{other}{k}", spec.rungs(k - 1)),
               (f"{side}{k}-{side}{k + 1}", f"{side}{k + 1}", seq(k - 1))]
        if k > 1:
            out.append((f"{side}{k - 1}-{side}{k}", f"{side}{k - 1}", seq(k - 2)))
        if extra is not None:
            out.extend(extra(v))
        return out

    return neighbors


def _ladder_layers(n):
    return [f"a{n}", f"b{n}"]


def ladder_ohd_closed_form(spec: LadderSpec) -> ClosedForm:
    rung_cond = spec.rungs.reciprocal()
    reasons = []
    if not rung_cond.sum_converges():
        reasons.append("the rung conductances have infinite sum")
    if not spec.side1.sum_converges():
        reasons.append("side 1 has infinite total resistance")
    if not spec.side2.sum_converges():
        reasons.append("side 2 has infinite total resistance")
    if reasons:
        return ClosedForm(True, "; ".join(reasons))
    return ClosedForm(False, "finite rung conductance sum and both sides of finite total resistance")


def ladder(spec: LadderSpec, name: str = "ladder") -> Exhaustion:
    """``V_n`` is the first ``n`` columns."""
    closed = ladder_ohd_closed_form(spec)
    info = {
        "ohd": closed,
        "names": {"side1": side1, "side2": side2},
        "default_pair": ("a1", "b1"),
        "default_edge": "a1-b1",
        "default_vertex": "a1",
        "transient_sides": (spec.side1.sum_converges(), spec.side2.sum_converges()),
        "rung_conductance_converges": spec.rungs.reciprocal().sum_converges(),
        # every column {a_k, b_k} with its rung is a barricade of weak diameter r(rung k)
        "wrd_sum_diverges": not spec.rungs.reciprocal().sum_converges(),
        "spec": spec,
    }
    return Exhaustion(_ladder_layers, _ladder_neighbors(spec), name, info)


UNIT_LADDER = LadderSpec(Series.constant(1), Series.constant(1), Series.constant(1))
GEOMETRIC_LADDER = LadderSpec(Series.geometric(1, 2), Series.geometric(1, 0.5), Series.geometric(1, 0.5))
GEOMETRIC_UNIT_SIDE = LadderSpec(Series.geometric(1, 2), Series.geometric(1, 0.5), Series.constant(1))
SUMMABLE_LADDER = LadderSpec(Series.geometric(0.25, 0.5), Series.geometric(0.125, 0.5), Series.geometric(0.125, 0.5))


# -- double rays, trees, grids -------------------------------------------------


def double_ray(res: Series = Series.constant(1), center: str = "vertex", name: str = "double-ray") -> Exhaustion:
    """Integers with edges ``e{i}`` between ``i`` and ``i + 1``.

    With ``center="vertex"`` the truncation ``V_n`` is ``{-(n-1), ..., n-1}``
    and the resistance of an edge depends on its distance from 0. With
    ``center="edge"`` it is ``{-(n-1), ..., n}`` and distances are measured
    from the edge ``e0``.
    """
    if center not in ("vertex", "edge"):
        raise FamilyError("center must be 'vertex' or 'edge'")

    def dist(i):
        if center == "vertex":
            return i if i >= 0 else -i - 1
        return abs(i)

    def neighbors(v):
        return [(f"e{v}", v + 1, res(dist(v))), (f"e{v - 1}", v - 1, res(dist(v - 1)))]

    def layers(n):
        if center == "vertex":
            return [0] if n == 1 else [-(n - 1), n - 1]
        return [0, 1] if n == 1 else [-(n - 1), n]

    transient_ends = res.sum_converges()
    info = {
        "default_pair": (0, 1),
        "default_vertex": 0,
        "default_edge": "e0",
        "nw_recurrent": not transient_ends,
        "ohd": ClosedForm(not transient_ends, "a double ray with finite total resistance has two transient ends"
                          if transient_ends else "both ends recurrent"),
        "names": {"left": lambda v: isinstance(v, int) and v <= 0, "right": lambda v: isinstance(v, int) and v >= 1},
    }
    return Exhaustion(layers, neighbors, name, info)


def binary_tree(res: Series = Series.constant(1), name: str = "binary-tree") -> Exhaustion:
    """Rooted binary tree; ``V_n`` is the tree of depth ``n - 1``.

    Vertices are ``"root"`` and binary strings, edge ``"e:" + child`` joins a
    vertex to its child with resistance ``res(depth(child) - 1)``.
    """

    def neighbors(v):
        if v == "root":
            return [("e:0", "0", res(0)), ("e:1", "1", res(0))]
        d = len(v)
        out = [(f"e:{v}", v[:-1] or "root", res(d - 1))]
        out += [(f"e:{v}{b}", f"{v}{b}", res(d)) for b in "01"]
        return out

    def layers(n):
        if n == 1:
            return ["root"]
        return ["".join(bits) for bits in itertools.product("01", repeat=n - 1)]

    # resistance from the root to infinity is sum_k res(k) / 2^(k+1)
    transient = _tree_transient(res)
    info = {
        "default_pair": ("0", "1"),
        "default_vertex": "root",
        "default_edge": "e:0",
        "max_n": 16,
        "nw_recurrent": not transient if transient is not None else None,
        "names": {"left": lambda v: v == "root" or v.startswith("0"), "right": lambda v: v.startswith("1")},
    }
    return Exhaustion(layers, neighbors, name, info)


def _tree_transient(res: Series):
    if res.kind == "constant":
        return True
    if res.kind == "geometric":
        return res.q < 2
    return None


def grid(d: int = 2, res: float = 1.0, name: str | None = None) -> Exhaustion:
    """``Z^d`` with constant resistance; ``V_n`` is the L1 ball of radius ``n - 1``."""
    if d < 1:
        raise FamilyError("dimension must be positive")
    origin = (0,) * d

    def neighbors(v):
        out = []
        for axis in range(d):
            up = v[:axis] + (v[axis] + 1,) + v[axis + 1:]
            down = v[:axis] + (v[axis] - 1,) + v[axis + 1:]
            out.append(((v, axis), up, res))
            out.append(((down, axis), down, res))
        return out

    def layers(n):
        return list(_sphere(d, n - 1))

    info = {
        "max_n": {1: 100_000, 2: 200, 3: 40}.get(d, 12),
        "default_pair": (origin, (1,) + (0,) * (d - 1)),
        "default_vertex": origin,
        "default_edge": (origin, 0),
        "nw_recurrent": d <= 2,
        "ohd": ClosedForm(True, "Z^d with constant resistances has no non-constant harmonic Dirichlet functions"),
    }
    return Exhaustion(layers, neighbors, name or f"grid{d}", info)


def _sphere(d: int, radius: int):
    """Lattice points with L1 norm exactly ``radius``."""
    if d == 1:
        yield from (((radius,), (-radius,)) if radius else ((0,),))
        return
    for first in range(-radius, radius + 1):
        for rest in _sphere(d - 1, radius - abs(first)):
            yield (first,) + rest


def join(ex1: Exhaustion, ex2: Exhaustion, u, v, r: float = 1.0, name: str = "joined") -> Exhaustion:
    """Disjoint union of two exhaustions plus an edge ``"join"`` from ``(0, u)`` to ``(1, v)``."""

    def neighbors(x):
        side, y = x
        base = ex1 if side == 0 else ex2
        out = [((side, e), (side, w), rr) for e, w, rr in base.neighbors(y)]
        if (side, y) == (0, u):
            out.append(("join", (1, v), r))
        if (side, y) == (1, v):
            out.append(("join", (0, u), r))
        return out

    def layers(n):
        return [(0, x) for x in ex1._layers(n)] + [(1, x) for x in ex2._layers(n)]

    info = {
        "default_pair": ((0, u), (1, v)),
        "default_vertex": (0, u),
        "default_edge": "join",
        "names": {"left": lambda x: x[0] == 0, "right": lambda x: x[0] == 1},
        "cut": ("join",),
    }
    limits = [x.info["max_n"] for x in (ex1, ex2) if "max_n" in x.info]
    if limits:
        info["max_n"] = min(limits)
    return Exhaustion(layers, neighbors, name, info)


# -- the two deletion counterexamples ------------------------------------------------


def counterexample_N1(rungs: Series = Series.constant(1)) -> Exhaustion:
    """A ladder whose rungs beyond the first form ``S``.

    Without ``S`` it is a double ray ``... a2 a1 b1 b2 ...`` of total resistance 1:
    the first rung has resistance 1/2 and each side sums to 1/4.
    """
    rung_seq = Series.prefix([0.5], rungs)
    spec = LadderSpec(rung_seq, Series.geometric(0.125, 0.5), Series.geometric(0.125, 0.5))
    ex = ladder(spec, "N1")

    def in_S(e) -> bool:
        if not isinstance(e, str) or not e.startswith("a") or "-b" not in e:
            return False
        return int(e[1:e.index("-")]) >= 2

    ex.info.update({
        "S": in_S,
        "S_conductance_converges": rungs.reciprocal().sum_converges(),
        "wrd_sum_diverges": not rungs.reciprocal().sum_converges(),
        "minus_S_ohd": ClosedForm(False, "a double ray of finite total resistance: two transient ends joined by one edge"),
    })
    return ex


class _Partition:
    """Greedy split of a divergent conductance sequence into blocks of sum at least ``2**i``."""

    def __init__(self, conductances: Series, cap: int):
        self.c = conductances
        self.cap = cap
        self.blocks: list[list[float]] = []
        self.next = 0

    def block(self, i: int) -> list[float]:
        while len(self.blocks) <= i:
            target = 2.0 ** len(self.blocks)
            acc, blk = 0.0, []
            while acc < target:
                if len(blk) >= self.cap:
                    raise FamilyError(f"block {len(self.blocks)} needs more than {self.cap} parallel edges")
                x = self.c(self.next)
                self.next += 1
                blk.append(x)
                acc += x
            self.blocks.append(blk)
        return self.blocks[i]


def counterexample_N2(s_conductances: Series = Series.geometric(1, 2), cap: int = MAX_PARALLEL) -> Exhaustion:
    """A ladder with ``sum 1/r = 1`` plus parallel edges ``S`` that make both sides transient.

    Horizontal edge ``e_{2m}`` is ``a{m+1}-a{m+2}`` and ``e_{2m+1}`` is
    ``b{m+1}-b{m+2}``. The block ``H_i`` of ``S`` (ids ``h{i}.{j}``) has total
    conductance at least ``2**i`` and is attached in parallel to ``e_i``.
    """
    if s_conductances.sum_converges():
        raise FamilyError("the conductances of S must have infinite sum")
    part = _Partition(s_conductances, cap)
    rungs = Series.geometric(4, 2)       # rung k: 2^(k+1)
    sides = Series.geometric(8, 2)       # side edge between columns k, k+1: 2^(k+2)
    spec = LadderSpec(rungs, sides, sides)

    def extra(v):
        side, k = v[0], _col(v)
        off = 0 if side == "a" else 1
        other = "a" if side == "a" else "b"
        out = []
        for m, w in ((k - 1, f"{other}{k + 1}"), (k - 2, f"{other}{k - 1}")):
            if m < 0:
                continue
            i = 2 * m + off
            for j, c in enumerate(part.block(i)):
                out.append((f"h{i}.{j}", w, 1.0 / c))
        return out

    ex = Exhaustion(_ladder_layers, _ladder_neighbors(spec, extra), "N2", {
        "names": {"side1": side1, "side2": side2},
        "default_pair": ("a1", "b1"),
        "default_edge": "a1-b1",
        "default_vertex": "a1",
        "S": lambda e: isinstance(e, str) and e.startswith("h"),
        "S_conductance_converges": False,
        "ohd": ClosedForm(False, "both sides have summable effective resistance and the rung conductances sum to 1/2"),
        "minus_S_ohd": ladder_ohd_closed_form(spec),
        "base_spec": spec,
    })
    return ex


# -- registry ------------------------------------------------------------------


def _registry() -> dict[str, Callable[[], Exhaustion]]:
    return {
        "ladder:unit": lambda: ladder(UNIT_LADDER, "ladder:unit"),
        "ladder:geometric": lambda: ladder(GEOMETRIC_LADDER, "ladder:geometric"),
        "ladder:geometric-unit-side": lambda: ladder(GEOMETRIC_UNIT_SIDE, "ladder:geometric-unit-side"),
        "ladder:summable": lambda: _summable(),
        "dray:unit": lambda: double_ray(Series.constant(1), "vertex", "dray:unit"),
        "dray:summable": lambda: double_ray(Series.geometric(0.5, 0.5), "edge", "dray:summable"),
        "btree:unit": lambda: binary_tree(Series.constant(1), "btree:unit"),
        "grid:2": lambda: grid(2, 1.0, "grid:2"),
        "grid:3": lambda: grid(3, 1.0, "grid:3"),
        "n1": lambda: counterexample_N1(),
        "n2": lambda: counterexample_N2(),
        "trees-joined": lambda: _joined_trees(),
        "rays-joined": lambda: join(double_ray(), double_ray(), 0, 0, 1.0, "rays-joined"),
    }


def _summable() -> Exhaustion:
    ex = ladder(SUMMABLE_LADDER, "ladder:summable")
    ex.info["total_resistance"] = SUMMABLE_LADDER.rungs.total() + SUMMABLE_LADDER.side1.total() + SUMMABLE_LADDER.side2.total()
    return ex


def _joined_trees() -> Exhaustion:
    ex = join(binary_tree(), binary_tree(), "root", "root", 1.0, "trees-joined")
    ex.info["ohd"] = ClosedForm(False, "two transient trees joined by a single edge")
    return ex


FAMILIES = tuple(_registry())


def build(name: str) -> Exhaustion:
    reg = _registry()
    if name not in reg:
        raise FamilyError(f"unknown family {name!r}; choose from {', '.join(reg)}")
    return reg[name]()


def from_spec(data: dict | str) -> Exhaustion:
    """Build a family from a JSON object (or its text).

    Keys: ``family`` (``ladder``, ``double_ray``, ``binary_tree``, ``grid``,
    ``n1``, ``n2`` or a registry name) and family parameters given as series
    objects, e.g. ``{"family": "ladder", "rungs": {"kind": "geometric", "a": 1, "q": 2},
    "side1": 1, "side2": {"kind": "power", "a": 1, "s": 2}}``.
    """
    if isinstance(data, str):
        data = json.loads(data)
    fam = data.get("family")
    if fam == "ladder":
        spec = LadderSpec(*(Series.from_dict(data.get(k, 1.0)) for k in ("rungs", "side1", "side2")))
        return ladder(spec, data.get("name", "ladder"))
    if fam == "double_ray":
        return double_ray(Series.from_dict(data.get("resistances", 1.0)), data.get("center", "vertex"))
    if fam == "binary_tree":
        return binary_tree(Series.from_dict(data.get("resistances", 1.0)))
    if fam == "grid":
        return grid(int(data.get("d", 2)), float(data.get("resistance", 1.0)))
    if fam == "n1":
        return counterexample_N1(Series.from_dict(data.get("rungs", 1.0)))
    if fam == "n2":
        return counterexample_N2(Series.from_dict(data.get("s_conductances", {"kind": "geometric", "a": 1, "q": 2})))
    if fam in _registry():
        return build(fam)
    raise FamilyError(f"unknown family {fam!r}")
