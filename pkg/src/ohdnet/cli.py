"""Command-line front end: ``ohdnet {gap,transience,barricade,certify,families}``."""
from __future__ import annotations

import argparse
import ast
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import families
from .barricades import find_barricades, satz_check
from .currents import DEFAULT_CAP, free_truncation_current
from .exhaustion import Exhaustion, read_exhaustion
from .network import NetworkError, read_network
from .ohd import IN, NOT_IN, characterization_check, gap_test
from .reports import BARRICADE_COLUMNS, GAP_COLUMNS, TRANSIENCE_COLUMNS, write_csv, write_json
from .transience import ball_layers, nash_williams_partial_sums, resistance_to_infinity, transience_rows

log = logging.getLogger("ohdnet")

EXIT_OK, EXIT_ERROR, EXIT_UNDECIDED = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    family: str | None
    network: str | None
    exhaustion: str | None
    n_max: int
    tol: float
    cap: float
    out: Path
    seed: int
    jobs: int

    def __post_init__(self):
        if self.n_max < 1:
            raise UsageError("--nmax must be at least 1")
        if not self.tol > 0:
            raise UsageError("--tol must be positive")
        if (self.family is None) == (self.network is None):
            raise UsageError("give exactly one of --family and --network")


def _config(args) -> RunConfig:
    return RunConfig(args.command, args.family, args.network, args.exhaustion, args.nmax, args.tol,
                     args.cap, Path(args.out), args.seed, args.jobs)


def load(cfg: RunConfig) -> Exhaustion:
    if cfg.family is not None:
        if cfg.family.strip().startswith("{") or cfg.family.endswith(".json"):
            text = Path(cfg.family).read_text(encoding="utf-8") if cfg.family.endswith(".json") else cfg.family
            return families.from_spec(text)
        return families.build(cfg.family)
    net = read_network(cfg.network)
    if cfg.exhaustion:
        return read_exhaustion(cfg.exhaustion, net)
    return Exhaustion.from_network(net, name=Path(cfg.network).stem)


def clamp(ex: Exhaustion, n_max: int) -> int:
    limit = ex.info.get("max_n")
    if limit is None and ex.info.get("finite"):
        limit = ex.info.get("depth")
    if limit is not None and n_max > limit:
        log.warning("--nmax %d exceeds the limit %d for %s; using %d", n_max, limit, ex.name, limit)
        return int(limit)
    return n_max


def resolve_vertex(ex: Exhaustion, token: str, n: int):
    """Map a command-line token to a vertex label present in ``V_n``."""
    candidates = [token]
    try:
        candidates.append(ast.literal_eval(token))
    except (ValueError, SyntaxError):
        pass
    for c in candidates:
        try:
            if ex.contains(c, n):
                return c
        except (TypeError, KeyError, AttributeError):
            continue
    raise UsageError(f"vertex {token!r} is not in V_{n}")


def _pair(ex: Exhaustion, text: str | None, n: int):
    if text is None:
        if "default_pair" not in ex.info:
            raise UsageError("missing --pair (no default for this network)")
        return ex.info["default_pair"]
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"--pair expects 'p,q', got {text!r}")
    return tuple(resolve_vertex(ex, t.strip(), n) for t in parts)


def _common(cfg: RunConfig) -> dict:
    return {"family": cfg.family, "network": cfg.network, "n_max": cfg.n_max, "seed": cfg.seed}


def cmd_gap(cfg: RunConfig, args) -> int:
    ex = load(cfg)
    n_max = clamp(ex, cfg.n_max)
    p, q = _pair(ex, args.pair, n_max)
    v = gap_test(ex, p, q, n_max=n_max, tol=cfg.tol, cap=cfg.cap, jobs=cfg.jobs)
    write_csv(cfg.out / "gap.csv", v.rows, GAP_COLUMNS)
    write_json(cfg.out / "verdict.json", "gap", {
        **_common(cfg), "n_max": n_max, "p": p, "q": q, "verdict": v.verdict, "tol": cfg.tol,
        "R_F": v.free.extrapolated, "R_W": v.wired.extrapolated, "gap": v.gap.extrapolated,
        "free_status": v.free.verdict, "wired_status": v.wired.verdict,
        "witness_spread": v.witness.spread if v.witness else None,
        "closed_form": _closed_form(ex),
    })
    print(f"{ex.name} {p!r}-{q!r}: R_F={v.free.last:.10g} R_W={v.wired.last:.10g} gap={v.gap.last:.3g} -> {v.verdict}")
    return EXIT_OK if v.verdict in (IN, NOT_IN) else EXIT_UNDECIDED


def _closed_form(ex: Exhaustion):
    cf = ex.info.get("ohd")
    return None if cf is None else {"verdict": cf.verdict, "reason": cf.reason}


def cmd_transience(cfg: RunConfig, args) -> int:
    ex = load(cfg)
    n_max = clamp(ex, cfg.n_max)
    if args.vertex is None:
        if "default_vertex" not in ex.info:
            raise UsageError("missing --vertex (no default for this network)")
        v = ex.info["default_vertex"]
    else:
        v = resolve_vertex(ex, args.vertex, n_max)
    tv = resistance_to_infinity(ex, v, n_max=n_max, cap=cfg.cap, tol=cfg.tol, jobs=cfg.jobs)
    try:
        nw = nash_williams_partial_sums(ex, v, ball_layers(ex, v, max(tv.sequence.ns)))
    except NetworkError as exc:
        log.info("no Nash-Williams column: %s", exc)
        nw = None
    write_csv(cfg.out / "transience.csv", transience_rows(tv, nw), TRANSIENCE_COLUMNS)
    write_json(cfg.out / "verdict.json", "transience", {
        **_common(cfg), "n_max": n_max, "vertex": v, "verdict": tv.verdict, "resistance": tv.resistance,
        "status": tv.sequence.verdict, "witness_n": tv.witness_n, "witness_energy": tv.witness_energy,
    })
    print(f"{ex.name} {v!r}: R={tv.resistance:.10g} -> {tv.verdict}")
    return EXIT_OK if tv.verdict != "undecided" else EXIT_UNDECIDED


def cmd_barricade(cfg: RunConfig, args) -> int:
    ex = load(cfg)
    e = args.edge if args.edge is not None else ex.info.get("default_edge")
    if e is None:
        raise UsageError("missing --edge (no default for this network)")
    if args.edge is not None:
        try:
            e = ast.literal_eval(args.edge)
        except (ValueError, SyntaxError):
            e = args.edge
    limit = ex.info.get("max_n", 4096)
    search = find_barricades(ex, e, args.count, n_limit=limit)
    net = ex.truncate_free(search.n)
    u, w = net.endpoints(e)
    h = free_truncation_current(ex, search.n, u, w).potential
    verdict = satz_check(ex, e, search.barricades, search.n, h=h)
    write_csv(cfg.out / "barricades.csv", verdict.rows, BARRICADE_COLUMNS)
    write_json(cfg.out / "verdict.json", "barricade", {
        **_common(cfg), "edge": e, "count": args.count, "found": len(search.barricades), "complete": search.complete,
        "truncation": search.n, "certified": verdict.certified, "conclusion": verdict.conclusion,
        "flagged": verdict.flagged,
        "partial_sum": verdict.rows[-1]["partial_sum"] if verdict.rows else 0.0,
    })
    last = verdict.rows[-1]["partial_sum"] if verdict.rows else 0.0
    print(f"{ex.name} {e!r}: {len(search.barricades)} barricades, sum 1/wRD = {last:.6g}; {verdict.conclusion}")
    return EXIT_OK if verdict.certified and search.complete else EXIT_UNDECIDED


def _vertex_set(ex: Exhaustion, spec: str, n: int):
    names = ex.info.get("names", {})
    if spec in names:
        return names[spec]
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"{spec!r} is neither a named set ({', '.join(names) or 'none'}) nor a file")
    tokens = path.read_text(encoding="utf-8").split()
    return frozenset(resolve_vertex(ex, t, n) for t in tokens)


def cmd_certify(cfg: RunConfig, args) -> int:
    ex = load(cfg)
    n_max = clamp(ex, cfg.n_max)
    A = _vertex_set(ex, args.A, n_max)
    B = _vertex_set(ex, args.B, n_max)
    cert = characterization_check(ex, A, B, n_max=n_max, jobs=cfg.jobs)
    write_csv(cfg.out / "contracted.csv",
              ({"n": n, "R_F": r} for n, r in cert.contracted.as_rows()), ("n", "R_F"))
    write_json(cfg.out / "verdict.json", "certify", {
        **_common(cfg), "n_max": n_max, "verdict": cert.verdict, "reasons": list(cert.reasons),
        "transience_A": cert.transience_A.verdict if cert.transience_A else None,
        "transience_B": cert.transience_B.verdict if cert.transience_B else None,
        "contracted_R_F": cert.contracted.extrapolated, "rho_energy": cert.rho_energy,
        "cross_check": cert.cross_check.verdict if cert.cross_check else None,
    })
    print(f"{ex.name}: {cert.verdict}" + "".join(f"\n  {r}" for r in cert.reasons))
    return EXIT_OK if cert.positive else EXIT_UNDECIDED


def cmd_families(cfg, args) -> int:
    for name in families.FAMILIES:
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ohdnet", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, nmax=200, tol=1e-4):
        p.add_argument("--family", help="registry name, JSON spec text or a .json spec file")
        p.add_argument("--network", help="edge-list file with 'u v r' lines")
        p.add_argument("--exhaustion", help="layer file with 'n: v1 v2 ...' lines (with --network)")
        p.add_argument("--nmax", type=int, default=nmax)
        p.add_argument("--tol", type=float, default=tol)
        p.add_argument("--cap", type=float, default=DEFAULT_CAP)
        p.add_argument("--out", default="ohdnet-out", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)

    p = sub.add_parser("gap", help="free/wired resistance gap between two vertices")
    common(p)
    p.add_argument("--pair", help="terminals as 'p,q'")
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("transience", help="wired resistance from a vertex to infinity")
    common(p)
    p.add_argument("--vertex")
    p.set_defaults(func=cmd_transience)

    p = sub.add_parser("barricade", help="barricades around an edge and partial sums of 1/wRD")
    common(p, nmax=4096)
    p.add_argument("--edge")
    p.add_argument("--count", type=int, default=20)
    p.set_defaults(func=cmd_barricade)

    p = sub.add_parser("certify", help="certificate from two transient vertex sets")
    common(p, nmax=40)
    p.add_argument("--A", required=True, help="named set of the family or a file of vertices")
    p.add_argument("--B", required=True)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("families", help="list built-in families")
    p.set_defaults(func=cmd_families)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = None if args.command == "families" else _config(args)
        return args.func(cfg, args)
    except (UsageError, NetworkError, OSError, ValueError) as exc:
        print(f"ohdnet {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
