"""Command-line front end.

Exit codes: 0 success, 1 a checked property is refuted (freeness witness,
non-generation, zero gap, intransitivity), 2 usage error, 3 capacity or
convergence failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .cayley import CapacityError, enumerate_group, generation_check, named_generators, walk_operator
from .dynamics import build_system, equicontinuity_defect, koopman_gap, orbit_transitivity, ResolutionError, GenerationError
from .report import emit_report
from .sl2 import IntMat2, Prime, canonical_generators, parse_matrix
from .spectra import (RNG_NAME, SCAN_HEADER, ConvergenceError, cheeger_sweep, dense_spectrum,
                      gap_scan, iterative_gap, min_gap)
from .words import freeness_scan

EXIT_OK, EXIT_REFUTED, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Everything a run depends on; reports embed it so they can be replayed."""

    command: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: Optional[str] = None
    format: str = "json"
    threads: int = 1

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("out")
        d.pop("threads")
        return d


def _version_text() -> str:
    g = canonical_generators()
    consts = " ".join(f"{k}={list(m.entries)}" for k, m in g.items())
    return f"distalf3 {__version__} ({consts}; rng {RNG_NAME})"


def _prime(text: str) -> int:
    try:
        return Prime(int(text)).value
    except (TypeError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _prime_list(text: str) -> list[int]:
    if text.strip() == "":
        return []
    return [_prime(t) for t in text.split(",")]


def _matrix(text: str) -> IntMat2:
    try:
        return parse_matrix(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="distalf3", description=__doc__.splitlines()[0],
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=_version_text())
    ap.add_argument("--threads", type=int, default=1, help="worker processes for scans")
    ap.add_argument("--c", dest="c_matrix", type=_matrix, default=None, metavar="A11,A12,A21,A22",
                    help="replace the third generator c (default (xy)^2)")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, fmt="json"):
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--format", choices=["json", "csv"], default=fmt)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("freecheck", help="search for relations among a, b(, c)")
    p.add_argument("--rank", type=int, choices=[1, 2, 3], default=3)
    p.add_argument("--max-len", type=int, default=10)
    p.add_argument("--gens", default="default",
                   help="'default' or a file with one 'a11,a12,a21,a22' per line")
    common(p)

    p = sub.add_parser("enumerate", help="BFS-enumerate <gens> mod p")
    p.add_argument("--prime", type=_prime, required=True)
    p.add_argument("--gens", choices=["ab", "abc"], default="ab")
    p.add_argument("--dump", default=None, help="write the move table as SL2T binary")
    common(p)

    p = sub.add_parser("gap", help="spectral gap of one Cayley graph")
    p.add_argument("--prime", type=_prime, required=True)
    p.add_argument("--gens", choices=["ab", "abc"], default="abc")
    m = p.add_mutually_exclusive_group()
    m.add_argument("--dense", dest="method", action="store_const", const="dense")
    m.add_argument("--iter", dest="method", action="store_const", const="iterative")
    p.add_argument("--tol", type=float, default=1e-8)
    common(p)

    p = sub.add_parser("scan", help="spectral gaps over a prime range")
    p.add_argument("--pmin", type=int, required=True)
    p.add_argument("--pmax", type=int, required=True)
    p.add_argument("--class", dest="klass", choices=["1", "3", "all"], default="all")
    p.add_argument("--gens", choices=["ab", "abc"], default="abc")
    p.add_argument("--tol", type=float, default=1e-8)
    common(p, fmt="csv")

    def system_args(p):
        p.add_argument("--kprimes", type=_prime_list, required=True)
        p.add_argument("--lprimes", type=_prime_list, required=True)
        p.add_argument("--cocycle", default="trivial", help="trivial | random:SEED")

    p = sub.add_parser("simulate", help="transitivity and Koopman gap of the skew product")
    system_args(p)
    p.add_argument("--steps", type=int, default=1000, help="length of a sampled random-move trajectory")
    common(p)

    p = sub.add_parser("defect", help="equicontinuity defect of T_c on <c> x L")
    system_args(p)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--horizon", type=int, default=100)
    p.add_argument("--samples", type=int, default=100)
    common(p)
    return ap


def _config(args) -> RunConfig:
    skip = {"command", "out", "format", "seed", "threads", "c_matrix", "dump"}
    params = {k: v for k, v in vars(args).items() if k not in skip}
    if args.c_matrix is not None:
        params["c"] = list(args.c_matrix.entries)
    return RunConfig(args.command, params, args.seed, args.out, args.format, args.threads)


def _images(args) -> list[IntMat2]:
    if args.gens == "default":
        return named_generators("abc"[: args.rank], c=args.c_matrix)
    with open(args.gens, encoding="utf-8") as fh:
        mats = [parse_matrix(line) for line in fh if line.strip() and not line.startswith("#")]
    if len(mats) != args.rank:
        raise UsageError(f"{args.gens}: expected {args.rank} matrices, found {len(mats)}")
    return mats


def _cmd_freecheck(args, cfg):
    rep = freeness_scan(_images(args), args.max_len, workers=args.threads)
    emit_report({"config": cfg.to_json(), **rep.to_json()}, args.format, args.out)
    if not rep.free:
        print(f"freeness refuted by witness: {rep.witness}", file=sys.stderr)
        return EXIT_REFUTED
    return EXIT_OK


def _cmd_enumerate(args, cfg):
    gens = named_generators(args.gens, c=args.c_matrix)
    table = enumerate_group(args.prime, gens)
    if args.dump:
        table.dump(args.dump)
    rep = generation_check(args.prime, gens, table=table)
    emit_report({"config": cfg.to_json(), **rep.to_json()}, args.format, args.out)
    return EXIT_OK if rep.generated else EXIT_REFUTED


def _cmd_gap(args, cfg):
    table = enumerate_group(args.prime, named_generators(args.gens, c=args.c_matrix))
    op = walk_operator(table)
    method = args.method or ("dense" if op.size <= 2000 else "iterative")
    if method == "dense":
        rep = dense_spectrum(op)
    else:
        rep = iterative_gap(op, tol=args.tol, seed=args.seed)
    out = {"config": cfg.to_json(), "prime": args.prime, "gens": args.gens, **rep.to_json()}
    if rep.vector is not None:
        sw = cheeger_sweep(op, rep.vector)
        out["sweep_ratio"], out["sweep_set_size"] = sw.boundary_ratio, sw.best_set_size
    emit_report(out, args.format, args.out)
    return EXIT_OK if rep.has_gap else EXIT_REFUTED


def _cmd_scan(args, cfg):
    if args.pmin > args.pmax:
        raise UsageError("--pmin must not exceed --pmax")
    from .sl2 import is_prime

    primes = [p for p in range(max(3, args.pmin), args.pmax + 1) if is_prime(p)]
    if args.klass != "all":
        primes = [p for p in primes if p % 4 == int(args.klass)]
    rows = gap_scan(primes, args.gens, seed=args.seed, tol=args.tol, workers=args.threads,
                    c=args.c_matrix)
    if args.format == "csv":
        emit_report([r.csv_fields() for r in rows], "csv", args.out, header=SCAN_HEADER)
    else:
        body = [{"p": r.p, "class_mod4": r.class_mod4, "group_size": r.group_size,
                 "generated": r.generated, "lambda2": r.lambda2, "gap": r.gap,
                 "method": r.method, "flag": r.flag, "sweep_ratio": r.sweep_ratio}
                for r in rows]
        emit_report({"config": cfg.to_json(), "rows": body, "min_gap": min_gap(rows)}, "json", args.out)
    mg = min_gap(rows)
    if mg is not None:
        print(f"min gap over {len(rows)} primes: {mg:.10g}", file=sys.stderr)
    if any(r.flag in ("capacity", "not-converged") for r in rows):
        return EXIT_CAPACITY
    return EXIT_OK


def _cmd_simulate(args, cfg):
    sys_ = build_system(args.kprimes, args.lprimes, args.cocycle, c=args.c_matrix)
    transitive, count = orbit_transitivity(sys_)
    rep = koopman_gap(sys_, seed=args.seed)
    moves = sys_.move_table()
    rng = np.random.Generator(np.random.PCG64(args.seed))
    picks = rng.integers(0, moves.shape[0], args.steps)
    pt, visited = 0, {0}
    for k in picks:
        pt = int(moves[k, pt])
        visited.add(pt)
    out = {
        "config": cfg.to_json(),
        "system": sys_.describe(),
        "transitive": transitive,
        "orbit_count": count,
        "gap_report": rep.to_json(),
        "trajectory": {"steps": args.steps, "distinct_points": len(visited),
                       "coverage": len(visited) / sys_.size},
    }
    emit_report(out, args.format, args.out)
    return EXIT_OK if transitive else EXIT_REFUTED


def _cmd_defect(args, cfg):
    sys_ = build_system(args.kprimes, args.lprimes, args.cocycle, c=args.c_matrix)
    rep = equicontinuity_defect(sys_, args.delta, args.horizon, args.samples, args.seed)
    emit_report({"config": cfg.to_json(), "system": sys_.describe(), **rep.to_json()},
                args.format, args.out)
    return EXIT_OK


_COMMANDS = {
    "freecheck": _cmd_freecheck,
    "enumerate": _cmd_enumerate,
    "gap": _cmd_gap,
    "scan": _cmd_scan,
    "simulate": _cmd_simulate,
    "defect": _cmd_defect,
}


def parse_and_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args, _config(args))
    except (UsageError, ResolutionError, GenerationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CapacityError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
