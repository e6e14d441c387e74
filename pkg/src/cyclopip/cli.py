"""Command-line front end.

    cyclopip classgroup --p 23 --s 1 --bound 500 --seed 7
    cyclopip pip --p 2 --s 4 --bound 200 --ideal I.txt [--store S.txt] [--out g.txt]
    cyclopip shortgen --p 2 --s 6 --trials 100 [--generator g.txt]
    cyclopip precompute --p 2 --s 4 --bound 200 --out S.txt
    cyclopip svp --ideal I.txt --store S.txt [--cpm walk]
    cyclopip bench-table1 --p 2 --s 8 --weights 10,20,30,50 --trials 40 --out t1.csv

Exit status: 0 success, 1 error, 2 usage, 3 indeterminate.  Reports go to
stdout and are identical for a fixed seed; timings go to stderr.
"""
from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .classgroup import compute_class_group
from .cyclo import Conductor, from_text, to_text
from .descent import DescentError, DescentParams
from .ideal import ideal_from_generator, ideal_from_text, prime_ideal, primes_above
from .pip import (
    INDETERMINATE,
    RandomWalkCpm,
    gamma_svp,
    plant_short_generator,
    short_generator,
    solve_pip,
    torsion_match,
    trivial_cpm,
)
from .precomp import precompute, store_load, store_save
from .relations import make_rng, table1_benchmark, table1_csv

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_INDETERMINATE = 0, 1, 2, 3


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    conductor: Conductor | None
    bound: int | None
    seed: int
    workers: int = 1
    descent: DescentParams | None = None
    store: Path | None = None
    out: Path | None = None
    extra: dict = field(default_factory=dict)

    def validate(self):
        if self.bound is not None and self.bound < 2:
            raise UsageError("--bound must be at least 2")
        if self.workers < 1:
            raise UsageError("--workers must be positive")


def _conductor(args) -> Conductor | None:
    if args.p is None:
        return None
    try:
        return Conductor.of(args.p, args.s)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _descent_params(args, c: Conductor | None) -> DescentParams | None:
    if c is None:
        return None
    return DescentParams(eps=args.eps, a=args.a, b=args.b, k=args.k or c.n, l=args.l or min(c.n, 8),
                         mode=args.mode, max_trials=args.trials_descent, enforce_window=False)


def _config(args) -> RunConfig:
    c = _conductor(args)
    cfg = RunConfig(c, getattr(args, "bound", None), args.seed, args.workers,
                    _descent_params(args, c) if hasattr(args, "eps") else None,
                    Path(args.store) if getattr(args, "store", None) else None,
                    Path(args.out) if getattr(args, "out", None) else None)
    cfg.validate()
    if cfg.workers > 1:
        print(f"note: --workers {cfg.workers} runs sequentially here", file=sys.stderr)
    return cfg


def read_ideal(path, c: Conductor | None = None):
    """An ideal from a file: HNF text ("N=.. den=.." header) or one generator "N:c0,c1,...".

    A line "prime-above p" picks the first prime ideal above p.
    """
    text = Path(path).read_text().strip()
    if text.startswith("N="):
        return ideal_from_text(text)
    if text.startswith("prime-above"):
        if c is None:
            raise UsageError("prime-above needs --p and --s")
        p = int(text.split()[1])
        return prime_ideal(primes_above(c, p)[0])
    return ideal_from_generator(from_text(text))


def _emit(lines, out: Path | None = None):
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if out is not None:
        out.write_text(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_classgroup(cfg: RunConfig) -> int:
    if cfg.conductor is None or cfg.bound is None:
        raise UsageError("classgroup needs --p, --s and --bound")
    t0 = time.time()
    cg = compute_class_group(cfg.conductor, cfg.bound, seed=cfg.seed)
    print(f"time {time.time() - t0:.2f}s", file=sys.stderr)
    lines = [
        f"field: {cfg.conductor}",
        f"bound: {cfg.bound}",
        f"seed: {cfg.seed}",
        f"factor base: {len(cg.fb)} primes",
        f"relations: {len(cg.relations)}",
        f"divisors: {' '.join(map(str, cg.divisors)) or '1'}",
        f"h: {cg.h}",
        f"regulator: {cg.regulator:.10g}",
        f"h*: {cg.h_star:.10g}",
        f"margin: {cg.margin:.6f}",
        f"certified: {'yes' if cg.certified else 'no'}",
    ]
    lines += [f"warning: {w}" for w in cg.warnings]
    _emit(lines, cfg.out)
    return EXIT_OK


def cmd_pip(cfg: RunConfig, ideal_path) -> int:
    if cfg.store is not None:
        source = store_load(cfg.store)
        c = source.conductor
    else:
        if cfg.conductor is None or cfg.bound is None:
            raise UsageError("pip needs --store, or --p, --s and --bound")
        c = cfg.conductor
        source = compute_class_group(c, cfg.bound, seed=cfg.seed)
    I = read_ideal(ideal_path, c)
    if I.conductor != c:
        raise UsageError(f"ideal lives in Q(zeta_{I.conductor.N}), not {c}")
    params = cfg.descent or DescentParams(k=c.n, l=min(c.n, 8), enforce_window=False)
    t0 = time.time()
    ans = solve_pip(I, source, params=params, seed=cfg.seed)
    print(f"time {time.time() - t0:.2f}s", file=sys.stderr)
    sys.stdout.write(ans.report())
    if cfg.out is not None and ans.generator is not None:
        cfg.out.write_text(to_text(ans.generator) + "\n")
    return EXIT_INDETERMINATE if ans.verdict == INDETERMINATE else EXIT_OK


def cmd_shortgen(cfg: RunConfig, trials: int, sigma: float, generator=None) -> int:
    if generator is not None:
        g = from_text(Path(generator).read_text())
        h, x = short_generator(g)
        lines = [f"unit exponents: {' '.join(map(str, x))}", f"short generator: {to_text(h)}"]
        _emit(lines, cfg.out)
        return EXIT_OK
    c = cfg.conductor
    if c is None:
        raise UsageError("shortgen needs --p and --s, or --generator")
    rng = make_rng(cfg.seed, 0)
    hits = 0
    lines = [f"field: {c}", f"sigma: {sigma}", f"seed: {cfg.seed}"]
    for t in range(trials):
        g0, g, _ = plant_short_generator(c, sigma, rng)
        h, _ = short_generator(g)
        ok = torsion_match(h, g0) is not None
        hits += ok
        lines.append(f"trial {t}: {'recovered' if ok else 'missed'}")
    lines.append(f"recovered: {hits}/{trials}")
    _emit(lines, cfg.out)
    return EXIT_OK


def cmd_precompute(cfg: RunConfig) -> int:
    if cfg.conductor is None or cfg.bound is None or cfg.out is None:
        raise UsageError("precompute needs --p, --s, --bound and --out")
    t0 = time.time()
    store = precompute(cfg.conductor, cfg.bound, seed=cfg.seed)
    print(f"time {time.time() - t0:.2f}s", file=sys.stderr)
    store_save(store, cfg.out)
    print(f"field: {cfg.conductor}")
    print(f"bound: {cfg.bound}")
    print(f"rows: {len(store.hnf)} small primes: {store.i0}")
    print(f"h: {store.h} certified: {'yes' if store.certified else 'no'}")
    print(f"split primes: {len(store.table.primes)}")
    return EXIT_OK


def cmd_svp(cfg: RunConfig, ideal_path, cpm_name: str) -> int:
    if cfg.store is None:
        raise UsageError("svp needs --store")
    store = store_load(cfg.store)
    I = read_ideal(ideal_path, store.conductor)
    cpm = trivial_cpm if cpm_name == "trivial" else RandomWalkCpm(seed=cfg.seed)
    res = gamma_svp(I, store, cpm, params=cfg.descent, seed=cfg.seed)
    lines = [f"vector: {to_text(res.vector)}", f"length: {res.length:.6g}",
             f"reference: {res.reference:.6g}", f"ratio: {res.length / res.reference:.6g}"]
    lines += [f"# {t}" for t in res.transcript]
    _emit(lines)
    return EXIT_OK


def cmd_bench_table1(cfg: RunConfig, weights, trials: int) -> int:
    if cfg.conductor is None:
        raise UsageError("bench-table1 needs --p and --s")
    rows = table1_benchmark(cfg.conductor, weights, trials, seed=cfg.seed)
    text = table1_csv(rows)
    sys.stdout.write(text)
    if cfg.out is not None:
        cfg.out.write_text(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _common(sp, bound=True):
    sp.add_argument("--p", type=int, help="prime p of the conductor N = p^s")
    sp.add_argument("--s", type=int, default=1, help="exponent s of the conductor")
    if bound:
        sp.add_argument("--bound", type=int, help="factor base bound")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out", help="output file")


def _descent_flags(sp):
    g = sp.add_argument_group("descent")
    g.add_argument("--eps", type=float, default=0.05)
    g.add_argument("--a", type=float, default=0.45)
    g.add_argument("--b", type=float, default=1.0)
    g.add_argument("--k", type=int, default=None, help="sublattice dimension")
    g.add_argument("--l", type=int, default=None, help="BKZ block size")
    g.add_argument("--mode", choices=("BKZ", "HKZ", "LLL"), default="BKZ")
    g.add_argument("--trials-descent", type=int, default=2000)


def _weights(text: str):
    try:
        w = [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError("weights are comma-separated integers") from None
    if not w or min(w) < 1:
        raise argparse.ArgumentTypeError("weights must be positive")
    return w


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cyclopip", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("classgroup", help="class group by relation collection")
    _common(sp)

    sp = sub.add_parser("pip", help="decide principality and find a generator")
    _common(sp)
    _descent_flags(sp)
    sp.add_argument("--ideal", required=True)
    sp.add_argument("--store")

    sp = sub.add_parser("shortgen", help="short generator recovery")
    _common(sp, bound=False)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--sigma", type=float, default=4.0)
    sp.add_argument("--generator", help="reduce this generator instead of planting")

    sp = sub.add_parser("precompute", help="build a precomputation store")
    _common(sp)

    sp = sub.add_parser("svp", help="short vector in an ideal through a store")
    _common(sp, bound=False)
    _descent_flags(sp)
    sp.add_argument("--ideal", required=True)
    sp.add_argument("--store", required=True)
    sp.add_argument("--cpm", choices=("trivial", "walk"), default="trivial")

    sp = sub.add_parser("bench-table1", help="norm sizes of random vs unit-variation elements")
    _common(sp, bound=False)
    sp.add_argument("--weights", type=_weights, default=[10, 20, 30, 50])
    sp.add_argument("--trials", type=int, default=40)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = _config(args)
        if args.command == "classgroup":
            return cmd_classgroup(cfg)
        if args.command == "pip":
            return cmd_pip(cfg, args.ideal)
        if args.command == "shortgen":
            if args.trials < 1:
                raise UsageError("--trials must be positive")
            return cmd_shortgen(cfg, args.trials, args.sigma, args.generator)
        if args.command == "precompute":
            return cmd_precompute(cfg)
        if args.command == "svp":
            return cmd_svp(cfg, args.ideal, args.cpm)
        if args.command == "bench-table1":
            if args.trials < 1:
                raise UsageError("--trials must be positive")
            return cmd_bench_table1(cfg, args.weights, args.trials)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DescentError as e:
        print(f"indeterminate: descent failed: {e}", file=sys.stderr)
        return EXIT_INDETERMINATE
    except (ValueError, RuntimeError, OSError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
