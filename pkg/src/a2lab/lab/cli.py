"""Command line entry point: ``a2lab <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from pathlib import Path

from ..characteristics import A2Config, a2_search
from ..operators import SupSearchConfig
from ..weights import parse_pair_spec
from .experiments import exp_a2, exp_chain, exp_strong_lower, exp_weak_lower
from .report import emit_report

log = logging.getLogger("a2lab")


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _search_cfg(args) -> SupSearchConfig:
    kw = {"tolerance": args.tol}
    if args.budget:
        kw["max_candidates"] = args.budget
    return SupSearchConfig(**kw)


def _emit(reports, args) -> int:
    formats = [f.strip() for f in args.format.split(",") if f.strip()]
    ok = True
    for rep in reports:
        if args.out:
            for p in emit_report(rep, args.out, formats):
                log.info("wrote %s", p)
        slope = "n/a" if rep.slope is None else f"{rep.slope:.4f}"
        print(f"{rep.name}: slope {slope}")
        for name, passed in rep.assertions.items():
            print(f"  {'PASS' if passed else 'FAIL'} {name}")
        ok &= rep.passed
    return 0 if ok else 1


def cmd_char(args) -> int:
    if args.pair:
        cfg = A2Config(budget=args.budget or A2Config.budget, tolerance=args.tol, depth=args.depth)
        rep = a2_search(parse_pair_spec(args.pair), cfg)
        text = json.dumps(rep.to_dict(), indent=2)
        if args.json:
            Path(args.json).write_text(text)
        print(text)
        return 0
    cfg = A2Config(budget=args.budget or A2Config.budget, tolerance=args.tol, depth=args.depth)
    return _emit([exp_a2(args.a_list or range(4, 11), cfg)], args)


def cmd_strong(args) -> int:
    rep = exp_strong_lower(args.a_list or range(6, 11), args.jmax, args.kmax, _search_cfg(args))
    return _emit([rep], args)


def cmd_weak(args) -> int:
    return _emit([exp_weak_lower(args.a_list or range(5, 11), _search_cfg(args))], args)


def cmd_chain(args) -> int:
    kinds = tuple(k.strip() for k in args.g.split(","))
    return _emit(exp_chain(args.a_list or range(4, 10), kinds, _search_cfg(args), args.grid), args)


def cmd_check(args) -> int:
    from .checks import run_checks

    results = run_checks(seed=args.seed, samples=args.samples)
    for name, passed, detail in results:
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
    return 0 if all(p for _, p, _ in results) else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--a-list", type=_int_list, default=None, help="e.g. 4,5,6 or 4..10")
    common.add_argument("--tol", type=float, default=1e-10, help="relative search tolerance")
    common.add_argument("--budget", type=int, default=None, help="candidate budget of the searches")
    common.add_argument("--out", default=None, help="output directory for reports")
    common.add_argument("--format", default="csv,json,svg")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="a2lab", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("char", parents=[common], help="A2 characteristic (one pair or a lacunary sweep)")
    p.add_argument("--pair", default=None, help="power:alpha=0.25 or lacunary:a=6,tol=1e-10")
    p.add_argument("--depth", type=int, default=None, help="dyadic depth")
    p.add_argument("--json", default=None, help="write the single-pair report here")
    p.set_defaults(func=cmd_char)

    p = sub.add_parser("strong-lower", parents=[common], help="strong-sparse lower bound sweep")
    p.add_argument("--jmax", type=int, default=None, help="members per band (default 32/alpha)")
    p.add_argument("--kmax", type=int, default=None, help="bands (default 4/alpha, at most 2^16)")
    p.set_defaults(func=cmd_strong)

    p = sub.add_parser("weak-lower", parents=[common], help="weak-type lower bound sweep")
    p.set_defaults(func=cmd_weak)

    p = sub.add_parser("chain", parents=[common], help="chain flattening sweep")
    p.add_argument("--g", default="sigma,one", help="inputs: sigma, one")
    p.add_argument("--grid", type=int, default=10_000)
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("check", parents=[common], help="invariant suite")
    p.add_argument("--samples", type=int, default=100)
    p.set_defaults(func=cmd_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    random.seed(args.seed)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
