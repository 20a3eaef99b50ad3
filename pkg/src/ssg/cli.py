"""Command-line front end: ``ssg slice``, ``ssg converge`` and ``ssg verify``.

Exit codes: 0 success, 1 a verdict failed, 2 configuration error, 3
numerical error. Errors print their type name on standard error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, lab
from .config import ExperimentConfig
from .errors import ConfigError, NumericalError
from .geometry import gaussian_limit
from .measures import slice_density
from .montecarlo import estimate_slice_mean
from .quadrature import integrate_muN

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _parse_n_list(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty N list")
    return vals


def cmd_slice(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    n_mc = cfg.n_mc if args.n_mc is None else args.n_mc
    seed = cfg.seed if args.seed is None else args.seed
    G = gaussian_limit(cfg.subspace)
    quad = integrate_muN(slice_density(cfg.subspace, cfg.N), cfg.phi, cfg.quad_tol)
    mc = estimate_slice_mean(cfg.subspace, cfg.N, cfg.phi, n_mc, seed)
    doc = {"N": cfg.N, "mc": mc.to_dict(), "quadrature": quad, "gaussian": lab.gaussian_value(G, cfg.phi)}
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_converge(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    n_list = cfg.n_list if args.n_list is None else args.n_list
    try:
        rep = lab.run_convergence(cfg.subspace, cfg.phi, n_list, cfg.n_mc, cfg.seed, cfg.tol, cfg.quad_tol)
    except ValueError as exc:  # e.g. an unsorted N list
        raise ConfigError(str(exc)) from exc
    _emit(rep.to_csv(), args.out)
    verdict = "pass" if rep.verdict else "fail"
    print(f"verdict: {verdict} ({rep.criterion})", file=sys.stderr)
    return EXIT_OK if rep.verdict else EXIT_FAIL


def cmd_verify(args) -> int:
    res = lab.run_suite(args.suite, args.seed)
    print("\n".join(res.lines()))
    return EXIT_OK if res.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ssg", description="Means over sphere slices and their Gaussian limits.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("slice", help="quadrature, Monte Carlo and Gaussian values for one N")
    s.add_argument("config", help="experiment config (JSON)")
    s.add_argument("--n-mc", type=int, default=None, help="Monte Carlo sample count (default: from config)")
    s.add_argument("--seed", type=int, default=None, help="random seed (default: from config)")
    s.add_argument("--out", default=None, help="output JSON path (default: stdout)")
    s.set_defaults(func=cmd_slice)

    c = sub.add_parser("converge", help="convergence table over increasing N")
    c.add_argument("config", help="experiment config (JSON)")
    c.add_argument("--n-list", type=_parse_n_list, default=None, help="comma-separated N values")
    c.add_argument("--out", default=None, help="output CSV path (default: stdout)")
    c.set_defaults(func=cmd_converge)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("--suite", choices=lab.SUITES + ("all",), default="all")
    v.add_argument("--seed", type=int, default=lab.DEFAULT_SEED)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
