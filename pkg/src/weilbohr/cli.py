"""Command-line front end.

Every run is described by a RunConfig that is embedded, together with
library versions, in each file it writes.  Outputs carry no timestamps, so
identical configurations produce byte-identical files.

Test functions are given as ``kind:params`` strings::

    logbump:c=<center>,h=<log half-width>
    loggauss:c=<center>,w=<log width>[,r=<truncation radius>]
    indicator:a=<left>,b=<right>
    grid:x=<x1>|<x2>|...,y=<y1>|<y2>|...
    star:of=<spec>
    autocorr:of=<spec>
    combo:[<coef>*<spec>][<coef>*<spec>]...

Numbers accept fractions, ``pi``, ``e`` and ``log(...)``.

Exit codes: 0 success, 2 invalid input or missing file, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import math
import platform
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .bohr import (bohr_jessen_compare, character_cloud, cloud_csv, common_extent,
                   histogram_csv)
from .domain import parse_test_function, serialize_report
from .errors import (ContractError, DomainError, IntegrityError, NumericError,
                     ReportParseError, UnsupportedModeError, ZeroFileError)
from .spectral import q_sweep
from .weil import (relevant_primes, rh_bound_experiment, weil_arch_integral, weil_finite,
                   weil_total)
from .zeta import explicit_formula_zero_side, find_zeros, load_zeros, von_mangoldt_check

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    tol: float | None = None
    out: str | None = None
    zeros: str | None = None
    threads: int = 1

    def to_dict(self) -> dict:
        return asdict(self)


def versions() -> dict:
    return {"weilbohr": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def provenance(cfg: RunConfig) -> dict:
    return {"config": cfg.to_dict(), "versions": versions()}


def _header(cfg: RunConfig) -> list[str]:
    return [f"provenance: {json.dumps(provenance(cfg), sort_keys=True)}"]


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def _emit(cfg: RunConfig, name: str, text: str, stdout: bool = False):
    if cfg.out is None:
        if stdout:
            sys.stdout.write(text)
        return
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _floats(text: str | None, cast=float) -> list:
    if not text:
        return []
    try:
        return [cast(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ContractError(f"cannot parse list {text!r}") from None


def _zero_table(args, count_default: int):
    if args.zeros:
        path = Path(args.zeros)
        if not path.is_file():
            raise FileNotFoundError(f"zero file not found: {path}")
        table = load_zeros(path)
        return table.head(args.count) if args.count else table
    return find_zeros(args.count or count_default)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

_ARCH = {"direct": "direct-integral", "q-fourier": "q-fourier", "q-paper": "q-paper"}


def cmd_weil(args, cfg: RunConfig) -> int:
    f = parse_test_function(args.f)
    qs = _floats(args.q)
    q = qs[0] if qs else None
    if args.primes:
        given = set(_floats(args.primes, int))
        missing = sorted(set(relevant_primes(f).tolist()) - given)
        if missing:
            raise ContractError(f"--primes misses primes with lattice points in supp f: {missing}")
    report = weil_total(f, _ARCH[args.arch], q=q, K=args.K, config=provenance(cfg))
    _emit(cfg, "weil_report.json", serialize_report(report).decode(), stdout=True)
    return EXIT_OK


def cmd_explicit_check(args, cfg: RunConfig) -> int:
    if args.mode == "von-mangoldt":
        zeros = _zero_table(args, 100)
        r = von_mangoldt_check(args.x, zeros)
        out = {"mode": "von-mangoldt", "x": r.x, "prime_side": r.prime_side,
               "zero_side": r.zero_side, "gap": r.gap, "zeros": {
                   "provenance": zeros.provenance, "count": r.n_zeros}}
    else:
        if not args.f:
            raise ContractError("weil mode needs --f")
        f = parse_test_function(args.f)
        zeros = _zero_table(args, 100)
        tol = cfg.tol if cfg.tol is not None else 1e-6
        zs = explicit_formula_zero_side(f, zeros, tol=tol)
        per, w_fin = weil_finite(f)
        arch = weil_arch_integral(f)
        prime_side = float(np.real(w_fin)) + arch.value
        out = {"mode": "weil", "test_function": f.descriptor(),
               "prime_side": prime_side, "w_fin": float(np.real(w_fin)),
               "primes": {str(p): float(np.real(v)) for p, v in per.items()},
               "w_inf": arch.value, "zero_side": zs.value, "pole_terms": zs.pole_terms,
               "zero_sum": zs.zero_sum, "gap": zs.value - prime_side,
               "tails": {"zero_side": zs.tail_estimate, "arch_integral": arch.tail_estimate,
                         "arch_t_max": arch.t_max},
               "warnings": {"zero_side": bool(zs.warning), "arch_integral": bool(arch.warning)},
               "zeros": {"provenance": zeros.provenance, "count": len(zeros)}}
    out.update(provenance(cfg))
    _emit(cfg, "explicit_check.json", _dump(out), stdout=True)
    return EXIT_OK


def cmd_bohr(args, cfg: RunConfig) -> int:
    hdr = _header(cfg)
    if args.bohr_mode == "sample":
        cloud = character_cloud(args.sigma, args.P, args.N, cfg.seed)
        _emit(cfg, "character_cloud.csv", cloud_csv(cloud, hdr), stdout=True)
    elif args.bohr_mode == "compare":
        rep = bohr_jessen_compare(args.sigma, args.P, args.N, args.T, seed=cfg.seed,
                                  threshold=args.threshold, threads=cfg.threads)
        ext = common_extent(rep.character_cloud, rep.time_cloud)
        _emit(cfg, "character_cloud.csv", cloud_csv(rep.character_cloud, hdr))
        _emit(cfg, "time_cloud.csv", cloud_csv(rep.time_cloud, hdr))
        _emit(cfg, "character_hist.csv", histogram_csv(rep.character_cloud, args.bins, ext, hdr))
        _emit(cfg, "time_hist.csv", histogram_csv(rep.time_cloud, args.bins, ext, hdr))
        out = {"sigma": rep.sigma, "P": rep.P, "N": rep.N, "T": rep.T,
               "energy_distance": rep.distance, "energy_distance_sqrt": math.sqrt(rep.distance),
               "threshold": rep.threshold, "passed": rep.passed,
               "threshold_note": "calibration choice on the squared (non-root) energy distance"}
        out.update(provenance(cfg))
        _emit(cfg, "compare.json", _dump(out), stdout=True)
    elif args.bohr_mode == "qsweep":
        f = parse_test_function(args.f)
        qs = _floats(args.q) or [0.9, 0.99, 0.999]
        table = q_sweep(f, _floats(args.primes, int), qs)
        rows = [asdict(r) for r in table.rows]
        gaps = table.gaps()
        out = {"test_function": table.test_function, "primes": list(table.primes),
               "arch_reference": table.arch_reference,
               "finite_continuous": table.finite_continuous, "rows": rows,
               "monotone": all(b < a for a, b in zip(gaps, gaps[1:]))}
        out.update(provenance(cfg))
        _emit(cfg, "qsweep.json", _dump(out), stdout=True)
    elif args.bohr_mode == "rh-bound":
        f = parse_test_function(args.f)
        res = []
        for q in _floats(args.q) or [0.9, 0.99, 0.999]:
            r = rh_bound_experiment(f, q, _floats(args.primes, int))
            res.append({"q": q, "left": r.left, "right": r.right, "norm_sq": r.norm_sq,
                        "satisfied": r.satisfied,
                        "per_place": {str(k): v for k, v in r.per_place.items()}})
        out = {"test_function": f.descriptor(), "rows": res}
        out.update(provenance(cfg))
        _emit(cfg, "rh_bound.json", _dump(out), stdout=True)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--out", help="output directory; JSON goes to stdout when omitted")
    p.add_argument("--tol", type=float, help="tolerance override, recorded in outputs")
    p.add_argument("--threads", type=int, default=1, help="worker pool size")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="weilbohr", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    w = sub.add_parser("weil", help="Weil sum report for one test function")
    w.add_argument("--f", required=True, help="test-function spec")
    w.add_argument("--arch", choices=sorted(_ARCH), default="direct")
    w.add_argument("--q", help="q for the q-discretized archimedean term")
    w.add_argument("--K", type=int, help="lattice truncation |n| <= K for the q-sums")
    w.add_argument("--primes", help="comma-separated prime set (must cover supp f)")
    _common(w)

    e = sub.add_parser("explicit-check", help="prime side against zero side")
    e.add_argument("--mode", choices=["weil", "von-mangoldt"], default="weil")
    e.add_argument("--f", help="test-function spec (weil mode)")
    e.add_argument("--x", type=float, default=100.5, help="x for von-mangoldt mode")
    e.add_argument("--zeros", help="zero file (one ordinate per line)")
    e.add_argument("--count", type=int, help="number of zeros (default 100)")
    _common(e)

    b = sub.add_parser("bohr", help="Bohr-space experiments")
    bsub = b.add_subparsers(dest="bohr_mode", required=True)
    s = bsub.add_parser("sample", help="cloud of random Euler products")
    c = bsub.add_parser("compare", help="Bohr-Jessen distribution comparison")
    for p in (s, c):
        p.add_argument("--sigma", type=float, default=0.8)
        p.add_argument("--P", type=int, default=997, help="prime cutoff")
        p.add_argument("--N", type=int, default=20_000, help="sample count")
        _common(p)
    c.add_argument("--T", type=float, default=5000.0, help="time horizon")
    c.add_argument("--threshold", type=float, default=0.05)
    c.add_argument("--bins", type=int, default=64)
    for name, hlp in (("qsweep", "q -> 1 convergence table"),
                      ("rh-bound", "covariance bound at the q-place")):
        p = bsub.add_parser(name, help=hlp)
        p.add_argument("--f", required=True, help="test-function spec g")
        p.add_argument("--q", help="comma-separated q grid (default 0.9,0.99,0.999)")
        p.add_argument("--primes", help="comma-separated prime set I")
        _common(p)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    skip = {"command", "bohr_mode", "seed", "tol", "out", "zeros", "threads"}
    params = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    if getattr(args, "bohr_mode", None):
        params["mode"] = args.bohr_mode
    cfg = RunConfig(args.command, params, args.seed, args.tol, args.out,
                    getattr(args, "zeros", None), args.threads)
    handler = {"weil": cmd_weil, "explicit-check": cmd_explicit_check, "bohr": cmd_bohr}
    try:
        return handler[args.command](args, cfg)
    except (ContractError, DomainError, ZeroFileError, ReportParseError, UnsupportedModeError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericError, IntegrityError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
