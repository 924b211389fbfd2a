"""Command-line front end: every subcommand writes a deterministic JSON report.

Exit status is 0 when all declared checks pass, 1 when a check fails and
2 for invalid configuration. MAXMULT_THREADS caps BLAS/FFT threads.
"""

from __future__ import annotations

import os

_threads = os.environ.get("MAXMULT_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import csv
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AliasWarning, MaxMultError


class ConfigError(Exception):
    pass


def parse_range(text: str) -> list[int]:
    """'1..4' -> [1, 2, 3, 4]; '1,3,5' -> [1, 3, 5]."""
    out = []
    try:
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            if ".." in part:
                lo, hi = part.split("..")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise ConfigError(f"cannot parse integer range {text!r}") from None
    return out


def parse_floats(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse number list {text!r}") from None


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def _write_csv(path: str | None, header: list[str], rows: list[list]):
    if not path:
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# ------------------------------------------------------------- commands


def cmd_tile(args) -> dict:
    from .tiling import random_instance, tile

    _require(args.range >= 0, "--range must be nonnegative")
    _require(args.cap_exp is None or args.cap_exp >= 0, "--cap-exp must be nonnegative")
    rng = np.random.default_rng(args.seed)
    if args.set is not None:
        E = parse_range(args.set)
        _require(bool(E), "--set is empty")
        N = args.cap_exp if args.cap_exp is not None else max(0, math.ceil(math.log2(len(set(E)))))
        _require(len(set(E)) <= 2**N, "card(E) exceeds 2^N")
        instances = [(E, N)]
    else:
        _require(args.random > 0, "give --set or --random COUNT")
        max_N = 8 if args.cap_exp is None else args.cap_exp
        instances = []
        for _ in range(args.random):
            inst = random_instance(rng, max_N, args.range)
            instances.append((list(inst.E), inst.N))
    results = [tile(E, N, args.range) for E, N in instances]
    rows = [[i, r.instance.N, len(r.instance.E), r.max_forbidden, 2 ** (2 * r.instance.N + 1),
             all(r.verified.values())] for i, r in enumerate(results)]
    _write_csv(args.csv, ["instance", "N", "cardE", "maxForbidden", "bound", "verified"], rows)
    ok = all(all(r.verified.values()) for r in results)
    body = results[0].to_json() if len(results) == 1 else {
        "instances": len(results),
        "maxForbidden": [r.max_forbidden for r in results],
        "verified": {key: all(r.verified[key] for r in results) for key in results[0].verified},
    }
    return {"result": body, "pass": ok}


def cmd_counterexample(args) -> dict:
    from .counterexample import verify_conclusion, verify_lower_bound, weight_from_name

    Ns = parse_range(args.N)
    ps = parse_floats(args.p)
    _require(bool(Ns) and min(Ns) >= 1, "--N must list positive integers")
    _require(max(Ns) <= args.capacity, f"N exceeds capacity {args.capacity}")
    _require(bool(ps) and all(1 < p < math.inf for p in ps), "--p must lie in (1, inf)")
    try:
        weight = weight_from_name(args.weight)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows, table, ok = [], [], True
    for p in ps:
        for N in Ns:
            rep = verify_lower_bound(N, p, capacity=args.capacity)
            entry = rep.to_json()
            if args.conclusion:
                conc = verify_conclusion(N, p, weight, capacity=args.capacity)
                entry["conclusion"] = conc.to_json()
            ok &= rep.pass_
            table.append(entry)
            rows.append([N, p, rep.normValue, rep.bound, rep.pass_])
    slopes = {}
    for p in ps:
        pts = [(e["N"], e["normValue"]) for e in table if e["p"] == p]
        if len(pts) >= 2:
            slopes[str(p)] = float(np.polyfit(*zip(*pts), 1)[0])
    constants = []
    if args.conclusion:
        for p in ps:
            seq = [e["conclusion"] for e in table if e["p"] == p]
            bounds = [c["C_N"] * c["v"] for c in seq]
            cs = [c["C_N"] for c in seq]
            increasing = all(b > a for a, b in zip(bounds, bounds[1:]))
            stable = max(cs) <= 2 * min(cs)
            constants.append({"p": p, "C_N": cs, "bounds": bounds, "increasing": increasing, "stable": stable})
            ok &= increasing and stable
    _write_csv(args.csv, ["N", "p", "value", "bound", "pass"], rows)
    return {"result": {"table": table, "slopes": slopes, "constants": constants}, "pass": bool(ok)}


def cmd_seminorm(args) -> dict:
    from .counterexample import CounterexampleSpec, localized_ratio, localized_ratio_bound, weight_from_name
    from .grid import mikhlin_seminorm

    _require(0 <= args.order <= 2, "--order must be 0, 1 or 2")
    _require(1 <= args.N_max <= args.capacity, "--N-max out of range")
    try:
        spec = CounterexampleSpec(args.N_max, weight_from_name(args.weight), args.capacity)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    ks = spec.realized_ks()
    if args.k_count:
        ks = ks[:: max(1, len(ks) // args.k_count)]
    ratios = localized_ratio(spec, ks, args.order)
    bound = localized_ratio_bound(spec, args.order)
    unit = mikhlin_seminorm(lambda x: np.ones_like(x), args.order)
    _write_csv(args.csv, ["k", "ratio"], [[k, v] for k, v in ratios.items()])
    ok = max(ratios.values()) <= bound and unit == 1.0
    return {"result": {"maxRatio": max(ratios.values()), "bound": bound, "ks": len(ratios),
                       "unitSeminorm": unit}, "pass": bool(ok)}


def cmd_decompose(args) -> dict:
    from .decomposition import build_blocks, build_pieces, omega_sequence, reconstruct, reference_multiplier
    from .grid import GridFunction, GridSpec, GridSymbol

    ts = parse_floats(args.t)
    _require(bool(ts) and all(t > 0 for t in ts), "--t must list positive dilations")
    _require(0 <= args.lmax <= 12, "--lmax must lie in [0, 12]")
    m = reference_multiplier()
    kspec = GridSpec(8192, 1024.0)
    fspec = GridSpec(4096, 8.0)
    f = GridFunction.from_callable(fspec, lambda x: np.exp(-x**2 / (2 * (1 / 32) ** 2)))
    omega = omega_sequence(GridSymbol(kspec, fn=m, radial=True), range(-4, 12), alpha=args.alpha)
    blocks = build_blocks(omega)
    pieces = build_pieces(GridSymbol(kspec, fn=m, radial=True), blocks, args.lmax)
    errs, rows = {}, []
    for t in ts:
        rec = reconstruct(m, pieces, f, t)
        errs[str(t)] = rec.errors_by_lmax
        rows.extend([t, l, e] for l, e in enumerate(rec.errors_by_lmax))
    _write_csv(args.csv, ["t", "lmax", "relError"], rows)
    ok = all(e[-1] <= args.tol for e in errs.values())
    return {"result": {"omega": {str(k): v for k, v in omega.values.items()},
                       "blocks": blocks, "cardinalities": [len(E) for E in blocks],
                       "errors": errs}, "pass": bool(ok)}


def cmd_criterion(args) -> dict:
    from .bump import BumpSumMultiplier
    from .counterexample import CounterexampleSpec, weight_from_name
    from .decomposition import evaluate_criteria, symmetric_windows
    from .grid import GridSpec, GridSymbol

    _require(args.windows >= 1, "--windows must be positive")
    kspec = GridSpec(32768, 4096.0)
    if args.multiplier == "bump":
        sym = GridSymbol(kspec, fn=BumpSumMultiplier(((0, 1.0),)), radial=True)
        windows = symmetric_windows(args.k0, args.windows)
        expect = "satisfied"
    else:
        try:
            spec = CounterexampleSpec(args.N_max, weight_from_name(args.weight))
        except (ValueError, MaxMultError) as exc:
            raise ConfigError(str(exc)) from None
        ks = sorted(spec.realized_ks(), key=abs)
        need = args.k0 * 2**args.windows
        _require(need <= len(ks), f"{need} realized scales requested, only {len(ks)} exist for N <= {args.N_max}")
        windows = [ks[: args.k0 * 2**i] for i in range(args.windows + 1)]
        sym = GridSymbol(kspec, fn=spec.multiplier, radial=True)
        expect = "violated at horizon"
    rep = evaluate_criteria(sym, windows, args.kind, p=args.p, alpha=args.alpha, eps=args.eps,
                            r=args.r, gamma=args.gamma)
    _write_csv(args.csv, ["k", "omega"], [[k, v] for k, v in rep.omega.values.items()])
    return {"result": rep.to_json(), "expected": expect, "pass": rep.verdict == expect}


def cmd_maximal(args) -> dict:
    from .bump import maximal_pointwise
    from .counterexample import build_gN, build_mN
    from .grid import (GridFunction, GridSpec, GridSymbol, continuous_maximal, dyadic_maximal,
                       finite_family_maximal, lp_norm)

    ks = parse_range(args.k)
    if not ks:
        raise ConfigError("empty dilation set")
    _require(1 <= args.N <= 4, "--N must lie in [1, 4]")
    spec = GridSpec(2**args.grid_exp, args.L)
    _require(spec.band > 2**args.N + 0.25, "grid does not resolve the test function")
    m = build_mN(args.N)
    g = build_gN(args.N)
    x = spec.points()
    f = GridFunction(spec, np.asarray(g.envelope(x), dtype=complex)
                     * sum(np.exp(2j * np.pi * 2.0**j * x) for j in g.freqs))
    sym = GridSymbol(spec, fn=m, radial=True)
    if args.mode == "dyadic":
        out = dyadic_maximal(sym, ks, f)
    elif args.mode == "continuous":
        _require(args.S >= 1, "--S must be positive")
        out = continuous_maximal(sym, ks, f, args.S)
    else:
        out = finite_family_maximal([GridSymbol(spec, values=sym.lattice(1.0, k)) for k in ks], f)
    result = {"mode": args.mode, "norm": lp_norm(out, args.p)}
    ok = True
    if args.mode != "continuous":
        exact = maximal_pointwise(m, ks, g, x)
        dev = float(np.max(np.abs(exact - out.samples.real)))
        result["maxDeviationFromExact"] = dev
        ok = dev <= 1e-6 * max(1.0, float(np.max(exact)))
    _write_csv(args.csv, ["x", "value"], [[float(a), float(b)] for a, b in zip(x[:: args.csv_stride],
                                                                           out.samples.real[:: args.csv_stride])])
    return {"result": result, "pass": bool(ok)}


def cmd_growth(args) -> dict:
    from .bump import modulated_lp_norm
    from .counterexample import build_gN, growth_grid

    Ns = parse_range(args.N)
    _require(len(Ns) >= 2 and min(Ns) >= 1 and max(Ns) <= 16, "--N must list at least two values in [1, 16]")
    _require(args.p >= 1, "--p must be >= 1")
    rows = []
    for N in Ns:
        rows.append([N, modulated_lp_norm(build_gN(N), args.p, growth_grid(N, args.L))])
    slope = float(np.polyfit(np.log([r[0] for r in rows]), np.log([r[1] for r in rows]), 1)[0])
    _write_csv(args.csv, ["N", "norm"], rows)
    ok = args.lo <= slope <= args.hi
    return {"result": {"table": rows, "exponent": slope, "window": [args.lo, args.hi]}, "pass": bool(ok)}


# --------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maxmult", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="write the JSON report here instead of stdout")
        p.add_argument("--csv", help="also write a CSV table")
        p.add_argument("--seed", type=int, default=0)
        return p

    p = common(sub.add_parser("tile", help="tiling lemma centers for a set of integers"))
    p.add_argument("--set", help="elements of E, e.g. 0,5 or 0..3")
    p.add_argument("--cap-exp", type=int, help="N with card(E) <= 2^N")
    p.add_argument("--range", type=int, default=8, help="construct b_i for |i| <= RANGE")
    p.add_argument("--random", type=int, default=0, help="number of random instances")
    p.set_defaults(func=cmd_tile)

    p = common(sub.add_parser("counterexample", help="lower bounds for the sign-pattern multipliers"))
    p.add_argument("--N", default="1..4")
    p.add_argument("--p", default="2")
    p.add_argument("--weight", default="sqrt-log")
    p.add_argument("--capacity", type=int, default=6)
    p.add_argument("--conclusion", action="store_true", help="also evaluate the glued multiplier")
    p.set_defaults(func=cmd_counterexample)

    p = common(sub.add_parser("seminorm", help="localized derivative bounds of the glued multiplier"))
    p.add_argument("--N-max", dest="N_max", type=int, default=3)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--weight", default="sqrt-log")
    p.add_argument("--capacity", type=int, default=6)
    p.add_argument("--k-count", type=int, default=0, help="subsample the realized scales")
    p.set_defaults(func=cmd_seminorm)

    p = common(sub.add_parser("decompose", help="reconstruct a multiplier from kernel pieces"))
    p.add_argument("--t", default="1,1.37,2")
    p.add_argument("--lmax", type=int, default=8)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-3)
    p.set_defaults(func=cmd_decompose)

    p = common(sub.add_parser("criterion", help="windowed summability criterion"))
    p.add_argument("--multiplier", choices=["bump", "counterexample"], default="bump")
    p.add_argument("--kind", choices=["lp", "sup", "sobolev"], default="lp")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--r", type=float, default=2.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--k0", type=int, default=4, help="initial window size parameter")
    p.add_argument("--windows", type=int, default=3, help="number of doublings")
    p.add_argument("--N-max", dest="N_max", type=int, default=3)
    p.add_argument("--weight", default="sqrt-log")
    p.set_defaults(func=cmd_criterion)

    p = common(sub.add_parser("maximal", help="grid maximal functions of m_N applied to g_N"))
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--k", default="1..8", help="dilation exponents")
    p.add_argument("--mode", choices=["dyadic", "continuous", "family"], default="dyadic")
    p.add_argument("--S", type=int, default=64, help="samples per octave (continuous mode)")
    p.add_argument("--grid-exp", type=int, default=16)
    p.add_argument("--L", type=float, default=1024.0)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--csv-stride", type=int, default=64)
    p.set_defaults(func=cmd_maximal)

    p = common(sub.add_parser("growth", help="growth of ||g_N||_p in N"))
    p.add_argument("--N", default="2..12")
    p.add_argument("--p", type=float, default=4.0)
    p.add_argument("--L", type=float, default=256.0)
    p.add_argument("--lo", type=float, default=0.4)
    p.add_argument("--hi", type=float, default=0.6)
    p.set_defaults(func=cmd_growth)
    return ap


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", AliasWarning)
            body = args.func(args)
        status = 0 if body.pop("pass") else 1
        report = {"command": args.command, "config": config, "version": __version__,
                  "pass": status == 0, **body,
                  "warnings": sorted({str(w.message) for w in caught if issubclass(w.category, AliasWarning)})}
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except MaxMultError as exc:
        report = {"command": args.command, "config": config, "version": __version__,
                  "pass": False, "error": f"{type(exc).__name__}: {exc}"}
        status = 1
    text = json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
