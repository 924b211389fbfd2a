"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from maxmult.bump import BumpSumMultiplier, Envelope, apply_dilated, modulated_lp_norm, pointwise_eval
from maxmult.counterexample import (CounterexampleSpec, build_gN, build_mN, growth_grid, localized_ratio,
                                    localized_ratio_bound, verify_conclusion, verify_lower_bound)
from maxmult.decomposition import (PartitionPair, SpatialCutoffs, WeightSequence, build_blocks, build_pieces,
                                   evaluate_criteria, omega_sequence, rearrange, reconstruct,
                                   reference_multiplier, symmetric_windows)
from maxmult.grid import (GridFunction, GridSpec, GridSymbol, apply_symbol, continuous_maximal,
                          dyadic_maximal, lp_norm, mikhlin_seminorm)
from maxmult.tiling import random_instance, tile, verify_cover, verify_disjoint, verify_slots


def report(n: int, ok: bool, detail: str):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_lower_bound():
    details, ok = [], True
    runtime_N5 = 0.0
    for p in (2.0, 4.0):
        values = []
        for N in range(1, 6):
            start = time.perf_counter()
            rep = verify_lower_bound(N, p)
            if N == 5:
                runtime_N5 = max(runtime_N5, time.perf_counter() - start)
            assert rep.psiNorm == pytest.approx(1.0, abs=1e-12)
            ok &= rep.normValue >= N * rep.psiNorm / math.sqrt(2) * (1 - 1e-2)
            values.append(rep.normValue)
        slope = float(np.polyfit(np.arange(1, 6), values, 1)[0])
        ok &= slope >= 0.70
        details.append(f"p={p:g}: values={[round(v, 4) for v in values]} slope={slope:.4f}")
    ok &= runtime_N5 <= 60.0
    report(1, ok, "; ".join(details) + f"; N=5 runtime {runtime_N5:.1f}s")


def test_criterion_2_growth_of_bounds():
    details, ok = [], True
    for p in (2.0, 4.0):
        reps = [verify_conclusion(N, p) for N in range(1, 5)]
        bounds = [r.C_N * r.v for r in reps]
        cs = [r.C_N for r in reps]
        # The glued multiplier reproduces the rescaled single-block chain.
        ok &= all(abs(r.maximalNorm - r.lowerBound) <= 1e-9 * r.lowerBound for r in reps)
        ok &= all(b > a for a, b in zip(bounds, bounds[1:])) and max(cs) <= 2 * min(cs)
        details.append(f"p={p:g}: C_N={[round(c, 4) for c in cs]} bounds={[round(b, 4) for b in bounds]}")
    report(2, ok, "; ".join(details))


def test_criterion_3_littlewood_paley_growth():
    Ns = list(range(2, 13))
    l4 = [modulated_lp_norm(build_gN(N), 4.0, growth_grid(N)) for N in Ns]
    exponent = float(np.polyfit(np.log(Ns), np.log(l4), 1)[0])
    psi2 = Envelope().norm(2)
    l2_err = max(abs(modulated_lp_norm(build_gN(N), 2.0, growth_grid(N)) / (math.sqrt(N) * psi2) - 1) for N in Ns)
    ok = 0.4 <= exponent <= 0.6 and l2_err <= 1e-6
    report(3, ok, f"L4 exponent {exponent:.4f} over N=2..12; max rel. error of ||g_N||_2 = sqrt(N)||Psi||_2: {l2_err:.2e}")


@pytest.mark.slow
def test_criterion_4_oracle_equivalence():
    worst, pairs = 0.0, 0
    for N in range(1, 5):
        m, g = build_mN(N), build_gN(N)
        # Band n / 2L = 2^(N+1) resolves the top modulation 2^N + 1/8; L = 512 keeps the envelope tail negligible.
        spec = GridSpec(1 << (N + 11), 512.0)
        x = spec.points()
        f = GridFunction(spec, np.asarray(pointwise_eval(g, x)))
        sym = GridSymbol(spec, fn=m, radial=True)
        fnorm = np.linalg.norm(f.samples)
        exact_cache = {}
        for k in range(1, N * 4**N + 1):
            terms = apply_dilated(m, k, g)
            if terms.terms not in exact_cache:
                exact_cache[terms.terms] = np.asarray(pointwise_eval(terms, x))
            exact = exact_cache[terms.terms]
            grid = apply_symbol(sym, 1.0, f, k).samples
            den = np.linalg.norm(exact)
            err = np.linalg.norm(grid - exact) / (den if den > 0 else fnorm)
            worst = max(worst, err)
            pairs += 1
    report(4, worst <= 1e-6, f"{pairs} (N, k) pairs, max relative L2 deviation {worst:.2e}")


def test_criterion_5_tiling():
    rng = np.random.default_rng(20240501)
    instances = [random_instance(rng, max_N=8, I=32) for _ in range(200)]
    start = time.perf_counter()
    results = [tile(inst.E, inst.N, inst.I) for inst in instances]
    elapsed = time.perf_counter() - start
    ok = elapsed <= 5.0
    worst_ratio = 0.0
    for res in results:
        N = res.instance.N
        ok &= verify_slots(res) and verify_disjoint(res) and verify_cover(res, N)
        ok &= res.max_forbidden <= 2 ** (2 * N + 1)
        worst_ratio = max(worst_ratio, res.max_forbidden / 2 ** (2 * N + 1))
    report(5, ok, f"200 instances in {elapsed:.2f}s; max forbidden / 2^(2N+1) = {worst_ratio:.3f}")


def test_criterion_6_partition_identities():
    xi = np.geomspace(2.0**-20, 2.0**20, 400001)
    freq_err = float(np.max(np.abs(PartitionPair().identity_residual(xi))))
    cut = SpatialCutoffs()
    lmax = 20
    r = np.linspace(0, 2.0**lmax, 400001)
    space_err = float(np.max(np.abs(cut.partial_sum(r, lmax) - 1)))
    ok = freq_err <= 1e-8 and space_err <= 1e-8
    report(6, ok, f"frequency residual {freq_err:.1e} on [2^-20, 2^20]; spatial residual {space_err:.1e} on [0, 2^20]")


def test_criterion_7_rearrangement_and_blocks():
    rng = np.random.default_rng(7)
    ok = True
    for trial in range(1000):
        size = int(rng.integers(0, 60))
        ks = rng.choice(400, size=size, replace=False) - 200
        vals = rng.exponential(size=size) * (rng.random(size) < 0.9)
        if trial % 5 == 0:
            vals = np.round(vals, 1)  # force ties
        omega = WeightSequence.from_arrays(ks.tolist(), vals.tolist())
        star = rearrange(omega)
        ok &= list(star.values) == sorted((float(v) for v in vals if v > 0), reverse=True)
        blocks = build_blocks(omega)
        flat = [k for E in blocks for k in E]
        ok &= len(flat) == len(set(flat)) and set(flat) == set(omega.support())
        ok &= all(len(E) <= 2 ** (2**j) for j, E in enumerate(blocks))
    report(7, ok, "1000 random sequences: sort oracle, partition of the support, card(E_j) <= 2^(2^j)")


def test_criterion_8_reconstruction():
    m = reference_multiplier()
    kspec, fspec = GridSpec(8192, 1024.0), GridSpec(4096, 8.0)
    sym = GridSymbol(kspec, fn=m, radial=True)
    omega = omega_sequence(sym, range(-4, 12), alpha=1.0)
    active = omega.support()
    pieces = build_pieces(sym, build_blocks(omega), 8)
    f = GridFunction.from_callable(fspec, lambda x: np.exp(-x**2 / (2 * (1 / 32) ** 2)))
    errs = {t: reconstruct(m, pieces, f, t).error for t in (1.0, 1.37, 2.0)}
    ok = len(active) == 8 and all(e <= 1e-3 for e in errs.values())
    report(8, ok, f"active k={active}; relative L2 errors " + ", ".join(f"t={t}: {e:.1e}" for t, e in errs.items()))


def test_criterion_9_criterion_evaluator():
    kspec = GridSpec(32768, 4096.0)
    bump = evaluate_criteria(GridSymbol(kspec, fn=BumpSumMultiplier(((0, 1.0),)), radial=True),
                             symmetric_windows(4, 3))
    spec = CounterexampleSpec(3)
    ks = sorted(spec.realized_ks(), key=abs)
    windows = [ks[: 4 * 2**i] for i in range(4)]
    glued = evaluate_criteria(GridSymbol(kspec, fn=spec.multiplier, radial=True), windows)
    increasing = all(b > a for a, b in zip(glued.sums, glued.sums[1:]))
    ok = bump.verdict == "satisfied" and glued.verdict == "violated at horizon" and increasing
    report(9, ok, f"single bump: {bump.verdict}; glued multiplier sums "
                  f"{[round(s, 3) for s in glued.sums]}: {glued.verdict}")


def test_criterion_10_seminorms():
    one = lambda x: np.ones_like(np.asarray(x, dtype=float))
    unit = [mikhlin_seminorm(one, j) for j in range(3)]
    spec = CounterexampleSpec(3)
    ratios = localized_ratio(spec, spec.realized_ks())
    bound = localized_ratio_bound(spec)
    ok = unit == [1.0, 1.0, 1.0] and max(ratios.values()) <= bound
    report(10, ok, f"||1||_(j) = {unit}; localized ratio max {max(ratios.values()):.1f} over "
                   f"{len(ratios)} realized k, a priori bound {bound:.1f}")


def test_continuous_dilation_refinement():
    """Sampled sup over t in [2^k, 2^(k+1)) is nondecreasing as the samples per octave double."""
    N = 2
    spec = GridSpec(1 << 14, 512.0)
    m, g = build_mN(N), build_gN(N)
    x = spec.points()
    f = GridFunction(spec, np.asarray(pointwise_eval(g, x)))
    sym = GridSymbol(spec, fn=m, radial=True)
    ks = range(1, N * 4**N + 1)
    norms = [lp_norm(continuous_maximal(sym, ks, f, S), 2) for S in (1, 2, 4, 8, 16)]
    dyadic = lp_norm(dyadic_maximal(sym, ks, f), 2)
    assert norms[0] == pytest.approx(dyadic, rel=1e-12)
    assert all(b >= a - 1e-12 for a, b in zip(norms, norms[1:]))
    print("continuous refinement (S = 1..16):", [round(v, 5) for v in norms])
