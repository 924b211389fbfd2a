import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maxmult.bump import BumpSumMultiplier
from maxmult.decomposition import (PartitionPair, SpatialCutoffs, WeightSequence, apply_TEl, block_symbol,
                                   build_blocks, build_pieces, criterion_sum, evaluate_criteria, ml_values,
                                   ml_values_lattice, omega_sequence, rearrange, reconstruct,
                                   reference_multiplier, symmetric_windows, verdict)
from maxmult.grid import GridFunction, GridSpec, GridSymbol, apply_symbol, lp_norm
from maxmult.profiles import theta

KSPEC = GridSpec(8192, 1024.0)
FSPEC = GridSpec(4096, 8.0)


def _test_function(spec=FSPEC):
    return GridFunction.from_callable(spec, lambda x: np.exp(-x**2 / (2 * (1 / 32) ** 2)))


@pytest.fixture(scope="module")
def reference_setup():
    m = reference_multiplier()
    sym = GridSymbol(KSPEC, fn=m, radial=True)
    omega = omega_sequence(sym, range(-4, 12), alpha=1.0)
    blocks = build_blocks(omega)
    return m, sym, omega, blocks, build_pieces(sym, blocks, 8)


# ------------------------------------------------------------ rearrangement


def test_rearrangement_examples():
    star = rearrange(WeightSequence({-1: 0.5, 0: 2.0, 3: 0.0, 4: 1.0}))
    assert star.values == (2.0, 1.0, 0.5)
    assert star(0) == 2.0 and star(0.99) == 2.0 and star(2.5) == 0.5 and star(3) == 0.0
    with pytest.raises(ValueError):
        star(-1)


def test_weight_validation():
    with pytest.raises(ValueError):
        WeightSequence({0: -1.0})
    with pytest.raises(ValueError):
        WeightSequence({0: math.inf})


def _distribution_oracle(vals, t):
    """omega*(t) = sup{lam : card{|omega| > lam} > t}: the sup is the largest v with card{>= v} > t."""
    return max((v for v in vals if v > 0 and sum(u >= v for u in vals) > t), default=0.0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 100, allow_nan=False), min_size=0, max_size=30))
def test_rearrangement_matches_sort(vals):
    star = rearrange(WeightSequence(dict(enumerate(vals))))
    expected = sorted((v for v in vals if v > 0), reverse=True)
    assert list(star.values) == expected
    for t in range(len(vals) + 2):
        assert star(t) == _distribution_oracle(vals, t)


def test_criterion_sum_harmonic():
    K = 10
    omega = WeightSequence({k: 1.0 for k in range(-K, K + 1)})
    harmonic = sum(1 / l for l in range(1, 2 * K + 1))
    assert criterion_sum(omega).value == pytest.approx(1 + harmonic, rel=1e-14)
    assert criterion_sum(WeightSequence({})).value == 0.0
    with pytest.raises(ValueError):
        criterion_sum(omega, tail_L=3)


def test_criterion_sum_single_spike():
    assert criterion_sum(WeightSequence({5: 3.0})).value == 3.0


def _blocks_oracle(vals):
    srt = sorted(vals.values(), reverse=True)
    star = lambda t: srt[t] if t < len(srt) else 0.0
    out, j = [], 0
    while True:
        upper = star(0) if j == 0 else star(2 ** (2 ** (j - 1)))
        if j > 0 and upper == 0:
            return out
        lower = star(2 ** (2**j))
        out.append(sorted(k for k, v in vals.items() if lower < v <= upper))
        j += 1


@settings(max_examples=200, deadline=None)
@given(st.dictionaries(st.integers(-50, 50), st.floats(0.01, 10, allow_nan=False), min_size=1, max_size=40))
def test_blocks_partition_and_cardinality(vals):
    omega = WeightSequence(vals)
    blocks = build_blocks(omega)
    assert blocks == _blocks_oracle(omega.values)
    flat = [k for E in blocks for k in E]
    assert sorted(flat) == sorted(omega.support())
    for j, E in enumerate(blocks):
        assert len(E) <= 2 ** (2**j)


# ---------------------------------------------------- partitions of unity


def test_frequency_partition_identity():
    xi = np.geomspace(2.0**-20, 2.0**20, 200001)
    assert np.max(np.abs(PartitionPair().identity_residual(xi))) < 1e-8


def test_psi_support():
    pair = PartitionPair()
    r = np.linspace(0, 3, 3001)
    assert np.all(pair.psi(r)[(r <= 0.5) | (r >= 1.5)] == 0)


def test_spatial_partition_identity():
    cut = SpatialCutoffs()
    for lmax in (0, 3, 8):
        r = np.linspace(0, 2.0**lmax, 100001)
        assert np.max(np.abs(cut.partial_sum(r, lmax) - 1)) < 1e-8
        far = np.linspace(0, 2.0 ** (lmax + 3), 10001)
        assert np.allclose(cut.partial_sum(far, lmax), 1 - theta(far / 2.0 ** (lmax + 1)), atol=1e-15)


@pytest.mark.parametrize("l", [0, 1, 4, 9])
def test_cutoffs_live_inside_annulus(l):
    cut = SpatialCutoffs()
    r = np.linspace(0, 2.0 ** (l + 5), 200001)
    chi = cut.chi_l(r, l)
    assert np.all(chi[cut.annulus(r, l) == 0] == 0)


def test_block_symbols_sum_to_multiplier():
    m = reference_multiplier()
    r = np.geomspace(0.6, 200, 5001)
    blocks = [[0, 1], [2, 3, 4], [5, 6, 7, 8]]
    total = sum(block_symbol(m, E)(r) for E in blocks)
    assert np.max(np.abs(total - m(r))) < 1e-12


# ------------------------------------------------------------ kernel pieces


def test_reference_blocks(reference_setup):
    _, _, omega, blocks, _ = reference_setup
    assert sorted(omega.support()) == list(range(0, 8))
    assert sorted(k for E in blocks for k in E) == list(range(0, 8))


def test_piece_norms_decay_with_annulus(reference_setup):
    _, _, omega, _, pieces = reference_setup
    alpha = 1.0
    for (j, l, k), val in pieces.norms(2.0).items():
        # ||h 1_{|x| >= 2^(l-4)}||_2 <= (1 + 2^(l-4))^-alpha omega(k) <= 2^(4 alpha) 2^(-l alpha) omega(k).
        assert val <= 2 ** (4 * alpha) * 2 ** (-l * alpha) * omega(k) * (1 + 1e-12)


def test_pieces_reassemble_kernel(reference_setup):
    _, _, _, _, pieces = reference_setup
    r = KSPEC.radius()
    inner = r <= 2.0**pieces.lmax
    for k in (0, 3, 7):
        diff = pieces.reassemble(k) - pieces.kernels[k]
        assert np.max(np.abs(diff[inner])) < 1e-12 * np.max(np.abs(pieces.kernels[k]))


def test_empty_block_gives_zero_operator(reference_setup):
    _, _, _, _, pieces = reference_setup
    out = apply_TEl(pieces, 0, 2, [], 1.0, _test_function())
    assert lp_norm(out, 2) == 0.0


@pytest.mark.parametrize("t", [1.0, 2.0])
@pytest.mark.parametrize("l", [0, 3])
def test_lattice_route_matches_dtft(reference_setup, t, l):
    _, _, _, blocks, pieces = reference_setup
    xi = FSPEC.frequencies()
    for j, E in enumerate(blocks):
        direct = ml_values(pieces, j, l, E, xi, t)
        lattice = ml_values_lattice(pieces, j, l, E, FSPEC, t)
        assert np.max(np.abs(direct - lattice)) < 1e-12


def test_lattice_route_rejects_misaligned(reference_setup):
    _, _, _, blocks, pieces = reference_setup
    with pytest.raises(ValueError):
        ml_values_lattice(pieces, 0, 0, blocks[0], FSPEC, 1.37)


def test_apply_TEl_matches_symbol(reference_setup):
    _, _, _, blocks, pieces = reference_setup
    f = _test_function()
    out = apply_TEl(pieces, 1, 2, blocks[1], 1.37, f)
    sym = ml_values(pieces, 1, 2, blocks[1], FSPEC.frequencies(), 1.37)
    ref = apply_symbol(GridSymbol(FSPEC, values=sym), 1.0, f)
    assert np.allclose(out.samples, ref.samples, atol=1e-15)


def test_reconstruction_converges(reference_setup):
    m, _, _, _, pieces = reference_setup
    rec = reconstruct(m, pieces, _test_function(), 1.37)
    errs = rec.errors_by_lmax
    assert all(b <= a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-10


# ---------------------------------------------------------- criteria


def test_verdict_rules():
    assert verdict([1.0, 2.0, 2.0]) == "satisfied"
    assert verdict([1.0, 2.0, 2.9, 3.7]) == "violated at horizon"
    assert verdict([1.0, 3.0, 3.1]) == "inconclusive-truncation"
    assert verdict([1.0]) == "inconclusive-truncation"


def test_zero_multiplier_criterion():
    sym = GridSymbol.constant(GridSpec(1024, 64.0), 0.0)
    rep = evaluate_criteria(sym, symmetric_windows(2, 2))
    assert rep.sums == [0.0, 0.0, 0.0] and rep.verdict == "satisfied"


def test_single_bump_criterion_satisfied():
    sym = GridSymbol(GridSpec(32768, 4096.0), fn=BumpSumMultiplier(((0, 1.0),)), radial=True)
    rep = evaluate_criteria(sym, symmetric_windows(4, 3))
    assert rep.verdict == "satisfied"
    # phi(xi) Phi(2^k xi) is nonzero only for k = 0, 1; at k = -1 the supports merely touch at 3/2.
    assert set(rep.omega.support()) == {0, 1}
    assert rep.to_json()["criterionSum"] == rep.sums[-1]


def test_criterion_window_validation():
    sym = GridSymbol.constant(GridSpec(1024, 64.0), 0.0)
    with pytest.raises(ValueError):
        evaluate_criteria(sym, [[0, 1], [2, 3]])
    with pytest.raises(ValueError):
        evaluate_criteria(sym, [[]])
    with pytest.raises(ValueError):
        omega_sequence(sym, [0], kind="nope")


def test_zero_multiplier_pieces_vanish():
    sym = GridSymbol.constant(GridSpec(1024, 64.0), 0.0)
    pieces = build_pieces(sym, [[0, 1], [2]], 3)
    assert all(v == 0.0 for v in pieces.norms(2.0).values())


def test_single_scale_kernel_reassembly():
    # One active k: the cut pieces over l <= 8 rebuild the whole localized kernel.
    sym = GridSymbol(KSPEC, fn=reference_multiplier(), radial=True)
    pieces = build_pieces(sym, [[3]], 8)
    full = pieces.kernels[3]
    assert np.linalg.norm(pieces.reassemble(3) - full) / np.linalg.norm(full) < 1e-3
