"""Decomposition of a multiplier by the rearrangement of its localized kernel norms.

omega(k) measures F^-1[phi m(2^k .)]; the k are grouped into blocks E_j
according to the nonincreasing rearrangement omega*, each localized kernel
is cut into annular pieces by chi_l, and

    F^-1[m(t .) f^] = sum_j sum_l T_t^{E_j, l}[H^{j,l}, f],

where T_t^{E,l} has symbol m^l(t xi) = sum_{k in E} g_{k,l}(2^-k t xi) and
g_{k,l} = psi * F[chi_l h_k]. Every identity here is checked numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .grid import (GridFunction, GridSpec, GridSymbol, apply_symbol, kernel, kernel_to_symbol,
                   lp_norm, sobolev_norm, weighted_kernel_norm, weighted_kernel_sup)
from .profiles import LP_BUMP, SmoothProfile, theta

# ------------------------------------------------------------ rearrangement


@dataclass(frozen=True)
class WeightSequence:
    """omega: Z -> [0, inf) with finite support, stored as {k: omega(k)}."""

    values: dict

    def __post_init__(self):
        vals = {int(k): float(v) for k, v in dict(self.values).items()}
        if any(not (v >= 0 and math.isfinite(v)) for v in vals.values()):
            raise ValueError("weights must be finite and nonnegative")
        object.__setattr__(self, "values", dict(sorted(vals.items())))

    @classmethod
    def from_arrays(cls, ks: Iterable[int], vals: Iterable[float]) -> "WeightSequence":
        return cls(dict(zip(ks, vals)))

    def __call__(self, k: int) -> float:
        return self.values.get(k, 0.0)

    def support(self) -> list[int]:
        return [k for k, v in self.values.items() if v > 0]

    def restrict(self, ks: Iterable[int]) -> "WeightSequence":
        ks = set(ks)
        return WeightSequence({k: v for k, v in self.values.items() if k in ks})


@dataclass(frozen=True)
class Rearrangement:
    """omega*(t) = sup{lam > 0 : card{k : |omega(k)| > lam} > t}, a step function."""

    values: tuple

    def __call__(self, t: float) -> float:
        if t < 0:
            raise ValueError("rearrangement is defined for t >= 0")
        i = math.floor(t)
        return self.values[i] if i < len(self.values) else 0.0


def rearrange(omega: WeightSequence) -> Rearrangement:
    return Rearrangement(tuple(sorted((abs(v) for v in omega.values.values() if v != 0), reverse=True)))


@dataclass(frozen=True)
class CriterionSum:
    value: float
    tailBound: float
    terms: int


def criterion_sum(omega: WeightSequence, tail_L: int | None = None) -> CriterionSum:
    """omega*(0) + sum_{l=1}^{L} omega*(l) / l; exact for finitely supported omega."""
    star = rearrange(omega)
    size = len(star.values)
    L = size if tail_L is None else int(tail_L)
    if L < size:
        raise ValueError(f"tail_L={L} is shorter than the support size {size}")
    if size == 0:
        return CriterionSum(0.0, 0.0, L)
    vals = np.asarray(star.values)
    total = vals[0] + float(np.sum(vals[1:] / np.arange(1, size)))
    return CriterionSum(float(total), 0.0, L)


def build_blocks(omega: WeightSequence) -> list[list[int]]:
    """E_0 = {omega*(2) < omega <= omega*(0)}, E_j = {omega*(2^2^j) < omega <= omega*(2^2^(j-1))}.

    Blocks past the first whose upper threshold is zero are dropped.
    """
    star = rearrange(omega)
    items = [(k, abs(v)) for k, v in omega.values.items()]
    blocks = []
    j = 0
    while True:
        upper = star(0) if j == 0 else star(2 ** (2 ** (j - 1)))
        if upper == 0 and j > 0:
            break
        lower = star(2 ** (2**j))
        blocks.append([k for k, v in items if lower < v <= upper])
        j += 1
    return blocks


# ---------------------------------------------------- partitions of unity


@dataclass(frozen=True)
class PartitionPair:
    """phi and psi = conj(phi) / sum_j |phi(2^-j .)|^2, so sum_k psi phi(2^-k xi) = 1."""

    phi_profile: SmoothProfile = LP_BUMP

    def phi(self, r) -> np.ndarray:
        return self.phi_profile(np.abs(np.asarray(r, dtype=float)))

    def denominator(self, r) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=float))
        safe = np.where(r > 0, r, 1.0)
        base = np.floor(np.log2(safe))
        total = np.zeros(r.shape)
        # phi(2^-j r) vanishes unless 2^-j r lies in (1/2, 3/2); a few shifts cover it.
        for shift in range(-3, 4):
            total += self.phi(np.ldexp(safe, -(base + shift).astype(np.int64))) ** 2
        return np.where(r > 0, total, 0.0)

    def psi(self, r) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=float))
        ph = self.phi(r)
        den = self.denominator(r)
        return np.where(ph != 0, np.conj(ph) / np.where(den > 0, den, 1.0), 0.0)

    def identity_residual(self, xi) -> np.ndarray:
        """sum_k psi(2^-k xi) phi(2^-k xi) - 1 (the sum has at most two live terms)."""
        r = np.abs(np.asarray(xi, dtype=float))
        base = np.floor(np.log2(r))
        total = np.zeros(r.shape)
        for shift in range(-3, 4):
            u = np.ldexp(r, -(base + shift).astype(np.int64))
            total += self.psi(u) * self.phi(u)
        return total - 1.0


@dataclass(frozen=True)
class SpatialCutoffs:
    """chi = theta(|x|) - theta(|x|/2); chi_l = chi(2^-l x) for l > 0; chi_0 = 1 - theta(|x|/2)."""

    profile: SmoothProfile = LP_BUMP

    def chi(self, r) -> np.ndarray:
        return self.profile(np.abs(np.asarray(r, dtype=float)))

    def chi_l(self, r, l: int) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=float))
        if l < 0:
            raise ValueError("l must be nonnegative")
        if l == 0:
            return 1.0 - theta(r / 2)
        return self.chi(np.ldexp(r, -l))

    def partial_sum(self, r, lmax: int) -> np.ndarray:
        return sum(self.chi_l(r, l) for l in range(lmax + 1))

    @staticmethod
    def annulus(r, l: int) -> np.ndarray:
        """Sharp indicator of the support window of the l-th piece."""
        r = np.abs(np.asarray(r, dtype=float))
        if l == 0:
            return (r <= 4).astype(float)
        return ((r >= 2.0 ** (l - 4)) & (r <= 2.0 ** (l + 4))).astype(float)


# ------------------------------------------------------------ kernel pieces


@dataclass
class KernelPieces:
    """h_k^{j,l}: the localized kernel of k in E_j, restricted to the l-th annulus."""

    spec: GridSpec
    blocks: list
    lmax: int
    kernels: dict
    cutoffs: SpatialCutoffs = field(default_factory=SpatialCutoffs)

    def block_of(self, k: int) -> int | None:
        for j, E in enumerate(self.blocks):
            if k in E:
                return j
        return None

    def piece(self, j: int, l: int, k: int) -> np.ndarray:
        if k not in self.blocks[j] or k not in self.kernels:
            return np.zeros(self.spec.shape, dtype=complex)
        return self.kernels[k] * self.cutoffs.annulus(self.spec.radius(), l)

    def cut_piece(self, j: int, l: int, k: int) -> np.ndarray:
        """chi_l h_k^{j,l}."""
        return self.piece(j, l, k) * self.cutoffs.chi_l(self.spec.radius(), l)

    def reassemble(self, k: int) -> np.ndarray:
        """sum_j sum_{l <= lmax} chi_l h_k^{j,l}, to compare with the full kernel."""
        return sum(self.cut_piece(j, l, k) for j in range(len(self.blocks)) for l in range(self.lmax + 1))

    def norms(self, p: float) -> dict:
        """{(j, l, k): ||h_k^{j,l}||_p}."""
        out = {}
        for j, E in enumerate(self.blocks):
            for l in range(self.lmax + 1):
                for k in E:
                    out[(j, l, k)] = lp_norm(GridFunction(self.spec, self.piece(j, l, k)), p)
        return out


def build_pieces(m: GridSymbol, blocks: Sequence[Sequence[int]], lmax: int,
                 cutoffs: SpatialCutoffs | None = None, phi: SmoothProfile = LP_BUMP) -> KernelPieces:
    """Localized kernels F^-1[phi m(2^k .)] for every k in a block, ready to be cut."""
    kernels = {}
    for E in blocks:
        for k in E:
            kernels[k] = kernel(m, k, phi).samples
    return KernelPieces(m.spec, [list(E) for E in blocks], lmax, kernels, cutoffs or SpatialCutoffs())


def block_symbol(m: Callable, E: Iterable[int], pair: PartitionPair | None = None) -> Callable:
    """m_j(xi) = sum_{k in E} psi(2^-k xi) phi(2^-k xi) m(xi), as a radial callable."""
    pair = pair or PartitionPair()
    E = list(E)

    def mj(r):
        r = np.abs(np.asarray(r, dtype=float))
        weight = sum(pair.psi(np.ldexp(r, -k)) * pair.phi(np.ldexp(r, -k)) for k in E)
        return weight * m(r)

    return mj


# ---------------------------------------------------- the operators T^{E,l}


def _dtft(spec: GridSpec, samples: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """sum_x samples(x) e^{-2 pi i x eta} (L/n)^d at arbitrary eta (rows of coordinates for d=2)."""
    live = samples != 0
    if not np.any(live) or eta.size == 0:
        return np.zeros(eta.shape[0] if spec.d > 1 else eta.size, dtype=complex)
    pts = spec.points()
    if spec.d == 1:
        x = pts[live][None, :]
        phase = np.exp(-2j * np.pi * np.outer(eta, x.ravel()))
    else:
        x = np.stack([c[live] for c in pts], axis=1)
        phase = np.exp(-2j * np.pi * (eta @ x.T))
    return spec.spacing ** spec.d * (phase @ samples[live])


def ml_values(pieces: KernelPieces, j: int, l: int, E: Iterable[int], xi, t: float,
              pair: PartitionPair | None = None) -> np.ndarray:
    """m^l(t xi) = sum_{k in E} psi(eta) F[chi_l h_k^{j,l}](eta), eta = 2^-k t xi."""
    pair = pair or PartitionPair()
    xi = np.asarray(xi, dtype=float)
    d = pieces.spec.d
    coords = xi.reshape(-1, d) if d > 1 else xi.reshape(-1)
    radius = np.linalg.norm(coords, axis=1) if d > 1 else np.abs(coords)
    out = np.zeros(radius.shape, dtype=complex)
    for k in E:
        eta_r = np.ldexp(radius, -k) * t
        w = pair.psi(eta_r)
        live = np.nonzero(w)[0]
        if live.size == 0:
            continue
        eta = np.ldexp(coords[live], -k) * t
        out[live] += w[live] * _dtft(pieces.spec, pieces.cut_piece(j, l, k), eta)
    return out.reshape(xi.shape[:-1] if d > 1 else xi.shape)


def _lattice(spec: GridSpec) -> np.ndarray:
    fr = spec.frequencies()
    return fr if spec.d == 1 else np.stack(fr, axis=-1)


def apply_TEl(pieces: KernelPieces, j: int, l: int, E: Iterable[int], t: float, f: GridFunction,
              pair: PartitionPair | None = None) -> GridFunction:
    """T_t^{E,l}[H^{j,l}, f]: sum over k in E of the L^1-dilate by 2^-k t of Psi * (chi_l h_k), convolved with f.

    The dilation acts exactly on the frequency side: the symbol of the
    k-th term at xi is psi(eta) F[chi_l h_k](eta) with eta = 2^-k t xi.
    """
    vals = ml_values(pieces, j, l, E, _lattice(f.spec), t, pair)
    return apply_symbol(GridSymbol(f.spec, values=vals), 1.0, f)


def ml_values_lattice(pieces: KernelPieces, j: int, l: int, E: Iterable[int], fspec: GridSpec,
                      t: float = 1.0, pair: PartitionPair | None = None) -> np.ndarray:
    """m^l(t xi) on the lattice of ``fspec`` via one FFT on the kernel grid.

    Needs every 2^-k t xi to be a kernel-lattice point, i.e.
    L_kernel t / (2^k L_f) must be an integer; independent of the DTFT route.
    """
    pair = pair or PartitionPair()
    kspec = pieces.spec
    if fspec.d != 1 or kspec.d != 1:
        raise ValueError("lattice route is implemented for d = 1")
    idx = np.arange(fspec.n) - fspec.n // 2
    out = np.zeros(fspec.n, dtype=complex)
    for k in E:
        ratio = kspec.L * t / (2.0**k * fspec.L)
        step = round(ratio)
        if abs(ratio - step) > 1e-12 or step < 1:
            raise ValueError(f"lattices do not align at k={k}, t={t}")
        spectrum = kernel_to_symbol(pieces.cut_piece(j, l, k), kspec)
        q = idx * step
        inside = np.abs(q) < kspec.n // 2
        eta = q / kspec.L
        vals = np.zeros(fspec.n, dtype=complex)
        vals[inside] = spectrum[q[inside] + kspec.n // 2]
        out += pair.psi(eta) * vals
    return out


@dataclass
class Reconstruction:
    approx: GridFunction
    target: GridFunction
    error: float
    errors_by_lmax: list


def reconstruct(m: Callable, pieces: KernelPieces, f: GridFunction, t: float,
                pair: PartitionPair | None = None) -> Reconstruction:
    """Compare sum_j sum_{l <= lmax} T_t^{E_j,l}[H^{j,l}, f] with F^-1[m(t .) f^].

    ``m`` is a radial callable. ``errors_by_lmax[L]`` is the relative L^2
    error when the l-sum is truncated at L.
    """
    pair = pair or PartitionPair()
    xi = _lattice(f.spec)
    target_sym = GridSymbol(f.spec, fn=m, radial=True)
    target = apply_symbol(target_sym, t, f)
    ref = lp_norm(target, 2)
    acc = np.zeros(f.spec.shape, dtype=complex)
    errors = []
    approx = None
    for l in range(pieces.lmax + 1):
        for j, E in enumerate(pieces.blocks):
            acc = acc + ml_values(pieces, j, l, E, xi, t, pair)
        approx = apply_symbol(GridSymbol(f.spec, values=acc), 1.0, f)
        errors.append(lp_norm(approx - target, 2) / ref if ref > 0 else lp_norm(approx, 2))
    return Reconstruction(approx, target, errors[-1], errors)


def reference_multiplier() -> Callable:
    """Radial test symbol with eight active scales k = 0..7.

    A smooth window (support [1, 128], flat on [2, 64]) times a decaying,
    slowly rotating factor, so every localized kernel differs.
    """
    window = SmoothProfile(1, 128, 2, 64)

    def m(r):
        r = np.abs(np.asarray(r, dtype=float))
        return window(r) * (1 + r) ** -0.5 * np.exp(1j * np.log1p(r))

    return m


# ---------------------------------------------------------- criteria


def omega_sequence(m: GridSymbol, ks: Iterable[int], kind: str = "lp", p: float = 2.0, alpha: float = 1.0,
                   eps: float = 0.5, r: float = 2.0, gamma: float = 1.0,
                   phi: SmoothProfile = LP_BUMP) -> WeightSequence:
    """omega(k) for the chosen hypothesis: weighted L^p' kernel norm, weighted sup, or Sobolev norm."""
    vals = {}
    for k in ks:
        if kind == "lp":
            p_prime = math.inf if p == 1 else (1.0 if math.isinf(p) else p / (p - 1))
            vals[k] = weighted_kernel_norm(m, k, p_prime, alpha, phi)
        elif kind == "sup":
            vals[k] = weighted_kernel_sup(m, k, eps, phi)
        elif kind == "sobolev":
            vals[k] = sobolev_norm(m.localized(k, phi), r, gamma)
        else:
            raise ValueError(f"unknown criterion kind {kind!r}")
    return WeightSequence(vals)


def verdict(sums: Sequence[float], rel_tol: float = 1e-12) -> str:
    """Classify a nondecreasing run of windowed criterion sums."""
    if len(sums) < 2:
        return "inconclusive-truncation"
    inc = np.diff(np.asarray(sums, dtype=float))
    scale = max(abs(sums[-1]), 1e-300)
    if inc[-1] <= rel_tol * scale:
        return "satisfied"
    if np.all(inc > rel_tol * scale) and inc[-1] >= 0.5 * inc[0]:
        return "violated at horizon"
    return "inconclusive-truncation"


@dataclass
class CriterionReport:
    kind: str
    omega: WeightSequence
    windows: list
    sums: list
    verdict: str

    @property
    def criterion_sum(self) -> float:
        return self.sums[-1] if self.sums else 0.0

    def to_json(self) -> dict:
        star = rearrange(self.omega)
        return {
            "kind": self.kind,
            "omega": {str(k): v for k, v in self.omega.values.items()},
            "rearrangement": list(star.values),
            "windows": [[min(w), max(w), len(w)] if w else [] for w in self.windows],
            "sums": self.sums,
            "criterionSum": self.criterion_sum,
            "verdict": self.verdict,
        }


def evaluate_criteria(m: GridSymbol, windows: Sequence[Iterable[int]], kind: str = "lp", **params) -> CriterionReport:
    """Criterion sums over nested k-windows, with a verdict on their trend.

    Satisfied: the last window added nothing. Violated at horizon: every
    window added mass and the last increment is at least half the first
    (the log-type divergence of a flat rearrangement). Otherwise the
    windows are too short to tell.
    """
    windows = [sorted(set(int(k) for k in w)) for w in windows]
    if not windows or not windows[0]:
        raise ValueError("at least one nonempty k-window is required")
    for a, b in zip(windows, windows[1:]):
        if not set(a) <= set(b):
            raise ValueError("windows must be nested")
    omega = omega_sequence(m, windows[-1], kind, **params)
    sums = [criterion_sum(omega.restrict(w)).value for w in windows]
    return CriterionReport(kind, omega, windows, sums, verdict(sums))


def symmetric_windows(K0: int, doublings: int) -> list[list[int]]:
    return [list(range(-K0 * 2**i, K0 * 2**i + 1)) for i in range(doublings + 1)]
