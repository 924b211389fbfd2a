"""The unbounded dyadic maximal multiplier and its test functions.

m_N carries, at scales N kappa + j, the kappa-th sign pattern over the
alphabet {1, -1, i, -i}; dilating by 2^(N kappa) selects pattern kappa on
the modulations e(2^j x) Psi(x) of g_N. Picking the best pattern at every
x gives a pointwise lower bound N |Psi(x)| / sqrt(2), while ||g_N||_p grows
only like N^(1/2). Blocks a_N m_N(2^(-N 8^N) .) with a_N = N^(-1/2) v(4^N)
are glued into one multiplier m whose dyadic maximal operator is unbounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable

import numpy as np

from .bump import (BumpSumMultiplier, Envelope, ModulatedFunction, maximal_lp_norm,
                   modulated_lp_norm)
from .errors import CapacityExceeded, InvalidWeight
from .grid import GridSpec
from .profiles import LP_BUMP, PHI_STANDARD, SmoothProfile

ALPHABET = (1 + 0j, -1 + 0j, 1j, -1j)
DEFAULT_CAPACITY = 6
PSI_FLOOR = 1e-12


# ------------------------------------------------------------ sign patterns


@dataclass(frozen=True)
class SignSequence:
    """The kappa-th element of {1,-1,i,-i}^N: digit j is base-4 digit j-1 of kappa-1."""

    N: int
    kappa: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be positive")
        if not 1 <= self.kappa <= 4**self.N:
            raise ValueError(f"kappa must lie in [1, 4^{self.N}]")

    @property
    def indices(self) -> tuple:
        return tuple(((self.kappa - 1) >> (2 * i)) & 3 for i in range(self.N))

    @property
    def digits(self) -> tuple:
        return tuple(ALPHABET[i] for i in self.indices)

    def __call__(self, j: int) -> complex:
        if not 1 <= j <= self.N:
            raise IndexError(j)
        return ALPHABET[((self.kappa - 1) >> (2 * (j - 1))) & 3]

    @classmethod
    def from_digits(cls, digits: Iterable[complex]) -> "SignSequence":
        digits = list(digits)
        kappa = 1 + sum(ALPHABET.index(complex(c)) << (2 * i) for i, c in enumerate(digits))
        return cls(len(digits), kappa)


def sign_table(N: int) -> np.ndarray:
    """Array S[kappa-1, j-1] = s_kappa(j), shape (4^N, N)."""
    kappa = np.arange(4**N)
    idx = (kappa[:, None] >> (2 * np.arange(N))[None, :]) & 3
    return np.asarray(ALPHABET)[idx]


# ------------------------------------------------------------ growth weight


@dataclass(frozen=True)
class GrowthWeight:
    """Positive, nondecreasing, unbounded sequence l -> v(l)."""

    fn: Callable[[int], float]
    name: str = "custom"

    def __call__(self, l: int) -> float:
        return float(self.fn(l))

    def validate(self, ls: Iterable[int]) -> "GrowthWeight":
        """Check the invariants on the sampled l values (unbounded means nonconstant here)."""
        ls = sorted(set(int(l) for l in ls))
        vals = [self(l) for l in ls]
        if any(not (v > 0 and math.isfinite(v)) for v in vals):
            raise InvalidWeight(f"{self.name}: values must be positive and finite")
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise InvalidWeight(f"{self.name}: values must be nondecreasing")
        if len(vals) > 1 and not vals[-1] > vals[0]:
            raise InvalidWeight(f"{self.name}: values must grow on the sampled range")
        return self


def sqrt_log_weight() -> GrowthWeight:
    return GrowthWeight(lambda l: math.sqrt(math.log(l + 2)), "sqrt-log")


def weight_from_name(name: str) -> GrowthWeight:
    if name == "sqrt-log":
        return sqrt_log_weight()
    if name == "log":
        return GrowthWeight(lambda l: math.log(l + 2), "log")
    if name == "const":
        return GrowthWeight(lambda l: 1.0, "const")
    raise ValueError(f"unknown weight {name!r}")


# ----------------------------------------------------------- construction


def _check_capacity(N: int, capacity: int):
    if N < 1:
        raise ValueError("N must be positive")
    if N > capacity:
        raise CapacityExceeded(f"N={N} exceeds capacity {capacity}")


def build_mN(N: int, capacity: int = DEFAULT_CAPACITY, profile: SmoothProfile = PHI_STANDARD) -> BumpSumMultiplier:
    """m_N = sum_{kappa, j} s_kappa(j) Phi(2^(-N kappa - j) xi)."""
    _check_capacity(N, capacity)
    signs = sign_table(N)
    kappa = np.arange(1, 4**N + 1)
    scales = N * kappa[:, None] + np.arange(1, N + 1)[None, :]
    return BumpSumMultiplier(tuple(zip(scales.ravel().tolist(), signs.ravel().tolist())), profile)


def build_gN(N: int, envelope: Envelope | None = None) -> ModulatedFunction:
    """g_N = sum_{j=1}^N e(2^j x) Psi(x)."""
    if N < 1:
        raise ValueError("N must be positive")
    return ModulatedFunction(tuple((j, 1.0) for j in range(1, N + 1)), envelope or Envelope())


def dilation_exponent(N: int) -> int:
    return N * 8**N


def build_fNp(N: int, p: float, d: int = 1) -> ModulatedFunction:
    """f_{N,p} = N^(-1/2) 2^(d D / p) g_N(2^D x) with D = N 8^N, ||Psi||_p = 1.

    D is stored as an exponent; the power 2^(dD/p) is carried symbolically.
    """
    g = build_gN(N, Envelope(norm_p=p))
    return ModulatedFunction(g.terms, g.envelope, dilation_exponent(N), N**-0.5, p / d)


def choose_kappa(x: float, N: int, envelope: Envelope | None = None) -> tuple[int, tuple, bool]:
    """Best sign pattern at x: c_j maximizes Re(c e(2^j x) Psi(x)), ties by alphabet order.

    Returns (kappa, choices, flagged); flagged means Psi(x) is negligible and
    kappa = 1 was returned without a choice being made.
    """
    envelope = envelope or Envelope()
    psi = complex(envelope(np.asarray([x]))[0])
    if abs(psi) < PSI_FLOOR:
        return 1, SignSequence(N, 1).digits, True
    z = np.exp(2j * np.pi * np.mod(np.ldexp(x, np.arange(1, N + 1)), 1.0)) * psi
    scores = np.real(np.asarray(ALPHABET)[None, :] * z[:, None])
    choices = tuple(ALPHABET[i] for i in np.argmax(scores, axis=1))
    seq = SignSequence.from_digits(choices)
    return seq.kappa, choices, False


def best_rotation(z: complex) -> tuple[complex, float]:
    """(c, Re(c z)) maximizing over the alphabet, ties by alphabet order."""
    scores = [(c * z).real for c in ALPHABET]
    i = int(np.argmax(scores))
    return ALPHABET[i], scores[i]


# ------------------------------------------------------- assembled multiplier


@dataclass(frozen=True)
class Block:
    N: int
    scalar: float
    dilation: int
    multiplier: BumpSumMultiplier

    @property
    def scale_range(self) -> tuple[int, int]:
        s = self.multiplier.scales
        return s[0] + self.dilation, s[-1] + self.dilation


@dataclass(frozen=True)
class CounterexampleSpec:
    """m = sum_{N <= n_max} a_N m_N(2^(-N 8^N) .), a_N = N^(-1/2) v(4^N)."""

    n_max: int
    weight: GrowthWeight = field(default_factory=sqrt_log_weight)
    capacity: int = DEFAULT_CAPACITY
    profile: SmoothProfile = PHI_STANDARD

    def __post_init__(self):
        _check_capacity(self.n_max, self.capacity)
        self.weight.validate(4**N for N in range(1, self.n_max + 1))

    def a(self, N: int) -> float:
        return N**-0.5 * self.weight(4**N)

    @cached_property
    def blocks(self) -> tuple:
        return tuple(Block(N, self.a(N), dilation_exponent(N), build_mN(N, self.capacity, self.profile))
                     for N in range(1, self.n_max + 1))

    def disjointness_certificate(self) -> list[dict]:
        """Exact check that consecutive blocks have disjoint radial supports.

        Block N lives in [2^lo a, 2^hi b]; the next one starts at 2^lo' a.
        Disjointness is b / a < 2^(lo' - hi), decided in rationals.
        """
        out = []
        for left, right in zip(self.blocks, self.blocks[1:]):
            hi = left.scale_range[1]
            lo = right.scale_range[0]
            gap = lo - hi
            ratio = Fraction(self.profile.b) / Fraction(self.profile.a)
            ok = gap > 0 and ratio < Fraction(2) ** gap
            out.append({"left": left.N, "right": right.N, "gapExp": gap, "disjoint": bool(ok)})
        return out

    def assemble(self) -> BumpSumMultiplier:
        terms = []
        for blk in self.blocks:
            terms.extend((M + blk.dilation, blk.scalar * c) for M, c in blk.multiplier.terms)
        return BumpSumMultiplier(tuple(terms), self.profile)

    @cached_property
    def multiplier(self) -> BumpSumMultiplier:
        return self.assemble()

    def realized_ks(self, N: int | None = None) -> list[int]:
        """All k where phi m(2^k .) is not identically zero (phi the standard LP bump)."""
        blocks = self.blocks if N is None else [self.blocks[N - 1]]
        ks = set()
        for blk in blocks:
            for M in blk.multiplier.scales:
                ks.update(localized_ks(M + blk.dilation, self.profile))
        return sorted(ks)


def localized_ks(M: int, profile: SmoothProfile = PHI_STANDARD, cutoff: SmoothProfile = LP_BUMP) -> list[int]:
    """k such that the supports of cutoff and profile(2^(k-M) .) overlap in an open set."""
    out = []
    for shift in range(-4, 5):
        scale = Fraction(2) ** shift
        # profile(2^shift r) is supported on r in [a, b] / 2^shift
        lo, hi = profile.a / scale, profile.b / scale
        if lo < cutoff.b and hi > cutoff.a:
            out.append(M + shift)
    return out


# ------------------------------------------------------------- verification


def default_grid(N: int, L: float = 512.0) -> GridSpec:
    """Quadrature grid in envelope coordinates resolving frequency 2^N."""
    need = max(2 ** (N + 3) * L, 16 * L)
    n = 1 << math.ceil(math.log2(need))
    return GridSpec(n, L)


def growth_grid(N: int, L: float = 256.0) -> GridSpec:
    """Grid on which Riemann sums of |g_N|^2 and |g_N|^4 are exact up to the envelope tail.

    Those integrands are band-limited to |xi| < 2^(N+2), so a sampling
    rate of 2^(N+2) per unit length leaves no aliased mean.
    """
    return GridSpec(1 << math.ceil(math.log2(2 ** (N + 2) * L)), L)


@dataclass
class LowerBoundReport:
    N: int
    p: float
    normValue: float
    bound: float
    psiNorm: float
    pass_: bool

    def to_json(self) -> dict:
        return {"N": self.N, "p": self.p, "normValue": self.normValue, "bound": self.bound,
                "psiNorm": self.psiNorm, "pass": self.pass_}


def verify_lower_bound(N: int, p: float, grid: GridSpec | None = None,
                       capacity: int = DEFAULT_CAPACITY) -> LowerBoundReport:
    """|| sup_{1 <= k <= N 4^N} |F^-1[m_N(2^k .) g_N^]| ||_p against N ||Psi||_p / sqrt 2."""
    grid = grid or default_grid(N)
    if grid.n / grid.L <= 2 ** (N + 2):
        raise ValueError("grid does not resolve the top modulation")
    m = build_mN(N, capacity)
    g = build_gN(N, Envelope(norm_p=p))
    value = maximal_lp_norm(m, range(1, N * 4**N + 1), g, p, grid)
    psi = g.envelope.norm(p)
    bound = N * psi / math.sqrt(2)
    return LowerBoundReport(N, p, value, bound, psi, bool(value >= bound * (1 - 1e-2)))


@dataclass
class ConclusionReport:
    N: int
    p: float
    weight: str
    normValue: float
    maximalNorm: float
    C_N: float
    a_N: float
    v: float
    lowerBound: float
    testNorm: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def verify_conclusion(N: int, p: float, weight: GrowthWeight | None = None,
                      grid: GridSpec | None = None, n_max: int | None = None,
                      capacity: int = DEFAULT_CAPACITY) -> ConclusionReport:
    """Evaluate ||M_m f_{N,p}||_p >= a_N N^(-1/2) (lower-bound value) = C_N v(4^N).

    ``maximalNorm`` applies the assembled m (blocks 1..n_max) to f_{N,p}
    with its symbolic dilation; the other blocks must contribute nothing,
    so it agrees with the rescaled single-block chain ``lowerBound``.
    """
    weight = weight or sqrt_log_weight()
    grid = grid or default_grid(N)
    spec = CounterexampleSpec(max(N, n_max or N), weight, capacity)
    base = verify_lower_bound(N, p, grid, capacity)
    f = build_fNp(N, p)
    maximal_norm = maximal_lp_norm(spec.multiplier, range(1, N * 4**N + 1), f, p, grid)
    a_N = spec.a(N)
    C_N = base.normValue / N
    v = weight(4**N)
    return ConclusionReport(N, p, weight.name, base.normValue, maximal_norm, C_N, a_N, v,
                            a_N * N**-0.5 * base.normValue, modulated_lp_norm(f, p, grid))


# ---------------------------------------------------- localized seminorms


def _leibniz_sup(m: BumpSumMultiplier, k: int, order: int, cutoff: SmoothProfile, samples: int) -> float:
    """sup over |alpha| <= order and xi of |d^alpha (cutoff(xi) m(2^k xi))|, exactly differentiated."""
    xi = np.linspace(float(cutoff.a), float(cutoff.b), samples)
    mk = m.scaled(k)
    mder = [mk.scaled_derivative(xi, a) / xi**a for a in range(order + 1)]
    cder = [cutoff.derivative(xi, a) for a in range(order + 1)]
    best = 0.0
    for a in range(order + 1):
        total = sum(math.comb(a, i) * cder[i] * mder[a - i] for i in range(a + 1))
        best = max(best, float(np.max(np.abs(total))))
    return best


def localized_ratio(spec: CounterexampleSpec, ks: Iterable[int], order: int = 2,
                    cutoff: SmoothProfile = LP_BUMP, samples: int = 4001) -> dict[int, float]:
    """sup_alpha |d^alpha(phi m(2^k .))| divided by v(|k|) / sqrt(log(|k| + 2)), per k."""
    m = spec.multiplier
    out = {}
    for k in ks:
        scale = spec.weight(abs(k)) / math.sqrt(math.log(abs(k) + 2))
        out[k] = _leibniz_sup(m, k, order, cutoff, samples) / scale
    return out


def localized_ratio_bound(spec: CounterexampleSpec, order: int = 2, cutoff: SmoothProfile = LP_BUMP) -> float:
    """A priori bound on localized_ratio over realized k.

    At most two adjacent bump scales meet the cutoff, so by Leibniz
    |d^a(phi m(2^k .))| <= a_N sum_i C(a,i) |phi^(i)|_inf 2 * 2^(a-i) |Phi^(a-i)|_inf,
    and a_N / (v(k) / sqrt(log(k+2))) <= sqrt(log(k_max + 2) / N) since v is
    nondecreasing and k >= 4^N.
    """
    prof = spec.profile
    shape = 0.0
    for a in range(order + 1):
        shape = max(shape, sum(math.comb(a, i) * cutoff.derivative_sup(i) * 2 * 2 ** (a - i)
                               * prof.derivative_sup(a - i) for i in range(a + 1)))
    growth = 0.0
    for blk in spec.blocks:
        k_max = blk.scale_range[1] + 4
        k_min = blk.scale_range[0] - 4
        factor = blk.scalar * math.sqrt(math.log(k_max + 2)) / spec.weight(k_min)
        growth = max(growth, factor)
    return shape * growth
