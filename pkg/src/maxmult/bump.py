"""Exact calculus for sums of dilated bumps acting on modulated envelopes.

A multiplier m(xi) = sum_M c_M Phi(2^-M |xi|) applied after dilation by 2^k
to a function sum_j c_j e^{2 pi i 2^j x} Psi(x) either leaves a term alone
(the bump is flat on the term's spectrum), kills it (disjoint supports), or
does something the calculus refuses to approximate (partial overlap). The
first two cases are decided with exact rational interval arithmetic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import OutOfWindow, PartialOverlap
from .grid import GridFunction, GridSpec, lp_norm
from .profiles import PHI_STANDARD, PSI_HAT_STANDARD, SmoothProfile, profile_from_json

ENVELOPE_HALF_WIDTH = 1024.0
ENVELOPE_POINTS = 2**18

# Scratch budget (complex entries) for one block of the pointwise supremum.
_SUP_BLOCK = 2**21


class Overlap(enum.Enum):
    FLAT = "flat"
    DISJOINT = "disjoint"
    PARTIAL = "partial"


# ---------------------------------------------------------------- envelope


@lru_cache(maxsize=None)
def _envelope_table(profile: SmoothProfile):
    n, period = ENVELOPE_POINTS, 2 * ENVELOPE_HALF_WIDTH
    xi = (np.arange(n) - n // 2) / period
    hat = profile(np.abs(xi))
    # Riemann sum of the inverse transform; the periodization error is the
    # size of Psi at distance W, which is below 1e-14 for the standard bump.
    psi = (n / period) * np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(hat))).real
    x = (np.arange(n) - n // 2) * (period / n)
    return x, psi, CubicSpline(x, psi)


@lru_cache(maxsize=None)
def _raw_envelope_norm(profile: SmoothProfile, p: float) -> float:
    x, psi, _ = _envelope_table(profile)
    h = x[1] - x[0]
    if math.isinf(p):
        return float(np.max(np.abs(psi)))
    return float((h * np.sum(np.abs(psi) ** p)) ** (1.0 / p))


@dataclass(frozen=True)
class Envelope:
    """Band-limited envelope Psi with hat(Psi) = profile(|xi|), radius <= 1/8.

    With ``norm_p`` set, Psi is rescaled so that its L^p norm is one.
    """

    profile: SmoothProfile = PSI_HAT_STANDARD
    norm_p: float | None = None

    def __post_init__(self):
        if self.profile.a != 0:
            raise ValueError("envelope profile must be centred at the origin")

    @property
    def radius(self) -> Fraction:
        return self.profile.b

    @property
    def window(self) -> float:
        return ENVELOPE_HALF_WIDTH

    @cached_property
    def scale(self) -> float:
        if self.norm_p is None:
            return 1.0
        return 1.0 / _raw_envelope_norm(self.profile, float(self.norm_p))

    def hat(self, xi) -> np.ndarray:
        return self.scale * self.profile(np.abs(np.asarray(xi, dtype=float)))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) > ENVELOPE_HALF_WIDTH):
            raise OutOfWindow(f"|x| exceeds envelope window {ENVELOPE_HALF_WIDTH}")
        return self.scale * _envelope_table(self.profile)[2](x)

    def norm(self, p: float) -> float:
        return self.scale * _raw_envelope_norm(self.profile, float(p))

    def to_json(self):
        return self.profile.to_json()


# -------------------------------------------------------------- multiplier


def _canonical_terms(terms) -> tuple:
    merged: dict[int, complex] = {}
    for scale, coeff in terms:
        scale = int(scale)
        merged[scale] = merged.get(scale, 0j) + complex(coeff)
    return tuple(sorted(merged.items()))


@dataclass(frozen=True)
class BumpSumMultiplier:
    """m(xi) = sum over terms (M, c) of c * profile(2^-M |xi|)."""

    terms: tuple = ()
    profile: SmoothProfile = PHI_STANDARD

    def __post_init__(self):
        object.__setattr__(self, "terms", _canonical_terms(self.terms))
        if self.profile.a <= 0:
            raise ValueError("bump profile must vanish near the origin")

    @property
    def scales(self) -> tuple:
        return tuple(M for M, _ in self.terms)

    @cached_property
    def _dense(self):
        if not self.terms:
            return 0, np.zeros(0, dtype=complex)
        lo = self.terms[0][0]
        dense = np.zeros(self.terms[-1][0] - lo + 1, dtype=complex)
        for M, c in self.terms:
            dense[M - lo] = c
        return lo, dense

    @cached_property
    def _scale_lookup(self) -> dict:
        return dict(self.terms)

    def coefficient(self, scale: int) -> complex:
        return self._scale_lookup.get(scale, 0j)

    def scaled(self, k: int) -> "BumpSumMultiplier":
        """The multiplier xi -> m(2^k xi), exactly."""
        return BumpSumMultiplier(tuple((M - k, c) for M, c in self.terms), self.profile)

    def __add__(self, other: "BumpSumMultiplier") -> "BumpSumMultiplier":
        if other.profile != self.profile:
            raise ValueError("profiles differ")
        return BumpSumMultiplier(self.terms + other.terms, self.profile)

    def support(self) -> tuple[Fraction, Fraction] | None:
        """Radial support [2^Mmin a, 2^Mmax b] as exact rationals."""
        if not self.terms:
            return None
        two = Fraction(2)
        return two ** self.terms[0][0] * self.profile.a, two ** self.terms[-1][0] * self.profile.b

    def _candidates(self, r: np.ndarray):
        """Yield (scale array, mask) covering every term whose support may contain r."""
        a, b = float(self.profile.a), float(self.profile.b)
        lo, dense = self._dense
        span = math.ceil(math.log2(b / a)) + 2
        safe = np.where(r > 0, r, 1.0)
        base = np.floor(np.log2(safe) - math.log2(b)).astype(np.int64) - 1
        for offset in range(span + 1):
            M = base + offset
            idx = M - lo
            ok = (r > 0) & (idx >= 0) & (idx < dense.size)
            yield M, ok, np.where(ok, idx, 0)

    def evaluate_radial(self, r) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=float))
        out = np.zeros(r.shape, dtype=complex)
        if not self.terms:
            return out
        _, dense = self._dense
        for M, ok, idx in self._candidates(r):
            if not np.any(ok):
                continue
            u = np.ldexp(r, -M.clip(-1000, 1000).astype(np.int32))
            out += np.where(ok, dense[idx] * self.profile(u), 0.0)
        return out

    def __call__(self, xi) -> np.ndarray:
        return self.evaluate_radial(xi)

    def scaled_derivative(self, r, order: int) -> np.ndarray:
        """r^order * (d/dr)^order m(r), computed without forming 2^M."""
        r = np.abs(np.asarray(r, dtype=float))
        out = np.zeros(r.shape, dtype=complex)
        if not self.terms:
            return out
        _, dense = self._dense
        for M, ok, idx in self._candidates(r):
            if not np.any(ok):
                continue
            u = np.ldexp(r, -M.clip(-1000, 1000).astype(np.int32))
            out += np.where(ok, dense[idx] * u**order * self.profile.derivative(u, order), 0.0)
        return out

    def seminorm(self, order: int, samples: int = 257) -> float:
        """sup over |alpha| <= order of |xi|^alpha |m^(alpha)(xi)|, d = 1.

        Samples each term's octave in relative coordinates, so arbitrarily
        large scale exponents are handled without overflow.
        """
        best = 0.0
        if not self.terms:
            return best
        a, b = float(self.profile.a), float(self.profile.b)
        u = np.geomspace(a, b, samples)
        for M, _ in self.terms:
            shifted = self.scaled(M)
            for alpha in range(order + 1):
                best = max(best, float(np.max(np.abs(shifted.scaled_derivative(u, alpha)))))
        return best

    def to_json(self) -> dict:
        return {
            "terms": [{"scale": M, "coeff": [c.real, c.imag]} for M, c in self.terms],
            "profile": self.profile.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BumpSumMultiplier":
        terms = [(t["scale"], complex(*t["coeff"])) for t in obj["terms"]]
        return cls(tuple(terms), profile_from_json(obj.get("profile", "phi-standard")))


# ---------------------------------------------------------------- function


@dataclass(frozen=True)
class ModulatedFunction:
    """scalar * 2^(dilation/norm_p) * g(2^dilation x), g = sum_j c_j e(2^j x) Psi(x).

    ``dilation`` is kept as an integer exponent; it is never materialized,
    and L^p norms use the exact scaling identity instead.
    """

    terms: tuple = ()
    envelope: Envelope = field(default_factory=Envelope)
    dilation: int = 0
    scalar: float = 1.0
    norm_p: float | None = None

    def __post_init__(self):
        terms = tuple(sorted((int(j), complex(c)) for j, c in self.terms))
        freqs = [j for j, _ in terms]
        if len(set(freqs)) != len(freqs):
            raise ValueError("frequency exponents must be distinct")
        if any(j < 1 for j in freqs):
            raise ValueError("frequency exponents must be >= 1")
        object.__setattr__(self, "terms", terms)

    @property
    def freqs(self) -> tuple:
        return tuple(j for j, _ in self.terms)

    def coefficient(self, j: int) -> complex:
        return dict(self.terms).get(j, 0j)

    def with_terms(self, terms) -> "ModulatedFunction":
        return ModulatedFunction(tuple(terms), self.envelope, self.dilation, self.scalar, self.norm_p)

    def _same_frame(self, other: "ModulatedFunction") -> bool:
        return (self.envelope, self.dilation, self.scalar, self.norm_p) == (
            other.envelope, other.dilation, other.scalar, other.norm_p)

    def __add__(self, other: "ModulatedFunction") -> "ModulatedFunction":
        if not self._same_frame(other):
            raise ValueError("can only add functions sharing envelope and scaling")
        acc = dict(self.terms)
        for j, c in other.terms:
            acc[j] = acc.get(j, 0j) + c
        return self.with_terms((j, c) for j, c in acc.items() if c != 0)

    def amplitude_log2(self, p: float | None = None) -> Fraction:
        """Exact log2 of the power-of-two factor left after measuring in L^p.

        With p=None this is the pointwise factor 2^(dilation/norm_p).
        """
        attached = Fraction(0) if self.norm_p is None else Fraction(self.dilation) / Fraction(self.norm_p)
        if p is None or math.isinf(p):
            return attached
        return attached - Fraction(self.dilation) / Fraction(p)

    def to_json(self) -> dict:
        out = {
            "terms": [{"freq": j, "coeff": [c.real, c.imag]} for j, c in self.terms],
            "envelope": self.envelope.to_json(),
        }
        if self.dilation:
            out["dilation"] = self.dilation
        if self.scalar != 1.0:
            out["scalar"] = self.scalar
        if self.norm_p is not None:
            out["normP"] = self.norm_p
        return out

    @classmethod
    def from_json(cls, obj: dict, envelope_norm_p: float | None = None) -> "ModulatedFunction":
        env = Envelope(profile_from_json(obj.get("envelope", "psi-standard")), envelope_norm_p)
        terms = [(t["freq"], complex(*t["coeff"])) for t in obj["terms"]]
        return cls(tuple(terms), env, obj.get("dilation", 0), obj.get("scalar", 1.0), obj.get("normP"))


def _pow2(exponent: Fraction) -> float:
    if exponent == 0:
        return 1.0
    return 2.0 ** float(exponent)


# -------------------------------------------------------------- operations


@lru_cache(maxsize=65536)
def _classify(e: int, j: int, profile: SmoothProfile, radius: Fraction) -> Overlap:
    scale = Fraction(2) ** e
    center = Fraction(2) ** j
    lo, hi = center - radius, center + radius
    if scale * profile.c <= lo and scale * profile.d >= hi:
        return Overlap.FLAT
    if scale * profile.b < lo or scale * profile.a > hi:
        return Overlap.DISJOINT
    return Overlap.PARTIAL


def overlap_class(M: int, k: int, j: int, profile: SmoothProfile = PHI_STANDARD,
                  envelope: Envelope | None = None) -> Overlap:
    """How the bump at scale M, dilated by 2^k, meets the spectrum of e(2^j x)Psi."""
    if j < 1:
        raise ValueError("frequency exponent must be >= 1")
    radius = (envelope or Envelope()).radius
    return _classify(M - k, j, profile, radius)


def _exponent_window(j: int, profile: SmoothProfile, radius: Fraction) -> tuple[int, int]:
    # Scale exponents e = M - k outside this range are disjoint; the +-1
    # margin absorbs float rounding in the logs.
    center = 2.0**j
    r = float(radius)
    lo = math.floor(math.log2((center - r) / float(profile.b))) - 1
    hi = math.ceil(math.log2((center + r) / float(profile.a))) + 1
    return lo, hi


def apply_dilated(m: BumpSumMultiplier, k: int, f: ModulatedFunction) -> ModulatedFunction:
    """F^{-1}[m(2^k .) f^], exactly.

    Raises PartialOverlap if any (bump, modulation) pair is neither flat
    nor disjoint.
    """
    k_eff = k + f.dilation
    radius = f.envelope.radius
    out = []
    for j, cj in f.terms:
        lo, hi = _exponent_window(j, m.profile, radius)
        gain = 0j
        hit = False
        for e in range(lo, hi + 1):
            cm = m._scale_lookup.get(e + k_eff)
            if cm is None:
                continue
            cls = _classify(e, j, m.profile, radius)
            if cls is Overlap.PARTIAL:
                raise PartialOverlap(e + k_eff, k, j)
            if cls is Overlap.FLAT:
                gain += cm
                hit = True
        if hit and gain * cj != 0:
            out.append((j, gain * cj))
    return f.with_terms(out)


def _phases(freqs: Sequence[int], y: np.ndarray) -> np.ndarray:
    """e^{2 pi i 2^j y} for each j, shape (len(freqs), len(y))."""
    frac = np.stack([np.mod(np.ldexp(y, j), 1.0) for j in freqs]) if freqs else np.zeros((0, y.size))
    return np.exp(2j * np.pi * frac)


def _local_coords(f: ModulatedFunction, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.ldexp(x, f.dilation) if f.dilation else x
    if np.any(~np.isfinite(y)) or np.any(np.abs(y) > f.envelope.window):
        raise OutOfWindow("point outside the envelope window after rescaling")
    return y


def pointwise_eval(f: ModulatedFunction, x) -> np.ndarray:
    """Evaluate f at points x (scalar or array)."""
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    y = _local_coords(f, x_arr)
    if not f.terms:
        values = np.zeros(y.shape, dtype=complex)
    else:
        coeffs = np.array([c for _, c in f.terms])
        values = (coeffs @ _phases(f.freqs, y)) * f.envelope(y)
        values *= f.scalar * _pow2(f.amplitude_log2())
    return values[0] if np.ndim(x) == 0 else values


def _coefficient_matrix(m: BumpSumMultiplier, ks: Iterable[int], f: ModulatedFunction):
    ks = list(ks)
    freqs = f.freqs
    col = {j: i for i, j in enumerate(freqs)}
    C = np.zeros((len(ks), len(freqs)), dtype=complex)
    for row, k in enumerate(ks):
        for j, c in apply_dilated(m, k, f).terms:
            C[row, col[j]] = c
    return C


def _sup_modulus(C: np.ndarray, freqs: Sequence[int], y: np.ndarray) -> np.ndarray:
    """max over rows of |sum_j C[row, j] e(2^j y)|, without Psi."""
    C = np.unique(C, axis=0)
    out = np.empty(y.size)
    block = max(1, _SUP_BLOCK // max(1, C.shape[0]))
    for start in range(0, y.size, block):
        chunk = y[start:start + block]
        out[start:start + block] = np.max(np.abs(C @ _phases(freqs, chunk)), axis=0)
    return out


def maximal_pointwise(m: BumpSumMultiplier, ks: Iterable[int], f: ModulatedFunction, points) -> np.ndarray:
    """sup over k in ks of |F^{-1}[m(2^k .) f^]| at the given points."""
    ks = list(ks)
    if not ks:
        raise ValueError("empty dilation set")
    y = _local_coords(f, np.atleast_1d(points))
    if not f.freqs:
        return np.zeros(y.size)
    C = _coefficient_matrix(m, ks, f)
    amp = abs(f.scalar) * _pow2(f.amplitude_log2())
    return amp * np.abs(f.envelope(y)) * _sup_modulus(C, f.freqs, y)


def maximal_lp_norm(m: BumpSumMultiplier, ks: Iterable[int], f: ModulatedFunction, p: float,
                    spec: GridSpec) -> float:
    """|| sup_k |F^{-1}[m(2^k .) f^]| ||_p by Riemann sum on ``spec``.

    The grid lives in the envelope's own coordinates (after undoing
    ``f.dilation``); the dilation enters only through the exact factor
    2^(dilation/norm_p - dilation/p).
    """
    ks = list(ks)
    if not ks:
        raise ValueError("empty dilation set")
    y = spec.points()
    if np.max(np.abs(y)) > f.envelope.window:
        raise OutOfWindow("quadrature grid exceeds the envelope window")
    if f.freqs:
        C = _coefficient_matrix(m, ks, f)
        values = np.abs(f.envelope(y)) * _sup_modulus(C, f.freqs, y)
    else:
        values = np.zeros(y.size)
    return abs(f.scalar) * _pow2(f.amplitude_log2(p)) * lp_norm(GridFunction(spec, values), p)


def modulated_lp_norm(f: ModulatedFunction, p: float, spec: GridSpec) -> float:
    """||f||_p by Riemann sum on ``spec`` (envelope coordinates), in blocks."""
    y = spec.points()
    if np.max(np.abs(y)) > f.envelope.window:
        raise OutOfWindow("quadrature grid exceeds the envelope window")
    coeffs = np.array([c for _, c in f.terms], dtype=complex).reshape(1, -1)
    acc = 0.0
    peak = 0.0
    block = 2**18
    for start in range(0, y.size, block):
        chunk = y[start:start + block]
        vals = np.abs((coeffs @ _phases(f.freqs, chunk))[0] * f.envelope(chunk)) if f.terms else np.zeros(chunk.size)
        if math.isinf(p):
            peak = max(peak, float(np.max(vals)))
        else:
            acc += float(np.sum(vals**p))
    raw = peak if math.isinf(p) else (spec.spacing * acc) ** (1.0 / p)
    return abs(f.scalar) * _pow2(f.amplitude_log2(p)) * raw
