"""Periodic-grid DFT engine for multipliers and their maximal functions.

Grids are centred: sample i sits at x = (i - n/2) L/n and lattice point m
at xi = (m - n/2)/L, per axis. Symbols are evaluated lazily on the lattice
at whatever dilation is requested, so a multiplier whose natural domain
spans astronomically many octaves costs nothing beyond the band of the
test function.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import AliasWarning, EmptyDilationSet, SpecMismatch
from .profiles import LP_BUMP, SmoothProfile

ALIAS_TOLERANCE = 1e-6


@dataclass(frozen=True)
class GridSpec:
    n: int
    L: float
    d: int = 1

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if self.n < 16 or self.n & (self.n - 1):
            raise ValueError("n must be a power of two >= 16")
        if not self.L > 0:
            raise ValueError("period must be positive")

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.d

    @property
    def spacing(self) -> float:
        return self.L / self.n

    @property
    def band(self) -> float:
        """Nyquist frequency n / (2L)."""
        return self.n / (2 * self.L)

    def _axis(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.spacing

    def _freq_axis(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) / self.L

    def points(self):
        """Spatial coordinates: an array for d=1, a tuple of arrays for d=2."""
        if self.d == 1:
            return self._axis()
        return tuple(np.meshgrid(self._axis(), self._axis(), indexing="ij"))

    def frequencies(self):
        if self.d == 1:
            return self._freq_axis()
        return tuple(np.meshgrid(self._freq_axis(), self._freq_axis(), indexing="ij"))

    def radius(self) -> np.ndarray:
        """Torus distance of each sample to the origin."""
        pts = self.points()
        return np.abs(pts) if self.d == 1 else np.hypot(*pts)

    def freq_radius(self) -> np.ndarray:
        fr = self.frequencies()
        return np.abs(fr) if self.d == 1 else np.hypot(*fr)

    def header(self, kind: str) -> dict:
        return {"d": self.d, "n": self.n, "L": self.L, "kind": kind}


@dataclass(frozen=True, eq=False)
class GridFunction:
    spec: GridSpec
    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples)
        if samples.shape != self.spec.shape:
            raise ValueError(f"samples have shape {samples.shape}, grid needs {self.spec.shape}")
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_callable(cls, spec: GridSpec, fn: Callable) -> "GridFunction":
        pts = spec.points()
        return cls(spec, np.asarray(fn(pts) if spec.d == 1 else fn(*pts), dtype=complex))

    def _check(self, other: "GridFunction"):
        if other.spec != self.spec:
            raise SpecMismatch(f"{self.spec} vs {other.spec}")

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        return GridFunction(self.spec, self.samples + other.samples)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        return GridFunction(self.spec, self.samples - other.samples)

    def __abs__(self) -> "GridFunction":
        return GridFunction(self.spec, np.abs(self.samples))

    def roll(self, shift: int) -> "GridFunction":
        """Translate by whole cells along every axis."""
        return GridFunction(self.spec, np.roll(self.samples, shift, axis=tuple(range(self.spec.d))))


class GridSymbol:
    """A multiplier on the frequency lattice of ``spec``.

    Either a fixed array of lattice values, or a callback evaluated lazily at
    dilated lattice points. Callbacks take one coordinate array per axis,
    or the radius alone when ``radial`` is set. A callback object with a
    ``scaled(k)`` method (e.g. a bump sum) is dilated by 2^k exactly.
    """

    def __init__(self, spec: GridSpec, values: np.ndarray | None = None,
                 fn: Callable | None = None, radial: bool = False):
        if (values is None) == (fn is None):
            raise ValueError("give exactly one of values or fn")
        if values is not None:
            values = np.asarray(values, dtype=complex)
            if values.shape != spec.shape:
                raise ValueError("values do not match the lattice")
        self.spec, self.values, self.fn, self.radial = spec, values, fn, radial

    @classmethod
    def from_callable(cls, spec: GridSpec, fn: Callable, radial: bool = False) -> "GridSymbol":
        return cls(spec, fn=fn, radial=radial)

    @classmethod
    def constant(cls, spec: GridSpec, value: complex = 1.0) -> "GridSymbol":
        return cls(spec, fn=lambda r: np.full(np.shape(r), value, dtype=complex), radial=True)

    def lattice(self, t: float = 1.0, k: int = 0) -> np.ndarray:
        """m(t 2^k xi) at every lattice point xi."""
        if self.values is not None:
            if t != 1.0 or k != 0:
                raise ValueError("sampled symbols cannot be dilated; use a callback")
            return self.values
        fn = self.fn
        scale = float(t)
        if k:
            if hasattr(fn, "scaled"):
                fn = fn.scaled(k)
            else:
                scale = math.ldexp(scale, k)
        if self.radial:
            out = fn(scale * self.spec.freq_radius())
        elif self.spec.d == 1:
            out = fn(scale * self.spec.frequencies())
        else:
            out = fn(*(scale * c for c in self.spec.frequencies()))
        return np.broadcast_to(np.asarray(out, dtype=complex), self.spec.shape)

    def dilated(self, k: int) -> "GridSymbol":
        """The symbol xi -> m(2^k xi)."""
        if self.values is not None:
            raise ValueError("sampled symbols cannot be dilated")
        fn = self.fn
        if hasattr(fn, "scaled"):
            return GridSymbol(self.spec, fn=fn.scaled(k), radial=self.radial)
        if self.radial:
            return GridSymbol(self.spec, fn=lambda r: fn(np.ldexp(r, k)), radial=True)
        return GridSymbol(self.spec, fn=lambda *c: fn(*(np.ldexp(ci, k) for ci in c)))

    def localized(self, k: int, cutoff: SmoothProfile = LP_BUMP) -> "GridSymbol":
        """phi(xi) m(2^k xi), materialized on the lattice."""
        return GridSymbol(self.spec, values=cutoff(self.spec.freq_radius()) * self.lattice(1.0, k))

    def materialize(self) -> "GridSymbol":
        return GridSymbol(self.spec, values=np.array(self.lattice()))


def _check_same(a, b):
    if a.spec != b.spec:
        raise SpecMismatch(f"{a.spec} vs {b.spec}")


def _axes(spec: GridSpec) -> tuple:
    return tuple(range(spec.d))


def dft(f: GridFunction) -> GridSymbol:
    """Unitary centred DFT."""
    ax = _axes(f.spec)
    vals = np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(f.samples, axes=ax), axes=ax, norm="ortho"), axes=ax)
    return GridSymbol(f.spec, values=vals)


def idft(s: GridSymbol) -> GridFunction:
    ax = _axes(s.spec)
    vals = np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(s.lattice(), axes=ax), axes=ax, norm="ortho"), axes=ax)
    return GridFunction(s.spec, vals)


def _forward(f: GridFunction) -> np.ndarray:
    # Transform in FFT order; the multiplier is shifted to match.
    ax = _axes(f.spec)
    return np.fft.fftn(np.fft.ifftshift(f.samples, axes=ax), axes=ax)


def _inverse(spec: GridSpec, fhat: np.ndarray) -> np.ndarray:
    ax = _axes(spec)
    return np.fft.fftshift(np.fft.ifftn(fhat, axes=ax), axes=ax)


def _apply_lattice(spec: GridSpec, mult: np.ndarray, fhat: np.ndarray) -> np.ndarray:
    return _inverse(spec, np.fft.ifftshift(mult, axes=_axes(spec)) * fhat)


def apply_symbol(m: GridSymbol, t: float, f: GridFunction, k: int = 0) -> GridFunction:
    """F^{-1}[m(t 2^k .) f^]; ``k`` carries an exact power-of-two factor."""
    _check_same(m, f)
    return GridFunction(f.spec, _apply_lattice(f.spec, m.lattice(t, k), _forward(f)))


def _sup_over(spec: GridSpec, lattices: Iterable[np.ndarray], f: GridFunction) -> GridFunction:
    fhat = _forward(f)
    best = None
    for mult in lattices:
        mod = np.abs(_apply_lattice(spec, mult, fhat))
        best = mod if best is None else np.maximum(best, mod)
    if best is None:
        raise EmptyDilationSet("supremum over an empty family")
    return GridFunction(spec, best)


def maximal(m: GridSymbol, T: Iterable[float], f: GridFunction) -> GridFunction:
    """Pointwise sup over t in T of |F^{-1}[m(t .) f^]|."""
    _check_same(m, f)
    T = sorted(set(float(t) for t in T))
    if not T:
        raise EmptyDilationSet("dilation set is empty")
    if any(t <= 0 for t in T):
        raise ValueError("dilations must be positive")
    return _sup_over(f.spec, (m.lattice(t) for t in T), f)


def dyadic_maximal(m: GridSymbol, K: Iterable[int], f: GridFunction) -> GridFunction:
    """Sup over t = 2^k, k in K, with the powers of two applied exactly."""
    _check_same(m, f)
    K = sorted(set(int(k) for k in K))
    if not K:
        raise EmptyDilationSet("dilation set is empty")
    return _sup_over(f.spec, (m.lattice(1.0, k) for k in K), f)


def continuous_maximal(m: GridSymbol, K: Iterable[int], f: GridFunction, samples_per_octave: int = 64) -> GridFunction:
    """Sup over t = 2^(k + s/S), k in K, 0 <= s < S: a sampled sup over t in [2^k, 2^(k+1))."""
    _check_same(m, f)
    K = sorted(set(int(k) for k in K))
    if not K or samples_per_octave < 1:
        raise EmptyDilationSet("dilation set is empty")
    fractions = [2.0 ** (s / samples_per_octave) for s in range(samples_per_octave)]
    return _sup_over(f.spec, (m.lattice(t, k) for k in K for t in fractions), f)


def finite_family_maximal(ms: Sequence[GridSymbol], f: GridFunction) -> GridFunction:
    """sup over nu of |F^{-1}[m_nu f^]|."""
    ms = list(ms)
    for m in ms:
        _check_same(m, f)
    return _sup_over(f.spec, (m.lattice() for m in ms), f)


def lp_norm(f: GridFunction, p: float) -> float:
    """Riemann-sum L^p norm; p = inf gives the max modulus."""
    if not p >= 1:
        raise ValueError("p must be >= 1")
    mod = np.abs(f.samples)
    if math.isinf(p):
        return float(np.max(mod)) if mod.size else 0.0
    return float((f.spec.spacing ** f.spec.d * np.sum(mod**p)) ** (1.0 / p))


# ------------------------------------------------------------ kernel norms


def symbol_to_kernel(values: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Riemann sum for F^{-1} of lattice values: sum_xi v(xi) e^{2 pi i x xi} / L^d."""
    ax = _axes(spec)
    return (spec.n / spec.L) ** spec.d * np.fft.fftshift(
        np.fft.ifftn(np.fft.ifftshift(values, axes=ax), axes=ax), axes=ax)


def kernel_to_symbol(samples: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Riemann sum for F: sum_x K(x) e^{-2 pi i x xi} (L/n)^d."""
    ax = _axes(spec)
    return spec.spacing ** spec.d * np.fft.fftshift(
        np.fft.fftn(np.fft.ifftshift(samples, axes=ax), axes=ax), axes=ax)


def check_alias(samples: np.ndarray, spec: GridSpec, what: str = "kernel") -> float:
    """Fraction of L^1 mass within L/4 of the period boundary; warns above tolerance."""
    mod = np.abs(samples)
    total = float(np.sum(mod))
    if total == 0.0:
        return 0.0
    pts = spec.points()
    outer = np.abs(pts) > spec.L / 4 if spec.d == 1 else np.maximum(*(np.abs(c) for c in pts)) > spec.L / 4
    frac = float(np.sum(mod[outer])) / total
    if frac > ALIAS_TOLERANCE:
        warnings.warn(f"{what}: {frac:.2e} of the mass lies near the period boundary", AliasWarning, stacklevel=3)
    return frac


def kernel(m: GridSymbol, k: int, cutoff: SmoothProfile = LP_BUMP) -> GridFunction:
    """F^{-1}[phi m(2^k .)] sampled on the spatial grid."""
    vals = symbol_to_kernel(m.localized(k, cutoff).values, m.spec)
    check_alias(vals, m.spec)
    return GridFunction(m.spec, vals)


def weighted_kernel_norm(m: GridSymbol, k: int, p_prime: float, alpha: float,
                         cutoff: SmoothProfile = LP_BUMP) -> float:
    """(int |F^{-1}[phi m(2^k .)]|^p' (1+|x|)^(alpha p') dx)^(1/p')."""
    K = kernel(m, k, cutoff)
    weighted = np.abs(K.samples) * (1.0 + m.spec.radius()) ** alpha
    return lp_norm(GridFunction(m.spec, weighted), p_prime)


def weighted_kernel_sup(m: GridSymbol, k: int, eps: float, cutoff: SmoothProfile = LP_BUMP) -> float:
    """sup_x (1+|x|)^(d+eps) |F^{-1}[phi m(2^k .)](x)|."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    K = kernel(m, k, cutoff)
    return float(np.max(np.abs(K.samples) * (1.0 + m.spec.radius()) ** (m.spec.d + eps)))


def sobolev_norm(u: GridSymbol, r: float, gamma: float) -> float:
    """||(I - Delta)^(gamma/2) u||_r for u viewed as a function of xi.

    The Bessel potential is applied on the dual (spatial) grid; the L^r
    norm is a Riemann sum over the lattice with cell volume L^-d.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    spec = u.spec
    vals = np.asarray(u.lattice())
    if gamma == 0:
        bessel = vals
    else:
        dual = symbol_to_kernel(vals, spec)
        check_alias(dual, spec, "Bessel potential")
        weight = (1.0 + 4 * math.pi**2 * spec.radius() ** 2) ** (gamma / 2)
        bessel = kernel_to_symbol(dual * weight, spec)
    mod = np.abs(bessel)
    if math.isinf(r):
        return float(np.max(mod))
    return float((np.sum(mod**r) / spec.L**spec.d) ** (1.0 / r))


# ----------------------------------------------------------- Mikhlin norms


def _fd_partials(fn: Callable, point: np.ndarray, order: int) -> list[float]:
    """|xi|^|alpha| |d^alpha m(xi)| for all |alpha| <= order, central differences."""
    d = point.size
    rad = float(np.linalg.norm(point))
    h = rad * 1e-4
    f = lambda z: complex(np.asarray(fn(*z)).reshape(-1)[0])
    out = [abs(f(point))]
    eye = np.eye(d) * h
    if order >= 1:
        for i in range(d):
            g = (f(point + eye[i]) - f(point - eye[i])) / (2 * h)
            out.append(rad * abs(g))
    if order >= 2:
        for i in range(d):
            for j in range(i, d):
                if i == j:
                    g = (f(point + eye[i]) - 2 * f(point) + f(point - eye[i])) / h**2
                else:
                    g = (f(point + eye[i] + eye[j]) - f(point + eye[i] - eye[j])
                         - f(point - eye[i] + eye[j]) + f(point - eye[i] - eye[j])) / (4 * h * h)
                out.append(rad**2 * abs(g))
    return out


def mikhlin_seminorm(m, order: int, samples_per_octave: int = 32,
                     xi_range: tuple[float, float] = (2.0**-10, 2.0**10), angles: int = 8) -> float:
    """Lower estimate of sup_{|alpha|<=order} sup_xi |xi|^|alpha| |d^alpha m(xi)|.

    Bump sums are differentiated exactly over every octave they occupy;
    other symbols are sampled on log-spaced radii within ``xi_range`` and
    differentiated by central differences with step |xi| 1e-4.
    """
    if not 0 <= order <= 2:
        raise ValueError("order must be 0, 1 or 2")
    if hasattr(m, "seminorm"):
        return m.seminorm(order, samples=max(16, 8 * samples_per_octave))
    if isinstance(m, GridSymbol):
        d, fn, radial = m.spec.d, m.fn, m.radial
        if fn is None:
            raise ValueError("sampled symbols cannot be differentiated off-lattice")
    else:
        d, fn, radial = 1, m, False
    if radial:
        inner = fn
        fn = (lambda *c: inner(np.abs(c[0]))) if d == 1 else (lambda *c: inner(np.hypot(*c)))
    lo, hi = xi_range
    octaves = max(1, math.ceil(math.log2(hi / lo)))
    radii = np.geomspace(lo, hi, octaves * samples_per_octave + 1)
    if d == 1:
        dirs = [np.array([1.0]), np.array([-1.0])]
    else:
        dirs = [np.array([math.cos(a), math.sin(a)]) for a in np.linspace(0, 2 * math.pi, angles, endpoint=False)]
    best = 0.0
    for r in radii:
        for u in dirs:
            best = max(best, max(_fd_partials(fn, r * u, order)))
    return best


# ---------------------------------------------------------- serialization


def save_grid(obj: GridFunction | GridSymbol, path: str | Path) -> tuple[Path, Path]:
    """Write ``path.json`` (header) and ``path.bin`` (little-endian float64 re/im pairs)."""
    path = Path(path)
    if isinstance(obj, GridFunction):
        kind, data = "function", obj.samples
    else:
        kind, data = "symbol", obj.lattice()
    header = obj.spec.header(kind)
    header["dtype"] = "<f8"
    header["layout"] = "interleaved-complex"
    meta, raw = path.with_suffix(".json"), path.with_suffix(".bin")
    meta.write_text(json.dumps(header, sort_keys=True))
    np.ascontiguousarray(np.asarray(data, dtype=complex)).view(np.float64).astype("<f8").tofile(raw)
    return meta, raw


def load_grid(path: str | Path) -> GridFunction | GridSymbol:
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text())
    spec = GridSpec(int(header["n"]), float(header["L"]), int(header["d"]))
    flat = np.fromfile(path.with_suffix(".bin"), dtype="<f8")
    data = flat.view(np.complex128).reshape(spec.shape)
    if header["kind"] == "function":
        return GridFunction(spec, data)
    return GridSymbol(spec, values=data)
