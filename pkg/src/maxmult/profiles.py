"""C-infinity bump profiles built from the exp(-1/t) transition.

Values and derivatives (up to order 4) are computed by truncated Taylor
series arithmetic, so derivatives are exact up to rounding rather than
finite-difference estimates.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import factorial

import numpy as np

MAX_ORDER = 4

# exp(-1/t) < 1e-300 below this; the jet coefficients underflow to zero there.
_ETA_CUTOFF = 1.0 / 690.0


def _eta_series(t: np.ndarray, order: int) -> np.ndarray:
    """Taylor coefficients in h of exp(-1/(t + h)), shape (order+1, *t.shape)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros((order + 1,) + t.shape)
    live = t > _ETA_CUTOFF
    if not np.any(live):
        return out
    tl = t[live]
    # -1/(t+h) = sum_n u_n h^n
    u = np.array([-((-1.0) ** n) / tl ** (n + 1) for n in range(order + 1)])
    e = np.zeros_like(u)
    e[0] = np.exp(u[0])
    for n in range(1, order + 1):
        e[n] = sum(k * u[k] * e[n - k] for k in range(1, n + 1)) / n
    out[:, live] = e
    return out


def _series_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    q = np.zeros_like(num)
    q[0] = num[0] / den[0]
    for n in range(1, num.shape[0]):
        q[n] = (num[n] - sum(den[k] * q[n - k] for k in range(1, n + 1))) / den[0]
    return q


def _series_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    c = np.zeros_like(a)
    for n in range(a.shape[0]):
        c[n] = sum(a[k] * b[n - k] for k in range(n + 1))
    return c


def transition_series(t, order: int = 0) -> np.ndarray:
    """Taylor coefficients of tau(t + h) = eta(t+h) / (eta(t+h) + eta(1-t-h))."""
    t = np.asarray(t, dtype=float)
    out = np.zeros((order + 1,) + t.shape)
    out[0] = (t >= 1.0).astype(float)
    inner = (t > 0.0) & (t < 1.0)
    if np.any(inner):
        ti = t[inner]
        a = _eta_series(ti, order)
        b = _eta_series(1.0 - ti, order)
        b *= ((-1.0) ** np.arange(order + 1)).reshape((-1,) + (1,) * ti.ndim)
        out[:, inner] = _series_div(a, a + b)
    return out


def transition(t) -> np.ndarray:
    """The smooth step: 0 for t <= 0, 1 for t >= 1."""
    return transition_series(t, 0)[0]


@dataclass(frozen=True)
class SmoothProfile:
    """Radial bump supported in [a, b], identically 1 on [c, d].

    The profile is tau((r-a)/(c-a)) * tau((b-r)/(b-d)). When c == a (or
    d == b) the corresponding ramp is absent and the profile is flat up to
    that endpoint, which is how a bump centred at the origin is described.
    """

    a: Fraction
    b: Fraction
    c: Fraction
    d: Fraction
    name: str = "custom"

    def __post_init__(self):
        for field in "abcd":
            object.__setattr__(self, field, Fraction(getattr(self, field)))
        if not (self.a <= self.c < self.d <= self.b):
            raise ValueError(f"need a <= c < d <= b, got {self.a}, {self.b}, {self.c}, {self.d}")
        if self.a == self.c and self.d == self.b:
            raise ValueError("profile has no transition region")

    @cached_property
    def _floats(self):
        return float(self.a), float(self.b), float(self.c), float(self.d)

    def jet(self, r, order: int = 0) -> np.ndarray:
        """Taylor coefficients of profile(r + h) in h, shape (order+1, *r.shape)."""
        if order > MAX_ORDER:
            raise ValueError(f"derivative order {order} > {MAX_ORDER}")
        a, b, c, d = self._floats
        r = np.asarray(r, dtype=float)
        if c > a:
            left = transition_series((r - a) / (c - a), order)
            left *= ((1.0 / (c - a)) ** np.arange(order + 1)).reshape((-1,) + (1,) * r.ndim)
        else:
            left = np.zeros((order + 1,) + r.shape)
            left[0] = (r >= a).astype(float)
        if b > d:
            right = transition_series((b - r) / (b - d), order)
            right *= ((-1.0 / (b - d)) ** np.arange(order + 1)).reshape((-1,) + (1,) * r.ndim)
        else:
            right = np.zeros((order + 1,) + r.shape)
            right[0] = (r <= b).astype(float)
        return _series_mul(left, right)

    def __call__(self, r) -> np.ndarray:
        return self.jet(r, 0)[0]

    def derivative(self, r, order: int) -> np.ndarray:
        return factorial(order) * self.jet(r, order)[order]

    def derivative_sup(self, order: int, samples: int = 20001) -> float:
        """Dense-sample estimate of sup |profile^(order)|."""
        a, b, _, _ = self._floats
        r = np.linspace(a, b, samples)
        return float(np.max(np.abs(self.derivative(r, order))))

    def to_json(self):
        if self.name != "custom":
            return self.name
        return {"a": str(self.a), "b": str(self.b), "c": str(self.c), "d": str(self.d)}


def profile_from_json(obj) -> SmoothProfile:
    if isinstance(obj, str):
        try:
            return NAMED_PROFILES[obj]
        except KeyError:
            raise ValueError(f"unknown profile {obj!r}") from None
    return SmoothProfile(*(Fraction(obj[key]) for key in "abcd"))


# The bump used for the counterexample multipliers.
PHI_STANDARD = SmoothProfile(Fraction(3, 4), Fraction(5, 4), Fraction(7, 8), Fraction(9, 8), "phi-standard")

# Fourier transform of the test envelope, radial in |xi|.
PSI_HAT_STANDARD = SmoothProfile(Fraction(0), Fraction(1, 8), Fraction(0), Fraction(1, 16), "psi-standard")

# Littlewood-Paley bump: theta(r) - theta(r/2) with theta ramping on [1/2, 3/4].
# The same function serves as the frequency cutoff and the spatial annulus cutoff.
LP_BUMP = SmoothProfile(Fraction(1, 2), Fraction(3, 2), Fraction(3, 4), Fraction(1), "lp-bump")

NAMED_PROFILES = {p.name: p for p in (PHI_STANDARD, PSI_HAT_STANDARD, LP_BUMP)}


def theta(r) -> np.ndarray:
    """Increasing ramp, 0 below 1/2 and 1 above 3/4."""
    return transition((np.asarray(r, dtype=float) - 0.5) / 0.25)
